"""Shared brute-force oracles.

Everything here recomputes quantities from first principles (full super
channel enumeration, direct output-space sums) independently of the library's
own algorithms, so the tests compare two genuinely different computational
paths.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
import pytest

from covertppm.channels import Dmc

LN2 = math.log(2.0)


def all_outputs(alphabet: int, width: int) -> np.ndarray:
    """All output blocks of the given width, shape (alphabet^width, width)."""
    return np.array(list(itertools.product(range(alphabet), repeat=width)),
                    dtype=np.int64)


def super_channel_matrix(dmc: Dmc, q: int) -> np.ndarray:
    """W(y_block | x_bits) for the full 2^q-use super channel.

    Row index is the decimal value d(x_bits); column index enumerates output
    blocks as produced by :func:`all_outputs`.
    """
    m = 1 << q
    outs = all_outputs(dmc.alphabet_size, m)
    probs0 = dmc.row0[outs]                      # (n_out, m)
    mat = np.empty((m, outs.shape[0]))
    for d in range(m):
        cols = probs0.copy()
        cols[:, d] = dmc.row1[outs[:, d]]
        mat[d] = cols.prod(axis=1)
    return mat


def brute_conditional_mi(dmc: Dmc, i: int, q: int, base: str = "bits") -> float:
    """I(X_i ; Y_block | X_{i+1:q}) for uniform level bits, by enumeration."""
    m = 1 << q
    w = super_channel_matrix(dmc, q)             # (m, n_out)
    px = 1.0 / m

    def bits_of(d):
        return [(d >> t) & 1 for t in range(q)]

    # group inputs by (x_{i+1:q}); within each group, split by x_i
    total = 0.0
    groups: dict[tuple, dict[int, list[int]]] = {}
    for d in range(m):
        b = bits_of(d)
        key = tuple(b[i:])                        # x_{i+1:q}
        groups.setdefault(key, {0: [], 1: []})[b[i - 1]].append(d)
    for key, split in groups.items():
        p_key = len(split[0]) + len(split[1])
        w0 = w[split[0]].mean(axis=0)
        w1 = w[split[1]].mean(axis=0)
        mix = 0.5 * (w0 + w1)

        def ent(v):
            pos = v > 0
            return -float(np.sum(v[pos] * np.log(v[pos])))

        total += (p_key * px) * (ent(mix) - 0.5 * (ent(w0) + ent(w1)))
    return total / LN2 if base == "bits" else total


def brute_set_mi(dmc: Dmc, q: int, S: set[int], conditional: bool,
                 base: str = "bits") -> float:
    """I(X_S ; Y_block | X_{S^c}) (conditional=True) or I(X_S ; Y_block)."""
    m = 1 << q
    w = super_channel_matrix(dmc, q)

    def bits_of(d):
        return tuple((d >> t) & 1 for t in range(q))

    def ent(v):
        pos = v > 0
        return -float(np.sum(v[pos] * np.log(v[pos])))

    total = 0.0
    if conditional:
        groups: dict[tuple, list[int]] = {}
        for d in range(m):
            b = bits_of(d)
            key = tuple(b[t - 1] for t in range(1, q + 1) if t not in S)
            groups.setdefault(key, []).append(d)
        for key, members in groups.items():
            p_key = len(members) / m
            rows = w[members]
            mix = rows.mean(axis=0)
            total += p_key * (ent(mix) - np.mean([ent(r) for r in rows]))
    else:
        groups = {}
        for d in range(m):
            b = bits_of(d)
            key = tuple(b[t - 1] for t in range(1, q + 1) if t in S)
            groups.setdefault(key, []).append(d)
        mix_all = w.mean(axis=0)
        avg = 0.0
        for key, members in groups.items():
            rows = w[members].mean(axis=0)
            avg += (len(members) / m) * ent(rows)
        total = ent(mix_all) - avg
    return total / LN2 if base == "bits" else total


def brute_ppm_divergence(dmc: Dmc, m: int, base: str = "nats") -> float:
    """D(P_ppm^m || P0^m) by direct summation over every output block."""
    outs = all_outputs(dmc.alphabet_size, m)
    p0 = dmc.row0[outs].prod(axis=1)
    pulse = np.empty((m, outs.shape[0]))
    for d in range(m):
        cols = dmc.row0[outs].copy()
        cols[:, d] = dmc.row1[outs[:, d]]
        pulse[d] = cols.prod(axis=1)
    ppm = pulse.mean(axis=0)
    sup = ppm > 0
    if np.any(p0[sup] == 0):
        return float("inf")
    val = float(np.sum(ppm[sup] * np.log(ppm[sup] / p0[sup])))
    return val / LN2 if base == "bits" else val


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
