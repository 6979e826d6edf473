"""Binary-input discrete memoryless channels and their divergence functionals.

A channel is stored as its two conditional output distributions: the row for
input 0 (the innocent symbol) and the row for input 1.  All statistics used by
the planner, the detector bounds, and the covertness estimates are computed
from these two rows in a single pass:

    kl(p, q)    = sum_z p(z) log(p(z)/q(z))
    chi_t(p, q) = sum_z (p(z)-q(z))^t / q(z)^(t-1),  t = 2, 3
    theta(p, q) = sum_z p(z) ((p(z)-q(z))/q(z))^2
    rho(p, q)   = sum_z p(z) ((p(z)-q(z))/q(z))^3
    tv(p, q)    = (1/2) sum_z |p(z) - q(z)|

Everything here is pure and immutable except ``sample_output``, which mutates
only the caller-supplied random generator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

LN2 = math.log(2.0)

ROW_SUM_TOL = 1e-9      # tolerance on user-supplied row sums
ROW_SUM_EXACT = 1e-12   # invariant after normalisation


class ChannelError(ValueError):
    """Raised for malformed channel definitions."""


@dataclass(frozen=True)
class Dmc:
    """A binary-input DMC given by its two output rows.

    ``row0`` is the output distribution for input 0, ``row1`` for input 1.
    Rows are validated and renormalised by :func:`make_dmc`; do not construct
    directly unless the rows are already exact probability vectors.
    """

    row0: np.ndarray
    row1: np.ndarray

    @property
    def alphabet_size(self) -> int:
        return int(self.row0.shape[0])

    def row(self, x: int) -> np.ndarray:
        return self.row1 if x else self.row0

    def __repr__(self) -> str:  # compact, used in CLI headers
        r0 = ",".join(f"{v:.12g}" for v in self.row0)
        r1 = ",".join(f"{v:.12g}" for v in self.row1)
        return f"Dmc(row0=[{r0}], row1=[{r1}])"


@dataclass(frozen=True)
class DivergenceStats:
    """All divergence functionals of an ordered pair (p, q) of distributions.

    ``kl`` is expressed in the requested ``base`` ('nats' or 'bits'); chi2,
    chi3, theta, rho and tv are base-free.  ``mu0``/``mu1`` are the minimum
    probabilities over the supports of q and p respectively.  When the support
    of p is not contained in the support of q the ratio-based functionals are
    infinite; ``finite`` is False and kl/chi2/chi3/theta/rho are ``inf``.
    """

    kl: float
    chi2: float
    chi3: float
    theta: float
    rho: float
    tv: float
    mu0: float
    mu1: float
    base: str
    finite: bool = True


def _as_prob_vector(row, name: str) -> np.ndarray:
    v = np.asarray(row, dtype=np.float64)
    if v.ndim != 1 or v.shape[0] < 2:
        raise ChannelError(f"{name} must be a 1-D probability vector of length >= 2")
    if np.any(v < 0):
        raise ChannelError(f"{name} has a negative entry")
    s = float(v.sum())
    if abs(s - 1.0) > ROW_SUM_TOL:
        raise ChannelError(f"{name} sums to {s!r}, outside tolerance {ROW_SUM_TOL}")
    return v / s


def make_dmc(row0, row1) -> Dmc:
    """Validate and build a binary-input DMC from its two output rows.

    Rows must have the same length >= 2, nonnegative entries, and sum to one
    within ``1e-9``; they are renormalised so each sums to exactly one in
    double precision.  Identical rows (a channel that reveals nothing) are
    accepted.
    """
    r0 = _as_prob_vector(row0, "row0")
    r1 = _as_prob_vector(row1, "row1")
    if r0.shape != r1.shape:
        raise ChannelError(
            f"row length mismatch: {r0.shape[0]} vs {r1.shape[0]}"
        )
    r0.flags.writeable = False
    r1.flags.writeable = False
    return Dmc(row0=r0, row1=r1)


def bsc(p: float) -> Dmc:
    """Binary symmetric channel with crossover probability ``p``."""
    if not 0.0 <= p <= 1.0:
        raise ChannelError(f"crossover probability {p} outside [0, 1]")
    return make_dmc([1.0 - p, p], [p, 1.0 - p])


def bac(p01: float, p10: float) -> Dmc:
    """Binary asymmetric channel: P(1|0) = p01 and P(0|1) = p10."""
    if not (0.0 <= p01 <= 1.0 and 0.0 <= p10 <= 1.0):
        raise ChannelError("flip probabilities must lie in [0, 1]")
    return make_dmc([1.0 - p01, p01], [p10, 1.0 - p10])


def divergence_stats(p, q, base: str = "nats") -> DivergenceStats:
    """Compute kl, chi2, chi3, theta, rho, tv, mu0, mu1 for the pair (p, q).

    Argument order matters: this is D(p || q) and chi_t(p || q).  Terms with
    q(z) = 0 and p(z) = 0 contribute nothing; q(z) = 0 with p(z) > 0 yields
    the infinite result state (``finite=False``) rather than an exception.
    ``base`` selects the unit of ``kl`` only.
    """
    if base not in ("nats", "bits"):
        raise ValueError(f"base must be 'nats' or 'bits', got {base!r}")
    pv = np.asarray(p, dtype=np.float64)
    qv = np.asarray(q, dtype=np.float64)
    if pv.shape != qv.shape:
        raise ChannelError("p and q must have the same length")

    tv = 0.5 * float(np.abs(pv - qv).sum())
    mu0 = float(qv[qv > 0].min()) if np.any(qv > 0) else 0.0
    mu1 = float(pv[pv > 0].min()) if np.any(pv > 0) else 0.0

    bad = (qv == 0) & (pv > 0)
    if np.any(bad):
        inf = float("inf")
        return DivergenceStats(
            kl=inf, chi2=inf, chi3=inf, theta=inf, rho=inf,
            tv=tv, mu0=mu0, mu1=mu1, base=base, finite=False,
        )

    sup = qv > 0
    ps, qs = pv[sup], qv[sup]
    diff = ps - qs
    ratio = diff / qs
    chi2 = float(np.sum(diff * ratio))
    chi3 = float(np.sum(diff * ratio * ratio))
    theta = float(np.sum(ps * ratio * ratio))
    rho = float(np.sum(ps * ratio * ratio * ratio))
    kl_terms = np.zeros_like(ps)
    pos = ps > 0
    kl_terms[pos] = ps[pos] * np.log(ps[pos] / qs[pos])
    kl = float(kl_terms.sum())
    kl = max(kl, 0.0)  # clip -0.0 / rounding for p == q
    if base == "bits":
        kl /= LN2
    return DivergenceStats(
        kl=kl, chi2=chi2, chi3=chi3, theta=theta, rho=rho,
        tv=tv, mu0=mu0, mu1=mu1, base=base, finite=True,
    )


@dataclass(frozen=True)
class ChannelPair:
    """Bob's and Willie's channels with their cached divergence statistics.

    ``bob_stats``  = stats of (P1, P0) for Bob's channel,
    ``willie_stats`` = stats of (Q1, Q0) for Willie's channel,
    both in nats (convert at the point of use).
    """

    bob: Dmc
    willie: Dmc
    bob_stats: DivergenceStats
    willie_stats: DivergenceStats

    @classmethod
    def of(cls, bob: Dmc, willie: Dmc) -> "ChannelPair":
        return cls(
            bob=bob,
            willie=willie,
            bob_stats=divergence_stats(bob.row1, bob.row0, base="nats"),
            willie_stats=divergence_stats(willie.row1, willie.row0, base="nats"),
        )


def verify_degradation(bob: Dmc, willie: Dmc, intermediate) -> tuple[bool, float]:
    """Check whether willie = bob composed with the given intermediate channel.

    ``intermediate`` is a |Y| x |Z| transition matrix (rows are probability
    vectors).  Returns ``(ok, residual)`` where ``residual`` is the max-abs
    entry difference between the composed channel and willie's rows, and
    ``ok`` is True iff residual <= 1e-9.  The residual is reported regardless
    of the verdict.  The search for a degrading channel is out of scope:
    callers supply the intermediate.
    """
    t = np.asarray(intermediate, dtype=np.float64)
    if t.ndim != 2 or t.shape[0] != bob.alphabet_size:
        raise ChannelError(
            f"intermediate must be {bob.alphabet_size} x {willie.alphabet_size}"
        )
    if t.shape[1] != willie.alphabet_size:
        raise ChannelError(
            f"intermediate must be {bob.alphabet_size} x {willie.alphabet_size}"
        )
    if np.any(t < 0) or np.any(np.abs(t.sum(axis=1) - 1.0) > ROW_SUM_TOL):
        raise ChannelError("intermediate rows must be probability vectors")
    composed0 = bob.row0 @ t
    composed1 = bob.row1 @ t
    residual = float(
        max(np.abs(composed0 - willie.row0).max(),
            np.abs(composed1 - willie.row1).max())
    )
    return residual <= 1e-9, residual


def sample_output(dmc: Dmc, x: int, rng: np.random.Generator) -> int:
    """Draw one output symbol index from the row selected by input bit ``x``."""
    if x not in (0, 1):
        raise ChannelError(f"input must be a bit, got {x!r}")
    return int(rng.choice(dmc.alphabet_size, p=dmc.row(x)))


def sample_outputs(dmc: Dmc, x: int, size, rng: np.random.Generator) -> np.ndarray:
    """Vectorised :func:`sample_output`: iid draws from row ``x`` with the given shape.

    Uses inverse-CDF sampling so a single uniform stream drives any alphabet.
    """
    if x not in (0, 1):
        raise ChannelError(f"input must be a bit, got {x!r}")
    cdf = np.cumsum(dmc.row(x))
    cdf[-1] = 1.0
    u = rng.random(size)
    return np.searchsorted(cdf, u, side="right").astype(np.int64)
