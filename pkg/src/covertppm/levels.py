"""Per-level equivalent channels, capacity tables, and MSD rate planning.

Level i of the multilevel decomposition sees a stationary binary-input
channel whose output is the 2^i-coordinate subblock selected by the already
decoded higher-level bits; the pulse sits in the first half of the subblock
when the level bit is 0 and in the second half otherwise.  Its transition law
is a half-sum of per-coordinate likelihood ratios, so

  * the level log-likelihood ratio is
        log( sum of ratios over the first half / sum over the second half ),
  * the level capacity has the closed form
        C_i = D(P_ppm^(2^(i-1)) || P0^(2^(i-1))) - D(P_ppm^(2^i) || P0^(2^i)),
    independent of the total number of levels q >= i.

The planner turns the per-level mutual-information tables for Bob and Willie
into per-level rate triples (message, secret surplus, key deficit) and a
super-channel blocklength matched to the covertness budget.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .channels import LN2, Dmc, DivergenceStats
from .ppm import index_set, ppm_output_divergence

#: decoder LLR saturation, nats; only active off the support assumptions
DEFAULT_LLR_MAX = 40.0


class RatePlanError(ValueError):
    """Raised when no feasible rate plan exists for the requested parameters."""


def level_channel_rows(dmc: Dmc, i: int, max_outputs: int = 1 << 20):
    """Transition rows of the level-i equivalent channel by full enumeration.

    Returns (row for bit 0, row for bit 1) over all alphabet^(2^i) output
    blocks, ordered with the last coordinate fastest.  Exponential in 2^i;
    guarded by ``max_outputs``.  Used as the fallback capacity path for
    channels outside the divergence identity's support condition, and by the
    symmetry and permutation-invariance checks.
    """
    width = 1 << i
    a = dmc.alphabet_size
    n_out = a ** width
    if n_out > max_outputs:
        raise ValueError(f"{n_out} output blocks exceed the enumeration budget")
    grids = np.indices((a,) * width).reshape(width, n_out).T  # (n_out, width)
    p0 = dmc.row0[grids]  # (n_out, width)
    p1 = dmc.row1[grids]
    # w_j = P1(y_j) * prod_{t != j} P0(y_t), stable as direct products
    w = np.empty_like(p0)
    for j in range(width):
        cols = [p1[:, t] if t == j else p0[:, t] for t in range(width)]
        w[:, j] = np.prod(np.stack(cols, axis=1), axis=1)
    half = width // 2
    row_bit0 = w[:, :half].sum(axis=1) / half
    row_bit1 = w[:, half:].sum(axis=1) / half
    return row_bit0, row_bit1


def _binary_input_mi(row_a: np.ndarray, row_b: np.ndarray, base: str) -> float:
    mix = 0.5 * (row_a + row_b)

    def ent(v):
        pos = v > 0
        return -float(np.sum(v[pos] * np.log(v[pos])))

    mi = ent(mix) - 0.5 * (ent(row_a) + ent(row_b))
    return mi / LN2 if base == "bits" else mi


def level_capacity(dmc: Dmc, i: int, base: str = "nats", **dp_kwargs) -> float:
    """Exact capacity of level ``i`` via the divergence-difference identity.

    Valid for any total number of levels q >= i (the level channel is
    stationary).  When P1 has mass outside the support of P0 both divergences
    are infinite and the identity degenerates; the capacity is then computed
    by enumerating the equivalent channel directly (small 2^i only).
    ``dp_kwargs`` are forwarded to the divergence DP.
    """
    if i < 1:
        raise ValueError("level index must be >= 1")
    hi = ppm_output_divergence(dmc, 1 << (i - 1), base, **dp_kwargs)
    lo = ppm_output_divergence(dmc, 1 << i, base, **dp_kwargs)
    if math.isinf(hi) or math.isinf(lo):
        return _binary_input_mi(*level_channel_rows(dmc, i), base)
    return max(hi - lo, 0.0)


def level_capacity_bound(stats: DivergenceStats, i: int) -> float:
    """Three-term upper bound on the level-i capacity, in nats.

    Requires ``stats`` computed in nats for the pair (P1, P0).  The bound is
    an asymptotic expansion; for small i it may fall below the exact value,
    which the tests record rather than assert away.
    """
    if stats.base != "nats":
        raise ValueError("level_capacity_bound requires stats in nats")
    if i < 1:
        raise ValueError("level index must be >= 1")
    c2, th, rh = stats.chi2, stats.theta, stats.rho
    return (
        c2 / (1 << i)
        - (th - c2 - 2.0 * c2**3) / (1 << (2 * i - 1))
        + (rh - 3.0 * c2) / (3.0 * (1 << (3 * (i - 1))))
    )


@dataclass(frozen=True)
class LevelMiRow:
    level: int
    i_y: float
    i_z: float
    diff: float  # i_z - i_y


def level_mi_table(bob: Dmc, willie: Dmc, q: int, base: str = "bits") -> list[LevelMiRow]:
    """Per-level mutual informations for both channels and their difference."""
    if q < 1:
        raise ValueError("q must be >= 1")
    rows = []
    for i in range(1, q + 1):
        iy = level_capacity(bob, i, base)
        iz = level_capacity(willie, i, base)
        rows.append(LevelMiRow(level=i, i_y=iy, i_z=iz, diff=iz - iy))
    return rows


@dataclass(frozen=True)
class LevelRates:
    level: int
    r_u: float  # message rate, bits per super-symbol use
    r_v: float  # secret surplus reusable as next-block key
    r_k: float  # key deficit


@dataclass(frozen=True)
class RatePlan:
    """Operating point of the multilevel scheme.

    Rates are in ``base`` per super-symbol use.  ``u`` is the highest level
    coded for reliability; levels u+1..q are resolvability-only.  At most one
    of ``r_v``/``r_k`` is positive on each level.
    """

    q: int
    ell: int
    B: int
    delta: float
    epsilon: float
    base: str
    u: int
    per_level: tuple[LevelRates, ...]
    degraded: bool = False

    @property
    def m(self) -> int:
        return 1 << self.q

    def __post_init__(self):
        if self.ell < 1:
            raise RatePlanError("blocklength zero")
        if len(self.per_level) != self.q:
            raise ValueError("per_level must have one entry per level")
        for lr in self.per_level:
            if min(lr.r_u, lr.r_v, lr.r_k) < 0:
                raise ValueError("rates must be nonnegative")
            if lr.r_v > 0 and lr.r_k > 0:
                raise ValueError("r_v and r_k cannot both be positive")

    def sum_ru(self) -> float:
        return sum(lr.r_u for lr in self.per_level)

    def sum_rv(self) -> float:
        return sum(lr.r_v for lr in self.per_level)

    def sum_rk(self) -> float:
        return sum(lr.r_k for lr in self.per_level)

    def with_blocklength(self, ell: int) -> "RatePlan":
        """Same operating point at a different blocklength (e.g. a power of two)."""
        return replace(self, ell=ell)


def planned_blocklength(m: int, delta: float, B: int, chi2_willie: float) -> int:
    """Super-channel blocklength floor(2 m delta / (B chi2)) for the budget.

    The floor carries a 1e-9 guard so exactly-integer operating points (the
    BSC designs hit them) do not lose a unit to floating-point fuzz.
    """
    if chi2_willie <= 0:
        raise RatePlanError("Willie's chi2 is zero: any blocklength is covert")
    return int(math.floor(2.0 * m * delta / (B * chi2_willie) + 1e-9))


def msd_rate_plan(
    bob: Dmc,
    willie: Dmc,
    q: int,
    delta: float,
    B: int = 1,
    epsilon: float = 0.05,
    base: str = "bits",
    *,
    degraded: bool = False,
    u_floor: float | None = None,
    ell_override: int | None = None,
) -> RatePlan:
    """Build the multistage-decoding operating point.

    Per level, with I_Y/I_Z the level mutual informations for Bob and Willie:

        r_u = min(I_Y - eps/q, I_Z + eps/q)
        r_v = max(0, I_Y - I_Z - 2 eps/q)
        r_k = max(0, I_Z - I_Y + 2 eps/q)

    all clamped at zero.  In the degraded case (Willie's channel a further
    degradation of Bob's) the plan simplifies to r_u = I_Y - eps/q with no
    secrets and no keys.  The blocklength is floor(2 m delta / (B chi2)) with
    chi2 of Willie's pair, unless ``ell_override`` is given.

    ``u`` defaults to the smallest cutoff for which the levels above it hold
    less than 1% of the total Bob-side capacity; passing ``u_floor`` instead
    selects the largest level with r_u at least that floor.
    """
    if delta < 0:
        raise RatePlanError("delta must be >= 0")
    if epsilon <= 0:
        raise RatePlanError("epsilon must be > 0")
    if B < 1:
        raise RatePlanError("B must be >= 1")

    mi = level_mi_table(bob, willie, q, base)
    eps_q = epsilon / q
    per_level = []
    for row in mi:
        if degraded:
            r_u, r_v, r_k = max(row.i_y - eps_q, 0.0), 0.0, 0.0
        else:
            r_u = max(min(row.i_y - eps_q, row.i_z + eps_q), 0.0)
            r_v = max(row.i_y - row.i_z - 2.0 * eps_q, 0.0)
            r_k = max(row.i_z - row.i_y + 2.0 * eps_q, 0.0)
        per_level.append(LevelRates(level=row.level, r_u=r_u, r_v=r_v, r_k=r_k))

    if all(lr.r_u == 0 and lr.r_v == 0 for lr in per_level):
        raise RatePlanError("all rates are zero: epsilon too large for this pair")

    if ell_override is not None:
        ell = int(ell_override)
    else:
        chi2 = float(
            np.sum((willie.row1 - willie.row0) ** 2
                   / np.where(willie.row0 > 0, willie.row0, 1.0))
        )
        ell = planned_blocklength(1 << q, delta, B, chi2)
    if ell < 1:
        raise RatePlanError(
            "blocklength zero: delta too small for the chosen order and block count"
        )

    if u_floor is not None:
        candidates = [lr.level for lr in per_level if lr.r_u >= u_floor]
        u = max(candidates) if candidates else 1
    else:
        total = sum(row.i_y for row in mi)
        u = q
        for cut in range(1, q + 1):
            tail = sum(row.i_y for row in mi if row.level > cut)
            if total == 0 or tail < 0.01 * total:
                u = cut
                break

    return RatePlan(
        q=q, ell=ell, B=B, delta=delta, epsilon=epsilon, base=base,
        u=u, per_level=tuple(per_level), degraded=degraded,
    )


@dataclass(frozen=True)
class ThroughputSummary:
    covert_throughput: float
    key_throughput: float
    covert_capacity: float
    key_capacity: float
    message_bits: float
    key_bits: float
    n: int
    base: str
    degenerate: bool = False


def throughput_summary(
    plan: RatePlan,
    bob_stats: DivergenceStats,
    willie_stats: DivergenceStats,
) -> ThroughputSummary:
    """Realised throughputs of a plan against the square-root-law capacities.

    Message bits are B * ell * sum(r_u + r_v); key bits amortise the chained
    first-block cost  ell*sum(r_k) + (B-1) * ell * (sum(r_k) - sum(r_v))^+ .
    Both are normalised by sqrt(n * delta) with n = B * m * ell channel uses.
    Capacities are sqrt(2/chi2) * D(P1||P0)  and  the clamped key analogue
    sqrt(2/chi2) * (D(Q1||Q0) - D(P1||P0))^+, in the plan's rate base.
    """
    if bob_stats.base != "nats" or willie_stats.base != "nats":
        raise ValueError("throughput_summary expects stats in nats")
    n = plan.B * plan.m * plan.ell
    if n == 0:
        raise RatePlanError("zero blocklength")
    chi2 = willie_stats.chi2
    conv = 1.0 / LN2 if plan.base == "bits" else 1.0
    if chi2 == 0.0 or plan.delta == 0.0:
        return ThroughputSummary(
            covert_throughput=0.0, key_throughput=0.0,
            covert_capacity=0.0, key_capacity=0.0,
            message_bits=plan.B * plan.ell * (plan.sum_ru() + plan.sum_rv()),
            key_bits=0.0, n=n, base=plan.base, degenerate=True,
        )
    norm = math.sqrt(n * plan.delta)
    message_bits = plan.B * plan.ell * (plan.sum_ru() + plan.sum_rv())
    key_bits = plan.ell * plan.sum_rk() \
        + (plan.B - 1) * plan.ell * max(plan.sum_rk() - plan.sum_rv(), 0.0)
    scale = math.sqrt(2.0 / chi2)
    return ThroughputSummary(
        covert_throughput=message_bits / norm,
        key_throughput=key_bits / norm,
        covert_capacity=scale * bob_stats.kl * conv,
        key_capacity=max(scale * (willie_stats.kl - bob_stats.kl) * conv, 0.0),
        message_bits=message_bits,
        key_bits=key_bits,
        n=n, base=plan.base,
    )


# ---------------------------------------------------------------------------
# equivalent-channel receiver primitives
# ---------------------------------------------------------------------------

def select_positions(block, decoded_high_bits) -> np.ndarray:
    """Subblock of a received super-symbol selected by decoded higher bits.

    ``block`` has 2^q coordinates; ``decoded_high_bits`` are (x_{i+1},...,x_q)
    and the result is the 2^i coordinates whose index set matches them, in
    ascending index order.  Under this order the first half corresponds to
    level bit x_i = 0.
    """
    block = np.asarray(block)
    high = np.asarray(decoded_high_bits, dtype=np.int64)
    q = int(round(math.log2(block.shape[0])))
    if (1 << q) != block.shape[0]:
        raise ValueError("block length must be a power of two")
    i = q - high.shape[0]
    if i < 0:
        raise ValueError("more high bits than levels")
    if high.size and not np.all((high == 0) | (high == 1)):
        raise ValueError("bits must be 0/1")
    # positions of index_set(q, x_{i+1:q}) are contiguous: offset+1 .. offset+2^i
    offset = int((high << np.arange(i, q, dtype=np.int64)).sum()) if high.size else 0
    return block[offset:offset + (1 << i)]


def select_positions_batch(symbols: np.ndarray, high_bits: np.ndarray, i: int) -> np.ndarray:
    """Vectorised :func:`select_positions` over a block of super-symbols.

    ``symbols`` is (ell, 2^q); ``high_bits`` is (q - i, ell) with row t being
    level i+1+t.  Returns the (ell, 2^i) selected subblocks.
    """
    ell, m = symbols.shape
    q = int(round(math.log2(m)))
    if high_bits.shape != (q - i, ell):
        raise ValueError("high_bits must have shape (q - i, ell)")
    if q - i > 0:
        weights = (1 << np.arange(i, q, dtype=np.int64))[:, None]
        offsets = (high_bits.astype(np.int64) * weights).sum(axis=0)
    else:
        offsets = np.zeros(ell, dtype=np.int64)
    cols = offsets[:, None] + np.arange(1 << i, dtype=np.int64)[None, :]
    return symbols[np.arange(ell)[:, None], cols]


def _sorted_half_sum(lams: np.ndarray) -> np.ndarray:
    # summing in sorted order makes the sum exactly invariant under
    # within-half permutations (the permutation-invariance lemma holds
    # bitwise, not just mathematically)
    return np.sum(np.sort(lams, axis=-1), axis=-1)


def level_llrs(lams: np.ndarray, llr_max: float = DEFAULT_LLR_MAX) -> np.ndarray:
    """Level LLRs, natural log, for rows of selected-subblock likelihood ratios.

    For a row of 2^i ratios the LLR for bit 0 versus 1 is
    log(sum of first half / sum of second half), saturated at ±``llr_max``.
    Infinite ratio markers saturate; a row whose halves are both all-zero is
    an error.
    """
    lams = np.atleast_2d(np.asarray(lams, dtype=np.float64))
    n, width = lams.shape
    if width < 2 or (width & (width - 1)) != 0:
        raise ValueError("row length must be a power of two >= 2")
    half = width // 2
    s0 = _sorted_half_sum(lams[:, :half])
    s1 = _sorted_half_sum(lams[:, half:])
    if np.any((s0 == 0) & (s1 == 0)):
        raise ValueError("both halves have zero likelihood")
    out = np.empty(n, dtype=np.float64)
    inf0, inf1 = np.isinf(s0), np.isinf(s1)
    both_inf = inf0 & inf1
    out[both_inf] = 0.0
    pos = inf0 & ~inf1 | ((s1 == 0) & ~inf0 & (s0 > 0))
    neg = inf1 & ~inf0 | ((s0 == 0) & ~inf1 & (s1 > 0))
    out[pos] = llr_max
    out[neg] = -llr_max
    rest = ~(both_inf | pos | neg)
    with np.errstate(divide="ignore"):
        out[rest] = np.log(s0[rest] / s1[rest])
    return np.clip(out, -llr_max, llr_max)


def level_llr(lams, llr_max: float = DEFAULT_LLR_MAX) -> float:
    """Scalar :func:`level_llrs` for one selected subblock."""
    return float(level_llrs(np.asarray(lams, dtype=np.float64)[None, :], llr_max)[0])


# ---------------------------------------------------------------------------
# plan serialisation: versioned human-readable key-value document
# ---------------------------------------------------------------------------

PLAN_HEADER = "covertppm-rateplan v1"


def plan_to_text(plan: RatePlan) -> str:
    lines = [
        PLAN_HEADER,
        f"base = {plan.base}",
        f"q = {plan.q}",
        f"m = {plan.m}",
        f"ell = {plan.ell}",
        f"B = {plan.B}",
        f"delta = {plan.delta!r}",
        f"epsilon = {plan.epsilon!r}",
        f"u = {plan.u}",
        f"degraded = {str(plan.degraded).lower()}",
    ]
    for lr in plan.per_level:
        lines.append(f"level.{lr.level}.r_u = {lr.r_u!r}")
        lines.append(f"level.{lr.level}.r_v = {lr.r_v!r}")
        lines.append(f"level.{lr.level}.r_k = {lr.r_k!r}")
    return "\n".join(lines) + "\n"


def plan_from_text(text: str) -> RatePlan:
    lines = [ln.strip() for ln in text.splitlines()
             if ln.strip() and not ln.strip().startswith("#")]
    if not lines or lines[0] != PLAN_HEADER:
        raise ValueError(f"not a rate-plan document (expected {PLAN_HEADER!r})")
    kv: dict[str, str] = {}
    for ln in lines[1:]:
        key, _, val = ln.partition("=")
        kv[key.strip()] = val.strip()
    q = int(kv["q"])
    per_level = tuple(
        LevelRates(
            level=i,
            r_u=float(kv[f"level.{i}.r_u"]),
            r_v=float(kv[f"level.{i}.r_v"]),
            r_k=float(kv[f"level.{i}.r_k"]),
        )
        for i in range(1, q + 1)
    )
    return RatePlan(
        q=q,
        ell=int(kv["ell"]),
        B=int(kv["B"]),
        delta=float(kv["delta"]),
        epsilon=float(kv["epsilon"]),
        base=kv["base"],
        u=int(kv["u"]),
        per_level=per_level,
        degraded=kv.get("degraded", "false") == "true",
    )
