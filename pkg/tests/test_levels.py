import itertools
import math

import numpy as np
import pytest

from covertppm.channels import ChannelPair, bac, bsc, divergence_stats, make_dmc
from covertppm.levels import (
    LevelRates,
    RatePlan,
    RatePlanError,
    level_capacity,
    level_capacity_bound,
    level_channel_rows,
    level_llr,
    level_llrs,
    level_mi_table,
    msd_rate_plan,
    plan_from_text,
    plan_to_text,
    planned_blocklength,
    select_positions,
    select_positions_batch,
    throughput_summary,
)

from conftest import brute_conditional_mi, brute_set_mi

TABLE_BSC01 = [0.7421, 0.6387, 0.4918, 0.3214, 0.1749, 0.0853, 0.0413, 0.0203,
               0.0101, 0.0050, 0.0025, 0.0013, 0.0006, 0.0003, 0.0002, 0.0001]


class TestLevelCapacity:
    def test_identical_rows_zero(self):
        ch = make_dmc([0.6, 0.4], [0.6, 0.4])
        for i in range(1, 7):
            assert level_capacity(ch, i, "bits") == pytest.approx(0.0, abs=1e-12)

    def test_stationarity_against_full_super_channel(self):
        # the level channel does not depend on the total number of levels:
        # the closed form must match the conditional MI brute-forced on the
        # full super channel for every q >= i
        for ch in (bsc(0.1), bac(0.1, 0.4)):
            for i in (1, 2):
                closed = level_capacity(ch, i, "bits")
                for q in range(i, 4):
                    brute = brute_conditional_mi(ch, i, q, "bits")
                    assert abs(closed - brute) < 1e-10

    def test_noiseless_channel_fallback(self):
        # supports differ -> the divergence identity degenerates; the direct
        # enumeration fallback must give one full bit per level
        ch = make_dmc([1.0, 0.0], [0.0, 1.0])
        for i in (1, 2, 3):
            assert level_capacity(ch, i, "bits") == pytest.approx(1.0, abs=1e-12)


class TestLevelCapacityBound:
    def test_requires_nats(self):
        st_ = divergence_stats(bsc(0.1).row1, bsc(0.1).row0, base="bits")
        with pytest.raises(ValueError):
            level_capacity_bound(st_, 3)

    def test_upper_bounds_exact_value(self):
        # the expansion is proven for the high-level regime; on BSC(0.1)
        # it happens to dominate everywhere, which we record by asserting
        # i in [4, 16] and tracking violations for lower levels
        ch = bsc(0.1)
        st_ = divergence_stats(ch.row1, ch.row0)
        violations = [i for i in range(4, 17)
                      if level_capacity(ch, i, "nats") > level_capacity_bound(st_, i)]
        assert violations == []

    def test_leading_term_dominates_asymptotically(self):
        ch = bsc(0.1)
        st_ = divergence_stats(ch.row1, ch.row0)
        ratios = [level_capacity_bound(st_, i) / (st_.chi2 / 2**i)
                  for i in (8, 12, 16)]
        assert ratios[0] > ratios[1] > ratios[2]
        assert ratios[2] == pytest.approx(1.0, abs=0.01)

    def test_zero_chi2_gives_zero(self):
        ch = make_dmc([0.5, 0.5], [0.5, 0.5])
        st_ = divergence_stats(ch.row1, ch.row0)
        assert level_capacity_bound(st_, 5) == 0.0


class TestLevelMiTable:
    def test_identical_channels_zero_diffs(self):
        ch = bsc(0.15)
        rows = level_mi_table(ch, ch, 5)
        assert all(r.diff == pytest.approx(0.0, abs=1e-14) for r in rows)

    def test_capacity_sum_approaches_divergence(self):
        ch = bsc(0.1)
        rows = level_mi_table(ch, ch, 16)
        total = sum(r.i_y for r in rows)
        d = divergence_stats(ch.row1, ch.row0, "bits").kl
        assert total == pytest.approx(2.5359, abs=1e-3)
        assert abs(total - d) < 1e-3


class TestMsdRatePlan:
    def test_degraded_has_no_secrets_or_keys(self):
        plan = msd_rate_plan(bsc(0.05), bsc(0.1), 6, delta=1.0, degraded=True)
        assert all(lr.r_v == 0.0 and lr.r_k == 0.0 for lr in plan.per_level)
        assert plan.degraded

    def test_table_pair_rate_split(self):
        # negative MI differences on the first three levels turn into secret
        # surplus; positive differences above turn into key deficit, and the
        # surplus exceeds the deficit so chaining is feasible
        plan = msd_rate_plan(bsc(0.2), bac(0.1, 0.4), 10, delta=1.0,
                             epsilon=0.005)
        rv = [lr.r_v for lr in plan.per_level]
        rk = [lr.r_k for lr in plan.per_level]
        assert all(v > 0 for v in rv[:3]) and all(v == 0 for v in rv[3:])
        assert all(k == 0 for k in rk[:3]) and all(k > 0 for k in rk[3:])
        assert plan.sum_rv() > plan.sum_rk()

    def test_rv_rk_never_both_positive(self):
        for eps in (0.005, 0.05, 0.2):
            plan = msd_rate_plan(bsc(0.2), bac(0.1, 0.4), 8, delta=1.0,
                                 epsilon=eps)
            assert all(lr.r_v * lr.r_k == 0.0 for lr in plan.per_level)

    def test_design_point_blocklength(self):
        plan = msd_rate_plan(bsc(0.05), bsc(0.1), 10, delta=1.0, B=1,
                             epsilon=0.05, degraded=True)
        assert plan.m == 1024
        assert plan.ell == 288

    def test_planned_blocklength_formula(self):
        assert planned_blocklength(1024, 1.0, 1, 64.0 / 9.0) == 288
        assert planned_blocklength(1024, 1.0, 4, 64.0 / 9.0) == 72

    def test_delta_zero_rejected(self):
        with pytest.raises(RatePlanError, match="blocklength zero"):
            msd_rate_plan(bsc(0.05), bsc(0.1), 4, delta=0.0, degraded=True)

    def test_u_floor_override(self):
        plan = msd_rate_plan(bsc(0.2), bac(0.1, 0.4), 5, delta=2.0,
                             epsilon=0.02, u_floor=0.15)
        assert plan.u == 3

    def test_feasibility_brute_forced_small_q(self):
        # for every subset S of levels: sum of message+secret rates is below
        # the conditional set MI of Bob, and message+key rates exceed the
        # unconditional set MI of Willie (both enumerated on the full super
        # channel)
        bob, willie = bsc(0.2), bac(0.1, 0.4)
        q, eps = 3, 0.01
        plan = msd_rate_plan(bob, willie, q, delta=1.0, epsilon=eps)
        rates = {lr.level: lr for lr in plan.per_level}
        for r in range(1, q + 1):
            for S in itertools.combinations(range(1, q + 1), r):
                su_v = sum(rates[i].r_u + rates[i].r_v for i in S)
                su_k = sum(rates[i].r_u + rates[i].r_k for i in S)
                i_y = brute_set_mi(bob, q, set(S), conditional=True)
                i_z = brute_set_mi(willie, q, set(S), conditional=False)
                assert su_v <= i_y - len(S) * eps / q + 1e-9
                assert su_k >= i_z - 1e-9

    def test_feasibility_chain_rule_surrogate_q6(self):
        # at q = 6 the full enumeration is out of reach; assert the per-level
        # surrogate inequalities the chain rule reduces to
        bob, willie = bsc(0.2), bac(0.1, 0.4)
        q, eps = 6, 0.01
        plan = msd_rate_plan(bob, willie, q, delta=1.0, epsilon=eps)
        mi = level_mi_table(bob, willie, q)
        for lr, row in zip(plan.per_level, mi):
            assert lr.r_u + lr.r_v <= row.i_y - eps / q + 1e-12
            assert lr.r_u + lr.r_k >= row.i_z + eps / q - 1e-12


class TestThroughputSummary:
    def test_sweep_monotone_to_capacity(self):
        bob, willie = bsc(0.05), bsc(0.1)
        pair = ChannelPair.of(bob, willie)
        prev = 0.0
        for q in range(6, 13):
            plan = msd_rate_plan(bob, willie, q, delta=1.0, epsilon=0.01,
                                 degraded=True)
            s = throughput_summary(plan, pair.bob_stats, pair.willie_stats)
            assert s.covert_throughput > prev
            prev = s.covert_throughput
        assert prev >= 0.95 * s.covert_capacity

    def test_identical_channels_degenerate(self):
        ch = make_dmc([0.5, 0.5], [0.5, 0.5])
        pair = ChannelPair.of(ch, ch)
        plan = RatePlan(q=2, ell=8, B=1, delta=1.0, epsilon=0.01, base="bits",
                        u=1, per_level=(LevelRates(1, 0.5, 0.0, 0.0),
                                        LevelRates(2, 0.5, 0.0, 0.0)))
        s = throughput_summary(plan, pair.bob_stats, pair.willie_stats)
        assert s.degenerate
        assert s.covert_capacity == 0.0

    def test_key_capacity_clamped_at_zero(self):
        # D(Q1||Q0) < D(P1||P0) for this pair: no key needed asymptotically
        pair = ChannelPair.of(bsc(0.2), bac(0.1, 0.4))
        plan = msd_rate_plan(pair.bob, pair.willie, 4, delta=1.0, epsilon=0.01)
        s = throughput_summary(plan, pair.bob_stats, pair.willie_stats)
        assert s.key_capacity == 0.0


class TestSelectPositions:
    def test_high_bit_zero_selects_first_half(self):
        block = np.arange(16)
        np.testing.assert_array_equal(select_positions(block, [0]),
                                      np.arange(8))

    def test_level_one_selection(self):
        block = np.arange(16)
        np.testing.assert_array_equal(select_positions(block, [0, 0, 0]),
                                      [0, 1])

    def test_full_identity(self):
        block = np.arange(8)
        np.testing.assert_array_equal(select_positions(block, []), block)

    def test_matches_index_set(self):
        from covertppm.ppm import index_set
        q = 4
        block = np.arange(1, 17)
        for bits in itertools.product([0, 1], repeat=2):
            got = select_positions(block, list(bits))
            want = index_set(q, {3: bits[0], 4: bits[1]})
            np.testing.assert_array_equal(got, want)

    def test_batch_matches_scalar(self, rng):
        q, i, ell = 4, 2, 10
        symbols = rng.integers(0, 3, size=(ell, 16))
        high = rng.integers(0, 2, size=(q - i, ell), dtype=np.uint8)
        batch = select_positions_batch(symbols, high, i)
        for j in range(ell):
            np.testing.assert_array_equal(
                batch[j], select_positions(symbols[j], high[:, j])
            )


class TestLevelLlr:
    def test_symmetric_evidence_zero(self):
        assert level_llr([2.0, 2.0, 2.0, 2.0]) == 0.0

    def test_level_one_bsc(self):
        assert level_llr([9.0, 1.0 / 9.0]) == pytest.approx(math.log(81.0))

    def test_swap_negates(self, rng):
        lam = rng.random(8) + 0.05
        swapped = np.concatenate([lam[4:], lam[:4]])
        assert level_llr(swapped) == pytest.approx(-level_llr(lam))

    def test_saturation(self):
        assert level_llr([np.inf, 1.0, 1.0, 1.0]) == 40.0
        assert level_llr([0.0, 0.0, 1.0, 1.0]) == -40.0

    def test_both_halves_zero_rejected(self):
        with pytest.raises(ValueError):
            level_llr([0.0, 0.0, 0.0, 0.0])

    def test_within_half_permutation_is_bitwise_invariant(self, rng):
        lam = rng.random((50, 8)) + 0.01
        base = level_llrs(lam)
        for _ in range(20):
            perm = np.concatenate([rng.permutation(4), 4 + rng.permutation(4)])
            again = level_llrs(lam[:, perm])
            np.testing.assert_array_equal(base, again)


class TestLevelChannelLemmas:
    @staticmethod
    def _swap_halves_index(idx: int, width: int, a: int) -> int:
        digits = []
        v = idx
        for _ in range(width):
            digits.append(v % a)
            v //= a
        digits = digits[::-1]  # first coordinate is the slowest-varying
        swapped = digits[width // 2:] + digits[:width // 2]
        out = 0
        for d in swapped:
            out = out * a + d
        return out

    def test_symmetry_lemma(self):
        # W^i(y | 0) equals W^i with halves swapped given input 1
        for ch in (bsc(0.1), bac(0.1, 0.4)):
            for i in (1, 2, 3):
                row0, row1 = level_channel_rows(ch, i)
                width = 1 << i
                mapping = np.array([
                    self._swap_halves_index(t, width, ch.alphabet_size)
                    for t in range(row0.shape[0])
                ])
                np.testing.assert_allclose(row0, row1[mapping], rtol=1e-12)

    @staticmethod
    def _apply_perm_index(idx: int, width: int, a: int, perm) -> int:
        digits = []
        v = idx
        for _ in range(width):
            digits.append(v % a)
            v //= a
        digits = digits[::-1]
        moved = [digits[perm[t]] for t in range(width)]
        out = 0
        for d in moved:
            out = out * a + d
        return out

    def _assert_invariant(self, ch, i, perm):
        row0, row1 = level_channel_rows(ch, i)
        width = 1 << i
        mapping = np.array([
            self._apply_perm_index(t, width, ch.alphabet_size, perm)
            for t in range(row0.shape[0])
        ])
        np.testing.assert_allclose(row0, row0[mapping], rtol=1e-12)
        np.testing.assert_allclose(row1, row1[mapping], rtol=1e-12)

    def test_permutation_invariance_exhaustive_i2(self):
        ch = bsc(0.1)
        for first in itertools.permutations(range(2)):
            for second in itertools.permutations(range(2, 4)):
                self._assert_invariant(ch, 2, list(first) + list(second))

    def test_permutation_invariance_sampled_i3(self, rng):
        ch = bac(0.1, 0.4)
        for _ in range(100):
            perm = np.concatenate([rng.permutation(4), 4 + rng.permutation(4)])
            self._assert_invariant(ch, 3, perm.tolist())


class TestPlanSerialisation:
    def test_round_trip(self):
        plan = msd_rate_plan(bsc(0.2), bac(0.1, 0.4), 5, delta=2.0,
                             epsilon=0.02)
        again = plan_from_text(plan_to_text(plan))
        assert again == plan

    def test_rejects_foreign_document(self):
        with pytest.raises(ValueError):
            plan_from_text("something else\nq = 3\n")
