import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from covertppm.channels import bsc, bac, divergence_stats, make_dmc
from covertppm.ppm import (
    EnumerationBudgetError,
    PpmFrame,
    decimal_map,
    decimal_unmap,
    frame_from_bits,
    index_set,
    likelihood_ratios,
    monte_carlo_divergence,
    ppm_divergence_bound,
    ppm_output_divergence,
    transmit_super,
)

from conftest import brute_ppm_divergence


class TestDecimalMap:
    # reference points from the order-16 mapper layout: x_1 is the least
    # significant bit, position = decimal + 1
    def test_all_zero(self):
        assert decimal_map([0, 0, 0, 0]) == 0

    def test_lsb_first(self):
        assert decimal_map([1, 0, 0, 0]) == 1

    def test_all_one(self):
        assert decimal_map([1, 1, 1, 1]) == 15

    @given(st.integers(1, 12), st.data())
    @settings(max_examples=100, deadline=None)
    def test_round_trip(self, q, data):
        value = data.draw(st.integers(0, (1 << q) - 1))
        assert decimal_map(decimal_unmap(value, q)) == value

    def test_round_trip_exhaustive_small(self):
        for q in range(1, 13):
            for v in range(1 << q) if q <= 8 else range(0, 1 << q, 97):
                assert decimal_map(decimal_unmap(v, q)) == v

    def test_rejects_non_bits(self):
        with pytest.raises(ValueError):
            decimal_map([0, 2])


class TestIndexSet:
    def test_top_bit_zero_is_first_half(self):
        np.testing.assert_array_equal(index_set(4, {4: 0}), np.arange(1, 9))

    def test_bottom_bit_alternates(self):
        np.testing.assert_array_equal(index_set(4, {1: 1}),
                                      np.arange(2, 17, 2))

    def test_empty_constraint_full_set(self):
        np.testing.assert_array_equal(index_set(3, {}), np.arange(1, 9))

    def test_partition_property(self):
        # over all assignments of x_S the sets tile [1, 2^q] in equal blocks
        q = 5
        for S in ([2], [1, 4], [2, 3, 5]):
            seen = []
            for bits in itertools.product([0, 1], repeat=len(S)):
                part = index_set(q, dict(zip(S, bits)))
                assert part.shape[0] == (1 << q) >> len(S)
                seen.extend(part.tolist())
            assert sorted(seen) == list(range(1, (1 << q) + 1))

    def test_level_out_of_range(self):
        with pytest.raises(ValueError):
            index_set(3, {4: 0})


class TestTransmitSuper:
    def test_noiseless_pulse(self, rng):
        ch = make_dmc([1.0, 0.0], [0.0, 1.0])
        out = transmit_super(ch, PpmFrame(q=2, positions=np.array([3])), rng)
        np.testing.assert_array_equal(out.symbols[0], [0, 0, 1, 0])

    def test_identical_rows_marginals_match_innocent(self, rng):
        # with row1 == row0 the pulse coordinate is indistinguishable from
        # the rest: all empirical marginals coincide within sampling noise
        ch = make_dmc([0.7, 0.3], [0.7, 0.3])
        frame = PpmFrame(q=2, positions=np.full(20000, 2))
        out = transmit_super(ch, frame, rng)
        marg = (out.symbols == 1).mean(axis=0)
        np.testing.assert_allclose(marg, 0.3, atol=0.02)

    def test_bsc_marginal_at_pulse(self, rng):
        ch = bsc(0.1)
        frame = PpmFrame(q=3, positions=np.ones(10**5, dtype=np.int64))
        out = transmit_super(ch, frame, rng)
        p1 = (out.symbols[:, 0] == 1).mean()
        assert p1 == pytest.approx(0.9, abs=0.01)
        off = (out.symbols[:, 1] == 1).mean()
        assert off == pytest.approx(0.1, abs=0.01)

    def test_position_bounds_checked(self):
        with pytest.raises(ValueError):
            PpmFrame(q=2, positions=np.array([5]))


class TestFrameFromBits:
    def test_mapper_columns(self):
        bits = np.array([[1, 1], [0, 1]], dtype=np.uint8)  # x1 rows, x2 rows
        frame = frame_from_bits(bits)
        np.testing.assert_array_equal(frame.positions, [2, 4])

    def test_zero_bits(self):
        frame = frame_from_bits(np.zeros((2, 3), dtype=np.uint8))
        np.testing.assert_array_equal(frame.positions, [1, 1, 1])


class TestPpmOutputDivergence:
    def test_order_one_is_plain_divergence(self):
        ch = bsc(0.1)
        st_ = divergence_stats(ch.row1, ch.row0)
        assert ppm_output_divergence(ch, 1) == pytest.approx(st_.kl, rel=1e-12)

    def test_identical_rows_zero(self):
        ch = make_dmc([0.6, 0.4], [0.6, 0.4])
        for m in (1, 2, 8, 64):
            assert ppm_output_divergence(ch, m) == pytest.approx(0.0, abs=1e-12)

    def test_table_level_one_relation(self):
        # D(P1||P0) - D(P_ppm^2 || P0^2) is the first-level capacity 0.7421
        ch = bsc(0.1)
        d1 = ppm_output_divergence(ch, 1, "bits")
        d2 = ppm_output_divergence(ch, 2, "bits")
        assert d1 - d2 == pytest.approx(0.7421, abs=5e-5)

    def test_monotone_decreasing_in_m(self):
        ch = bsc(0.1)
        values = [ppm_output_divergence(ch, 1 << t) for t in range(1, 9)]
        assert all(a > b for a, b in zip(values, values[1:]))

    @pytest.mark.parametrize("m", [1, 2, 4, 8])
    def test_binary_dp_equals_brute_force(self, m):
        for ch in (bsc(0.1), bac(0.1, 0.4), bsc(0.35)):
            assert ppm_output_divergence(ch, m) == pytest.approx(
                brute_ppm_divergence(ch, m), rel=1e-11, abs=1e-13
            )

    @pytest.mark.parametrize("m", [1, 2, 4])
    def test_type_dp_equals_brute_force_ternary(self, m):
        ch = make_dmc([0.5, 0.3, 0.2], [0.2, 0.2, 0.6])
        assert ppm_output_divergence(ch, m) == pytest.approx(
            brute_ppm_divergence(ch, m), rel=1e-11, abs=1e-13
        )

    def test_support_violation_infinite(self):
        ch = make_dmc([1.0, 0.0], [0.5, 0.5])
        assert math.isinf(ppm_output_divergence(ch, 4))

    def test_alphabet_budget_signals_monte_carlo(self):
        rows = np.full(7, 1 / 7)
        ch = make_dmc(rows, np.roll(rows, 1))
        with pytest.raises(EnumerationBudgetError, match="monte_carlo"):
            ppm_output_divergence(ch, 4)

    def test_type_budget_signals_monte_carlo(self):
        ch = make_dmc([0.5, 0.3, 0.2], [0.2, 0.2, 0.6])
        with pytest.raises(EnumerationBudgetError):
            ppm_output_divergence(ch, 1024, type_budget=100)

    def test_monte_carlo_agrees_with_exact(self, rng):
        ch = bsc(0.1)
        exact = ppm_output_divergence(ch, 16)
        est, se = monte_carlo_divergence(ch, 16, 40000, rng)
        assert abs(est - exact) <= 3.5 * se

    def test_rejects_non_power_of_two(self):
        with pytest.raises(ValueError):
            ppm_output_divergence(bsc(0.1), 3)


class TestDivergenceBound:
    def test_design_point_is_one_nat(self):
        # chi2 = 64/9 for the BSC(0.1) warden; ell = 288 at m = 1024 lands
        # exactly on the delta = 1 design point
        chi2 = divergence_stats(bsc(0.1).row1, bsc(0.1).row0).chi2
        assert ppm_divergence_bound(chi2, 1024, 288) == pytest.approx(1.0, abs=1e-12)

    def test_zero_length(self):
        assert ppm_divergence_bound(5.0, 16, 0) == 0.0

    def test_leading_order_tightens_with_m(self):
        # exact value exceeds the leading-order bound by an O(1/m) factor
        # that shrinks as m grows
        ch = bsc(0.1)
        chi2 = divergence_stats(ch.row1, ch.row0).chi2
        ratios = []
        for m in (64, 128, 256):
            exact = ppm_output_divergence(ch, m)
            ratios.append(exact / ppm_divergence_bound(chi2, m, 1))
        assert ratios[0] < 1.03
        assert ratios[0] > ratios[1] > ratios[2] > 1.0

    def test_rejects_tiny_order(self):
        with pytest.raises(ValueError):
            ppm_divergence_bound(1.0, 1, 10)


class TestLikelihoodRatios:
    def test_bsc_values(self):
        lam = likelihood_ratios(bsc(0.1), [1, 0])
        np.testing.assert_allclose(lam, [9.0, 1.0 / 9.0])

    def test_identical_rows_all_one(self):
        ch = make_dmc([0.25, 0.75], [0.25, 0.75])
        np.testing.assert_allclose(likelihood_ratios(ch, [0, 1, 1, 0]), 1.0)

    def test_bac_values(self):
        lam = likelihood_ratios(bac(0.1, 0.4), [1, 0])
        np.testing.assert_allclose(lam, [6.0, 4.0 / 9.0])

    def test_infinite_marker(self):
        ch = make_dmc([1.0, 0.0], [0.5, 0.5])
        lam = likelihood_ratios(ch, [1])
        assert math.isinf(lam[0])

    def test_out_of_alphabet(self):
        with pytest.raises(ValueError):
            likelihood_ratios(bsc(0.1), [2])
