import math

import numpy as np
import pytest

from errors import InvalidInputError
from models import AveragedState, StateVector, TransitionCoefficients
from utils.formulas import (all_reads_clean_probability, clean_fraction, clean_read_probability,
                            conflict_probability, fluid_derivatives, transition_coefficients)
from utils.numerics import RAMP_SERIES_CUTOFF, SERIES_CUTOFF, ramp_integral, relative_decay


def _coefficients(g3, g12, g21):
    return TransitionCoefficients(g_star3=g3, g_12=g12, g_21=g21, alpha=1.0, beta=1.0, q=0.0)


class TestCleanReadProbability:
    def test_fully_clean_database(self):
        state = StateVector(7e9, 3e9, 0.0, 0.0, 1e10)
        assert clean_read_probability(state) == pytest.approx(1.0)

    def test_all_reciprocally_inconsistent(self):
        state = StateVector(0.0, 0.0, 1e4, 0.0, 1e4)
        assert clean_read_probability(state) == pytest.approx(0.5)

    def test_mixed_state(self):
        state = StateVector(5000, 3000, 1000, 1000, 10000)
        assert clean_read_probability(state) == pytest.approx(0.85)

    def test_mixed_state_matches_draws_over_edge_array(self):
        rng = np.random.default_rng(11)
        states = np.repeat([0, 1, 2, 3], [5000, 3000, 1000, 1000])
        picked = states[rng.integers(0, len(states), size=200_000)]
        clean = (picked <= 1) | ((picked == 2) & (rng.random(len(picked)) < 0.5))
        assert clean.mean() == pytest.approx(0.85, abs=0.005)

    def test_zero_total_rejected(self):
        with pytest.raises(InvalidInputError):
            clean_fraction(0, 0, 0, 0)

    def test_non_increasing_in_corrupt_states(self):
        base = clean_read_probability(StateVector(6000, 3000, 500, 500, 10000))
        # edges moved into state 2 or state 3 at fixed N
        assert clean_read_probability(StateVector(6000, 2500, 1000, 500, 10000)) < base
        assert clean_read_probability(StateVector(6000, 3000, 0, 1000, 10000)) < base
        assert clean_read_probability(StateVector(6000, 3000, 400, 600, 10000)) < base
        assert clean_fraction(6000, 3000, 500, 10000) == pytest.approx(base)


class TestAllReadsCleanProbability:
    def test_alpha_one(self):
        assert all_reads_clean_probability(1.0, 0.4) == pytest.approx(1.0)

    @pytest.mark.parametrize('r', [0.1, 0.4, 1.0])
    def test_alpha_zero(self, r):
        assert all_reads_clean_probability(0.0, r) == 0.0

    def test_known_value(self):
        assert all_reads_clean_probability(0.9, 0.4) == pytest.approx(0.7043478, rel=1e-6)

    def test_increasing_in_alpha(self):
        alphas = np.linspace(0.0, 1.0, 51)
        betas = [all_reads_clean_probability(a, 0.4) for a in alphas]
        assert all(b2 > b1 for b1, b2 in zip(betas, betas[1:]))

    @pytest.mark.parametrize('alpha, r', [(1.2, 0.4), (0.5, 0.0), (0.5, 1.5)])
    def test_out_of_range(self, alpha, r):
        with pytest.raises(InvalidInputError):
            all_reads_clean_probability(alpha, r)

    @pytest.mark.slow
    def test_matches_monte_carlo(self):
        rng = np.random.default_rng(2024)
        trials = 1_000_000
        reads = 1 + rng.geometric(0.4, size=trials)
        all_clean = rng.binomial(reads, 0.9) == reads
        estimate = all_clean.mean()
        expected = all_reads_clean_probability(0.9, 0.4)
        stderr = math.sqrt(expected * (1 - expected) / trials)
        assert abs(estimate - expected) <= 3 * stderr


class TestConflictProbability:
    def test_zero_delay(self):
        assert conflict_probability(1000, 0.0, 1e5) == 0.0

    def test_known_value(self):
        assert conflict_probability(1000, 0.005, 1e5) == pytest.approx(2.49994e-5, rel=1e-5)

    def test_vanishes_for_huge_graphs(self):
        assert conflict_probability(1000, 0.005, 1e15) < 1e-11

    def test_monotone(self):
        q = conflict_probability(1000, 0.005, 1e5)
        assert conflict_probability(2000, 0.005, 1e5) > q
        assert conflict_probability(1000, 0.010, 1e5) > q
        assert conflict_probability(1000, 0.005, 2e5) < q

    def test_invalid(self):
        with pytest.raises(InvalidInputError):
            conflict_probability(1000, 0.005, 0)

    @pytest.mark.slow
    def test_matches_exponential_race(self):
        rng = np.random.default_rng(99)
        trials = 2_000_000
        lam, delta, n = 1000.0, 0.005, 1e5
        completion = rng.exponential(delta, size=trials)
        arrival = rng.exponential(2 * n / lam, size=trials)
        estimate = (arrival < completion).mean()
        expected = conflict_probability(lam, delta, n)
        stderr = math.sqrt(expected * (1 - expected) / trials)
        assert abs(estimate - expected) <= 3 * stderr


class TestTransitionCoefficients:
    def test_known_values(self):
        g = transition_coefficients(2000, 1e4, 0.99, 1e-4)
        assert g.g_star3 == pytest.approx(2.0e-3)
        assert g.g_12 == pytest.approx(1.9602e-5)
        assert g.g_21 == pytest.approx(0.1979802)

    def test_all_clean_reads_never_corrupt(self):
        assert transition_coefficients(2000, 1e4, 1.0, 0.1).g_star3 == 0.0

    def test_all_dirty_reads_never_flip_between_one_and_two(self):
        g = transition_coefficients(2000, 1e4, 0.0, 0.1)
        assert g.g_12 == 0.0
        assert g.g_21 == 0.0

    def test_no_conflicts_no_state_two(self):
        assert transition_coefficients(2000, 1e4, 0.7, 0.0).g_12 == 0.0

    def test_rates_scale_with_occupancy(self):
        g = transition_coefficients(2000, 1e4, 0.99, 1e-4)
        assert g.rate(0, 3, 100) == pytest.approx(g.g_star3 * 100)
        assert g.rate(2, 3, 100) == pytest.approx(g.g_star3 * 100)
        assert g.rate(1, 2, 50) == pytest.approx(g.g_12 * 50)
        assert g.rate(2, 1, 50) == pytest.approx(g.g_21 * 50)


class TestFluidDerivatives:
    def test_only_corruption_flow(self):
        state = StateVector(100, 0, 0, 0, 100)
        derivatives = fluid_derivatives(state, _coefficients(0.01, 0.5, 0.5))
        assert derivatives == pytest.approx([-1.0, 0.0, 0.0, 1.0])

    def test_zero_rates(self):
        state = StateVector(40, 30, 20, 10, 100)
        assert list(fluid_derivatives(state, _coefficients(0, 0, 0))) == [0, 0, 0, 0]

    def test_exchange_between_one_and_two(self):
        state = StateVector(0, 50, 10, 0, 60)
        derivatives = fluid_derivatives(state, _coefficients(0.0, 0.1, 0.2))
        assert derivatives == pytest.approx([0.0, -3.0, 3.0, 0.0])
        assert derivatives.sum() == pytest.approx(0.0, abs=1e-12)

    def test_averaged_coupling(self):
        state = StateVector(0, 50, 10, 0, 60)
        averaged = AveragedState(0, 40, 20)
        derivatives = fluid_derivatives(state, _coefficients(0.0, 0.1, 0.2), averaged)
        assert derivatives[1] == pytest.approx(0.2 * 20 - 0.1 * 50)
        assert derivatives[2] == pytest.approx(0.1 * 40 - 0.2 * 10)

    def test_derivatives_conserve_total(self):
        rng = np.random.default_rng(5)
        for _ in range(500):
            counts = rng.uniform(0, 1e6, size=4)
            state = StateVector(*counts, counts.sum())
            derivatives = fluid_derivatives(state, _coefficients(*rng.uniform(0, 1, size=3)))
            scale = max(np.abs(derivatives).max(), 1.0)
            assert abs(derivatives.sum()) <= 1e-12 * scale
            assert derivatives[3] >= 0


class TestNumerics:
    def test_relative_decay_limits(self):
        assert relative_decay(0.0) == 1.0
        assert relative_decay(1.0) == pytest.approx(1 - math.exp(-1))
        assert relative_decay(1e6) == pytest.approx(1e-6)

    def test_relative_decay_continuous_at_cutoff(self):
        below = relative_decay(SERIES_CUTOFF * (1 - 1e-9))
        above = relative_decay(SERIES_CUTOFF * (1 + 1e-9))
        assert below == pytest.approx(above, rel=1e-9)

    def test_ramp_integral_limits(self):
        assert ramp_integral(0.0) == 0.5
        assert ramp_integral(2.0) == pytest.approx((2 - 1 + math.exp(-2)) / 4)

    def test_ramp_integral_continuous_at_cutoff(self):
        below = ramp_integral(RAMP_SERIES_CUTOFF * (1 - 1e-9))
        above = ramp_integral(RAMP_SERIES_CUTOFF * (1 + 1e-9))
        assert below == pytest.approx(above, rel=1e-9)
