"""Tests for the Poisson limit model"""

import numpy as np
import pytest

from transnn.builders import build_spec, random_spec, self_loop_spec
from transnn.error_handler import DimensionMismatch, DomainError
from transnn.limit_model import (
    LimitState,
    initial_limit_state,
    limit_info_step,
    limit_info_trajectory,
    limit_prob_step,
    limit_prob_trajectory,
    phi,
    poisson_gap,
    population_limit_gap,
    sigma,
)
from transnn.network_model import EXCITATORY, INHIBITORY, frame_at


class TestSigma:

    def test_values(self):
        assert sigma(0.0, 3.0) == 0.0
        assert sigma(np.inf, 0.0) == 1.0
        assert sigma(np.log(2.0), np.log(2.0)) == pytest.approx(0.25)

    def test_phi_is_elementwise(self):
        state = LimitState([0.0, np.inf, np.log(2.0)], [1.0, 0.0, np.log(2.0)])
        np.testing.assert_allclose(phi(state), [0.0, 1.0, 0.25])


class TestLimitState:

    def test_rejects_infinite_inhibition(self):
        with pytest.raises(DomainError):
            LimitState([0.0], [np.inf])

    def test_rejects_mismatched_lengths(self):
        with pytest.raises(DimensionMismatch):
            LimitState([0.0, 1.0], [0.0])

    def test_initial_state(self):
        state = initial_limit_state([0.0, 0.5, 1.0])
        np.testing.assert_allclose(state.o_bar, 0.0)
        assert state.s_bar[1] == pytest.approx(np.log(2.0))
        assert np.isinf(state.s_bar[2])


class TestLimitInfoStep:

    def test_zero_state_is_fixed(self, rng):
        spec = random_spec(rng, 4)
        nxt = limit_info_step(spec, 0, LimitState(np.zeros(4), np.zeros(4)))
        np.testing.assert_array_equal(nxt.s_bar, 0.0)
        np.testing.assert_array_equal(nxt.o_bar, 0.0)

    def test_saturated_source(self):
        spec = build_spec(2, [(1, 0, EXCITATORY, 1.0, 1, 1.0)])
        nxt = limit_info_step(spec, 0, LimitState([np.inf, 0.0], [0.0, 0.0]))
        assert nxt.s_bar[1] == 1.0

    def test_term_by_term(self):
        edges = [(0, 1, EXCITATORY, 0.5, 2, 0.8), (0, 2, INHIBITORY, 0.3, 1, 0.4),
                 (1, 0, EXCITATORY, 0.9, 1, 1.3), (2, 2, INHIBITORY, 0.2, 3, 0.6), (2, 0, EXCITATORY, 1.0, 1, 0.7)]
        spec = build_spec(3, edges)
        state = LimitState([0.3, 1.2, 2.0], [0.1, 0.0, 0.5])
        nxt = limit_info_step(spec, 0, state)

        expected_s, expected_o = np.zeros(3), np.zeros(3)
        for i, j, kind, _, _, lam in edges:
            term = lam * np.exp(-state.o_bar[j]) * (1 - np.exp(-state.s_bar[j]))
            if kind == EXCITATORY:
                expected_s[i] += term
            else:
                expected_o[i] += term
        np.testing.assert_allclose(nxt.s_bar, expected_s, rtol=1e-14)
        np.testing.assert_allclose(nxt.o_bar, expected_o, rtol=1e-14)

    def test_inhibition_stays_finite(self, rng):
        spec = random_spec(rng, 5, inhibitory_fraction=0.7, max_rate=3.0, horizon=20)
        for state in limit_info_trajectory(spec):
            assert np.all(np.isfinite(state.o_bar))


class TestLimitProbStep:

    def test_trivial_equilibrium(self, rng):
        spec = random_spec(rng, 4)
        np.testing.assert_array_equal(limit_prob_step(spec, 0, np.zeros(4)), 0.0)

    def test_self_loop(self):
        spec = self_loop_spec(1.0)
        assert limit_prob_step(spec, 0, [1.0])[0] == pytest.approx(1 - np.exp(-1.0))

    def test_pure_inhibition_target(self):
        spec = build_spec(2, [(1, 0, INHIBITORY, 0.5, 1, 2.0)])
        assert limit_prob_step(spec, 0, [1.0, 0.7])[1] == 0.0

    def test_preserves_range(self, rng):
        for _ in range(10):
            spec = random_spec(rng, 6, max_rate=4.0, horizon=15)
            traj = limit_prob_trajectory(spec)
            assert traj.min() >= 0.0 and traj.max() <= 1.0

    def test_matches_information_trajectory(self):
        for seed in range(30):
            gen = np.random.default_rng(seed)
            spec = random_spec(gen, int(gen.integers(1, 8)), max_rate=2.5, horizon=12)
            from_states = np.vstack([phi(state) for state in limit_info_trajectory(spec)])
            assert np.abs(from_states - limit_prob_trajectory(spec)).max() <= 1e-10


class TestPoissonGap:

    def test_values(self):
        assert poisson_gap(5, 0.0, 0.7) == 0.0
        assert poisson_gap(10, 1.0, 1.0) == pytest.approx(0.0192, abs=1e-4)

    def test_decreases_with_count(self):
        gaps = [poisson_gap(a, 1.0, 1.0) for a in (4, 8, 16, 32, 64)]
        assert all(later < earlier for earlier, later in zip(gaps, gaps[1:]))

    def test_rate_above_count(self):
        with pytest.raises(DomainError, match="exceeds 1"):
            poisson_gap(2, 3.0, 1.0)

    def test_population_converges_to_limit(self):
        counts = (16, 32, 64, 128)
        for seed in range(10):
            gen = np.random.default_rng(100 + seed)
            spec = random_spec(gen, int(gen.integers(2, 7)), max_rate=2.0, horizon=5)
            gaps = population_limit_gap(spec, counts)
            worst = {a: gaps[a].max() for a in counts}
            for a in counts[:-1]:
                if worst[a] > 1e-13:
                    assert worst[2 * a] / worst[a] <= 0.75

    def test_gap_rows_start_at_zero(self, rng):
        spec = random_spec(rng, 3, horizon=4)
        gaps = population_limit_gap(spec, [8])
        assert gaps[8].shape == (5,)
        assert gaps[8][0] == 0.0
        assert frame_at(spec, 0).lam.max() <= 8
