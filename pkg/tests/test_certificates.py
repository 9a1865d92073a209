"""Tests for norms, contraction, stability, linear bounds and the limit Jacobian"""

import numpy as np
import pytest

from transnn.builders import build_schedule_spec, build_spec, random_spec, scale_rates, self_loop_spec
from transnn.certificates import (
    CertificateReport,
    contraction_certificate,
    induced_norm,
    limit_jacobian,
    phi_derivative_norm,
    spectral_radius,
    stability_certificate,
    upper_bound_certificate,
    upper_bound_info,
)
from transnn.error_handler import CertificateError, ConvergenceError, DimensionMismatch, DomainError
from transnn.limit_model import LimitState, limit_info_step, limit_info_trajectory
from transnn.network_model import EXCITATORY, INHIBITORY, frame_at, with_offset_node

BOUND_TOL = 1e-12


def _random_limit_state(gen, n, high=3.0):
    return LimitState(gen.uniform(0.0, high, n), gen.uniform(0.0, high, n))


def _cycle_spec(n, lam):
    return build_spec(n, [((i + 1) % n, i, EXCITATORY, min(lam, 1.0), 1, lam) for i in range(n)])


class TestInducedNorm:

    def test_identity(self):
        assert induced_norm(np.eye(2), 1) == 1.0
        assert induced_norm(np.eye(2), 'inf') == 1.0

    def test_rectangular_stack(self):
        m = np.array([[0.4], [0.0]])
        assert induced_norm(m, 1) == pytest.approx(0.4)
        assert induced_norm(m, np.inf) == pytest.approx(0.4)

    def test_column_and_row_sums(self):
        m = np.array([[1.0, 2.0], [3.0, 4.0]])
        assert induced_norm(m, 1) == 6.0
        assert induced_norm(m, 'inf') == 7.0

    def test_unsupported_order(self):
        with pytest.raises(DomainError):
            induced_norm(np.eye(2), 2)


class TestContraction:

    def test_empty_edges(self):
        report = contraction_certificate(build_spec(3, []), 1)
        assert report.holds
        assert report.witness == 0.0

    def test_self_loops(self):
        report = contraction_certificate(self_loop_spec(0.4), 'inf')
        assert report.kind == 'contraction-inf'
        assert report.holds and report.witness == pytest.approx(0.4)
        assert not contraction_certificate(self_loop_spec(1.5), 1).holds

    def test_reports_both_conventions(self):
        spec = build_spec(2, [(0, 1, EXCITATORY, 0.5, 1, 0.3), (1, 1, INHIBITORY, 0.5, 1, 0.6)])
        report = contraction_certificate(spec, 1)
        assert report.details['norm_1'] == pytest.approx(0.9)
        assert report.details['norm_inf'] == pytest.approx(0.6)
        assert report.witness == report.details['norm_1']

    def test_worst_frame_wins(self):
        spec = build_schedule_spec(1, [[(0, 0, EXCITATORY, 0.5)], [(0, 0, EXCITATORY, 1.0, 1, 1.2)]], horizon=3)
        report = contraction_certificate(spec, 1)
        assert report.per_step == pytest.approx([0.5, 1.2])
        assert not report.holds

    @pytest.mark.parametrize("p", [1, 'inf'])
    def test_distances_shrink_every_step(self, p):
        order = 1 if p == 1 else np.inf
        for seed in range(10):
            gen = np.random.default_rng(seed)
            base = random_spec(gen, int(gen.integers(2, 6)), max_rate=2.0)
            spec = scale_rates(base, 0.9 / induced_norm(frame_at(base, 0).stacked_rates, p))
            assert contraction_certificate(spec, p).holds
            for _ in range(100):
                x, y = _random_limit_state(gen, spec.n, 5.0), _random_limit_state(gen, spec.n, 5.0)
                distance = np.linalg.norm(x.stacked() - y.stacked(), ord=order)
                for k in range(20):
                    x, y = limit_info_step(spec, k, x), limit_info_step(spec, k, y)
                    nxt = np.linalg.norm(x.stacked() - y.stacked(), ord=order)
                    assert nxt < distance
                    distance = nxt
                    if distance <= 1e-12:
                        break

    def test_expanding_control(self):
        spec = self_loop_spec(1.5)
        x, y = LimitState([0.0], [0.0]), LimitState([1e-3], [0.0])
        expanded = False
        for k in range(10):
            before = abs(x.s_bar[0] - y.s_bar[0])
            x, y = limit_info_step(spec, k, x), limit_info_step(spec, k, y)
            expanded |= abs(x.s_bar[0] - y.s_bar[0]) > before
        assert expanded


class TestSpectralRadius:

    def test_trivial_cases(self):
        assert spectral_radius(np.zeros((3, 3))) == 0.0
        assert spectral_radius([[0.9]]) == 0.9

    def test_two_cycle(self):
        assert spectral_radius([[0.0, 2.0], [2.0, 0.0]]) == pytest.approx(2.0, rel=1e-9)

    def test_reducible_matrix(self):
        m = np.array([[0.5, 1.0, 0.0], [0.0, 0.8, 0.0], [0.3, 0.2, 0.1]])
        assert spectral_radius(m) == pytest.approx(0.8, rel=1e-9)

    def test_nilpotent(self):
        m = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, 0.0]])
        assert spectral_radius(m) == pytest.approx(0.0, abs=1e-9)

    def test_agrees_with_eigenvalues(self, rng):
        for _ in range(20):
            m = rng.uniform(0.0, 1.0, (6, 6)) * (rng.random((6, 6)) < 0.4)
            expected = np.max(np.abs(np.linalg.eigvals(m)))
            assert spectral_radius(m) == pytest.approx(expected, rel=1e-8, abs=1e-9)

    def test_iteration_cap(self):
        with pytest.raises(ConvergenceError) as info:
            spectral_radius([[0.0, 2.0], [1.0, 0.0]], max_iter=1)
        assert info.value.last_iterate is not None
        assert info.value.last_estimate is not None

    def test_rejects_bad_input(self):
        with pytest.raises(DimensionMismatch):
            spectral_radius(np.ones((2, 3)))
        with pytest.raises(DomainError):
            spectral_radius([[0.0, -1.0], [1.0, 0.0]])


class TestStability:

    def test_examples(self):
        assert stability_certificate(build_spec(2, [(0, 1, INHIBITORY, 0.5)])).witness == 0.0
        report = stability_certificate(self_loop_spec(0.9))
        assert report.holds and report.witness == pytest.approx(0.9)
        report = stability_certificate(_cycle_spec(2, 2.0))
        assert not report.holds
        assert report.witness == pytest.approx(2.0, rel=1e-9)
        assert report.details['eigvals_radius'] == pytest.approx(2.0)

    def test_requires_constant_parameters(self):
        spec = build_schedule_spec(1, [[(0, 0, EXCITATORY, 0.5)], [(0, 0, EXCITATORY, 0.6)]], horizon=2)
        with pytest.raises(CertificateError, match="requires constant parameters"):
            stability_certificate(spec)

    def test_equal_frames_count_as_constant(self):
        rows = [(0, 0, EXCITATORY, 0.5)]
        spec = build_schedule_spec(1, [rows, rows], horizon=2)
        assert stability_certificate(spec).holds

    def test_limit_states_decay(self):
        for seed in range(5):
            gen = np.random.default_rng(seed)
            base = random_spec(gen, int(gen.integers(2, 7)), max_rate=2.0)
            spec = scale_rates(base, 0.8 / spectral_radius(frame_at(base, 0).excitatory_rates))
            report = stability_certificate(spec)
            assert report.witness == pytest.approx(0.8, rel=1e-8)
            start = _random_limit_state(gen, spec.n, 5.0)
            final = limit_info_trajectory(spec, 200, start=start)[-1]
            assert np.abs(final.stacked()).max() < 1e-8

    def test_unstable_bound_grows(self):
        spec = _cycle_spec(4, 1.2)
        report = stability_certificate(spec)
        assert not report.holds and report.witness == pytest.approx(1.2, rel=1e-9)
        bound = upper_bound_info(spec, np.ones(4), 200, mode='limit')
        norms = np.abs(bound.s_bound).sum(axis=1)
        assert np.all(np.diff(norms) >= 0)
        assert norms[-1] > 1e10


class TestUpperBounds:

    def test_zero_information(self, rng):
        spec = random_spec(rng, 4)
        bound = upper_bound_info(spec, np.zeros(4), 5)
        assert not bound.s_bound.any() and not bound.o_bound.any()

    def test_geometric_self_loop(self):
        spec = build_spec(1, [(0, 0, EXCITATORY, 0.5)])
        bound = upper_bound_info(spec, [1.0], 3)
        np.testing.assert_allclose(bound.s_bound[:, 0], [1.0, 0.5, 0.25, 0.125])

    def test_population_and_limit_matrices(self):
        spec = build_spec(2, [(1, 0, EXCITATORY, 0.5, 3, 0.7), (0, 1, INHIBITORY, 0.2, 2, 0.9)])
        info = upper_bound_info(spec, [1.0, 2.0], 1, population=True)
        limit = upper_bound_info(spec, [1.0, 2.0], 1, mode='limit')
        np.testing.assert_allclose(info.s_bound[1], [0.0, 1.5])
        np.testing.assert_allclose(info.o_bound[1], [0.8, 0.0])
        np.testing.assert_allclose(limit.s_bound[1], [0.0, 0.7])
        np.testing.assert_allclose(limit.o_bound[1], [1.8, 0.0])

    def test_infinite_start(self):
        with pytest.raises(CertificateError, match="bound requires finite initial information"):
            upper_bound_info(self_loop_spec(0.5), [np.inf], 3)

    def test_trajectories_stay_below_bounds(self):
        for seed in range(20):
            gen = np.random.default_rng(300 + seed)
            spec = random_spec(gen, int(gen.integers(1, 7)), horizon=20)
            for mode, population in (('info', False), ('info', True), ('limit', False)):
                report = upper_bound_certificate(spec, mode=mode, population=population, tol=BOUND_TOL)
                assert isinstance(report, CertificateReport)
                assert report.kind == f"upper-bound-{mode}"
                assert report.holds, (seed, mode, population, report.witness)
                assert len(report.per_step) == 21

    def test_first_order_tightness(self):
        spec = build_spec(3, [(1, 0, EXCITATORY, 0.5), (2, 1, EXCITATORY, 0.5), (0, 2, EXCITATORY, 0.5)])
        ratios = []
        for scale in (1e-2, 1e-4, 1e-6):
            s0 = np.full(3, scale)
            bound = upper_bound_info(spec, s0, 1, mode='limit')
            actual = limit_info_step(spec, 0, LimitState(s0, np.zeros(3)))
            ratios.append(actual.s_bar[1] / bound.s_bound[1, 1])
        assert abs(1 - ratios[-1]) < 1e-5
        assert abs(1 - ratios[-1]) < abs(1 - ratios[0])


class TestJacobian:

    def test_at_origin(self, rng):
        spec = random_spec(rng, 3)
        frame = frame_at(spec, 0)
        jac = limit_jacobian(spec, 0, LimitState(np.zeros(3), np.zeros(3)))
        np.testing.assert_allclose(jac[:, :3], frame.stacked_rates)
        np.testing.assert_array_equal(jac[:, 3:], 0.0)

    def test_matches_central_differences(self):
        step = 1e-6
        for seed in range(5):
            gen = np.random.default_rng(700 + seed)
            spec = random_spec(gen, int(gen.integers(2, 6)), max_rate=2.0)
            n = spec.n
            for _ in range(100):
                state = LimitState(gen.uniform(0.1, 3.0, n), gen.uniform(0.1, 3.0, n))
                y = state.stacked()
                numeric = np.empty((2 * n, 2 * n))
                for c in range(2 * n):
                    e = np.zeros(2 * n)
                    e[c] = step
                    plus = limit_info_step(spec, 0, LimitState.from_stacked(y + e)).stacked()
                    minus = limit_info_step(spec, 0, LimitState.from_stacked(y - e)).stacked()
                    numeric[:, c] = (plus - minus) / (2 * step)
                np.testing.assert_allclose(limit_jacobian(spec, 0, state), numeric, rtol=1e-6, atol=1e-8)

    def test_activation_derivative_norm(self):
        for s in np.linspace(0.0, 6.0, 13):
            for o in np.linspace(0.0, 6.0, 13):
                state = LimitState([s, 0.5], [o, 1.0])
                bound = np.exp(-min(o, 1.0))
                assert phi_derivative_norm(state, 1) <= bound + 1e-15
                assert phi_derivative_norm(state, 'inf') == pytest.approx(bound)

    def test_jacobian_norm_below_one_when_contracting(self, rng):
        for _ in range(5):
            base = random_spec(rng, 4, max_rate=2.0)
            for p in (1, 'inf'):
                spec = scale_rates(base, 0.95 / induced_norm(frame_at(base, 0).stacked_rates, p))
                for _ in range(50):
                    state = _random_limit_state(rng, 4)
                    assert induced_norm(limit_jacobian(spec, 0, state), p) < 1.0


class TestHeldSources:

    def test_offset_leaves_certificates_unchanged(self):
        spec = self_loop_spec(0.3, p0=0.5, horizon=5)
        shifted = with_offset_node(spec, [0], 0.2)
        for p in (1, 'inf'):
            before = contraction_certificate(spec, p)
            after = contraction_certificate(shifted, p)
            assert after.witness == pytest.approx(0.3)
            assert after.witness == pytest.approx(before.witness)
            assert after.details['norm_1'] == pytest.approx(0.3)
        assert stability_certificate(shifted).witness == pytest.approx(0.3)
        assert stability_certificate(shifted).details['eigvals_radius'] == pytest.approx(0.3)

    def test_offset_has_infinite_information(self):
        shifted = with_offset_node(self_loop_spec(0.3, p0=0.5, horizon=5), [0], 0.2)
        states = limit_info_trajectory(shifted)
        assert all(np.isinf(state.s_bar[1]) and state.o_bar[1] == 0.0 for state in states)
        assert states[1].s_bar[0] == pytest.approx(0.3 * 0.5 + 0.2)
        with pytest.raises(CertificateError, match="finite initial information"):
            upper_bound_certificate(shifted)

    def test_jacobian_ignores_held_state(self):
        shifted = with_offset_node(self_loop_spec(0.3, p0=0.5), [0], 0.2)
        jac = limit_jacobian(shifted, 0, LimitState([0.4, np.inf], [0.0, 0.0]))
        np.testing.assert_array_equal(jac[:, [1, 3]], 0.0)
        assert jac[0, 0] == pytest.approx(0.3 * np.exp(-0.4))
