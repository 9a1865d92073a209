"""Contraction, stability and linear upper-bound certificates"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Union

import numpy as np
from scipy.sparse.csgraph import connected_components

from .error_handler import CertificateError, ConvergenceError, DimensionMismatch, DomainError
from .limit_model import LimitState, limit_info_trajectory
from .mean_field import InfoState, info_step, initial_info_state
from .network_model import NetworkSpec, frame_at

POWER_TOL = 1e-10
POWER_MAX_ITER = 100_000
BOUND_SLACK = 1e-12

NormOrder = Union[int, float, str]


@dataclass
class CertificateReport:
    """Outcome of one certificate check"""
    kind: str
    holds: bool
    witness: float
    per_step: Optional[List[float]] = None
    details: Dict[str, Any] = field(default_factory=dict)

    def __str__(self) -> str:
        status = "holds" if self.holds else "fails"
        return f"{self.kind}: {status} (witness {self.witness:.6g})"

    def to_dict(self) -> Dict[str, Any]:
        return {
            'kind': self.kind,
            'holds': bool(self.holds),
            'witness': float(self.witness),
            'per_step': None if self.per_step is None else [float(v) for v in self.per_step],
            'details': self.details,
        }


@dataclass
class BoundTrajectory:
    """Linear bound trajectories, (horizon+1) x n each"""
    s_bound: np.ndarray
    o_bound: np.ndarray
    mode: str


def _norm_order(p: NormOrder) -> float:
    if p in (1, '1'):
        return 1
    if p in ('inf', 'Inf', np.inf):
        return np.inf
    raise DomainError(f"norm order must be 1 or inf, got {p!r}")


def norm_label(p: NormOrder) -> str:
    return '1' if _norm_order(p) == 1 else 'inf'


def induced_norm(m, p: NormOrder) -> float:
    """
    Operator norm induced by the vector p-norm

    Args:
        m: Matrix, possibly rectangular
        p: 1 (max column absolute sum) or inf (max row absolute sum)

    Returns:
        Nonnegative norm value (0 for an empty matrix)
    """
    order = _norm_order(p)
    m = np.atleast_2d(np.asarray(m, dtype=float))
    if m.size == 0:
        return 0.0
    return float(np.linalg.norm(m, ord=order))


def _without_held(spec: NetworkSpec, rates: np.ndarray) -> np.ndarray:
    """Copy of rates with the columns of held sources zeroed"""
    if not spec.held:
        return rates
    rates = rates.copy()
    rates[:, spec.held_mask] = 0.0
    return rates


def contraction_certificate(spec: NetworkSpec, p: NormOrder) -> CertificateReport:
    """
    Check that the stacked rate matrix has induced norm < 1 at every frame

    Frames beyond the schedule repeat the last one, so the listed frames are the
    whole check. Held sources are excluded.
    """
    label = norm_label(p)
    stacked = [_without_held(spec, frame.stacked_rates) for frame in spec.schedule.frames]
    norms = [induced_norm(rates, p) for rates in stacked]
    if not norms:
        frame_at(spec, 0)
    witness = max(norms)
    details = {
        'norm_1': max(induced_norm(rates, 1) for rates in stacked),
        'norm_inf': max(induced_norm(rates, np.inf) for rates in stacked),
        'frames': len(norms),
    }
    return CertificateReport(f"contraction-{label}", witness < 1.0, witness, norms, details)


def _collatz_wielandt(m: np.ndarray, tol: float, max_iter: int, seed: int) -> float:
    """
    Perron root of an irreducible nonnegative m by power iteration on m + I

    Raises:
        ConvergenceError: If the bracket is still open at max_iter
    """
    n = m.shape[0]
    shifted = m + np.eye(n)
    x = np.random.default_rng(seed).uniform(0.5, 1.5, size=n)
    lo, hi = 0.0, np.inf
    for _ in range(max_iter):
        y = shifted @ x
        ratios = y / x
        lo = max(lo, float(ratios.min()))
        hi = min(hi, float(ratios.max()))
        if hi - lo <= tol * max(1.0, hi):
            return 0.5 * (lo + hi) - 1.0
        x = y / y.max()
    raise ConvergenceError(
        f"power iteration did not converge in {max_iter} iterations (bracket [{lo - 1.0}, {hi - 1.0}])",
        last_iterate=x, last_estimate=0.5 * (lo + hi) - 1.0)


def spectral_radius(m, tol: float = POWER_TOL, max_iter: int = POWER_MAX_ITER, seed: int = 0) -> float:
    """
    Spectral radius of a nonnegative square matrix

    The Perron root is bracketed by Collatz-Wielandt bounds min/max (Bx / x) on the
    shifted matrix B = m + I. Reducible matrices are split into strongly
    connected blocks first and the largest block radius is returned.

    Args:
        m: Nonnegative square matrix
        tol: Relative bracket width at which iteration stops
        max_iter: Iteration cap
        seed: Seed of the positive start vector

    Raises:
        DimensionMismatch: If m is not square
        DomainError: If m has negative entries
        ConvergenceError: If an irreducible block does not converge by max_iter
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"spectral radius needs a square matrix, got shape {m.shape}")
    if np.any(m < 0):
        raise DomainError("spectral radius certificate needs a nonnegative matrix")
    if m.shape[0] == 0 or not np.any(m):
        return 0.0
    if m.shape[0] == 1:
        return float(m[0, 0])

    count, labels = connected_components(m > 0, directed=True, connection='strong')
    if count == 1:
        # irreducible: m + I is primitive and the bracket closes geometrically
        return max(_collatz_wielandt(m, tol, max_iter, seed), 0.0)
    best = 0.0
    for block in range(count):
        nodes = np.flatnonzero(labels == block)
        sub = m[np.ix_(nodes, nodes)]
        best = max(best, spectral_radius(sub, tol, max_iter, seed))
    return best


def stability_certificate(spec: NetworkSpec, tol: float = POWER_TOL) -> CertificateReport:
    """
    Check that the excitatory rate matrix B_E ⊙ Λ has spectral radius < 1

    Held sources are excluded.

    Raises:
        CertificateError: If the parameters vary with the step
    """
    if not spec.schedule.frames:
        frame_at(spec, 0)
    if not spec.is_constant():
        raise CertificateError("stability certificate requires constant parameters")
    rates = _without_held(spec, spec.schedule.frames[0].excitatory_rates)
    radius = spectral_radius(rates, tol=tol)
    details = {
        'eigvals_radius': float(np.max(np.abs(np.linalg.eigvals(rates)))),
        'norm_1': induced_norm(rates, 1),
        'norm_inf': induced_norm(rates, np.inf),
        'tol': tol,
    }
    return CertificateReport('stability', radius < 1.0, radius, None, details)


def _bound_matrices(spec: NetworkSpec, k: int, mode: str, population: bool):
    frame = frame_at(spec, k)
    if mode == 'limit':
        return frame.excitatory_rates, frame.inhibitory_rates
    m = frame.transmission_matrix(population)
    topo = frame.topology
    return np.where(topo.excitatory_mask, m, 0.0), np.where(topo.inhibitory_mask, m, 0.0)


def _check_mode(mode: str) -> None:
    if mode not in ('info', 'limit'):
        raise DomainError(f"bound mode must be 'info' or 'limit', got {mode!r}")


def _check_s0(spec: NetworkSpec, s0) -> np.ndarray:
    s0 = np.asarray(s0, dtype=float)
    if s0.shape != (spec.n,):
        raise DimensionMismatch(f"s0 has shape {s0.shape}, expected ({spec.n},)")
    if np.any(np.isinf(s0)):
        raise CertificateError("bound requires finite initial information")
    if np.any(~(s0 >= 0.0)):
        raise DomainError("initial information must be nonnegative")
    return s0


def upper_bound_info(spec: NetworkSpec, s0, horizon: Optional[int] = None,
                     mode: str = 'info', population: bool = False) -> BoundTrajectory:
    """
    Linear bound trajectories for the (s, o) or (s_bar, o_bar) dynamics

    z(k+1) = (B_E ⊙ M) z(k) with z(0) = s0, and the o-bound at k+1 is (B_I ⊙ M) z(k).
    M is A ⊙ Ω (Ω alone unless population) in 'info' mode and Λ in 'limit' mode.
    Row 0 of the o-bound is 0 (no inhibition before the first step).

    Args:
        spec: Network specification
        s0: Finite nonnegative initial information
        horizon: Number of steps (spec.horizon by default)
        mode: 'info' or 'limit'
        population: Use A ⊙ Ω in 'info' mode

    Raises:
        CertificateError: If s0 contains +inf
    """
    _check_mode(mode)
    s0 = _check_s0(spec, s0)
    horizon = spec.horizon if horizon is None else horizon
    z = s0
    s_rows, o_rows = [z], [np.zeros(spec.n)]
    for k in range(horizon):
        excitatory, inhibitory = _bound_matrices(spec, k, mode, population)
        o_rows.append(inhibitory @ z)
        z = excitatory @ z
        s_rows.append(z)
    return BoundTrajectory(np.vstack(s_rows), np.vstack(o_rows), mode)


def upper_bound_certificate(spec: NetworkSpec, s0=None, horizon: Optional[int] = None,
                            mode: str = 'info', population: bool = False,
                            tol: float = BOUND_SLACK) -> CertificateReport:
    """
    Compare the true information trajectory with its linear bound

    The witness is the largest violation scaled by 1 + |bound|; the certificate
    holds when it does not exceed tol.

    Args:
        spec: Network specification
        s0: Initial s (from spec.initial_p when omitted); o starts at 0
        horizon: Number of steps (spec.horizon by default)
        mode: 'info' or 'limit'
        population: Population model in 'info' mode
        tol: Allowed scaled violation
    """
    _check_mode(mode)
    if s0 is None:
        s0 = initial_info_state(spec.initial_p).s
    bound = upper_bound_info(spec, s0, horizon, mode, population)
    steps = bound.s_bound.shape[0] - 1
    s0 = np.asarray(s0, dtype=float)

    if mode == 'limit':
        states = limit_info_trajectory(spec, steps, start=LimitState(s0, np.zeros(spec.n)))
        s_actual = np.vstack([state.s_bar for state in states])
        o_actual = np.vstack([state.o_bar for state in states])
    else:
        state = InfoState(s0, np.zeros(spec.n))
        s_rows, o_rows = [state.s], [state.o]
        for k in range(steps):
            state = info_step(spec, k, state, population)
            s_rows.append(state.s)
            o_rows.append(state.o)
        s_actual, o_actual = np.vstack(s_rows), np.vstack(o_rows)

    scaled = np.maximum((s_actual - bound.s_bound) / (1.0 + np.abs(bound.s_bound)),
                        (o_actual - bound.o_bound) / (1.0 + np.abs(bound.o_bound)))
    per_step = np.maximum(scaled.max(axis=1), 0.0)
    witness = float(per_step.max())
    details = {'mode': mode, 'population': population, 'tol': tol, 'horizon': steps}
    return CertificateReport(f"upper-bound-{mode}", witness <= tol, witness, per_step.tolist(), details)


def _phi_derivatives(state: LimitState):
    pi = np.exp(-state.o_bar)
    return pi * np.exp(-state.s_bar), -pi * -np.expm1(-state.s_bar)


def limit_jacobian(spec: NetworkSpec, k: int, state: LimitState) -> np.ndarray:
    """
    Jacobian of the limit step at (s_bar, o_bar), shape 2n x 2n

    J = [B_E ⊙ Λ; B_I ⊙ Λ] [diag(e^{-o} e^{-s}), diag(-e^{-o} (1 - e^{-s}))]
    """
    if state.n != spec.n:
        raise DimensionMismatch(f"state has {state.n} nodes, spec has {spec.n}")
    d_s, d_o = _phi_derivatives(state)
    derivative = np.hstack([np.diag(d_s), np.diag(d_o)])
    jacobian = frame_at(spec, k).stacked_rates @ derivative
    # held states are fixed from outside
    held = np.flatnonzero(spec.held_mask)
    jacobian[:, held] = 0.0
    jacobian[:, spec.n + held] = 0.0
    return jacobian


def phi_derivative_norm(state: LimitState, p: NormOrder) -> float:
    """Induced p-norm of [dphi/ds, dphi/do]; never above max e^{-o_bar}"""
    d_s, d_o = _phi_derivatives(state)
    return induced_norm(np.hstack([np.diag(d_s), np.diag(d_o)]), p)
