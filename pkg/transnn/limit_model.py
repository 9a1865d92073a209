"""Infinite-neurotransmitter (Poisson) limit model"""

from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional

import numpy as np

from .error_handler import DimensionMismatch, DomainError
from .mean_field import _check_probabilities, prob_trajectory
from .network_model import NetworkSpec, frame_at, with_neurotransmitter_count


@dataclass
class LimitState:
    """Limit information state; o_bar stays finite for finite rates"""
    s_bar: np.ndarray
    o_bar: np.ndarray

    def __post_init__(self):
        self.s_bar = np.asarray(self.s_bar, dtype=float)
        self.o_bar = np.asarray(self.o_bar, dtype=float)
        if self.s_bar.shape != self.o_bar.shape or self.s_bar.ndim != 1:
            raise DimensionMismatch(
                f"s_bar and o_bar must be vectors of equal length, got {self.s_bar.shape}, {self.o_bar.shape}")
        if np.any(~(self.s_bar >= 0.0)):
            raise DomainError("s_bar must be nonnegative")
        if np.any(~((self.o_bar >= 0.0) & np.isfinite(self.o_bar))):
            raise DomainError("o_bar must be nonnegative and finite")

    @property
    def n(self) -> int:
        return self.s_bar.shape[0]

    def stacked(self) -> np.ndarray:
        """[s_bar; o_bar] as one 2n vector"""
        return np.concatenate([self.s_bar, self.o_bar])

    @classmethod
    def from_stacked(cls, y: np.ndarray) -> 'LimitState':
        n = y.shape[0] // 2
        return cls(y[:n], y[n:])


def sigma(s, o):
    """sigma(s, o) = e^{-o} (1 - e^{-s}), clamped to [0, 1]"""
    s = np.asarray(s, dtype=float)
    o = np.asarray(o, dtype=float)
    value = np.clip(np.exp(-o) * -np.expm1(-s), 0.0, 1.0)
    return float(value) if value.ndim == 0 else value


def phi(state: LimitState) -> np.ndarray:
    """Elementwise activation: firing probabilities of a limit state"""
    return sigma(state.s_bar, state.o_bar)


def initial_limit_state(p0) -> LimitState:
    """o_bar(0) = 0 and s_bar(0) = -log(1 - p(0))"""
    p0 = np.asarray(p0, dtype=float)
    _check_probabilities(p0, p0.shape[0], "initial probability vector")
    with np.errstate(divide='ignore'):
        s = -np.log1p(-p0)
    return LimitState(s_bar=s, o_bar=np.zeros_like(p0))


def limit_info_step(spec: NetworkSpec, k: int, state: LimitState) -> LimitState:
    """[s_bar(k+1); o_bar(k+1)] = [B_E ⊙ Λ; B_I ⊙ Λ] phi(s_bar(k), o_bar(k)); held nodes keep s_bar = +inf"""
    if state.n != spec.n:
        raise DimensionMismatch(f"state has {state.n} nodes, spec has {spec.n}")
    frame = frame_at(spec, k)
    y = frame.stacked_rates @ phi(state)
    held = np.flatnonzero(spec.held_mask)
    y[held] = np.inf
    y[spec.n + held] = 0.0
    return LimitState.from_stacked(y)


def limit_prob_step(spec: NetworkSpec, k: int, p) -> np.ndarray:
    """p(k+1) = (1 - exp(-(B_E ⊙ Λ) p)) ⊙ exp(-(B_I ⊙ Λ) p)"""
    p = _check_probabilities(p, spec.n)
    frame = frame_at(spec, k)
    p_next = -np.expm1(-(frame.excitatory_rates @ p)) * np.exp(-(frame.inhibitory_rates @ p))
    p_next[spec.held_mask] = 1.0
    return p_next


def limit_info_trajectory(spec: NetworkSpec, horizon: Optional[int] = None,
                          start: Optional[LimitState] = None) -> List[LimitState]:
    """Limit states for k = 0..horizon (from initial_limit_state unless `start` is given)"""
    horizon = spec.horizon if horizon is None else horizon
    state = initial_limit_state(spec.initial_p) if start is None else start
    states = [state]
    for k in range(horizon):
        state = limit_info_step(spec, k, state)
        states.append(state)
    return states


def limit_prob_trajectory(spec: NetworkSpec, horizon: Optional[int] = None) -> np.ndarray:
    """(horizon+1) x n limit-model probabilities from spec.initial_p"""
    horizon = spec.horizon if horizon is None else horizon
    p = _check_probabilities(spec.initial_p, spec.n, "initial probability vector")
    rows = [p]
    for k in range(horizon):
        p = limit_prob_step(spec, k, p)
        rows.append(p)
    return np.vstack(rows)


def poisson_gap(a: int, lam: float, p: float) -> float:
    """
    Finite-population error |(1 - lam p / a)^a - e^{-lam p}|

    Raises:
        DomainError: If a < 1 or lam * p > a
    """
    if a < 1:
        raise DomainError(f"neurotransmitter count must be >= 1, got {a}")
    if lam < 0 or not 0.0 <= p <= 1.0:
        raise DomainError("rate must be nonnegative and p must lie in [0, 1]")
    if lam * p > a:
        raise DomainError("probability λ/a·p exceeds 1")
    return abs((1.0 - lam * p / a) ** a - np.exp(-lam * p))


def population_limit_gap(spec: NetworkSpec, counts: Iterable[int],
                         horizon: Optional[int] = None) -> Dict[int, np.ndarray]:
    """
    Per-step max gap between the population mean-field and the limit trajectory

    Args:
        spec: Network specification; its lambda matrices are held fixed
        counts: Neurotransmitter counts a, applied with w = lambda / a
        horizon: Number of steps (spec.horizon by default)

    Returns:
        Mapping a -> vector of per-step max elementwise gaps
    """
    horizon = spec.horizon if horizon is None else horizon
    limit = limit_prob_trajectory(spec, horizon)
    gaps = {}
    for count in counts:
        population = prob_trajectory(with_neurotransmitter_count(spec, count), horizon, population=True)
        gaps[count] = np.max(np.abs(population - limit), axis=1)
    return gaps
