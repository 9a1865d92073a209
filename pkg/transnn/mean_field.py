"""Mean-field probability propagation and the (s, o) information-state dynamics

Extended reals use IEEE infinities: log(0) = -inf, exp(-inf) = 0,
Psi(1, +inf) = +inf and Psi(w < 1, +inf) = -log(1 - w).
"""

from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from .error_handler import DimensionMismatch, DomainError, InfeasibleProbabilityPair
from .markov_oracle import exact_marginals
from .network_model import NetworkSpec, frame_at

FEASIBILITY_SLACK = 1e-12


def _check_probabilities(p, n: int, what: str = "probability vector") -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.shape != (n,):
        raise DimensionMismatch(f"{what} has shape {p.shape}, expected ({n},)")
    if np.any(~((p >= 0.0) & (p <= 1.0))):
        raise DomainError(f"{what} entries must lie in [0, 1]")
    return p


def tlogsigmoid(w, x):
    """
    Tuneable log-sigmoid Psi(w, x) = -log(1 - w + w e^{-x})

    Args:
        w: Weight(s) in [0, 1]
        x: Value(s) in [0, +inf]

    Returns:
        Psi(w, x) >= 0, elementwise (float for scalar input)

    Raises:
        DomainError: If an argument lies outside its domain
    """
    w = np.asarray(w, dtype=float)
    x = np.asarray(x, dtype=float)
    if np.any(~((w >= 0.0) & (w <= 1.0))):
        raise DomainError("tlogsigmoid weight must lie in [0, 1]")
    if np.any(~(x >= 0.0)):
        raise DomainError("tlogsigmoid argument must be nonnegative")

    with np.errstate(divide='ignore', invalid='ignore'):
        # remainder = 1 - w(1 - e^{-x}); direct form when small, log1p form otherwise
        remainder = (1.0 - w) + w * np.exp(-x)
        taken = -w * np.expm1(-x)
        result = np.where(remainder < 0.5, -np.log(remainder), -np.log1p(-taken))
    result = np.maximum(result, 0.0)
    return float(result) if result.ndim == 0 else result


def _edge_factors(spec: NetworkSpec, k: int, p: np.ndarray, population: bool) -> Tuple[np.ndarray, np.ndarray]:
    frame = frame_at(spec, k)
    factors = (1.0 - frame.w * p[None, :]) ** frame.counts(population)
    excitation = np.prod(np.where(frame.topology.excitatory_mask, factors, 1.0), axis=1)
    no_inhibition = np.prod(np.where(frame.topology.inhibitory_mask, factors, 1.0), axis=1)
    return excitation, no_inhibition


def prob_step(spec: NetworkSpec, k: int, p, population: bool = False) -> np.ndarray:
    """
    Propagate firing probabilities one step under the independence assumptions

    Returns:
        p(k+1) = (1 - prod_E (1 - w p_j)^a) * prod_I (1 - w p_j)^a, with a = 1 in the base model
        Held nodes stay at 1.
    """
    p = _check_probabilities(p, spec.n)
    excitation, no_inhibition = _edge_factors(spec, k, p, population)
    p_next = (1.0 - excitation) * no_inhibition
    p_next[spec.held_mask] = 1.0
    return p_next


def compute_pi(spec: NetworkSpec, k: int, p, population: bool = False) -> np.ndarray:
    """pi(k+1): probability of no effective inhibition, empty product = 1"""
    p = _check_probabilities(p, spec.n)
    return _edge_factors(spec, k, p, population)[1]


@dataclass
class InfoState:
    """Shannon-information state (s, o) with cached pi = exp(-o)"""
    s: np.ndarray
    o: np.ndarray
    pi: Optional[np.ndarray] = None

    def __post_init__(self):
        self.s = np.asarray(self.s, dtype=float)
        self.o = np.asarray(self.o, dtype=float)
        if self.s.shape != self.o.shape or self.s.ndim != 1:
            raise DimensionMismatch(f"s and o must be vectors of equal length, got {self.s.shape}, {self.o.shape}")
        if np.any(~(self.s >= 0.0)) or np.any(~(self.o >= 0.0)):
            raise DomainError("information states must be nonnegative")
        if self.pi is None:
            self.pi = np.exp(-self.o)
        else:
            self.pi = np.asarray(self.pi, dtype=float)

    @property
    def n(self) -> int:
        return self.s.shape[0]


def to_info_state(p, pi) -> InfoState:
    """
    Map (p, pi) to (s, o)

    s_i = -log(1 - p_i / pi_i) when pi_i > 0 and s_i = 0 when pi_i = 0; o_i = -log pi_i.

    Raises:
        InfeasibleProbabilityPair: If p_i exceeds pi_i by more than FEASIBILITY_SLACK
    """
    p = np.asarray(p, dtype=float)
    pi = np.asarray(pi, dtype=float)
    if p.shape != pi.shape:
        raise DimensionMismatch(f"p has shape {p.shape}, pi has shape {pi.shape}")
    _check_probabilities(pi, pi.shape[0], "pi")
    _check_probabilities(p, p.shape[0], "p")
    if np.any(p > pi + FEASIBILITY_SLACK):
        worst = int(np.argmax(p - pi))
        raise InfeasibleProbabilityPair(
            f"infeasible probability pair at node {worst + 1}: p = {p[worst]!r} > pi = {pi[worst]!r}")

    with np.errstate(divide='ignore', invalid='ignore'):
        ratio = np.where(pi > 0.0, np.minimum(p / pi, 1.0), 0.0)
        s = np.where(pi > 0.0, -np.log1p(-ratio), 0.0)
        o = -np.log(pi)
    return InfoState(s=np.maximum(s, 0.0), o=np.maximum(o, 0.0), pi=pi.copy())


def from_info_state(state: InfoState) -> Tuple[np.ndarray, np.ndarray]:
    """Inverse transform: pi = e^{-o}, p = e^{-o} (1 - e^{-s})"""
    pi = np.exp(-state.o)
    p = pi * -np.expm1(-state.s)
    return p, pi


def initial_info_state(p0) -> InfoState:
    """o(0) = 0 (no inhibition before the first step), s(0) = -log(1 - p(0))"""
    p0 = np.asarray(p0, dtype=float)
    _check_probabilities(p0, p0.shape[0], "initial probability vector")
    with np.errstate(divide='ignore'):
        s = -np.log1p(-p0)
    return InfoState(s=s, o=np.zeros_like(p0))


def info_step(spec: NetworkSpec, k: int, state: InfoState, population: bool = False) -> InfoState:
    """
    One step of the information-state dynamics

    s_i(k+1) = sum_{j in E_i} a_ij Psi(w_ij e^{-o_j}, s_j)
    o_i(k+1) = sum_{j in I_i} a_ij Psi(w_ij e^{-o_j}, s_j)

    Held nodes keep s = +inf and o = 0.
    """
    if state.n != spec.n:
        raise DimensionMismatch(f"state has {state.n} nodes, spec has {spec.n}")
    frame = frame_at(spec, k)
    topo = frame.topology
    pi = np.exp(-state.o)
    links = tlogsigmoid(frame.w * pi[None, :], np.broadcast_to(state.s[None, :], frame.w.shape))
    counts = frame.counts(population)

    # Absent edges are skipped, never multiplied
    with np.errstate(invalid='ignore'):
        weighted = counts * links
    s = np.sum(np.where(topo.excitatory_mask, weighted, 0.0), axis=1)
    o = np.sum(np.where(topo.inhibitory_mask, weighted, 0.0), axis=1)
    s[spec.held_mask] = np.inf
    o[spec.held_mask] = 0.0
    return InfoState(s=s, o=o)


def prob_trajectory(spec: NetworkSpec, horizon: Optional[int] = None, population: bool = False) -> np.ndarray:
    """(horizon+1) x n mean-field trajectory from spec.initial_p"""
    horizon = spec.horizon if horizon is None else horizon
    p = _check_probabilities(spec.initial_p, spec.n, "initial probability vector")
    rows = [p]
    for k in range(horizon):
        p = prob_step(spec, k, p, population)
        rows.append(p)
    return np.vstack(rows)


def info_trajectory(spec: NetworkSpec, horizon: Optional[int] = None, population: bool = False) -> List[InfoState]:
    """Information states for k = 0..horizon from the initialization contract"""
    horizon = spec.horizon if horizon is None else horizon
    state = initial_info_state(spec.initial_p)
    states = [state]
    for k in range(horizon):
        state = info_step(spec, k, state, population)
        states.append(state)
    return states


def recovered_probabilities(states: List[InfoState]) -> np.ndarray:
    """Stack the p recovered from each information state"""
    return np.vstack([from_info_state(state)[0] for state in states])


def meanfield_oracle_gap(spec: NetworkSpec, horizon: Optional[int] = None, population: bool = False) -> np.ndarray:
    """Per-step max |mean-field - exact| marginal gap"""
    exact = exact_marginals(spec, horizon, population)
    approx = prob_trajectory(spec, exact.shape[0] - 1, population)
    return np.max(np.abs(approx - exact), axis=1)
