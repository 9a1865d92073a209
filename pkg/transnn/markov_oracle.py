"""Exact Markov-chain oracle over the full 2^n configuration space

Configurations are bit-indexed: node i is bit i of the configuration index.
Kernel rows are built on the fly; the 2^n x 2^n matrix is never materialized.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .binary_dynamics import BinaryState, as_binary_state
from .error_handler import DimensionMismatch, DomainError, StateSpaceTooLarge
from .network_model import NetworkSpec, frame_at

MAX_ORACLE_NODES = 20
STOCHASTIC_TOL = 1e-12
_RHO_BLOCK = 1024


@dataclass
class StateDistribution:
    """Probability vector over the 2^n configurations"""
    probs: np.ndarray

    def __post_init__(self):
        self.probs = np.asarray(self.probs, dtype=float)
        size = self.probs.shape[0] if self.probs.ndim == 1 else 0
        if size < 2 or size & (size - 1):
            raise DimensionMismatch(f"distribution length must be a power of two >= 2, got {self.probs.shape}")
        if np.any(self.probs < 0):
            raise DomainError("distribution entries must be nonnegative")
        if abs(self.probs.sum() - 1.0) > STOCHASTIC_TOL:
            raise DomainError(f"distribution sums to {self.probs.sum()!r}, expected 1")

    @property
    def n(self) -> int:
        return self.probs.shape[0].bit_length() - 1

    @classmethod
    def point_mass(cls, x: BinaryState) -> 'StateDistribution':
        x = np.asarray(x)
        probs = np.zeros(2 ** len(x))
        probs[configuration_index(x)] = 1.0
        return cls(probs)

    @classmethod
    def product(cls, p: np.ndarray) -> 'StateDistribution':
        """Independent Bernoulli(p_i) nodes"""
        return cls(_product_row(np.asarray(p, dtype=float)))

    def marginals(self) -> np.ndarray:
        """Pr(X_i = 1) for every node"""
        bits = _configuration_bits(self.n)
        return self.probs @ bits


def configuration_index(x: BinaryState) -> int:
    return int(sum(int(bit) << i for i, bit in enumerate(x)))


def _configuration_bits(n: int) -> np.ndarray:
    """(2^n x n) matrix whose row q holds the bits of configuration q"""
    q = np.arange(2 ** n)
    return ((q[:, None] >> np.arange(n)[None, :]) & 1).astype(float)


def _product_row(rho: np.ndarray) -> np.ndarray:
    row = np.ones(1)
    for r in rho:
        row = np.concatenate([row * (1.0 - r), row * r])
    return row


def _check_size(n: int) -> None:
    if n > MAX_ORACLE_NODES:
        raise StateSpaceTooLarge(f"state space too large: n = {n} exceeds cap {MAX_ORACLE_NODES}")


def _fire_matrix(spec: NetworkSpec, k: int, x: np.ndarray, population: bool) -> np.ndarray:
    """rho for a batch of configurations x (batch x n, float 0/1)"""
    frame = frame_at(spec, k)
    counts = frame.counts(population)
    # factors[b, i, j] = (1 - w_ij x_j)^{a_ij}, equal to 1 off-edge
    factors = (1.0 - frame.w[None, :, :] * x[:, None, :]) ** counts[None, :, :]
    excitation = np.prod(np.where(frame.topology.excitatory_mask, factors, 1.0), axis=2)
    no_inhibition = np.prod(np.where(frame.topology.inhibitory_mask, factors, 1.0), axis=2)
    rho = (1.0 - excitation) * no_inhibition
    rho[:, spec.held_mask] = 1.0
    return rho


def fire_probabilities(spec: NetworkSpec, k: int, x: BinaryState, population: bool = False) -> np.ndarray:
    """Vector of rho_i(k+1) given X(k) = x"""
    x = as_binary_state(x, spec.n).astype(float)
    return _fire_matrix(spec, k, x[None, :], population)[0]


def fire_probability(spec: NetworkSpec, k: int, x: BinaryState, i: int, population: bool = False) -> float:
    """
    Probability that node i fires at step k+1 given X(k) = x

    Raises:
        DimensionMismatch: If i is not a node index
    """
    if not 0 <= i < spec.n:
        raise DimensionMismatch(f"node index {i} out of range 0..{spec.n - 1}")
    return float(fire_probabilities(spec, k, x, population)[i])


def transition_probability(spec: NetworkSpec, k: int, x: BinaryState, q: BinaryState,
                           population: bool = False) -> float:
    """Pr(X(k+1) = q | X(k) = x)"""
    rho = fire_probabilities(spec, k, x, population)
    q = as_binary_state(q, spec.n)
    return float(np.prod(np.where(q == 1, rho, 1.0 - rho)))


def transition_row(spec: NetworkSpec, k: int, x: BinaryState, population: bool = False) -> np.ndarray:
    """Kernel row at x over all 2^n successor configurations"""
    _check_size(spec.n)
    return _product_row(fire_probabilities(spec, k, x, population))


def evolve_distribution(spec: NetworkSpec, dist: StateDistribution, k: int,
                        population: bool = False) -> StateDistribution:
    """
    Push a distribution through one step of the chain

    The sum over source configurations runs in increasing index order.

    Raises:
        StateSpaceTooLarge: If n exceeds MAX_ORACLE_NODES
    """
    _check_size(spec.n)
    if dist.n != spec.n:
        raise DimensionMismatch(f"distribution over {dist.n} nodes, spec has {spec.n}")
    bits = _configuration_bits(spec.n)
    support = np.nonzero(dist.probs)[0]
    new_probs = np.zeros_like(dist.probs)
    for start in range(0, len(support), _RHO_BLOCK):
        block = support[start:start + _RHO_BLOCK]
        rho = _fire_matrix(spec, k, bits[block], population)
        for row, x_index in enumerate(block):
            new_probs += dist.probs[x_index] * _product_row(rho[row])
    return StateDistribution(new_probs)


def exact_marginals(spec: NetworkSpec, horizon: Optional[int] = None, population: bool = False) -> np.ndarray:
    """
    Exact Pr(X_i(k) = 1) for k = 0..horizon, starting from independent Bernoulli(initial_p)

    Returns:
        (horizon+1) x n matrix
    """
    _check_size(spec.n)
    horizon = spec.horizon if horizon is None else horizon
    dist = StateDistribution.product(spec.initial_p)
    rows = [dist.marginals()]
    for k in range(horizon):
        dist = evolve_distribution(spec, dist, k, population)
        rows.append(dist.marginals())
    return np.vstack(rows)
