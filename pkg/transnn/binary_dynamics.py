"""Sampling of the stochastic binary transmission dynamics

Draw order is fixed: each step consumes one block of uniforms laid out by edge
identity, sorted by (target, source) and, in the population model, by reception
index. A transmission from a silent source is drawn but has no effect, so whether a
source fires never shifts the draws of other edges.
"""

from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional

import numpy as np

from .error_handler import DimensionMismatch, DomainError
from .network_model import NetworkSpec, ParameterFrame, frame_at

BinaryState = np.ndarray

DEFAULT_CHUNK_SIZE = 4096


@dataclass
class MarginalEstimate:
    """Monte Carlo estimate of Pr(X_i(k) = 1)"""
    p_hat: np.ndarray
    trials: int
    stderr: np.ndarray
    seed: int
    population: bool = False

    @classmethod
    def from_counts(cls, counts: np.ndarray, trials: int, seed: int, population: bool) -> 'MarginalEstimate':
        p_hat = counts / trials
        stderr = np.sqrt(p_hat * (1.0 - p_hat) / trials)
        return cls(p_hat=p_hat, trials=trials, stderr=stderr, seed=seed, population=population)


def trial_generator(seed: int, trial: int) -> np.random.Generator:
    """Counter-based stream owned by one trial, keyed by (master seed, trial index)"""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, trial])))


def as_binary_state(x, n: int) -> BinaryState:
    """
    Check and convert a state vector

    Raises:
        DimensionMismatch: If x does not have n entries
        DomainError: If some entry is not exactly 0 or 1
    """
    arr = np.asarray(x)
    if arr.shape != (n,):
        raise DimensionMismatch(f"state has shape {arr.shape}, expected ({n},)")
    if not np.all((arr == 0) | (arr == 1)):
        raise DomainError("binary state entries must be exactly 0 or 1")
    return arr.astype(np.uint8)


def draw_count(frame: ParameterFrame, population: bool) -> int:
    """Number of uniforms one step consumes"""
    targets, sources, _ = frame.edge_arrays
    if not population:
        return len(targets)
    return int(frame.a[targets, sources].astype(np.intp).sum())


def _step_kernel(frame: ParameterFrame, x: np.ndarray, uniforms: np.ndarray, population: bool) -> np.ndarray:
    """Apply the update to a batch of states x (trials x n, bool) given per-trial uniforms"""
    n = frame.n
    batch = x.shape[0]
    targets, sources, excitatory = frame.edge_arrays
    if len(targets) == 0:
        return np.zeros((batch, n), dtype=bool)

    w = frame.w[targets, sources]
    if population:
        counts = frame.a[targets, sources].astype(np.intp)
        received = uniforms < np.repeat(w, counts)
        offsets = np.concatenate(([0], np.cumsum(counts)[:-1]))
        transmitted = np.logical_or.reduceat(received, offsets, axis=1)
    else:
        transmitted = uniforms < w
    effective = (transmitted & x[:, sources]).astype(np.int64)

    routing = np.zeros((len(targets), n), dtype=np.int64)
    routing[np.arange(len(targets)), targets] = 1
    excited = effective[:, excitatory] @ routing[excitatory] > 0
    inhibited = effective[:, ~excitatory] @ routing[~excitatory] > 0
    return excited & ~inhibited


def _apply_clamp(x: np.ndarray, clamp: Optional[Mapping[int, int]]) -> np.ndarray:
    if clamp:
        for node, bit in clamp.items():
            x[..., node] = bool(bit)
    return x


def _check_clamp(clamp: Optional[Mapping[int, int]], n: int) -> None:
    for node, bit in (clamp or {}).items():
        if not 0 <= node < n:
            raise DimensionMismatch(f"clamped node {node + 1} out of range 1..{n}")
        if bit not in (0, 1):
            raise DomainError(f"clamp value for node {node + 1} must be 0 or 1")


def _with_held(spec: NetworkSpec, clamp: Optional[Mapping[int, int]]) -> Dict[int, int]:
    """Merge held nodes (always 1) over a user clamp"""
    merged = dict(clamp or {})
    merged.update({node: 1 for node in spec.held})
    return merged


def sample_step(
    spec: NetworkSpec,
    k: int,
    state: BinaryState,
    rng: np.random.Generator,
    population: bool = False,
    clamp: Optional[Mapping[int, int]] = None
) -> BinaryState:
    """
    Draw X(k+1) given X(k) = state

    Args:
        spec: Network specification
        k: Step index; frame_at(spec, k) supplies the parameters
        state: Current binary state
        rng: numpy Generator consumed in the fixed draw order
        population: Use a_ij reception draws per edge
        clamp: Optional {node: bit} held after the update; held nodes always fire

    Returns:
        Next binary state (uint8)
    """
    frame = frame_at(spec, k)
    x = as_binary_state(state, spec.n).astype(bool)
    _check_clamp(clamp, spec.n)
    clamp = _with_held(spec, clamp)
    uniforms = rng.random(draw_count(frame, population))
    new = _step_kernel(frame, x[None, :], uniforms[None, :], population)[0]
    return _apply_clamp(new, clamp).astype(np.uint8)


def sample_step_population(
    spec: NetworkSpec,
    k: int,
    state: BinaryState,
    rng: np.random.Generator,
    clamp: Optional[Mapping[int, int]] = None
) -> BinaryState:
    """Draw X(k+1) under the neurotransmitter population model"""
    return sample_step(spec, k, state, rng, population=True, clamp=clamp)


def simulate_trajectory(
    spec: NetworkSpec,
    horizon: int,
    initial: BinaryState,
    rng: np.random.Generator,
    population: bool = False,
    clamp: Optional[Mapping[int, int]] = None
) -> List[BinaryState]:
    """
    Sample a trajectory X(0), ..., X(horizon)

    Args:
        spec: Network specification
        horizon: Number of steps (>= 0)
        initial: X(0); clamped nodes are overridden
        rng: numpy Generator
        population: Use the population model
        clamp: Optional {node: bit} held at every step

    Returns:
        List of horizon + 1 binary states
    """
    if horizon < 0:
        raise DomainError(f"horizon must be nonnegative, got {horizon}")
    _check_clamp(clamp, spec.n)
    clamp = _with_held(spec, clamp)
    x = _apply_clamp(as_binary_state(initial, spec.n).copy(), clamp)
    trajectory = [x]
    for k in range(horizon):
        x = sample_step(spec, k, x, rng, population=population, clamp=clamp)
        trajectory.append(x)
    return trajectory


def sample_initial_state(spec: NetworkSpec, rng: np.random.Generator) -> BinaryState:
    """Independent Bernoulli(initial_p) draws, one uniform per node"""
    return (rng.random(spec.n) < spec.initial_p).astype(np.uint8)


def _run_chunk(spec: NetworkSpec, horizon: int, start: int, stop: int, seed: int,
               population: bool, clamp: Optional[Mapping[int, int]] = None) -> np.ndarray:
    """Firing counts (horizon+1 x n) over trials [start, stop)"""
    batch = stop - start
    frames = [frame_at(spec, k) for k in range(horizon)]
    sizes = [draw_count(frame, population) for frame in frames]

    initial_uniforms = np.empty((batch, spec.n))
    step_uniforms = [np.empty((batch, size)) for size in sizes]
    for t in range(batch):
        stream = trial_generator(seed, start + t)
        initial_uniforms[t] = stream.random(spec.n)
        for k, size in enumerate(sizes):
            step_uniforms[k][t] = stream.random(size)

    counts = np.zeros((horizon + 1, spec.n), dtype=np.int64)
    x = _apply_clamp(initial_uniforms < spec.initial_p, clamp)
    counts[0] = x.sum(axis=0)
    for k, frame in enumerate(frames):
        x = _apply_clamp(_step_kernel(frame, x, step_uniforms[k], population), clamp)
        counts[k + 1] = x.sum(axis=0)
    return counts


def monte_carlo_marginals(
    spec: NetworkSpec,
    horizon: Optional[int] = None,
    trials: int = 1000,
    seed: int = 0,
    population: bool = False,
    workers: int = 1,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    clamp: Optional[Mapping[int, int]] = None
) -> MarginalEstimate:
    """
    Estimate firing marginals by independent trials

    Trial t uses trial_generator(seed, t): n uniforms for X(0), then one block per
    step, so trial t reproduces simulate_trajectory on the same stream.

    Args:
        spec: Network specification
        horizon: Number of steps (spec.horizon by default)
        trials: Number of trials (>= 1)
        seed: Master seed
        population: Use the population model
        workers: Thread count for chunks of trials
        chunk_size: Trials per chunk
        clamp: Optional {node: bit} held at every step

    Returns:
        MarginalEstimate with (horizon+1) x n estimates
    """
    horizon = spec.horizon if horizon is None else horizon
    if trials < 1:
        raise DomainError(f"trials must be >= 1, got {trials}")
    if horizon < 0:
        raise DomainError(f"horizon must be nonnegative, got {horizon}")
    _check_clamp(clamp, spec.n)
    clamp = _with_held(spec, clamp)

    chunks = [(start, min(start + chunk_size, trials)) for start in range(0, trials, chunk_size)]
    counts = np.zeros((horizon + 1, spec.n), dtype=np.int64)

    if workers <= 1 or len(chunks) == 1:
        for start, stop in chunks:
            counts += _run_chunk(spec, horizon, start, stop, seed, population, clamp)
    else:
        with ThreadPoolExecutor(max_workers=min(workers, len(chunks))) as executor:
            future_to_chunk: Dict = {
                executor.submit(_run_chunk, spec, horizon, start, stop, seed, population, clamp): (start, stop)
                for start, stop in chunks
            }
            # Integer counts: reduction order does not affect the result
            for future in as_completed(future_to_chunk):
                counts += future.result()

    return MarginalEstimate.from_counts(counts, trials, seed, population)
