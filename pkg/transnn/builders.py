"""Small spec builders used by tests, examples and the documentation"""

from typing import Iterable, Optional, Sequence, Tuple

import numpy as np

from .network_model import (
    EXCITATORY,
    INHIBITORY,
    EdgeParams,
    NetworkSpec,
    ParameterFrame,
    ParameterSchedule,
)

# (target, source, kind, w, a, lambda); 0-based indices, lambda None means w * a
EdgeRow = Tuple[int, int, str, float, int, Optional[float]]


def build_spec(
    n: int,
    edges: Iterable[Sequence],
    initial_p: Optional[Sequence[float]] = None,
    horizon: int = 0,
    linked: bool = False
) -> NetworkSpec:
    """
    Build a constant (single-frame) spec from edge rows

    Args:
        n: Node count
        edges: Rows (target, source, kind[, w[, a[, lambda]]]), 0-based
        initial_p: Initial firing probabilities (zeros by default)
        horizon: Terminal step T
        linked: Build the schedule in linked mode (lambda = w * a)
    """
    frame = _frame(n, edges)
    schedule = ParameterSchedule.linked_schedule([frame]) if linked else ParameterSchedule((frame,))
    return NetworkSpec(n, schedule, horizon, initial_p)


def _frame(n: int, edges: Iterable[Sequence]) -> ParameterFrame:
    params = {}
    for row in edges:
        i, j, kind = row[0], row[1], row[2]
        w = row[3] if len(row) > 3 else 1.0
        a = row[4] if len(row) > 4 else 1
        lam = row[5] if len(row) > 5 else None
        params[(i, j)] = EdgeParams(kind, w, a, lam)
    return ParameterFrame.from_edges(n, params)


def build_schedule_spec(
    n: int,
    frames: Sequence[Iterable[Sequence]],
    initial_p: Optional[Sequence[float]] = None,
    horizon: int = 0
) -> NetworkSpec:
    """Build a time-varying spec, one edge-row list per frame"""
    schedule = ParameterSchedule(tuple(_frame(n, rows) for rows in frames))
    return NetworkSpec(n, schedule, horizon, initial_p)


def chain_spec(n: int, w: float = 0.5, initial_p: Optional[Sequence[float]] = None,
               horizon: int = 0) -> NetworkSpec:
    """Directed excitatory chain 1 -> 2 -> ... -> n"""
    edges = [(i + 1, i, EXCITATORY, w) for i in range(n - 1)]
    if initial_p is None:
        initial_p = [1.0] + [0.0] * (n - 1)
    return build_spec(n, edges, initial_p, horizon)


def self_loop_spec(lam: float, kind: str = EXCITATORY, p0: float = 1.0, horizon: int = 0) -> NetworkSpec:
    """Single node with a self-loop of rate lam (w = min(lam, 1), a = 1)"""
    return build_spec(1, [(0, 0, kind, min(lam, 1.0), 1, lam)], [p0], horizon)


def random_spec(
    rng: np.random.Generator,
    n: int,
    density: float = 0.4,
    inhibitory_fraction: float = 0.3,
    max_count: int = 3,
    max_rate: float = 1.0,
    horizon: int = 5,
    frames: int = 1
) -> NetworkSpec:
    """
    Random valid spec; every node has at least one incoming excitatory edge

    Args:
        rng: numpy Generator
        n: Node count
        density: Probability of each additional (target, source) pair
        inhibitory_fraction: Probability that an edge is inhibitory
        max_count: Upper bound for neurotransmitter counts
        max_rate: Upper bound for Poisson rates
        horizon: Terminal step T
        frames: Number of schedule frames
    """
    built = []
    for _ in range(frames):
        params = {}
        for i in range(n):
            j = int(rng.integers(n))
            params[(i, j)] = _random_params(rng, EXCITATORY, max_count, max_rate)
            for j in range(n):
                if (i, j) not in params and rng.random() < density:
                    kind = INHIBITORY if rng.random() < inhibitory_fraction else EXCITATORY
                    params[(i, j)] = _random_params(rng, kind, max_count, max_rate)
        built.append(ParameterFrame.from_edges(n, params))
    initial_p = rng.uniform(0.05, 0.95, size=n)
    return NetworkSpec(n, ParameterSchedule(tuple(built)), horizon, initial_p)


def _random_params(rng, kind: str, max_count: int, max_rate: float) -> EdgeParams:
    return EdgeParams(
        kind,
        float(rng.uniform(0.05, 1.0)),
        int(rng.integers(1, max_count + 1)),
        float(rng.uniform(0.05, max_rate)),
    )


def random_tree_spec(rng: np.random.Generator, n: int, horizon: int = 8) -> NetworkSpec:
    """Random spec where every node has in-degree <= 1 (chains, trees, root autapse)"""
    params = {}
    if rng.random() < 0.5:
        params[(0, 0)] = _random_params(rng, EXCITATORY, 3, 1.0)
    for i in range(1, n):
        if rng.random() < 0.9:
            j = int(rng.integers(i))
            kind = INHIBITORY if rng.random() < 0.2 else EXCITATORY
            params[(i, j)] = _random_params(rng, kind, 3, 1.0)
    frame = ParameterFrame.from_edges(n, params)
    initial_p = rng.uniform(0.0, 1.0, size=n)
    return NetworkSpec(n, ParameterSchedule((frame,)), horizon, initial_p)


def scale_rates(spec: NetworkSpec, factor: float) -> NetworkSpec:
    """Multiply every lambda by `factor` (w and a untouched, schedule unlinked)"""
    frames = [ParameterFrame(f.topology, f.w, f.a, f.lam * factor) for f in spec.schedule.frames]
    return NetworkSpec(spec.n, ParameterSchedule(tuple(frames)), spec.horizon, spec.initial_p,
                       held=spec.held)
