"""Network topology, parameter schedules and the specification document format

Matrices are oriented so that entry (i, j) is the influence of node j on node i.
Node indices are 0-based in memory and 1-based in documents.
"""

import hashlib
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Any, Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .error_handler import DomainError, ScheduleError, SpecFormatError

Edge = Tuple[int, int]

EXCITATORY = 'excitatory'
INHIBITORY = 'inhibitory'
EDGE_TYPES = (EXCITATORY, INHIBITORY)


@dataclass(frozen=True)
class NetworkTopology:
    """Node count plus excitatory and inhibitory edge sets; (i, j) means j -> i"""
    n: int
    excitatory_edges: FrozenSet[Edge] = frozenset()
    inhibitory_edges: FrozenSet[Edge] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, 'excitatory_edges',
                           frozenset((int(i), int(j)) for i, j in self.excitatory_edges))
        object.__setattr__(self, 'inhibitory_edges',
                           frozenset((int(i), int(j)) for i, j in self.inhibitory_edges))

    @property
    def edges(self) -> List[Edge]:
        """All edges, sorted lexicographically by (target, source)"""
        return sorted(self.excitatory_edges | self.inhibitory_edges)

    def edge_type(self, edge: Edge) -> Optional[str]:
        if edge in self.excitatory_edges:
            return EXCITATORY
        if edge in self.inhibitory_edges:
            return INHIBITORY
        return None

    def _mask(self, edges: FrozenSet[Edge]) -> np.ndarray:
        mask = np.zeros((self.n, self.n), dtype=bool)
        for i, j in edges:
            if 0 <= i < self.n and 0 <= j < self.n:
                mask[i, j] = True
        mask.setflags(write=False)
        return mask

    @cached_property
    def excitatory_mask(self) -> np.ndarray:
        """B_E as a boolean matrix"""
        return self._mask(self.excitatory_edges)

    @cached_property
    def inhibitory_mask(self) -> np.ndarray:
        """B_I as a boolean matrix"""
        return self._mask(self.inhibitory_edges)

    @property
    def edge_mask(self) -> np.ndarray:
        return self.excitatory_mask | self.inhibitory_mask

    def in_degree(self) -> np.ndarray:
        return self.edge_mask.sum(axis=1)


@dataclass(frozen=True)
class EdgeParams:
    """Parameters carried by one edge; lam defaults to w * a"""
    kind: str
    w: float
    a: float = 1
    lam: Optional[float] = None

    @property
    def rate(self) -> float:
        return self.w * self.a if self.lam is None else self.lam


def _frozen_matrix(values, n: int) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim == 0:
        arr = np.full((n, n), float(arr))
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ParameterFrame:
    """Topology and dense parameter matrices (w, a, lambda) for one step"""
    topology: NetworkTopology
    w: np.ndarray
    a: np.ndarray
    lam: np.ndarray

    def __post_init__(self):
        n = self.topology.n
        for name in ('w', 'a', 'lam'):
            object.__setattr__(self, name, _frozen_matrix(getattr(self, name), n))

    @classmethod
    def from_edges(cls, n: int, edges: Mapping[Edge, EdgeParams]) -> 'ParameterFrame':
        """
        Build a frame from per-edge parameters; off-edge entries are 0

        Args:
            n: Node count
            edges: Mapping from (target, source) to EdgeParams
        """
        excitatory, inhibitory = set(), set()
        w = np.zeros((n, n))
        a = np.zeros((n, n))
        lam = np.zeros((n, n))
        for (i, j), params in edges.items():
            if params.kind == EXCITATORY:
                excitatory.add((i, j))
            elif params.kind == INHIBITORY:
                inhibitory.add((i, j))
            else:
                raise SpecFormatError(f"unknown edge type '{params.kind}'")
            w[i, j] = params.w
            a[i, j] = params.a
            lam[i, j] = params.rate
        return cls(NetworkTopology(n, frozenset(excitatory), frozenset(inhibitory)), w, a, lam)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ParameterFrame):
            return NotImplemented
        return (self.topology == other.topology
                and np.array_equal(self.w, other.w)
                and np.array_equal(self.a, other.a)
                and np.array_equal(self.lam, other.lam))

    __hash__ = None

    @property
    def n(self) -> int:
        return self.topology.n

    @cached_property
    def edge_arrays(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(targets, sources, is_excitatory) for edges sorted by (target, source)"""
        edges = self.topology.edges
        targets = np.array([i for i, _ in edges], dtype=np.intp)
        sources = np.array([j for _, j in edges], dtype=np.intp)
        excitatory = np.array([e in self.topology.excitatory_edges for e in edges], dtype=bool)
        return targets, sources, excitatory

    def counts(self, population: bool) -> np.ndarray:
        """Exponents a_ij on edges (all ones in the base model), 0 off-edge"""
        mask = self.topology.edge_mask
        return np.where(mask, self.a, 0.0) if population else mask.astype(float)

    def transmission_matrix(self, population: bool) -> np.ndarray:
        """M = A ⊙ Ω on edges (Ω alone in the base model)"""
        return self.counts(population) * self.w

    @cached_property
    def excitatory_rates(self) -> np.ndarray:
        """B_E ⊙ Λ"""
        return np.where(self.topology.excitatory_mask, self.lam, 0.0)

    @cached_property
    def inhibitory_rates(self) -> np.ndarray:
        """B_I ⊙ Λ"""
        return np.where(self.topology.inhibitory_mask, self.lam, 0.0)

    @cached_property
    def stacked_rates(self) -> np.ndarray:
        """[B_E ⊙ Λ; B_I ⊙ Λ], shape 2n x n"""
        return np.vstack([self.excitatory_rates, self.inhibitory_rates])


@dataclass(frozen=True)
class ParameterSchedule:
    """Ordered per-step parameter frames; hold-last beyond the end"""
    frames: Tuple[ParameterFrame, ...]
    linked: bool = False

    def __post_init__(self):
        object.__setattr__(self, 'frames', tuple(self.frames))

    @classmethod
    def linked_schedule(cls, frames: Iterable[ParameterFrame]) -> 'ParameterSchedule':
        """Linked mode: rebuild every frame with lambda = w * a exactly"""
        rebuilt = []
        for frame in frames:
            lam = np.where(frame.topology.edge_mask, frame.w * frame.a, 0.0)
            rebuilt.append(ParameterFrame(frame.topology, frame.w, frame.a, lam))
        return cls(tuple(rebuilt), linked=True)

    def __len__(self) -> int:
        return len(self.frames)

    def is_constant(self) -> bool:
        return all(frame == self.frames[0] for frame in self.frames[1:])


@dataclass(frozen=True, eq=False)
class NetworkSpec:
    """
    Complete network specification: schedule, horizon T and p(0)

    Nodes in `held` fire at every step from outside the dynamics (s = +inf,
    o = 0); they act as constant inputs and need no incoming links.
    """
    n: int
    schedule: ParameterSchedule
    horizon: int
    initial_p: np.ndarray = field(default=None)
    held: FrozenSet[int] = frozenset()

    def __post_init__(self):
        initial = np.zeros(self.n) if self.initial_p is None else np.array(self.initial_p, dtype=float)
        initial.setflags(write=False)
        object.__setattr__(self, 'initial_p', initial)
        object.__setattr__(self, 'held', frozenset(int(node) for node in self.held))

    def __eq__(self, other) -> bool:
        if not isinstance(other, NetworkSpec):
            return NotImplemented
        return (self.n == other.n
                and self.horizon == other.horizon
                and self.schedule == other.schedule
                and self.held == other.held
                and np.array_equal(self.initial_p, other.initial_p))

    __hash__ = None

    @property
    def topologies(self) -> List[NetworkTopology]:
        return [frame.topology for frame in self.schedule.frames]

    @property
    def topology(self) -> NetworkTopology:
        return self.schedule.frames[0].topology

    def is_constant(self) -> bool:
        return self.schedule.is_constant()

    @property
    def held_mask(self) -> np.ndarray:
        mask = np.zeros(self.n, dtype=bool)
        mask[sorted(node for node in self.held if 0 <= node < self.n)] = True
        return mask


@dataclass(frozen=True)
class Violation:
    """One invariant violation found by validate()"""
    code: str
    message: str
    frame: Optional[int] = None
    node: Optional[int] = None
    edge: Optional[Edge] = None

    def __str__(self) -> str:
        where = []
        if self.frame is not None:
            where.append(f"frame {self.frame}")
        if self.node is not None:
            where.append(f"node {self.node + 1}")
        if self.edge is not None:
            where.append(f"edge {self.edge[0] + 1}<-{self.edge[1] + 1}")
        suffix = f" ({', '.join(where)})" if where else ""
        return f"{self.message}{suffix}"


def frame_at(spec: NetworkSpec, k: int) -> ParameterFrame:
    """
    Get the parameter frame used for the transition k -> k+1

    Args:
        spec: Network specification
        k: Step index (>= 0)

    Returns:
        Frame k, or the last frame when the schedule is shorter (hold-last)

    Raises:
        ScheduleError: If the schedule has no frames
    """
    if k < 0:
        raise DomainError(f"step index must be nonnegative, got {k}")
    frames = spec.schedule.frames
    if not frames:
        raise ScheduleError("no parameter frames")
    return frames[min(k, len(frames) - 1)]


def _validate_frame(spec: NetworkSpec, t: int, frame: ParameterFrame) -> List[Violation]:
    violations = []
    n = spec.n
    topo = frame.topology
    if topo.n != n:
        violations.append(Violation('node-count', f"topology has {topo.n} nodes, expected {n}", frame=t))
        return violations

    for edge in sorted(topo.excitatory_edges | topo.inhibitory_edges):
        i, j = edge
        if not (0 <= i < n and 0 <= j < n):
            violations.append(Violation('edge-index', "node index out of range", frame=t, edge=edge))
    for edge in sorted(topo.excitatory_edges & topo.inhibitory_edges):
        violations.append(Violation('edge-conflict', "edge both excitatory and inhibitory",
                                    frame=t, edge=edge))

    arrays = {'w': frame.w, 'a': frame.a, 'lambda': frame.lam}
    shaped = {}
    for name, arr in arrays.items():
        if arr.shape != (n, n):
            violations.append(Violation('shape', f"{name} matrix has shape {arr.shape}, expected {(n, n)}",
                                        frame=t))
        else:
            shaped[name] = arr

    mask = topo.edge_mask
    for edge in topo.edges:
        i, j = edge
        if not (0 <= i < n and 0 <= j < n):
            continue
        if 'w' in shaped and not 0.0 <= shaped['w'][i, j] <= 1.0:
            violations.append(Violation('probability-range', "probability out of range", frame=t, edge=edge))
        if 'a' in shaped:
            count = shaped['a'][i, j]
            if not (math.isfinite(count) and count >= 1 and float(count).is_integer()):
                violations.append(Violation('count-range', "neurotransmitter count must be a positive integer",
                                            frame=t, edge=edge))
        if 'lambda' in shaped:
            rate = shaped['lambda'][i, j]
            if not (math.isfinite(rate) and rate >= 0):
                violations.append(Violation('rate-range', "rate out of range", frame=t, edge=edge))
        if spec.schedule.linked and len(shaped) == 3:
            if shaped['lambda'][i, j] != shaped['w'][i, j] * shaped['a'][i, j]:
                violations.append(Violation('unlinked-rate', "rate differs from w * a in linked mode",
                                            frame=t, edge=edge))

    for name, arr in shaped.items():
        for i, j in zip(*np.nonzero(~mask & (arr != 0))):
            violations.append(Violation('off-edge', f"off-edge {name} must be zero",
                                        frame=t, edge=(int(i), int(j))))
    return violations


def validate(spec: NetworkSpec) -> List[Violation]:
    """
    Check every type invariant of a specification

    Args:
        spec: Network specification

    Returns:
        List of Violation objects, empty when the spec is valid
    """
    violations = []
    if spec.n < 1:
        violations.append(Violation('node-count', "node count must be positive"))
    if spec.horizon < 0:
        violations.append(Violation('horizon', "horizon must be nonnegative"))

    frames = spec.schedule.frames
    if not frames:
        violations.append(Violation('empty-schedule', "no parameter frames"))
    elif len(frames) != 1 and len(frames) < spec.horizon:
        violations.append(Violation('schedule-length',
                                    f"schedule has {len(frames)} frames, horizon needs {spec.horizon}"))

    if spec.n >= 1:
        for t, frame in enumerate(frames):
            violations.extend(_validate_frame(spec, t, frame))

    p0 = spec.initial_p
    if p0.shape != (spec.n,):
        violations.append(Violation('initial-length', f"initial_p has shape {p0.shape}, expected ({spec.n},)"))
    else:
        for i, value in enumerate(p0):
            if not 0.0 <= value <= 1.0:
                violations.append(Violation('initial-range', "initial probability out of range", node=i))

    for node in sorted(spec.held):
        if not 0 <= node < spec.n:
            violations.append(Violation('held-index', "held node index out of range", node=node))
            continue
        if p0.shape == (spec.n,) and p0[node] != 1.0:
            violations.append(Violation('held-initial', "held node must start firing", node=node))
        for t, frame in enumerate(frames):
            if frame.topology.n == spec.n and frame.topology.edge_mask[node].any():
                violations.append(Violation('held-incoming', "held node must have no incoming links",
                                            frame=t, node=node))
    return violations


def _number(value: Any, what: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SpecFormatError(f"{what} must be a number, got {value!r}")
    return value


def _index(value: Any, n: int, what: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise SpecFormatError(f"{what} must be an integer node label, got {value!r}")
    if not 1 <= value <= n:
        raise SpecFormatError(f"{what} {value} out of range 1..{n}")
    return value - 1


def _load_frame(raw: Any, n: int, t: int) -> ParameterFrame:
    if not isinstance(raw, Mapping) or not isinstance(raw.get('edges', []), list):
        raise SpecFormatError(f"frame {t} must be an object with an 'edges' array")
    excitatory, inhibitory = set(), set()
    w = np.zeros((n, n))
    a = np.zeros((n, n))
    lam = np.zeros((n, n))
    seen = set()
    for raw_edge in raw.get('edges', []):
        if not isinstance(raw_edge, Mapping):
            raise SpecFormatError(f"frame {t}: edge entries must be objects")
        try:
            kind = raw_edge['type']
            i = _index(raw_edge['dst'], n, 'dst')
            j = _index(raw_edge['src'], n, 'src')
            weight = _number(raw_edge['w'], 'w')
        except KeyError as e:
            raise SpecFormatError(f"frame {t}: edge missing field {e}") from None
        if kind not in EDGE_TYPES:
            raise SpecFormatError(f"frame {t}: unknown edge type '{kind}'")
        if (i, j, kind) in seen:
            raise SpecFormatError(f"frame {t}: duplicate edge {i + 1}<-{j + 1}")
        seen.add((i, j, kind))
        count = _number(raw_edge.get('a', 1), 'a')
        rate = _number(raw_edge.get('lambda', weight * count), 'lambda')
        (excitatory if kind == EXCITATORY else inhibitory).add((i, j))
        w[i, j], a[i, j], lam[i, j] = weight, count, rate
    return ParameterFrame(NetworkTopology(n, frozenset(excitatory), frozenset(inhibitory)), w, a, lam)


def load_spec(document: Mapping[str, Any]) -> NetworkSpec:
    """
    Build a NetworkSpec from a parsed specification document

    Args:
        document: Mapping with n, horizon, initial_p, frames (and optional linked)

    Returns:
        NetworkSpec (not validated; call validate() for invariant checks)

    Raises:
        SpecFormatError: On malformed documents, unknown edge tags or bad indices
    """
    if not isinstance(document, Mapping):
        raise SpecFormatError("specification document must be an object")
    try:
        n = document['n']
        horizon = document['horizon']
        initial_p = document['initial_p']
    except KeyError as e:
        raise SpecFormatError(f"specification missing field {e}") from None
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise SpecFormatError(f"n must be a positive integer, got {n!r}")
    if isinstance(horizon, bool) or not isinstance(horizon, int):
        raise SpecFormatError(f"horizon must be an integer, got {horizon!r}")
    if not isinstance(initial_p, list):
        raise SpecFormatError("initial_p must be an array")
    initial = [_number(v, 'initial_p entry') for v in initial_p]

    raw_frames = document.get('frames', [{'edges': document.get('edges', [])}])
    if not isinstance(raw_frames, list):
        raise SpecFormatError("frames must be an array")
    frames = [_load_frame(raw, n, t) for t, raw in enumerate(raw_frames)]
    linked = bool(document.get('linked', False))
    schedule = ParameterSchedule.linked_schedule(frames) if linked else ParameterSchedule(tuple(frames))
    raw_held = document.get('held', [])
    if not isinstance(raw_held, list):
        raise SpecFormatError("held must be an array")
    held = frozenset(_index(node, n, 'held') for node in raw_held)
    return NetworkSpec(n=n, schedule=schedule, horizon=horizon, initial_p=np.array(initial, dtype=float),
                       held=held)


def _count_out(value: float) -> Union[int, float]:
    value = float(value)
    return int(value) if value.is_integer() else value


def save_spec(spec: NetworkSpec) -> Dict[str, Any]:
    """
    Render a NetworkSpec as a specification document

    Args:
        spec: Network specification

    Returns:
        JSON-ready dictionary; load_spec(save_spec(s)) == s
    """
    frames = []
    for frame in spec.schedule.frames:
        edges = []
        topo = frame.topology
        for kind, edge_set in ((EXCITATORY, topo.excitatory_edges), (INHIBITORY, topo.inhibitory_edges)):
            for i, j in edge_set:
                edges.append({
                    'dst': i + 1,
                    'src': j + 1,
                    'type': kind,
                    'w': float(frame.w[i, j]),
                    'a': _count_out(frame.a[i, j]),
                    'lambda': float(frame.lam[i, j]),
                })
        edges.sort(key=lambda e: (e['dst'], e['src'], e['type']))
        frames.append({'edges': edges})
    document = {
        'n': spec.n,
        'horizon': spec.horizon,
        'initial_p': [float(v) for v in spec.initial_p],
        'linked': spec.schedule.linked,
        'frames': frames,
    }
    if spec.held:
        document['held'] = [node + 1 for node in sorted(spec.held)]
    return document


def dumps(spec: NetworkSpec) -> str:
    return json.dumps(save_spec(spec), indent=2, sort_keys=True)


def loads(text: str) -> NetworkSpec:
    try:
        document = json.loads(text)
    except json.JSONDecodeError as e:
        raise SpecFormatError(f"invalid JSON: {e}") from None
    return load_spec(document)


def read_spec(path: Union[str, Path]) -> NetworkSpec:
    return loads(Path(path).read_text(encoding='utf-8'))


def write_spec(spec: NetworkSpec, path: Union[str, Path]) -> None:
    Path(path).write_text(dumps(spec) + "\n", encoding='utf-8')


def spec_digest(spec: NetworkSpec) -> str:
    """SHA-256 of the canonical document (formatting-insensitive provenance)"""
    canonical = json.dumps(save_spec(spec), sort_keys=True, separators=(',', ':'))
    return hashlib.sha256(canonical.encode('utf-8')).hexdigest()


def with_neurotransmitter_count(spec: NetworkSpec, count: int) -> NetworkSpec:
    """
    Fixed-rate scaling: every edge gets `count` neurotransmitters and w = lambda / count

    Args:
        spec: Network specification whose lambda matrices are kept fixed
        count: Neurotransmitter count applied to every edge

    Returns:
        NetworkSpec in linked mode

    Raises:
        DomainError: If some rate exceeds the count (w would exceed 1)
    """
    if count < 1:
        raise DomainError(f"neurotransmitter count must be >= 1, got {count}")
    frames = []
    for frame in spec.schedule.frames:
        mask = frame.topology.edge_mask
        if np.any(frame.lam[mask] > count):
            raise DomainError(f"rate {frame.lam[mask].max()} exceeds neurotransmitter count {count}")
        w = np.where(mask, frame.lam / count, 0.0)
        a = np.where(mask, float(count), 0.0)
        frames.append(ParameterFrame(frame.topology, w, a, frame.lam))
    return NetworkSpec(spec.n, ParameterSchedule.linked_schedule(frames), spec.horizon, spec.initial_p, spec.held)


def with_offset_node(spec: NetworkSpec, targets: Sequence[int], w: float) -> NetworkSpec:
    """
    Append an offset node that fires persistently and excites `targets` with probability w

    The node has no incoming links and is held firing from outside the dynamics, so
    its information state stays at s = +inf and each target receives the constant
    -log(1 - w). Certificates ignore held sources.

    Args:
        spec: Network specification
        targets: 0-based target node indices
        w: Outgoing transmission probability, 0 <= w < 1
    """
    if not 0.0 <= w < 1.0:
        raise DomainError(f"offset transmission probability must lie in [0, 1), got {w}")
    n = spec.n + 1
    offset = spec.n
    frames = []
    for frame in spec.schedule.frames:
        topo = frame.topology
        params = {}
        for edge in topo.edges:
            i, j = edge
            params[edge] = EdgeParams(topo.edge_type(edge), frame.w[i, j], frame.a[i, j], frame.lam[i, j])
        for target in targets:
            params[(target, offset)] = EdgeParams(EXCITATORY, w, 1, w)
        frames.append(ParameterFrame.from_edges(n, params))
    initial = np.append(spec.initial_p, 1.0)
    schedule = (ParameterSchedule.linked_schedule(frames) if spec.schedule.linked
                else ParameterSchedule(tuple(frames)))
    return NetworkSpec(n, schedule, spec.horizon, initial, held=spec.held | {offset})
