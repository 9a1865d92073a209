"""Boolean functions realized as deterministic NOR-motif networks

Truth tables list outputs by row; row r assigns the inputs the binary digits of r,
first input most significant.
"""

from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Set, Tuple, Union

import numpy as np

from .binary_dynamics import simulate_trajectory, trial_generator
from .builders import build_spec
from .error_handler import DimensionMismatch, DomainError
from .network_model import EXCITATORY, INHIBITORY, NetworkSpec

MAX_COMPILE_INPUTS = 8

TruthTable = Tuple[int, ...]


@dataclass(frozen=True)
class LogicNetwork:
    """Deterministic network computing a Boolean function at output_node"""
    spec: NetworkSpec
    input_nodes: Tuple[int, ...]
    output_node: int
    latency: int
    constant_node: int

    @property
    def arity(self) -> int:
        return len(self.input_nodes)

    def metadata(self) -> Dict:
        """Document-style description (1-based node labels)"""
        return {
            'inputs': [node + 1 for node in self.input_nodes],
            'output': self.output_node + 1,
            'constant': self.constant_node + 1,
            'latency': self.latency,
            'table': ''.join(str(bit) for bit in truth_table(self)),
        }


def nor_gate() -> LogicNetwork:
    """Nodes A, B, constant-1, C with C = NOR(A, B) after one step"""
    a, b, const, c = 0, 1, 2, 3
    edges = [
        (const, const, EXCITATORY),
        (c, const, EXCITATORY),
        (c, a, INHIBITORY),
        (c, b, INHIBITORY),
    ]
    spec = build_spec(4, edges, [0.0, 0.0, 1.0, 0.0], horizon=1)
    return LogicNetwork(spec, (a, b), c, 1, const)


def parse_truth_table(bits: str) -> TruthTable:
    """
    Parse an output column such as "0111" (OR)

    Raises:
        DimensionMismatch: If the length is not 2^m for some m >= 1
        DomainError: If a character is not 0 or 1
    """
    bits = bits.strip()
    size = len(bits)
    if size < 2 or size & (size - 1):
        raise DimensionMismatch(f"truth table length must be a power of two >= 2, got {size}")
    if set(bits) - {'0', '1'}:
        raise DomainError(f"truth table must contain only 0 and 1, got {bits!r}")
    return tuple(int(ch) for ch in bits)


def _row_bits(r: int, m: int) -> List[int]:
    return [int(ch) for ch in f'{r:0{m}b}']


def _as_table(table: Union[Sequence[int], Callable[..., int]], inputs: Optional[int]) -> TruthTable:
    if callable(table):
        if inputs is None:
            raise DimensionMismatch("input count is required for a callable truth table")
        return tuple(int(bool(table(*_row_bits(r, inputs)))) for r in range(2 ** inputs))
    if isinstance(table, str):
        return parse_truth_table(table)
    rows = tuple(table)
    if any(v not in (0, 1) for v in rows):
        raise DomainError("truth table entries must be 0 or 1")
    return parse_truth_table(''.join(str(int(v)) for v in rows))


def compile(table: Union[Sequence[int], str, Callable[..., int]], inputs: Optional[int] = None) -> LogicNetwork:
    """
    Build a NOR-only network computing a Boolean function

    Layers: complements and delays of the inputs, one AND per minterm (a NOR of
    complemented literals), a NOR of the minterms, and a final NOT. A constant
    node with a w = 1 self-loop excites every gate. Each input reaches the output
    through exactly four edges. The depth is fixed at 4 for every table, single-input
    ones included: NOT ("10") also takes four steps rather than one.

    Args:
        table: Output column (bitstring or 0/1 sequence) or a callable on m bits
        inputs: Input count m, required for a callable

    Returns:
        LogicNetwork with latency 4

    Raises:
        DomainError: If m is outside 1..MAX_COMPILE_INPUTS
    """
    outputs = _as_table(table, inputs)
    m = len(outputs).bit_length() - 1
    if not 1 <= m <= MAX_COMPILE_INPUTS:
        raise DomainError(f"input count {m} outside 1..{MAX_COMPILE_INPUTS}")

    const = m
    negated = [m + 1 + i for i in range(m)]
    delayed = [2 * m + 1 + i for i in range(m)]
    minterm_rows = [r for r, bit in enumerate(outputs) if bit]
    minterms = [3 * m + 1 + t for t in range(len(minterm_rows))]
    inverted = 3 * m + 1 + len(minterm_rows)
    output = inverted + 1
    n = output + 1

    edges = [(const, const, EXCITATORY)]
    for i in range(m):
        edges += [(negated[i], const, EXCITATORY), (negated[i], i, INHIBITORY), (delayed[i], i, EXCITATORY)]
    for node, r in zip(minterms, minterm_rows):
        edges.append((node, const, EXCITATORY))
        for i, bit in enumerate(_row_bits(r, m)):
            # a true literal x_i is vetoed by NOT x_i, a false one by x_i
            edges.append((node, negated[i] if bit else delayed[i], INHIBITORY))
    edges.append((inverted, const, EXCITATORY))
    edges += [(inverted, node, INHIBITORY) for node in minterms]
    edges += [(output, const, EXCITATORY), (output, inverted, INHIBITORY)]

    initial_p = np.zeros(n)
    initial_p[const] = 1.0
    spec = build_spec(n, edges, initial_p, horizon=4)
    return LogicNetwork(spec, tuple(range(m)), output, 4, const)


def evaluate(logic: LogicNetwork, inputs: Sequence[int]) -> int:
    """
    Hold the inputs for `latency` steps and read the output node

    Raises:
        DimensionMismatch: If the input vector has the wrong length
        DomainError: If an input is not 0 or 1
    """
    if len(inputs) != logic.arity:
        raise DimensionMismatch(f"expected {logic.arity} inputs, got {len(inputs)}")
    clamp = {}
    for node, bit in zip(logic.input_nodes, inputs):
        if bit not in (0, 1):
            raise DomainError(f"input bits must be 0 or 1, got {bit!r}")
        clamp[node] = int(bit)
    initial = np.zeros(logic.spec.n, dtype=np.uint8)
    initial[logic.constant_node] = 1
    trajectory = simulate_trajectory(logic.spec, logic.latency, initial, trial_generator(0, 0), clamp=clamp)
    return int(trajectory[-1][logic.output_node])


def truth_table(logic: LogicNetwork) -> TruthTable:
    """Evaluate every input row in table order"""
    m = logic.arity
    return tuple(evaluate(logic, _row_bits(r, m)) for r in range(2 ** m))


def path_lengths(logic: LogicNetwork) -> Set[int]:
    """Lengths of all directed paths from an input node to the output node"""
    topo = logic.spec.topology
    successors: Dict[int, List[int]] = {}
    for i, j in topo.edges:
        if i != j:
            successors.setdefault(j, []).append(i)

    memo: Dict[int, Set[int]] = {}

    def lengths_from(node: int) -> Set[int]:
        if node not in memo:
            found = {0} if node == logic.output_node else set()
            for nxt in successors.get(node, []):
                found |= {length + 1 for length in lengths_from(nxt)}
            memo[node] = found
        return memo[node]

    lengths: Set[int] = set()
    for node in logic.input_nodes:
        lengths |= lengths_from(node)
    return lengths
