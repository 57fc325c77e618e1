"""
Gate-level QAOA circuits for quadratic Ising polynomials.

The SWAP-network compilation puts the m logical qubits on a line and runs m
rounds of nearest-neighbour blocks per QAOA layer. Each block applies the
ZZ phase of the two logical qubits it holds and swaps them:

    CX(a,b) RZ_b(2 gamma c) CX(b,a) CX(a,b)  ==  exp(-i gamma c Z_a Z_b) SWAP(a,b)

using CX(a,b) RZ_b(theta) CX(a,b) = exp(-i theta/2 Z_a Z_b) and
SWAP = CX(a,b) CX(b,a) CX(a,b), where the two adjacent CX(a,b) cancel. In the
last round of each layer the swap is dropped (CX RZ CX, two CNOTs) and the
layout is tracked instead; the layout after the last layer becomes the
classical bit reordering applied at measurement. Round r starts at position
(r + m - 1) mod 2, which makes the last round start at 0 and gives
(3/2 m(m-1) - floor(m/2)) CNOTs per layer.

Linear terms become RZ(2 gamma h_i) on the current position of logical qubit
i at the start of each layer, the mixer is RX(2 beta) on every qubit and the
circuit starts with H on every qubit. Global phase (the polynomial offset) is
dropped.
"""

import logging
import math
import re
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from .errors import DimensionMismatchError, InvalidArgumentError, SchemaError
from .hamiltonian import IsingPolynomial, polynomial_energy_table
from .qaoa import QaoaParams, prepare

logger = logging.getLogger(__name__)

GATE_KINDS = ("h", "rz", "rx", "cx")
LINEAR = "linear"
ALL_TO_ALL = "all_to_all"
MAX_VERIFY_QUBITS = 12

TAG_INIT = "init"
TAG_FIELD = "field"
TAG_ZZ_SWAP = "zz_swap"
TAG_ZZ = "zz"
TAG_MIXER = "mixer"


@dataclass(frozen=True)
class Gate:
    """One gate; ``qubits`` is (control, target) for cx."""

    kind: str
    qubits: Tuple[int, ...]
    angle: Optional[float] = None
    tag: str = ""
    layer: int = -1

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise InvalidArgumentError(f"unknown gate kind {self.kind!r}")
        arity = 2 if self.kind == "cx" else 1
        if len(self.qubits) != arity or len(set(self.qubits)) != arity:
            raise InvalidArgumentError(f"{self.kind} acts on {arity} distinct qubit(s), got {self.qubits}")
        if (self.angle is None) != (self.kind in ("h", "cx")):
            raise InvalidArgumentError(f"{self.kind} angle mismatch: {self.angle}")

    @property
    def is_two_qubit(self) -> bool:
        return len(self.qubits) == 2


@dataclass(frozen=True)
class GateCounts:
    cnot: int
    single_qubit: int
    depth: int

    @property
    def total(self) -> int:
        return self.cnot + self.single_qubit

    def to_dict(self) -> Dict[str, int]:
        return {"cnot": self.cnot, "single_qubit": self.single_qubit, "depth": self.depth, "total": self.total}


@dataclass(frozen=True)
class GateCircuit:
    """
    An ordered gate list on m qubits.

    ``final_bit_permutation[q]`` is the logical qubit held by physical qubit
    q at the end; measuring q yields classical bit final_bit_permutation[q].
    Linear-connectivity circuits only use two-qubit gates on (i, i+1).
    """

    m: int
    gates: Tuple[Gate, ...] = ()
    final_bit_permutation: Optional[Tuple[int, ...]] = None
    connectivity: str = LINEAR

    def __post_init__(self):
        if self.m < 1:
            raise InvalidArgumentError(f"a circuit needs m >= 1 qubits, got {self.m}")
        permutation = self.final_bit_permutation
        if permutation is None:
            permutation = tuple(range(self.m))
        permutation = tuple(int(q) for q in permutation)
        if sorted(permutation) != list(range(self.m)):
            raise InvalidArgumentError(f"{permutation} is not a permutation of range({self.m})")
        object.__setattr__(self, "final_bit_permutation", permutation)
        object.__setattr__(self, "gates", tuple(self.gates))
        if self.connectivity not in (LINEAR, ALL_TO_ALL):
            raise InvalidArgumentError(f"unknown connectivity {self.connectivity!r}")
        for gate in self.gates:
            if max(gate.qubits) >= self.m or min(gate.qubits) < 0:
                raise InvalidArgumentError(f"gate {gate} out of range for m={self.m}")
            if self.connectivity == LINEAR and gate.is_two_qubit and abs(gate.qubits[0] - gate.qubits[1]) != 1:
                raise InvalidArgumentError(f"gate {gate} is not nearest-neighbour")


def _require_quadratic(h: IsingPolynomial) -> None:
    if not h.is_quadratic():
        raise InvalidArgumentError(f"only quadratic polynomials compile, got degree {h.degree}")
    if h.m < 2:
        raise InvalidArgumentError(f"compilation needs m >= 2 qubits, got {h.m}")


def _prologue(h: IsingPolynomial) -> List[Gate]:
    return [Gate("h", (q,), tag=TAG_INIT) for q in range(h.m)]


def _field_gates(fields: Dict[int, float], gamma: float, position: List[int], layer: int) -> List[Gate]:
    return [
        Gate("rz", (position[logical],), 2.0 * gamma * coeff, TAG_FIELD, layer)
        for logical, coeff in sorted(fields.items())
    ]


def _mixer_gates(m: int, beta: float, layer: int) -> List[Gate]:
    return [Gate("rx", (q,), 2.0 * beta, TAG_MIXER, layer) for q in range(m)]


def _zz_gates(a: int, b: int, angle: float, layer: int, swap: bool) -> List[Gate]:
    if swap:
        return [
            Gate("cx", (a, b), tag=TAG_ZZ_SWAP, layer=layer),
            Gate("rz", (b,), angle, TAG_ZZ_SWAP, layer),
            Gate("cx", (b, a), tag=TAG_ZZ_SWAP, layer=layer),
            Gate("cx", (a, b), tag=TAG_ZZ_SWAP, layer=layer),
        ]
    return [
        Gate("cx", (a, b), tag=TAG_ZZ, layer=layer),
        Gate("rz", (b,), angle, TAG_ZZ, layer),
        Gate("cx", (a, b), tag=TAG_ZZ, layer=layer),
    ]


def round_start(r: int, m: int) -> int:
    """First physical position paired in round r of a layer."""
    return (r + m - 1) % 2


def compile_swap_network(h: IsingPolynomial, params: QaoaParams) -> GateCircuit:
    """Compile the QAOA circuit of ``h`` for qubits on a line."""
    _require_quadratic(h)
    m = h.m
    couplings = h.quadratic_terms()
    fields = h.linear_terms()
    layout = list(range(m))
    gates = _prologue(h)
    for layer, (gamma, beta) in enumerate(zip(params.gammas, params.betas)):
        position = [0] * m
        for q, logical in enumerate(layout):
            position[logical] = q
        gates.extend(_field_gates(fields, gamma, position, layer))
        for r in range(m):
            last = r == m - 1
            for q in range(round_start(r, m), m - 1, 2):
                a, b = layout[q], layout[q + 1]
                coeff = couplings.get((min(a, b), max(a, b)), 0.0)
                gates.extend(_zz_gates(q, q + 1, 2.0 * gamma * coeff, layer, swap=not last))
                if not last:
                    layout[q], layout[q + 1] = b, a
        gates.extend(_mixer_gates(m, beta, layer))
    circuit = GateCircuit(m=m, gates=tuple(gates), final_bit_permutation=tuple(layout))
    logger.debug("compiled m=%d p=%d SWAP network: %d gates", m, params.p, len(gates))
    return circuit


def compile_direct(h: IsingPolynomial, params: QaoaParams) -> GateCircuit:
    """Compile without a SWAP network: one CX-RZ-CX per logical pair, m(m-1) CNOTs per layer."""
    _require_quadratic(h)
    m = h.m
    couplings = h.quadratic_terms()
    fields = h.linear_terms()
    identity = list(range(m))
    gates = _prologue(h)
    for layer, (gamma, beta) in enumerate(zip(params.gammas, params.betas)):
        gates.extend(_field_gates(fields, gamma, identity, layer))
        for a in range(m):
            for b in range(a + 1, m):
                gates.extend(_zz_gates(a, b, 2.0 * gamma * couplings.get((a, b), 0.0), layer, swap=False))
        gates.extend(_mixer_gates(m, beta, layer))
    return GateCircuit(m=m, gates=tuple(gates), connectivity=ALL_TO_ALL)


def expected_cnot_count(m: int, p: int) -> int:
    """(3/2 m(m-1) - floor(m/2)) * p."""
    return (3 * m * (m - 1) // 2 - m // 2) * p


def gate_counts(circ: GateCircuit) -> GateCounts:
    """CNOT and single-qubit totals plus ASAP depth."""
    level = [0] * circ.m
    cnot = 0
    for gate in circ.gates:
        if gate.kind == "cx":
            cnot += 1
        depth = 1 + max(level[q] for q in gate.qubits)
        for q in gate.qubits:
            level[q] = depth
    return GateCounts(cnot=cnot, single_qubit=len(circ.gates) - cnot, depth=max(level, default=0))


def trace_pair_angles(circ: GateCircuit) -> List[Dict[Tuple[int, int], List[float]]]:
    """
    Per QAOA layer, the ZZ angles applied to each unordered logical pair.

    Reconstructed from the gate list alone: CX(a,b) RZ_b CX(b,a) CX(a,b) is a
    ZZ+SWAP block, CX(a,b) RZ_b CX(a,b) a plain ZZ block. A run of RX gates
    closes a layer.
    """
    layout = list(range(circ.m))
    layers: List[Dict[Tuple[int, int], List[float]]] = [{}]
    gates = circ.gates
    i = 0
    in_mixer = False
    while i < len(gates):
        gate = gates[i]
        if gate.kind == "rx":
            in_mixer = True
            i += 1
            continue
        if in_mixer:
            layers.append({})
            in_mixer = False
        if gate.kind != "cx":
            i += 1
            continue
        a, b = gate.qubits
        rz = gates[i + 1] if i + 1 < len(gates) else None
        closing = gates[i + 2] if i + 2 < len(gates) else None
        if rz is None or rz.kind != "rz" or rz.qubits != (b,) or closing is None or closing.kind != "cx":
            raise SchemaError(f"unrecognized two-qubit pattern at gate {i}")
        pair = tuple(sorted((layout[a], layout[b])))
        layers[-1].setdefault(pair, []).append(rz.angle)
        if closing.qubits == (b, a):
            follow = gates[i + 3] if i + 3 < len(gates) else None
            if follow is None or follow.kind != "cx" or follow.qubits != (a, b):
                raise SchemaError(f"incomplete ZZ+SWAP block at gate {i}")
            layout[a], layout[b] = layout[b], layout[a]
            i += 4
        elif closing.qubits == (a, b):
            i += 3
        else:
            raise SchemaError(f"unrecognized two-qubit pattern at gate {i}")
    if not layers[-1]:
        layers.pop()
    return layers


_H = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2.0)


def _single_qubit_matrix(gate: Gate) -> np.ndarray:
    if gate.kind == "h":
        return _H
    half = gate.angle / 2.0
    if gate.kind == "rz":
        return np.diag([np.exp(-1j * half), np.exp(1j * half)])
    return np.array([[math.cos(half), -1j * math.sin(half)], [-1j * math.sin(half), math.cos(half)]])


def simulate(circ: GateCircuit) -> np.ndarray:
    """Apply the gates to |0...0> and return physical-qubit amplitudes."""
    m = circ.m
    amplitudes = np.zeros(1 << m, dtype=complex)
    amplitudes[0] = 1.0
    indices = np.arange(1 << m)
    for gate in circ.gates:
        if gate.kind == "cx":
            control, target = gate.qubits
            amplitudes = amplitudes[indices ^ (((indices >> control) & 1) << target)]
            continue
        q = gate.qubits[0]
        view = amplitudes.reshape(1 << (m - 1 - q), 2, 1 << q)
        amplitudes = np.einsum("ab,xbz->xaz", _single_qubit_matrix(gate), view).reshape(-1)
    return amplitudes


def to_logical(amplitudes: np.ndarray, permutation: Tuple[int, ...]) -> np.ndarray:
    """Reorder physical amplitudes so that bit L of the index is logical qubit L."""
    m = len(permutation)
    physical = np.arange(1 << m)
    logical = np.zeros_like(physical)
    for q, target in enumerate(permutation):
        logical |= ((physical >> q) & 1) << target
    result = np.empty_like(amplitudes)
    result[logical] = amplitudes
    return result


def verify_equivalence(circ: GateCircuit, h: IsingPolynomial, params: QaoaParams) -> float:
    """Max amplitude difference, up to global phase, between the circuit and direct QAOA evolution."""
    if circ.m != h.m:
        raise DimensionMismatchError(f"circuit has {circ.m} qubits, polynomial {h.m}")
    if circ.m > MAX_VERIFY_QUBITS:
        raise InvalidArgumentError(f"gate-level verification is limited to m <= {MAX_VERIFY_QUBITS}")
    got = to_logical(simulate(circ), circ.final_bit_permutation)
    expected = prepare(polynomial_energy_table(h), params).amplitudes
    overlap = np.vdot(got, expected)
    phase = overlap / abs(overlap) if abs(overlap) > 0 else 1.0
    return float(np.max(np.abs(got * phase - expected)))


_HEADER = ('OPENQASM 2.0;', 'include "qelib1.inc";')


def export_qasm(circ: GateCircuit) -> str:
    """OpenQASM 2.0 text; measurement routes qubit q to classical bit final_bit_permutation[q]."""
    lines = list(_HEADER)
    lines.append(f"qreg q[{circ.m}];")
    lines.append(f"creg c[{circ.m}];")
    for gate in circ.gates:
        if gate.kind == "cx":
            lines.append(f"cx q[{gate.qubits[0]}],q[{gate.qubits[1]}];")
        elif gate.kind == "h":
            lines.append(f"h q[{gate.qubits[0]}];")
        else:
            lines.append(f"{gate.kind}({gate.angle!r}) q[{gate.qubits[0]}];")
    for q, target in enumerate(circ.final_bit_permutation):
        lines.append(f"measure q[{q}] -> c[{target}];")
    return "\n".join(lines) + "\n"


_QREG = re.compile(r"^qreg\s+q\[(\d+)\];$")
_CREG = re.compile(r"^creg\s+c\[(\d+)\];$")
_CX = re.compile(r"^cx\s+q\[(\d+)\],\s*q\[(\d+)\];$")
_H_LINE = re.compile(r"^h\s+q\[(\d+)\];$")
_ROT = re.compile(r"^(rz|rx)\(([^)]+)\)\s+q\[(\d+)\];$")
_MEASURE = re.compile(r"^measure\s+q\[(\d+)\]\s*->\s*c\[(\d+)\];$")


def parse_qasm(text: str) -> GateCircuit:
    """Read back the dialect written by export_qasm."""
    m = None
    gates: List[Gate] = []
    measured: Dict[int, int] = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("//") or line in _HEADER or _CREG.match(line):
            continue
        match = _QREG.match(line)
        if match:
            m = int(match.group(1))
            continue
        try:
            if _CX.match(line):
                control, target = _CX.match(line).groups()
                gates.append(Gate("cx", (int(control), int(target))))
            elif _H_LINE.match(line):
                gates.append(Gate("h", (int(_H_LINE.match(line).group(1)),)))
            elif _ROT.match(line):
                kind, angle, qubit = _ROT.match(line).groups()
                gates.append(Gate(kind, (int(qubit),), float(angle)))
            elif _MEASURE.match(line):
                q, c = _MEASURE.match(line).groups()
                measured[int(q)] = int(c)
            else:
                raise SchemaError(f"line {line_no}: unsupported statement {line!r}")
        except (ValueError, InvalidArgumentError) as exc:
            raise SchemaError(f"line {line_no}: {exc}") from exc
    if m is None:
        raise SchemaError("no qreg declaration")
    permutation = tuple(measured.get(q, q) for q in range(m))
    adjacent = all(abs(g.qubits[0] - g.qubits[1]) == 1 for g in gates if g.is_two_qubit)
    try:
        return GateCircuit(m=m, gates=tuple(gates), final_bit_permutation=permutation,
                           connectivity=LINEAR if adjacent else ALL_TO_ALL)
    except InvalidArgumentError as exc:
        raise SchemaError(str(exc)) from exc

