"""Circuit intermediate representation and gate library."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

TWO_PI = 2 * math.pi
CLIFFORD_ANGLE_TOL = 1e-12


class GateKind(str, Enum):
    I = "id"
    X = "x"
    Y = "y"
    Z = "z"
    H = "h"
    S = "s"
    SDG = "sdg"
    SQRT_X = "sx"
    CX = "cx"
    CZ = "cz"
    SWAP = "swap"
    T = "t"
    TDG = "tdg"
    RZ = "rz"
    RX = "rx"
    RY = "ry"

    @property
    def arity(self) -> int:
        return 2 if self in _TWO_QUBIT else 1

    @property
    def parametric(self) -> bool:
        return self in _ROTATIONS


_TWO_QUBIT = frozenset({GateKind.CX, GateKind.CZ, GateKind.SWAP})
_ROTATIONS = frozenset({GateKind.RZ, GateKind.RX, GateKind.RY})
_NON_CLIFFORD = frozenset({GateKind.T, GateKind.TDG})


def normalize_angle(angle: float) -> float:
    if not math.isfinite(angle):
        raise ValueError(f"rotation angle must be finite, got {angle!r}")
    a = math.fmod(angle, TWO_PI)
    if a < 0:
        a += TWO_PI
    # fmod of a tiny negative can round back up to exactly 2*pi
    return 0.0 if a >= TWO_PI else a


@dataclass(frozen=True)
class Gate:
    kind: GateKind
    qubits: tuple[int, ...]
    angle: float | None = None

    def __post_init__(self):
        kind = GateKind(self.kind)
        object.__setattr__(self, "kind", kind)
        qubits = tuple(int(q) for q in self.qubits)
        object.__setattr__(self, "qubits", qubits)
        if len(qubits) != kind.arity:
            raise ValueError(f"{kind.value} acts on {kind.arity} qubit(s), got {qubits}")
        if len(set(qubits)) != len(qubits):
            raise ValueError(f"{kind.value} needs distinct qubits, got {qubits}")
        if any(q < 0 for q in qubits):
            raise ValueError(f"negative qubit index in {qubits}")
        if kind.parametric:
            if self.angle is None:
                raise ValueError(f"{kind.value} requires an angle")
            object.__setattr__(self, "angle", normalize_angle(float(self.angle)))
        elif self.angle is not None:
            raise ValueError(f"{kind.value} takes no angle")

    def on(self, *qubits: int) -> "Gate":
        """Same gate acting on different qubits."""
        return Gate(self.kind, qubits, self.angle)

    def __str__(self) -> str:
        args = ",".join(str(q) for q in self.qubits)
        if self.angle is not None:
            return f"{self.kind.name}({self.angle:.6g})({args})"
        return f"{self.kind.name}({args})"


def _quarter_turns(angle: float) -> int | None:
    """Number of pi/2 steps if ``angle`` is a Clifford angle, else None."""
    steps = angle / (math.pi / 2)
    nearest = round(steps)
    if abs(angle - nearest * (math.pi / 2)) <= CLIFFORD_ANGLE_TOL:
        return nearest % 4
    return None


def classify_gate(gate: Gate) -> bool:
    """Return True iff ``gate`` is a Clifford gate."""
    if gate.kind in _NON_CLIFFORD:
        return False
    if gate.kind in _ROTATIONS:
        return _quarter_turns(gate.angle) is not None
    return True


def quarter_turns(gate: Gate) -> int:
    turns = _quarter_turns(gate.angle) if gate.kind in _ROTATIONS else None
    if turns is None:
        raise ValueError(f"{gate} is not a Clifford rotation")
    return turns


@dataclass(frozen=True)
class Circuit:
    """Gate list on ``n_qubits`` wires with terminal Z-basis measurement of ``measured``."""

    n_qubits: int
    gates: tuple[Gate, ...] = ()
    measured: frozenset[int] = field(default_factory=frozenset)

    def __post_init__(self):
        if int(self.n_qubits) < 1:
            raise ValueError(f"n_qubits must be positive, got {self.n_qubits}")
        object.__setattr__(self, "n_qubits", int(self.n_qubits))
        object.__setattr__(self, "gates", tuple(self.gates))
        object.__setattr__(self, "measured", frozenset(int(q) for q in self.measured))
        for g in self.gates:
            if not isinstance(g, Gate):
                raise TypeError(f"expected Gate, got {type(g).__name__}")
            for q in g.qubits:
                if q >= self.n_qubits:
                    raise ValueError(f"qubit {q} out of range for {self.n_qubits}-qubit circuit")
        for q in self.measured:
            if not 0 <= q < self.n_qubits:
                raise ValueError(f"measured qubit {q} out of range")

    @property
    def measured_order(self) -> list[int]:
        return sorted(self.measured)

    @property
    def is_clifford(self) -> bool:
        return all(classify_gate(g) for g in self.gates)

    def with_gates(self, gates: Iterable[Gate]) -> "Circuit":
        return Circuit(self.n_qubits, tuple(gates), self.measured)

    def measure_all(self) -> "Circuit":
        return Circuit(self.n_qubits, self.gates, frozenset(range(self.n_qubits)))

    def inverse(self) -> "Circuit":
        """Inverse circuit, exact up to global phase."""
        return Circuit(self.n_qubits, tuple(inverse_gate(g) for g in reversed(self.gates)), self.measured)

    def __len__(self) -> int:
        return len(self.gates)


_SELF_INVERSE = frozenset(
    {GateKind.I, GateKind.X, GateKind.Y, GateKind.Z, GateKind.H, GateKind.CX, GateKind.CZ, GateKind.SWAP}
)


def inverse_gate(g: Gate) -> Gate:
    if g.kind in _SELF_INVERSE:
        return g
    if g.kind in _ROTATIONS:
        return Gate(g.kind, g.qubits, -g.angle)
    pairs = {GateKind.S: GateKind.SDG, GateKind.SDG: GateKind.S, GateKind.T: GateKind.TDG, GateKind.TDG: GateKind.T}
    if g.kind in pairs:
        return Gate(pairs[g.kind], g.qubits)
    # sx^-1 = rx(-pi/2) up to phase
    return Gate(GateKind.RX, g.qubits, -math.pi / 2)


def is_clifford_circuit(circuit: Circuit) -> bool:
    return circuit.is_clifford


def count_non_clifford(circuit: Circuit) -> int:
    return sum(not classify_gate(g) for g in circuit.gates)


def inject_t_gates(circuit: Circuit, count: int, rng: np.random.Generator) -> Circuit:
    """Insert ``count`` T gates at uniformly drawn (gate-list slot, qubit) positions."""
    if count < 0:
        raise ValueError(f"count must be non-negative, got {count}")
    gates = list(circuit.gates)
    for _ in range(count):
        slot = int(rng.integers(0, len(gates) + 1))
        qubit = int(rng.integers(0, circuit.n_qubits))
        gates.insert(slot, Gate(GateKind.T, (qubit,)))
    return Circuit(circuit.n_qubits, tuple(gates), circuit.measured)


def random_circuit(
    n_qubits: int,
    depth: int,
    rng: np.random.Generator,
    *,
    clifford_only: bool = True,
    kinds: Sequence[GateKind] | None = None,
) -> Circuit:
    """Layered random circuit: each layer applies a random 1q gate to every qubit
    and CX on a random pairing. All qubits measured."""
    if kinds is None:
        kinds = [GateKind.H, GateKind.S, GateKind.SDG, GateKind.X, GateKind.Y, GateKind.Z, GateKind.SQRT_X]
        if not clifford_only:
            kinds = kinds + [GateKind.T, GateKind.TDG]
    gates: list[Gate] = []
    for _ in range(depth):
        for q in range(n_qubits):
            gates.append(Gate(kinds[int(rng.integers(len(kinds)))], (q,)))
        perm = rng.permutation(n_qubits)
        for a, b in zip(perm[0::2], perm[1::2]):
            gates.append(Gate(GateKind.CX, (int(a), int(b))))
    return Circuit(n_qubits, tuple(gates), frozenset(range(n_qubits)))
