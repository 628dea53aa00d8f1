"""Dense statevector simulation.

Qubit 0 is the most significant index bit, matching the bit order of
:class:`~cliffcut.distribution.Distribution` keys.
"""
from __future__ import annotations

import cmath
import math

import numpy as np

from .circuit import Circuit, Gate, GateKind
from .distribution import Distribution

DEFAULT_MAX_QUBITS = 26
PRUNE_TOL = 1e-12


class WidthLimitError(RuntimeError):
    def __init__(self, n_qubits: int, limit: int):
        super().__init__(f"{n_qubits} qubits exceeds statevector limit of {limit}")
        self.n_qubits = n_qubits
        self.limit = limit


_R2 = 1 / math.sqrt(2)
_FIXED = {
    GateKind.I: np.eye(2, dtype=complex),
    GateKind.X: np.array([[0, 1], [1, 0]], dtype=complex),
    GateKind.Y: np.array([[0, -1j], [1j, 0]], dtype=complex),
    GateKind.Z: np.array([[1, 0], [0, -1]], dtype=complex),
    GateKind.H: np.array([[_R2, _R2], [_R2, -_R2]], dtype=complex),
    GateKind.S: np.array([[1, 0], [0, 1j]], dtype=complex),
    GateKind.SDG: np.array([[1, 0], [0, -1j]], dtype=complex),
    GateKind.SQRT_X: 0.5 * np.array([[1 + 1j, 1 - 1j], [1 - 1j, 1 + 1j]], dtype=complex),
    GateKind.T: np.array([[1, 0], [0, cmath.exp(1j * math.pi / 4)]], dtype=complex),
    GateKind.TDG: np.array([[1, 0], [0, cmath.exp(-1j * math.pi / 4)]], dtype=complex),
}


def gate_matrix(gate: Gate) -> np.ndarray:
    """2x2 unitary of a one-qubit gate."""
    if gate.kind in _FIXED:
        return _FIXED[gate.kind]
    c, s = math.cos(gate.angle / 2), math.sin(gate.angle / 2)
    if gate.kind is GateKind.RZ:
        return np.array([[complex(c, -s), 0], [0, complex(c, s)]])
    if gate.kind is GateKind.RX:
        return np.array([[c, -1j * s], [-1j * s, c]])
    if gate.kind is GateKind.RY:
        return np.array([[c, -s], [s, c]], dtype=complex)
    raise ValueError(f"{gate.kind.value} is not a one-qubit gate")


class Statevector:
    def __init__(self, n: int, amps: np.ndarray | None = None):
        if n < 1:
            raise ValueError("n must be positive")
        self.n = n
        if amps is None:
            amps = np.zeros(1 << n, dtype=complex)
            amps[0] = 1.0
        self.amps = np.asarray(amps, dtype=complex).reshape(1 << n)

    def norm(self) -> float:
        return float(np.vdot(self.amps, self.amps).real)

    def _view(self, q: int) -> np.ndarray:
        return self.amps.reshape(1 << q, 2, 1 << (self.n - q - 1))

    def apply(self, gate: Gate) -> "Statevector":
        if gate.kind.arity == 1:
            self._apply_1q(gate_matrix(gate), gate.qubits[0])
        else:
            self._apply_2q(gate.kind, *gate.qubits)
        return self

    def _apply_1q(self, u: np.ndarray, q: int) -> None:
        v = self._view(q)
        if u[0, 1] == 0 and u[1, 0] == 0:
            if u[0, 0] != 1:
                v[:, 0, :] *= u[0, 0]
            if u[1, 1] != 1:
                v[:, 1, :] *= u[1, 1]
            return
        a0 = v[:, 0, :].copy()
        a1 = v[:, 1, :]
        v[:, 0, :] = u[0, 0] * a0 + u[0, 1] * a1
        v[:, 1, :] = u[1, 0] * a0 + u[1, 1] * a1

    def _apply_2q(self, kind: GateKind, a: int, b: int) -> None:
        n = self.n
        t = self.amps.reshape((2,) * n)

        def sl(va, vb):
            idx = [slice(None)] * n
            idx[a], idx[b] = va, vb
            return tuple(idx)

        if kind is GateKind.CX:
            tmp = t[sl(1, 0)].copy()
            t[sl(1, 0)] = t[sl(1, 1)]
            t[sl(1, 1)] = tmp
        elif kind is GateKind.CZ:
            t[sl(1, 1)] *= -1
        elif kind is GateKind.SWAP:
            tmp = t[sl(0, 1)].copy()
            t[sl(0, 1)] = t[sl(1, 0)]
            t[sl(1, 0)] = tmp
        else:
            raise ValueError(f"{kind.value} is not a two-qubit gate")

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amps) ** 2


def sv_apply(state: Statevector, gate: Gate) -> Statevector:
    for q in gate.qubits:
        if q >= state.n:
            raise ValueError(f"qubit {q} out of range for {state.n}-qubit state")
    return state.apply(gate)


def run_statevector(circuit: Circuit, max_qubits: int = DEFAULT_MAX_QUBITS) -> Statevector:
    if circuit.n_qubits > max_qubits:
        raise WidthLimitError(circuit.n_qubits, max_qubits)
    state = Statevector(circuit.n_qubits)
    for g in circuit.gates:
        state.apply(g)
    return state


def _measured_probabilities(circuit: Circuit, max_qubits: int) -> np.ndarray:
    state = run_statevector(circuit, max_qubits)
    probs = state.probabilities().reshape((2,) * circuit.n_qubits)
    traced = tuple(q for q in range(circuit.n_qubits) if q not in circuit.measured)
    if traced:
        probs = probs.sum(axis=traced)
    return np.asarray(probs).reshape(-1)


def sv_distribution(circuit: Circuit, max_qubits: int = DEFAULT_MAX_QUBITS) -> Distribution:
    """Exact outcome distribution over the measured qubits."""
    probs = _measured_probabilities(circuit, max_qubits)
    return Distribution.from_dense(probs, len(circuit.measured), prune=PRUNE_TOL)


def sv_sample(
    circuit: Circuit, shots: int, rng: np.random.Generator, max_qubits: int = DEFAULT_MAX_QUBITS
) -> Distribution:
    """Empirical distribution from ``shots`` multinomial draws."""
    if shots < 1:
        raise ValueError("shots must be positive")
    probs = _measured_probabilities(circuit, max_qubits)
    probs = np.clip(probs, 0.0, None)
    counts = rng.multinomial(shots, probs / probs.sum())
    idx = np.flatnonzero(counts)
    return Distribution(len(circuit.measured), dict(zip(idx.tolist(), (counts[idx] / shots).tolist())))
