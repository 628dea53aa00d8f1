import math

import numpy as np
import pytest

from cliffcut.circuit import Circuit, Gate, GateKind, random_circuit
from cliffcut.statevector import (
    Statevector,
    WidthLimitError,
    gate_matrix,
    run_statevector,
    sv_distribution,
    sv_sample,
)

G = GateKind
S2 = 1 / math.sqrt(2)


def _dense_reference(circuit: Circuit) -> np.ndarray:
    """Independent oracle: full 2**n x 2**n matrices via Kronecker products (qubit 0 leftmost)."""
    n = circuit.n_qubits
    state = np.zeros(1 << n, dtype=complex)
    state[0] = 1
    eye = np.eye(2)
    p0, p1 = np.diag([1, 0]), np.diag([0, 1])
    for g in circuit.gates:
        if g.kind.arity == 1:
            ops = [eye] * n
            ops[g.qubits[0]] = gate_matrix(g)
            full = ops[0]
            for o in ops[1:]:
                full = np.kron(full, o)
        else:
            a, b = g.qubits
            if g.kind is G.SWAP:
                full = np.zeros((1 << n, 1 << n))
                for i in range(1 << n):
                    bits = [(i >> (n - 1 - q)) & 1 for q in range(n)]
                    bits[a], bits[b] = bits[b], bits[a]
                    j = sum(bit << (n - 1 - q) for q, bit in enumerate(bits))
                    full[j, i] = 1
            else:
                target = gate_matrix(Gate(G.X if g.kind is G.CX else G.Z, (0,)))
                branch0 = [eye] * n
                branch1 = [eye] * n
                branch0[a], branch1[a], branch1[b] = p0, p1, target
                k0, k1 = branch0[0], branch1[0]
                for o0, o1 in zip(branch0[1:], branch1[1:]):
                    k0, k1 = np.kron(k0, o0), np.kron(k1, o1)
                full = k0 + k1
        state = full @ state
    return state


def test_h_amplitudes():
    s = run_statevector(Circuit(1, (Gate(G.H, (0,)),)))
    np.testing.assert_allclose(s.amps, [S2, S2])


def test_t_on_plus():
    s = run_statevector(Circuit(1, (Gate(G.H, (0,)), Gate(G.T, (0,)))))
    np.testing.assert_allclose(s.amps, [S2, np.exp(1j * math.pi / 4) * S2])


def test_x_flips():
    s = run_statevector(Circuit(1, (Gate(G.X, (0,)),)))
    np.testing.assert_allclose(s.amps, [0, 1])


def test_bell_distribution():
    c = Circuit(2, (Gate(G.H, (0,)), Gate(G.CX, (0, 1)))).measure_all()
    assert sv_distribution(c).to_bitstrings() == pytest.approx({"00": 0.5, "11": 0.5})


def test_hth():
    c = Circuit(1, (Gate(G.H, (0,)), Gate(G.T, (0,)), Gate(G.H, (0,)))).measure_all()
    d = sv_distribution(c)
    assert d[0] == pytest.approx(math.cos(math.pi / 8) ** 2, abs=1e-12)
    assert d[1] == pytest.approx(math.sin(math.pi / 8) ** 2, abs=1e-12)
    assert d[0] == pytest.approx(0.8536, abs=1e-4)


def test_width_limit():
    with pytest.raises(WidthLimitError):
        run_statevector(Circuit(27))


@pytest.mark.parametrize("seed", range(6))
def test_matches_kronecker_oracle(seed):
    rng = np.random.default_rng(seed)
    c = random_circuit(4, 4, rng, clifford_only=False)
    extra = (Gate(G.RY, (1,), 0.37), Gate(G.CZ, (0, 3)), Gate(G.SWAP, (2, 0)), Gate(G.RX, (3,), 1.1))
    c = c.with_gates(c.gates + extra)
    state = run_statevector(c)
    np.testing.assert_allclose(state.amps, _dense_reference(c), atol=1e-12)
    assert state.norm() == pytest.approx(1.0)


def test_partial_measurement_marginalizes():
    c = Circuit(3, (Gate(G.H, (0,)), Gate(G.CX, (0, 2)), Gate(G.X, (1,))), frozenset({1, 2}))
    assert sv_distribution(c).to_bitstrings() == pytest.approx({"10": 0.5, "11": 0.5})


def test_sampling_point_mass_and_bell():
    point = Circuit(1, (Gate(G.X, (0,)),)).measure_all()
    assert sv_sample(point, 100, np.random.default_rng(0)).to_bitstrings() == {"1": 1.0}
    bell = Circuit(2, (Gate(G.H, (0,)), Gate(G.CX, (0, 1)))).measure_all()
    d = sv_sample(bell, 5000, np.random.default_rng(1))
    assert set(d.to_bitstrings()) <= {"00", "11"}
    assert 0.45 <= d[0] <= 0.55
    assert d == sv_sample(bell, 5000, np.random.default_rng(1))


def test_statevector_rejects_bad_size():
    with pytest.raises(ValueError):
        Statevector(0)
