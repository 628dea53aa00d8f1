import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cliffcut.circuit import Circuit, Gate, GateKind, count_non_clifford, inject_t_gates, random_circuit
from cliffcut.cutter import (
    CIRCUIT,
    QUANTUM,
    CutPoint,
    FragmentGraph,
    cost_guard,
    cut_circuit,
    find_cuts,
    fragment,
)
from cliffcut.distribution import total_variation
from cliffcut.pipeline import simulate
from cliffcut.statevector import sv_distribution

G = GateKind


def g(kind, *qubits):
    return Gate(kind, qubits)


def test_clifford_has_no_cuts():
    c = random_circuit(4, 4, np.random.default_rng(0))
    assert find_cuts(c) == []
    graph = cut_circuit(c)
    assert len(graph.fragments) == 1 and graph.k == 0
    assert graph.fragments[0].circuit.gates == c.gates


def test_interior_t_two_cuts():
    c = Circuit(1, (g(G.H, 0), g(G.T, 0), g(G.H, 0))).measure_all()
    assert find_cuts(c) == [CutPoint(0, 1), CutPoint(0, 2)]


def test_t_first_or_last_on_wire():
    last = Circuit(2, (g(G.H, 0), g(G.CX, 0, 1), g(G.T, 1))).measure_all()
    assert len(find_cuts(last)) == 1
    first = Circuit(2, (g(G.T, 0), g(G.CX, 0, 1))).measure_all()
    assert len(find_cuts(first)) == 1


def test_t_last_reconstructs_exactly():
    c = Circuit(2, (g(G.H, 0), g(G.CX, 0, 1), g(G.H, 1), g(G.T, 1))).measure_all()
    graph = cut_circuit(c)
    assert graph.k == 1
    r = simulate(c)
    assert total_variation(r.distribution, sv_distribution(c)) < 1e-9


def test_adjacent_non_cliffords_share_a_run():
    c = Circuit(1, (g(G.H, 0), g(G.T, 0), g(G.T, 0), g(G.H, 0))).measure_all()
    graph = cut_circuit(c)
    assert graph.k == 2
    assert sum(not f.is_clifford for f in graph.fragments) == 1


def test_three_fragment_layout():
    # Clifford block, isolated T, Clifford block
    c = Circuit(3, (g(G.H, 0), g(G.CX, 0, 1), g(G.T, 1), g(G.CX, 1, 2))).measure_all()
    graph = cut_circuit(c)
    assert len(graph.fragments) == 3
    assert sorted(f.is_clifford for f in graph.fragments) == [False, True, True]
    t_frag = next(f for f in graph.fragments if not f.is_clifford)
    assert t_frag.circuit.n_qubits == 1
    assert t_frag.inputs == (QUANTUM,) and t_frag.outputs == (QUANTUM,)


def test_manual_cut_partition():
    c = Circuit(2, (g(G.H, 0), g(G.CX, 0, 1))).measure_all()
    graph = fragment(c, [CutPoint(0, 1)])
    up, down = graph.fragments
    assert [x.kind for x in up.circuit.gates] == [G.H]
    assert up.outputs == (QUANTUM,) and up.n_circuit_outputs == 0
    assert [x.kind for x in down.circuit.gates] == [G.CX]
    assert QUANTUM in down.inputs and down.n_circuit_outputs == 2
    assert set(down.outputs) == {CIRCUIT}
    assert graph.k == 1 and graph.cuts[0].upstream[0] == up.index


def test_unmeasured_wire_output_tag():
    c = Circuit(2, (g(G.H, 0), g(G.T, 0), g(G.CX, 0, 1)), frozenset({1}))
    r = simulate(c)
    assert total_variation(r.distribution, sv_distribution(c)) < 1e-9


def test_cost_guard_values():
    assert cost_guard(cut_circuit(Circuit(1).measure_all())).terms == 1
    two = cut_circuit(Circuit(1, (g(G.H, 0), g(G.T, 0), g(G.H, 0))).measure_all())
    est = cost_guard(two)
    assert est.ok and est.k == 2 and est.terms == 16


def test_cost_guard_refuses_eleven_cuts():
    gates = []
    for q in range(6):
        gates += [g(G.H, q), g(G.T, q), g(G.H, q)]
    c = Circuit(6, tuple(gates[:-1])).measure_all()  # last T is final on its wire
    graph = cut_circuit(c)
    assert graph.k == 11
    est = cost_guard(graph, 10)
    assert not est.ok
    assert est.terms == 4_194_304
    assert "4194304" in est.describe()
    assert len(est.variants) == len(graph.fragments)


def test_json_round_trip():
    c = Circuit(3, (g(G.H, 0), g(G.CX, 0, 1), g(G.T, 1), g(G.CX, 1, 2))).measure_all()
    graph = cut_circuit(c)
    again = FragmentGraph.from_json(graph.to_json())
    assert again == graph


def _splice(graph: FragmentGraph) -> list[Gate]:
    """Map each fragment's gates back to global qubits, in original order."""
    placed = []
    for f in graph.fragments:
        for gi, gate in zip(f.gate_indices, f.circuit.gates):
            placed.append((gi, Gate(gate.kind, tuple(f.qubit_map[q] for q in gate.qubits), gate.angle)))
    return [gate for _, gate in sorted(placed, key=lambda p: p[0])]


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 7), st.integers(0, 6), st.integers(0, 4), st.integers(0, 2**32 - 1))
def test_cut_properties(n, depth, t, seed):
    rng = np.random.default_rng(seed)
    c = inject_t_gates(random_circuit(n, depth, rng), t, rng)
    graph = cut_circuit(c)
    assert graph.k <= 2 * count_non_clifford(c)
    assert _splice(graph) == list(c.gates)
    for f in graph.fragments:
        if any(x.kind is G.T for x in f.circuit.gates):
            assert not f.is_clifford
            assert all(x.kind is G.T for x in f.circuit.gates)
            assert f.circuit.n_qubits == 1
    graph.validate()
