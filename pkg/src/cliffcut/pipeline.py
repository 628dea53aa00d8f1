"""End-to-end simulation: cut, evaluate fragment variants, recombine."""
from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

from .circuit import Circuit
from .cutter import DEFAULT_K_MAX, CostEstimate, FragmentGraph, cost_guard, cut_circuit
from .distribution import Distribution
from .recombine import CORRECTION_NAME, FragmentTensor, build_tensor, contract, correct_tensor, finalize
from .stabilizer import DEFAULT_SUPPORT_CAP
from .statevector import DEFAULT_MAX_QUBITS
from .variants import EXACT, MODES, SAMPLED, evaluate_fragment, shot_budget


class CostGuardRefused(RuntimeError):
    def __init__(self, estimate: CostEstimate):
        super().__init__(estimate.describe())
        self.estimate = estimate


@dataclass
class SimulationResult:
    distribution: Distribution
    quasi: Distribution
    graph: FragmentGraph
    tensors: list[FragmentTensor]
    metadata: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"distribution": self.distribution.to_bitstrings(), "metadata": self.metadata}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def simulate_graph(
    graph: FragmentGraph,
    *,
    mode: str = EXACT,
    shots: int = 5000,
    seed: int = 0,
    k_max: int = DEFAULT_K_MAX,
    workers: int = 1,
    support_cap: int = DEFAULT_SUPPORT_CAP,
    max_qubits: int = DEFAULT_MAX_QUBITS,
    deadline: float | None = None,
    correct: bool = True,
) -> SimulationResult:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    if mode == SAMPLED and shots < 1:
        raise ValueError("sampled mode needs shots >= 1")
    estimate = cost_guard(graph, k_max)
    if not estimate.ok:
        raise CostGuardRefused(estimate)

    tensors: list[FragmentTensor] = []
    total_shots = 0
    fragment_modes = []
    for frag in graph.fragments:
        results = evaluate_fragment(
            frag, mode, shots, seed, workers=workers, support_cap=support_cap,
            max_qubits=max_qubits, deadline=deadline,
        )
        total_shots += shot_budget(results)
        used = SAMPLED if any(r.mode == SAMPLED for r in results) else EXACT
        fragment_modes.append(used)
        tensor = build_tensor(results, frag)
        if correct:
            tensor = correct_tensor(tensor, used)
        tensors.append(tensor)

    contraction = contract(graph, tensors, workers=workers, deadline=deadline)
    final = finalize(contraction.quasi)
    any_sampled = SAMPLED in fragment_modes
    metadata = {
        "k": graph.k,
        "term_count": contraction.term_count,
        "nonzero_terms": contraction.nonzero_terms,
        "negativity_mass": final.negativity,
        "mode": mode,
        "shots": shots if any_sampled else None,
        "total_shots": total_shots,
        "seed": seed,
        "n_qubits": graph.n_qubits,
        "measured": graph.measured_order,
        "n_fragments": len(graph.fragments),
        "fragments": [
            {
                "index": f.index,
                "n_qubits": f.circuit.n_qubits,
                "n_gates": len(f.circuit.gates),
                "is_clifford": f.is_clifford,
                "variants": f.n_variants,
                "mode": m,
            }
            for f, m in zip(graph.fragments, fragment_modes)
        ],
        "correction": CORRECTION_NAME if any_sampled and correct else "none",
    }
    return SimulationResult(final.dist, contraction.quasi, graph, tensors, metadata)


def simulate(circuit: Circuit, **kwargs) -> SimulationResult:
    """Cut ``circuit`` around its non-Clifford gates and reconstruct its output distribution."""
    return simulate_graph(cut_circuit(circuit), **kwargs)


def timed_simulate(circuit: Circuit, timeout_s: float | None = None, **kwargs) -> tuple[SimulationResult, float]:
    start = time.monotonic()
    deadline = None if timeout_s is None else start + timeout_s
    result = simulate(circuit, deadline=deadline, **kwargs)
    return result, time.monotonic() - start
