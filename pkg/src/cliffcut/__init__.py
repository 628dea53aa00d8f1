"""Near-Clifford circuit simulation by cutting wires around non-Clifford gates."""
from .benchmarks import (
    BenchmarkRecord,
    SuiteConfig,
    gen_hwea,
    gen_phase_repetition,
    gen_qaoa_sk,
    hellinger_fidelity,
    hellinger_fidelity_marginal,
    run_suite,
)
from .circuit import Circuit, Gate, GateKind, classify_gate, inject_t_gates, random_circuit
from .cutter import CutPoint, Fragment, FragmentGraph, cost_guard, cut_circuit, find_cuts, fragment
from .distribution import Distribution, total_variation
from .pipeline import CostGuardRefused, SimulationResult, simulate, simulate_graph
from .qasm import QasmError, emit_circuit, load_circuit, parse_circuit
from .recombine import build_tensor, contract, correct_tensor, finalize, strong_probability
from .stabilizer import Tableau, exact_distribution, sample_counts
from .statevector import Statevector, sv_distribution, sv_sample
from .variants import enumerate_variants, evaluate_fragment, evaluate_variant

__version__ = "0.1.0"

__all__ = [
    "BenchmarkRecord", "Circuit", "CostGuardRefused", "CutPoint", "Distribution", "Fragment",
    "FragmentGraph", "Gate", "GateKind", "QasmError", "SimulationResult", "Statevector",
    "SuiteConfig", "Tableau", "build_tensor", "classify_gate", "contract", "correct_tensor",
    "cost_guard", "cut_circuit", "emit_circuit", "enumerate_variants", "evaluate_fragment",
    "evaluate_variant", "exact_distribution", "finalize", "find_cuts", "fragment", "gen_hwea",
    "gen_phase_repetition", "gen_qaoa_sk", "hellinger_fidelity", "hellinger_fidelity_marginal",
    "inject_t_gates", "load_circuit", "parse_circuit", "random_circuit", "run_suite",
    "sample_counts", "simulate", "simulate_graph", "strong_probability", "sv_distribution",
    "sv_sample", "total_variation",
]
