"""Fragment variants: state preparations on quantum inputs and measurement
bases on quantum outputs, evaluated on the cheapest adequate backend."""
from __future__ import annotations

import itertools
import time
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .circuit import Circuit, Gate, GateKind
from .cutter import Fragment
from .distribution import Distribution
from .stabilizer import (
    DEFAULT_SUPPORT_CAP,
    SupportTooLarge,
    Tableau,
    exact_distribution,
    run_tableau,
    sample_counts,
    tableau_distribution,
    tableau_sample,
)
from .statevector import DEFAULT_MAX_QUBITS, sv_distribution, sv_sample

EXACT = "exact"
SAMPLED = "sampled"
MODES = (EXACT, SAMPLED)


class PrepState(str, Enum):
    ZERO = "0"
    ONE = "1"
    PLUS = "+"
    PLUS_I = "+i"


class MeasBasis(str, Enum):
    X = "X"
    Y = "Y"
    Z = "Z"


PREP_ORDER = (PrepState.ZERO, PrepState.ONE, PrepState.PLUS, PrepState.PLUS_I)
BASIS_ORDER = (MeasBasis.X, MeasBasis.Y, MeasBasis.Z)

_PREP_GATES = {
    PrepState.ZERO: (),
    PrepState.ONE: (GateKind.X,),
    PrepState.PLUS: (GateKind.H,),
    PrepState.PLUS_I: (GateKind.H, GateKind.S),
}
_BASIS_GATES = {
    MeasBasis.X: (GateKind.H,),
    MeasBasis.Y: (GateKind.SDG, GateKind.H),
    MeasBasis.Z: (),
}


class DeadlineExceeded(TimeoutError):
    pass


def check_deadline(deadline: float | None) -> None:
    if deadline is not None and time.monotonic() > deadline:
        raise DeadlineExceeded("wall-clock budget exhausted")


def substream(seed: int, name: str, *keys: int) -> np.random.Generator:
    """Independent generator for a named stage, keyed by integers."""
    entropy = [int(seed) & 0xFFFFFFFF, zlib.crc32(name.encode())] + [int(k) for k in keys]
    return np.random.default_rng(np.random.SeedSequence(entropy))


@dataclass(frozen=True)
class VariantSpec:
    preps: tuple[PrepState, ...] = ()
    bases: tuple[MeasBasis, ...] = ()

    def label(self) -> str:
        return ",".join(p.value for p in self.preps) + "|" + ",".join(b.value for b in self.bases)


@dataclass(frozen=True)
class VariantResult:
    spec: VariantSpec
    dist: Distribution  # circuit-output bits, then quantum-output bits in cut order
    mode: str
    shots: int | None = None
    backend: str = ""

    def to_dict(self) -> dict:
        return {
            "spec": {"preps": [p.value for p in self.spec.preps], "bases": [b.value for b in self.spec.bases]},
            "mode": self.mode,
            "shots": self.shots,
            "backend": self.backend,
            "distribution": self.dist.to_bitstrings(),
        }


def enumerate_variants(frag: Fragment) -> list[VariantSpec]:
    """All 4**q_in * 3**q_out variant specs in lexicographic order."""
    q_in, q_out = len(frag.in_legs), len(frag.out_legs)
    return [
        VariantSpec(tuple(combo[:q_in]), tuple(combo[q_in:]))
        for combo in itertools.product(*([PREP_ORDER] * q_in + [BASIS_ORDER] * q_out))
    ]


def build_variant_circuit(frag: Fragment, spec: VariantSpec) -> Circuit:
    if len(spec.preps) != len(frag.in_legs) or len(spec.bases) != len(frag.out_legs):
        raise ValueError(
            f"spec has {len(spec.preps)} preps/{len(spec.bases)} bases, fragment {frag.index} "
            f"has {len(frag.in_legs)} quantum inputs/{len(frag.out_legs)} quantum outputs"
        )
    gates: list[Gate] = []
    for (_, loc), prep in zip(frag.in_legs, spec.preps):
        gates.extend(Gate(k, (loc,)) for k in _PREP_GATES[PrepState(prep)])
    gates.extend(frag.circuit.gates)
    for (_, loc), basis in zip(frag.out_legs, spec.bases):
        gates.extend(Gate(k, (loc,)) for k in _BASIS_GATES[MeasBasis(basis)])
    measured = frag.circuit.measured | {loc for _, loc in frag.out_legs}
    return Circuit(frag.circuit.n_qubits, tuple(gates), measured)


def _check_layout(frag: Fragment) -> None:
    # quantum outputs must follow the circuit outputs in local numbering, in cut order
    n_co = frag.n_circuit_outputs
    locs = [loc for _, loc in frag.out_legs]
    if sorted(frag.circuit.measured) != list(range(n_co)) or locs != list(range(n_co, n_co + len(locs))):
        raise ValueError(f"fragment {frag.index} does not use the circuit-outputs-first layout")


def evaluate_variant(
    circuit: Circuit,
    mode: str = EXACT,
    shots: int = 5000,
    rng: np.random.Generator | None = None,
    *,
    spec: VariantSpec | None = None,
    support_cap: int = DEFAULT_SUPPORT_CAP,
    max_qubits: int = DEFAULT_MAX_QUBITS,
) -> VariantResult:
    """Clifford circuits go to the tableau engine, the rest to the statevector engine."""
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    if rng is None:
        rng = np.random.default_rng(0)
    spec = spec if spec is not None else VariantSpec()
    if circuit.is_clifford:
        if mode == EXACT:
            try:
                return VariantResult(spec, exact_distribution(circuit, support_cap), EXACT, None, "stabilizer")
            except SupportTooLarge:
                pass
        return VariantResult(spec, sample_counts(circuit, shots, rng), SAMPLED, shots, "stabilizer")
    if mode == EXACT:
        return VariantResult(spec, sv_distribution(circuit, max_qubits), EXACT, None, "statevector")
    return VariantResult(spec, sv_sample(circuit, shots, rng, max_qubits), SAMPLED, shots, "statevector")


def evaluate_fragment(
    frag: Fragment,
    mode: str = EXACT,
    shots: int = 5000,
    seed: int = 0,
    *,
    workers: int = 1,
    support_cap: int = DEFAULT_SUPPORT_CAP,
    max_qubits: int = DEFAULT_MAX_QUBITS,
    deadline: float | None = None,
) -> list[VariantResult]:
    """Evaluate every variant of ``frag``; results follow ``enumerate_variants`` order.

    Each variant draws from its own stream keyed by (seed, fragment, variant),
    so results do not depend on ``workers`` or scheduling.
    """
    _check_layout(frag)
    specs = enumerate_variants(frag)
    if frag.is_clifford:
        # variants sharing a preparation share the tableau up to the basis change
        per_prep = 3 ** len(frag.out_legs)
        groups = [range(g * per_prep, (g + 1) * per_prep) for g in range(len(specs) // per_prep)]

        def run_group(idx: range) -> list[VariantResult]:
            check_deadline(deadline)
            return _clifford_group(frag, specs, idx, mode, shots, seed, support_cap)

        if workers > 1 and len(groups) > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                chunks = list(pool.map(run_group, groups))
        else:
            chunks = [run_group(g) for g in groups]
        return [r for chunk in chunks for r in chunk]

    def run(i: int) -> VariantResult:
        check_deadline(deadline)
        circuit = build_variant_circuit(frag, specs[i])
        rng = substream(seed, "variants", frag.index, i)
        return evaluate_variant(
            circuit, mode, shots, rng, spec=specs[i], support_cap=support_cap, max_qubits=max_qubits
        )

    if workers > 1 and len(specs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(run, range(len(specs))))
    return [run(i) for i in range(len(specs))]


def _clifford_group(
    frag: Fragment, specs: list[VariantSpec], idx: range, mode: str, shots: int, seed: int, support_cap: int
) -> list[VariantResult]:
    """Tableau evaluation of variants that share their input preparations."""
    first = specs[idx[0]]
    prefix = build_variant_circuit(frag, VariantSpec(first.preps, (MeasBasis.Z,) * len(first.bases)))
    base = run_tableau(prefix)
    qubits = prefix.measured_order
    out = []
    for i in idx:
        spec = specs[i]
        t = base.copy()
        for (_, loc), basis in zip(frag.out_legs, spec.bases):
            for kind in _BASIS_GATES[basis]:
                Tableau._DISPATCH[kind](t, loc)
        if mode == EXACT:
            try:
                out.append(VariantResult(spec, tableau_distribution(t, qubits, support_cap), EXACT, None, "stabilizer"))
                continue
            except SupportTooLarge:
                pass
        rng = substream(seed, "variants", frag.index, i)
        out.append(VariantResult(spec, tableau_sample(t, qubits, shots, rng), SAMPLED, shots, "stabilizer"))
    return out


def shot_budget(results: list[VariantResult]) -> int:
    return sum(r.shots or 0 for r in results)
