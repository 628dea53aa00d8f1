"""Benchmark circuit families, fidelity metrics and the sweep runner."""
from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import asdict, dataclass

import numpy as np

from .circuit import Circuit, Gate, GateKind, inject_t_gates
from .distribution import Distribution
from .pipeline import CostGuardRefused, simulate
from .statevector import WidthLimitError, sv_distribution
from .variants import EXACT, DeadlineExceeded, substream

HWEA = "hwea"
QAOA = "qaoa"
REPETITION = "rep"
FAMILIES = (HWEA, QAOA, REPETITION)

MARGINAL = "marginal"
FULL = "full"

DEFAULT_TIMEOUT_S = 1800.0
DEFAULT_ORACLE_LIMIT = 20
NORM_TOL = 1e-6

CSV_FIELDS = ("family", "n", "rounds", "t_count", "seed", "mode", "shots", "runtime_s", "fidelity", "k", "terms")

_HALF_PI = math.pi / 2


# -- generators ----------------------------------------------------------------------


def _rotation_layer(n: int, rng: np.random.Generator) -> list[Gate]:
    axes = rng.integers(0, 2, size=n)
    turns = rng.integers(0, 4, size=n)
    kinds = (GateKind.RZ, GateKind.RX)
    return [Gate(kinds[a], (q,), float(k) * _HALF_PI) for q, (a, k) in enumerate(zip(axes, turns))]


def gen_hwea(n: int, rounds: int, rng: np.random.Generator) -> Circuit:
    """Hardware-efficient ansatz with quarter-turn rotations and CX ladders."""
    if n < 2 or rounds < 1:
        raise ValueError(f"hwea needs n >= 2 and rounds >= 1, got n={n}, rounds={rounds}")
    gates: list[Gate] = []
    for _ in range(rounds):
        gates.extend(_rotation_layer(n, rng))
        gates.extend(Gate(GateKind.CX, (i, i + 1)) for i in range(n - 1))
    gates.extend(_rotation_layer(n, rng))
    return Circuit(n, tuple(gates)).measure_all()


def gen_qaoa_sk(n: int, rounds: int, rng: np.random.Generator) -> Circuit:
    """QAOA for MaxCut on a complete graph with random +-1 weights.

    Angles are nonzero quarter turns so the circuit stays Clifford.
    """
    if n < 2 or rounds < 1:
        raise ValueError(f"qaoa needs n >= 2 and rounds >= 1, got n={n}, rounds={rounds}")
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    weights = rng.choice((-1, 1), size=len(pairs))
    gates = [Gate(GateKind.H, (q,)) for q in range(n)]
    for _ in range(rounds):
        gamma = int(rng.integers(1, 4)) * _HALF_PI
        beta = int(rng.integers(1, 4)) * _HALF_PI
        for (i, j), w in zip(pairs, weights):
            gates.append(Gate(GateKind.CX, (i, j)))
            gates.append(Gate(GateKind.RZ, (j,), gamma * int(w)))
            gates.append(Gate(GateKind.CX, (i, j)))
        gates.extend(Gate(GateKind.RX, (q,), beta) for q in range(n))
    return Circuit(n, tuple(gates)).measure_all()


def data_qubit(i: int) -> int:
    return 2 * i


def ancilla_qubit(j: int) -> int:
    return 2 * j + 1


def gen_phase_repetition(n_data: int, z_error: int | None = None) -> Circuit:
    """One round of a phase-flip repetition code.

    Data qubit ``i`` sits on wire ``2i`` and ancilla ``j`` on wire ``2j+1``.
    ``z_error`` optionally applies Z to that data qubit before the checks.
    Only ancillas are measured.
    """
    if n_data < 2:
        raise ValueError(f"repetition code needs at least 2 data qubits, got {n_data}")
    if z_error is not None and not 0 <= z_error < n_data:
        raise ValueError(f"z_error {z_error} is not a data qubit index")
    n = 2 * n_data - 1
    gates = [Gate(GateKind.H, (data_qubit(i),)) for i in range(n_data)]
    if z_error is not None:
        gates.append(Gate(GateKind.Z, (data_qubit(z_error),)))
    for j in range(n_data - 1):
        a = ancilla_qubit(j)
        for d in (data_qubit(j), data_qubit(j + 1)):
            gates += [Gate(GateKind.H, (d,)), Gate(GateKind.CX, (d, a)), Gate(GateKind.H, (d,))]
    ancillas = frozenset(ancilla_qubit(j) for j in range(n_data - 1))
    return Circuit(n, tuple(gates), ancillas)


def generate(family: str, n: int, rounds: int, rng: np.random.Generator, z_error: int | None = None) -> Circuit:
    """Clifford base circuit; for the repetition code ``n`` counts data qubits."""
    if family == HWEA:
        return gen_hwea(n, rounds, rng)
    if family == QAOA:
        return gen_qaoa_sk(n, rounds, rng)
    if family == REPETITION:
        return gen_phase_repetition(n, z_error)
    raise ValueError(f"unknown family {family!r}; expected one of {FAMILIES}")


# -- fidelity ------------------------------------------------------------------------


def _check_pair(p: Distribution, q: Distribution) -> None:
    if p.n_bits != q.n_bits:
        raise ValueError(f"width mismatch: {p.n_bits} vs {q.n_bits} bits")
    for name, d in (("p", p), ("q", q)):
        if not d.is_normalized(NORM_TOL):
            raise ValueError(f"{name} is not a normalized distribution (total {d.total():.9g})")


def hellinger_fidelity(p: Distribution, q: Distribution) -> float:
    """(sum_i sqrt(p_i q_i))**2 over the joint distribution."""
    _check_pair(p, q)
    bc = math.fsum(math.sqrt(max(v, 0.0) * max(q[k], 0.0)) for k, v in p.items())
    return min(1.0, bc * bc)


def hellinger_fidelity_marginal(p: Distribution, q: Distribution) -> float:
    """Mean of per-bit Hellinger fidelities of the single-bit marginals."""
    _check_pair(p, q)
    if p.n_bits == 0:
        return 1.0
    mp = np.clip(p.qubit_marginals(), 0.0, None)
    mq = np.clip(q.qubit_marginals(), 0.0, None)
    per_bit = np.sqrt(mp * mq).sum(axis=1) ** 2
    return float(min(1.0, per_bit.mean()))


def fidelity_rule_for(family: str) -> str:
    # dense outputs are compared bit by bit, the sparse syndrome distribution as a whole
    return FULL if family == REPETITION else MARGINAL


def fidelity(p: Distribution, q: Distribution, rule: str) -> float:
    if rule == MARGINAL:
        return hellinger_fidelity_marginal(p, q)
    if rule == FULL:
        return hellinger_fidelity(p, q)
    raise ValueError(f"unknown fidelity rule {rule!r}")


# -- suite ---------------------------------------------------------------------------


@dataclass
class BenchmarkRecord:
    family: str
    n_qubits: int
    rounds: int
    t_count: int
    seed: int
    mode: str
    shots: int | None
    runtime_seconds: float | None
    fidelity: float | None = None
    k: int | None = None
    term_count: int | None = None
    status: str = "ok"
    repeats: int = 1

    def __post_init__(self):
        if self.fidelity is not None and not -1e-12 <= self.fidelity <= 1 + 1e-12:
            raise ValueError(f"fidelity {self.fidelity} outside [0, 1]")
        if self.runtime_seconds is not None and self.runtime_seconds < 0:
            raise ValueError("runtime must be non-negative")

    def csv_row(self, runtime: bool = True) -> dict:
        def fmt(v):
            if v is None:
                return ""
            return repr(v) if isinstance(v, float) else str(v)

        return {
            "family": self.family,
            "n": self.n_qubits,
            "rounds": self.rounds,
            "t_count": self.t_count,
            "seed": self.seed,
            "mode": self.mode,
            "shots": fmt(self.shots),
            "runtime_s": fmt(self.runtime_seconds) if runtime else "",
            "fidelity": fmt(self.fidelity),
            "k": fmt(self.k),
            "terms": fmt(self.term_count),
        }


@dataclass
class SuiteConfig:
    families: tuple[str, ...] = (HWEA,)
    sizes: tuple[int, ...] = (4,)
    rounds: int = 5
    t_count: int = 1
    repeats: int = 5
    mode: str = EXACT
    shots: int = 5000
    seed: int = 0
    timeout_s: float | None = DEFAULT_TIMEOUT_S
    oracle_limit: int = DEFAULT_ORACLE_LIMIT
    k_max: int = 10
    workers: int = 1
    fidelity_rule: str | None = None  # None: per-family default
    aggregate: bool = True

    def __post_init__(self):
        for fam in self.families:
            if fam not in FAMILIES:
                raise ValueError(f"unknown family {fam!r}")
        if self.repeats < 1:
            raise ValueError("repeats must be at least 1")
        if self.t_count < 0:
            raise ValueError("t_count must be non-negative")


def build_point(family: str, n: int, rounds: int, t_count: int, seed: int, z_error: int | None = None) -> Circuit:
    """Seeded base circuit plus injected T gates; each stage has its own stream."""
    base = generate(family, n, rounds, substream(seed, "generator", n, rounds), z_error)
    return inject_t_gates(base, t_count, substream(seed, "injection", n, rounds))


def run_point(config: SuiteConfig, family: str, n: int, seed: int) -> BenchmarkRecord:
    """Run one circuit through the pipeline; failures are recorded, not raised."""
    circuit = build_point(family, n, config.rounds, config.t_count, seed)
    record = BenchmarkRecord(
        family, circuit.n_qubits, config.rounds, config.t_count, seed, config.mode,
        config.shots if config.mode != EXACT else None, None,
    )
    start = time.monotonic()
    deadline = None if config.timeout_s is None else start + config.timeout_s
    try:
        result = simulate(
            circuit, mode=config.mode, shots=config.shots, seed=seed, k_max=config.k_max,
            workers=config.workers, deadline=deadline,
        )
    except DeadlineExceeded:
        record.status = "timeout"
        return record
    except CostGuardRefused as exc:
        record.status = "guard"
        record.k = exc.estimate.k
        return record
    except (ValueError, RuntimeError, MemoryError) as exc:
        record.status = f"error: {type(exc).__name__}"
        return record
    record.runtime_seconds = time.monotonic() - start
    record.k = result.metadata["k"]
    record.term_count = result.metadata["term_count"]
    if circuit.n_qubits <= config.oracle_limit:
        try:
            oracle = sv_distribution(circuit, max_qubits=config.oracle_limit)
        except WidthLimitError:
            return record
        rule = config.fidelity_rule or fidelity_rule_for(family)
        record.fidelity = fidelity(result.distribution, oracle, rule)
    return record


def _mean(values):
    values = [v for v in values if v is not None]
    return math.fsum(values) / len(values) if values else None


def _same_or(records, name, combine):
    values = [getattr(r, name) for r in records if getattr(r, name) is not None]
    if not values:
        return None
    return values[0] if len(set(values)) == 1 else combine(values)


def aggregate(records: list[BenchmarkRecord], seed: int) -> BenchmarkRecord:
    """Average repeats of one configuration point."""
    first = records[0]
    ok = [r for r in records if r.status == "ok"]
    failures = [r.status for r in records if r.status != "ok"]
    return BenchmarkRecord(
        first.family, first.n_qubits, first.rounds, first.t_count, seed, first.mode, first.shots,
        _mean(r.runtime_seconds for r in ok),
        _mean(r.fidelity for r in ok),
        _same_or(records, "k", max),
        _same_or(ok, "term_count", _mean),
        "ok" if not failures else failures[0],
        len(records),
    )


def run_suite(config: SuiteConfig, progress=None) -> list[BenchmarkRecord]:
    """Sweep families x sizes, ``config.repeats`` seeded circuits per point."""
    out: list[BenchmarkRecord] = []
    for fam_index, family in enumerate(config.families):
        for n in config.sizes:
            repeats = []
            for rep in range(config.repeats):
                seed = int(substream(config.seed, "suite", fam_index, n, rep).integers(0, 2**31 - 1))
                record = run_point(config, family, n, seed)
                if progress is not None:
                    progress(record)
                repeats.append(record)
            if config.aggregate:
                out.append(aggregate(repeats, config.seed))
            else:
                out.extend(repeats)
    return out


def records_to_csv(records: list[BenchmarkRecord], runtime: bool = True) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    writer.writeheader()
    for r in records:
        writer.writerow(r.csv_row(runtime))
    return buf.getvalue()


def records_to_json(records: list[BenchmarkRecord], runtime: bool = True) -> str:
    rows = []
    for r in records:
        row = asdict(r)
        if not runtime:
            row["runtime_seconds"] = None
        rows.append(row)
    return json.dumps(rows, indent=2, sort_keys=True)
