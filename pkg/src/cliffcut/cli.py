"""Command-line front end: simulate, cut, verify and bench.

Exit codes:
  0  success
  1  verify: fidelity below threshold
  2  input could not be parsed
  3  cost guard refused (too many cuts)
  4  a non-Clifford fragment is wider than the statevector limit
  5  verify: statevector oracle infeasible for this width
  6  wall-clock timeout
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass
from pathlib import Path

from . import benchmarks as bm
from .circuit import Circuit
from .cutter import DEFAULT_K_MAX, CutError, FragmentGraph, cut_circuit
from .distribution import total_variation
from .pipeline import CostGuardRefused, simulate, simulate_graph
from .qasm import QasmError, parse_circuit
from .statevector import WidthLimitError, sv_distribution
from .variants import EXACT, MODES, SAMPLED, DeadlineExceeded

EXIT_OK = 0
EXIT_BELOW_THRESHOLD = 1
EXIT_PARSE = 2
EXIT_GUARD = 3
EXIT_WIDTH = 4
EXIT_ORACLE = 5
EXIT_TIMEOUT = 6

_GEN_DEFAULTS = {"rounds": 5, "t": 1, "repeats": 5, "step": 1}


class UsageError(ValueError):
    """Bad input or generator spec; maps to the parse exit code."""


@dataclass(frozen=True)
class GeneratorSpec:
    family: str
    sizes: tuple[int, ...]
    rounds: int
    t_count: int
    repeats: int
    z_error: int | None = None


def parse_gen(text: str) -> GeneratorSpec:
    """Parse ``family:key=value,...``; ``n`` may be a range ``lo..hi`` (with ``step``)."""
    family, _, rest = text.partition(":")
    family = family.strip().lower()
    if family not in bm.FAMILIES:
        raise UsageError(f"unknown generator family {family!r}; expected one of {bm.FAMILIES}")
    fields: dict[str, str] = {}
    for item in filter(None, (p.strip() for p in rest.split(","))):
        key, eq, value = item.partition("=")
        if not eq:
            raise UsageError(f"generator option {item!r} is not key=value")
        fields[key.strip()] = value.strip()
    unknown = set(fields) - {"n", "rounds", "t", "repeats", "step", "z"}
    if unknown:
        raise UsageError(f"unknown generator options: {sorted(unknown)}")
    if "n" not in fields:
        raise UsageError("generator spec needs n=")
    try:
        opts = {k: int(fields.get(k, v)) for k, v in _GEN_DEFAULTS.items()}
        lo, dots, hi = fields["n"].partition("..")
        sizes = tuple(range(int(lo), int(hi) + 1, opts["step"])) if dots else (int(lo),)
        z_error = int(fields["z"]) if "z" in fields else None
    except ValueError as exc:
        raise UsageError(f"bad generator spec {text!r}: {exc}") from None
    if not sizes or opts["step"] < 1:
        raise UsageError(f"empty size range in {text!r}")
    return GeneratorSpec(family, sizes, opts["rounds"], opts["t"], opts["repeats"], z_error)


def load_input(args) -> Circuit | FragmentGraph:
    """Circuit from --input (QASM or fragment-graph JSON) or from --gen."""
    if args.input:
        try:
            text = Path(args.input).read_text()
        except OSError as exc:
            raise UsageError(str(exc)) from None
        if text.lstrip().startswith("{"):
            try:
                return FragmentGraph.from_json(text)
            except (KeyError, TypeError, ValueError) as exc:
                raise UsageError(f"{args.input}: not a fragment graph: {exc}") from None
        try:
            return parse_circuit(text)
        except QasmError as exc:
            raise UsageError(f"{args.input}: {exc}") from None
    if args.gen:
        spec = parse_gen(args.gen)
        if len(spec.sizes) != 1:
            raise UsageError("a size range is only allowed for bench")
        try:
            return bm.build_point(spec.family, spec.sizes[0], spec.rounds, spec.t_count, args.seed, spec.z_error)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    raise UsageError("one of --input or --gen is required")


def _require_circuit(obj) -> Circuit:
    if isinstance(obj, FragmentGraph):
        raise UsageError("this command needs a circuit, not a fragment graph")
    return obj


def write_artifact(text: str, out: str) -> None:
    if not text.endswith("\n"):
        text += "\n"
    if out == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        Path(out).write_text(text)


def _deadline(args) -> float | None:
    return None if args.timeout_s is None else time.monotonic() + args.timeout_s


def _run(args, target):
    kwargs = dict(
        mode=args.mode, shots=args.shots, seed=args.seed, k_max=args.k_max,
        workers=args.workers, deadline=_deadline(args),
    )
    if isinstance(target, FragmentGraph):
        return simulate_graph(target, **kwargs)
    return simulate(target, **kwargs)


def cmd_simulate(args) -> int:
    result = _run(args, load_input(args))
    if args.format == "csv":
        rows = ["bitstring,probability"]
        rows += [f"{b},{p!r}" for b, p in result.distribution.to_bitstrings().items()]
        write_artifact("\n".join(rows), args.out)
    else:
        write_artifact(result.to_json(), args.out)
    return EXIT_OK


def cmd_cut(args) -> int:
    circuit = _require_circuit(load_input(args))
    graph = cut_circuit(circuit)
    write_artifact(graph.to_json(indent=2, sort_keys=True), args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    circuit = _require_circuit(load_input(args))
    if circuit.n_qubits > args.oracle_limit:
        print(
            f"oracle infeasible: {circuit.n_qubits} qubits exceeds --oracle-limit {args.oracle_limit}",
            file=sys.stderr,
        )
        return EXIT_ORACLE
    result = _run(args, circuit)
    oracle = sv_distribution(circuit, max_qubits=args.oracle_limit)
    report = {
        "n_qubits": circuit.n_qubits,
        "mode": args.mode,
        "seed": args.seed,
        "k": result.metadata["k"],
        "total_variation": total_variation(result.distribution, oracle),
        "fidelity_full": bm.hellinger_fidelity(result.distribution, oracle),
        "fidelity_marginal": bm.hellinger_fidelity_marginal(result.distribution, oracle),
        "fidelity_rule": args.fidelity_rule,
        "threshold": args.threshold,
    }
    score = report["fidelity_marginal"] if args.fidelity_rule == bm.MARGINAL else report["fidelity_full"]
    report["passed"] = score >= args.threshold
    write_artifact(json.dumps(report, indent=2, sort_keys=True), args.out)
    return EXIT_OK if report["passed"] else EXIT_BELOW_THRESHOLD


def cmd_bench(args) -> int:
    if not args.gen:
        raise UsageError("bench needs --gen, e.g. hwea:n=2..12,rounds=5,t=1")
    spec = parse_gen(args.gen)
    config = bm.SuiteConfig(
        families=(spec.family,), sizes=spec.sizes, rounds=spec.rounds, t_count=spec.t_count,
        repeats=spec.repeats, mode=args.mode, shots=args.shots, seed=args.seed,
        timeout_s=args.timeout_s if args.timeout_s is not None else bm.DEFAULT_TIMEOUT_S,
        oracle_limit=args.oracle_limit, k_max=args.k_max, workers=args.workers,
        fidelity_rule=args.fidelity_rule, aggregate=not args.per_repeat,
    )

    def progress(r: bm.BenchmarkRecord) -> None:
        print(f"{r.family} n={r.n_qubits} seed={r.seed} status={r.status} runtime={r.runtime_seconds}", file=sys.stderr)

    records = bm.run_suite(config, progress=progress)
    keep_runtime = not args.omit_runtime
    if (args.format or "csv") == "csv":
        text = bm.records_to_csv(records, runtime=keep_runtime)
    else:
        text = bm.records_to_json(records, runtime=keep_runtime)
    write_artifact(text, args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", help="OpenQASM 2 file, or fragment-graph JSON for simulate")
    common.add_argument("--gen", help="generator spec, e.g. hwea:n=20,rounds=5,t=1")
    common.add_argument("--mode", choices=MODES, default=EXACT)
    common.add_argument("--shots", type=int, default=5000, help="shots per variant in sampled mode")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--k-max", type=int, default=DEFAULT_K_MAX)
    common.add_argument("--oracle-limit", type=int, default=bm.DEFAULT_ORACLE_LIMIT)
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("--timeout-s", type=float, default=None)
    common.add_argument("--out", default="-", help="output path, - for stdout")
    common.add_argument("--format", choices=("json", "csv"), default=None,
                        help="artifact format (default: csv for bench, json otherwise)")

    parser = argparse.ArgumentParser(prog="cliffcut", description="Near-Clifford circuit simulation by wire cutting.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="reconstruct the output distribution")
    sub.add_parser("cut", parents=[common], help="print the fragment graph")
    verify = sub.add_parser("verify", parents=[common], help="compare against the statevector oracle")
    verify.add_argument("--threshold", type=float, default=0.99)
    verify.add_argument("--fidelity-rule", choices=(bm.MARGINAL, bm.FULL), default=bm.MARGINAL)
    bench = sub.add_parser("bench", parents=[common], help="run a benchmark sweep")
    bench.add_argument("--fidelity-rule", choices=(bm.MARGINAL, bm.FULL), default=None,
                       help="default: marginal for hwea/qaoa, full for rep")
    bench.add_argument("--per-repeat", action="store_true", help="one row per repeat instead of averages")
    bench.add_argument("--omit-runtime", action="store_true", help="blank runtimes for reproducible artifacts")
    return parser


_COMMANDS = {"simulate": cmd_simulate, "cut": cmd_cut, "verify": cmd_verify, "bench": cmd_bench}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.mode == SAMPLED and args.shots < 1:
        print("--shots must be at least 1 in sampled mode", file=sys.stderr)
        return EXIT_PARSE
    if args.workers < 1:
        print("--workers must be at least 1", file=sys.stderr)
        return EXIT_PARSE
    try:
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except CutError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except CostGuardRefused as exc:
        est = exc.estimate
        print(f"cost guard: {est.describe()}; estimated 4^{est.k} = {est.terms} terms", file=sys.stderr)
        return EXIT_GUARD
    except WidthLimitError as exc:
        print(f"width guard: {exc}", file=sys.stderr)
        return EXIT_WIDTH
    except DeadlineExceeded as exc:
        print(f"timeout: {exc}", file=sys.stderr)
        return EXIT_TIMEOUT


if __name__ == "__main__":
    sys.exit(main())
