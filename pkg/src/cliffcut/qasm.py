"""Reader and writer for the QASM-2-like circuit text format.

Grammar (one statement per line, ``;``-terminated, ``//`` comments)::

    qreg q[N];                 exactly once, first
    name q[i];                 one-qubit gate
    name q[i],q[j];            two-qubit gate
    name(angle) q[i];          rotation (rz, rx, ry); angle may use ``pi``
    measure q;                 measure every qubit (terminal)
    measure q[i];              measure one qubit (terminal)
"""
from __future__ import annotations

import ast
import math
import operator
import re

from .circuit import Circuit, Gate, GateKind


class QasmError(ValueError):
    """Syntax or semantic error in circuit text, with 1-based line/column."""

    def __init__(self, message: str, line: int, column: int = 1):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column
        self.reason = message


_NAMES = {k.value: k for k in GateKind}
_QREG = re.compile(r"^qreg\s+q\s*\[\s*(\d+)\s*\]$")
_MEASURE = re.compile(r"^measure\s+q(?:\s*\[\s*(\d+)\s*\])?$")
_GATE = re.compile(r"^([a-z]+)\s*(?:\((.*)\))?\s+(.+)$")
_OPERAND = re.compile(r"^q\s*\[\s*(\d+)\s*\]$")

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv}
_UNARY = {ast.USub: operator.neg, ast.UAdd: operator.pos}


def _eval_angle(expr: str) -> float:
    """Evaluate a decimal/pi arithmetic expression without ``eval``."""

    def walk(node):
        if isinstance(node, ast.Expression):
            return walk(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id == "pi":
            return math.pi
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](walk(node.left), walk(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _UNARY:
            return _UNARY[type(node.op)](walk(node.operand))
        raise ValueError(f"unsupported angle expression {expr!r}")

    try:
        value = walk(ast.parse(expr.strip(), mode="eval"))
    except (SyntaxError, ZeroDivisionError) as exc:
        raise ValueError(f"bad angle expression {expr!r}") from exc
    if not math.isfinite(value):
        raise ValueError(f"angle {expr!r} is not finite")
    return value


def _statements(text: str):
    """Yield (line_no, column, statement) with comments stripped."""
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("//", 1)[0]
        if not line.strip():
            continue
        pos = 0
        while pos < len(line):
            end = line.find(";", pos)
            chunk = line[pos:] if end < 0 else line[pos:end]
            col = pos + len(chunk) - len(chunk.lstrip()) + 1
            if end < 0:
                if chunk.strip():
                    raise QasmError("missing ';'", line_no, col)
                break
            if not chunk.strip():
                raise QasmError("empty statement", line_no, col)
            yield line_no, col, chunk.strip()
            pos = end + 1
            if not line[pos:].strip():
                break


def parse_circuit(text: str) -> Circuit:
    n_qubits: int | None = None
    gates: list[Gate] = []
    measured: set[int] = set()

    for line_no, col, stmt in _statements(text):
        if n_qubits is None:
            m = _QREG.match(stmt)
            if not m:
                raise QasmError("expected 'qreg q[N];' as first statement", line_no, col)
            n_qubits = int(m.group(1))
            if n_qubits < 1:
                raise QasmError("register size must be positive", line_no, col)
            continue
        if stmt.startswith("qreg"):
            raise QasmError("only one qreg declaration is allowed", line_no, col)

        m = _MEASURE.match(stmt)
        if m:
            if m.group(1) is None:
                measured.update(range(n_qubits))
            else:
                q = int(m.group(1))
                if q >= n_qubits:
                    raise QasmError(f"qubit index {q} out of range", line_no, col)
                measured.add(q)
            continue

        m = _GATE.match(stmt)
        if not m:
            raise QasmError(f"cannot parse statement {stmt!r}", line_no, col)
        name, angle_src, operands = m.groups()
        kind = _NAMES.get(name)
        if kind is None:
            raise QasmError(f"unknown gate '{name}'", line_no, col)
        qubits = []
        for op in operands.split(","):
            om = _OPERAND.match(op.strip())
            if not om:
                raise QasmError(f"bad operand {op.strip()!r}", line_no, col)
            q = int(om.group(1))
            if q >= n_qubits:
                raise QasmError(f"qubit index {q} out of range", line_no, col)
            qubits.append(q)
        if len(qubits) != kind.arity:
            raise QasmError(f"'{name}' takes {kind.arity} operand(s)", line_no, col)
        if kind.parametric != (angle_src is not None):
            need = "requires" if kind.parametric else "takes no"
            raise QasmError(f"'{name}' {need} an angle", line_no, col)
        angle = None
        if angle_src is not None:
            try:
                angle = _eval_angle(angle_src)
            except ValueError as exc:
                raise QasmError(str(exc), line_no, col) from None
        hit = measured.intersection(qubits)
        if hit:
            raise QasmError(f"gate on qubit {min(hit)} after its measurement", line_no, col)
        try:
            gates.append(Gate(kind, tuple(qubits), angle))
        except ValueError as exc:
            raise QasmError(str(exc), line_no, col) from None

    if n_qubits is None:
        raise QasmError("missing 'qreg q[N];' declaration", 1)
    return Circuit(n_qubits, tuple(gates), frozenset(measured))


def emit_circuit(circuit: Circuit) -> str:
    lines = [f"qreg q[{circuit.n_qubits}];"]
    for g in circuit.gates:
        operands = ",".join(f"q[{q}]" for q in g.qubits)
        if g.angle is not None:
            lines.append(f"{g.kind.value}({g.angle!r}) {operands};")
        else:
            lines.append(f"{g.kind.value} {operands};")
    if circuit.measured == frozenset(range(circuit.n_qubits)):
        lines.append("measure q;")
    else:
        lines.extend(f"measure q[{q}];" for q in sorted(circuit.measured))
    return "\n".join(lines)


def load_circuit(path) -> Circuit:
    with open(path, encoding="utf-8") as fh:
        return parse_circuit(fh.read())
