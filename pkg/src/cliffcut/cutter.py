"""Wire cuts that isolate non-Clifford gates, and the resulting fragment graph.

A cut at ``CutPoint(qubit, position)`` severs wire ``qubit`` between the gates
with list index ``< position`` and those with index ``>= position``. The
pieces of a wire between cuts are *segments*; every segment becomes its own
local qubit in exactly one fragment.
"""
from __future__ import annotations

import json
from bisect import bisect_right
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .circuit import Circuit, Gate, classify_gate
from .qasm import emit_circuit, parse_circuit

CIRCUIT = "circuit"
QUANTUM = "quantum"
DEFAULT_K_MAX = 10


class CutError(ValueError):
    pass


@dataclass(frozen=True, order=True)
class CutPoint:
    qubit: int
    position: int


@dataclass(frozen=True)
class Fragment:
    index: int
    circuit: Circuit
    segments: tuple[tuple[int, int], ...]  # local qubit -> (global qubit, segment number)
    inputs: tuple[str, ...]
    outputs: tuple[str, ...]
    in_legs: tuple[tuple[int, int], ...] = ()  # (cut id, local qubit), ascending cut id
    out_legs: tuple[tuple[int, int], ...] = ()
    gate_indices: tuple[int, ...] = ()

    @property
    def is_clifford(self) -> bool:
        return self.circuit.is_clifford

    @property
    def qubit_map(self) -> tuple[int, ...]:
        return tuple(q for q, _ in self.segments)

    @property
    def circuit_outputs(self) -> list[int]:
        """Global qubits measured as circuit outputs, in output-bit order."""
        return [self.segments[loc][0] for loc in self.circuit.measured_order]

    @property
    def n_circuit_outputs(self) -> int:
        return len(self.circuit.measured)

    @property
    def legs(self) -> tuple[int, ...]:
        """Cut ids incident to this fragment, ascending."""
        return tuple(sorted({c for c, _ in self.in_legs} | {c for c, _ in self.out_legs}))

    @property
    def n_variants(self) -> int:
        return 4 ** len(self.in_legs) * 3 ** len(self.out_legs)

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "circuit": emit_circuit(self.circuit),
            "is_clifford": self.is_clifford,
            "segments": [list(s) for s in self.segments],
            "inputs": list(self.inputs),
            "outputs": list(self.outputs),
            "in_legs": [list(l) for l in self.in_legs],
            "out_legs": [list(l) for l in self.out_legs],
            "gate_indices": list(self.gate_indices),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Fragment":
        return cls(
            index=int(d["index"]),
            circuit=parse_circuit(d["circuit"]),
            segments=tuple(tuple(s) for s in d["segments"]),
            inputs=tuple(d["inputs"]),
            outputs=tuple(d["outputs"]),
            in_legs=tuple(tuple(l) for l in d["in_legs"]),
            out_legs=tuple(tuple(l) for l in d["out_legs"]),
            gate_indices=tuple(d.get("gate_indices", ())),
        )


@dataclass(frozen=True)
class CutEdge:
    id: int
    point: CutPoint
    upstream: tuple[int, int]  # (fragment index, local qubit of its quantum output)
    downstream: tuple[int, int]  # (fragment index, local qubit of its quantum input)


@dataclass(frozen=True)
class FragmentGraph:
    n_qubits: int
    measured: frozenset[int]
    fragments: tuple[Fragment, ...]
    cuts: tuple[CutEdge, ...] = ()

    @property
    def k(self) -> int:
        return len(self.cuts)

    @property
    def measured_order(self) -> list[int]:
        return sorted(self.measured)

    def to_dict(self) -> dict:
        return {
            "n_qubits": self.n_qubits,
            "measured": sorted(self.measured),
            "k": self.k,
            "fragments": [f.to_dict() for f in self.fragments],
            "cuts": [
                {
                    "id": c.id,
                    "qubit": c.point.qubit,
                    "position": c.point.position,
                    "upstream": list(c.upstream),
                    "downstream": list(c.downstream),
                }
                for c in self.cuts
            ],
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d: dict) -> "FragmentGraph":
        graph = cls(
            n_qubits=int(d["n_qubits"]),
            measured=frozenset(d["measured"]),
            fragments=tuple(Fragment.from_dict(f) for f in d["fragments"]),
            cuts=tuple(
                CutEdge(int(c["id"]), CutPoint(int(c["qubit"]), int(c["position"])),
                        tuple(c["upstream"]), tuple(c["downstream"]))
                for c in d["cuts"]
            ),
        )
        graph.validate()
        return graph

    @classmethod
    def from_json(cls, text: str) -> "FragmentGraph":
        return cls.from_dict(json.loads(text))

    def validate(self) -> None:
        """Check that every cut joins one quantum output to one quantum input."""
        seen_out, seen_in = set(), set()
        for c in self.cuts:
            fu, lu = c.upstream
            fd, ld = c.downstream
            up, down = self.fragments[fu], self.fragments[fd]
            if (c.id, lu) not in up.out_legs or up.outputs[lu] != QUANTUM:
                raise CutError(f"cut {c.id}: upstream leg is not a quantum output")
            if (c.id, ld) not in down.in_legs or down.inputs[ld] != QUANTUM:
                raise CutError(f"cut {c.id}: downstream leg is not a quantum input")
            seen_out.add(c.id)
            seen_in.add(c.id)
        ids = {c.id for c in self.cuts}
        for f in self.fragments:
            for cid, _ in f.in_legs + f.out_legs:
                if cid not in ids:
                    raise CutError(f"fragment {f.index} references unknown cut {cid}")
        if ids != set(range(len(self.cuts))):
            raise CutError("cut ids must be 0..k-1")


def _wire_ops(circuit: Circuit) -> list[list[int]]:
    ops: list[list[int]] = [[] for _ in range(circuit.n_qubits)]
    for i, g in enumerate(circuit.gates):
        for q in g.qubits:
            ops[q].append(i)
    return ops


def find_cuts(circuit: Circuit) -> list[CutPoint]:
    """Greedy cuts around every maximal run of non-Clifford gates on a wire.

    The upstream cut is skipped when the run starts the wire and the
    downstream cut when nothing follows the run on that wire.
    """
    cuts: list[CutPoint] = []
    for q, ops in enumerate(_wire_ops(circuit)):
        i = 0
        while i < len(ops):
            if classify_gate(circuit.gates[ops[i]]):
                i += 1
                continue
            j = i
            while j + 1 < len(ops) and not classify_gate(circuit.gates[ops[j + 1]]):
                j += 1
            if i > 0:
                cuts.append(CutPoint(q, ops[i]))
            if j < len(ops) - 1:
                cuts.append(CutPoint(q, ops[j] + 1))
            i = j + 1
    return sorted(cuts, key=lambda c: (c.position, c.qubit))


class _UnionFind:
    def __init__(self, items: Iterable):
        self.parent = {x: x for x in items}

    def find(self, x):
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


def fragment(circuit: Circuit, cuts: Sequence[CutPoint]) -> FragmentGraph:
    """Split ``circuit`` along ``cuts`` into the connected components of its segments."""
    m = len(circuit.gates)
    cuts = sorted(set(cuts), key=lambda c: (c.position, c.qubit))
    if len(cuts) != len({(c.qubit, c.position) for c in cuts}):
        raise CutError("duplicate cut")
    per_wire: list[list[int]] = [[] for _ in range(circuit.n_qubits)]
    for c in cuts:
        if not 0 <= c.qubit < circuit.n_qubits:
            raise CutError(f"cut on qubit {c.qubit} out of range")
        if not 0 <= c.position <= m:
            raise CutError(f"cut position {c.position} outside [0, {m}]")
        per_wire[c.qubit].append(c.position)
    for positions in per_wire:
        positions.sort()

    def seg_of(q: int, i: int) -> int:
        return bisect_right(per_wire[q], i)

    segments = [(q, s) for q in range(circuit.n_qubits) for s in range(len(per_wire[q]) + 1)]
    uf = _UnionFind(segments)
    first_gate: dict[tuple[int, int], int] = {}
    for i, g in enumerate(circuit.gates):
        segs = [(q, seg_of(q, i)) for q in g.qubits]
        for seg in segs:
            first_gate.setdefault(seg, i)
        for seg in segs[1:]:
            uf.union(segs[0], seg)

    cut_id = {(c.qubit, c.position): j for j, c in enumerate(cuts)}

    def seg_start(seg):
        q, s = seg
        return per_wire[q][s - 1] if s else 0

    def order_key(seg):
        return (first_gate.get(seg, seg_start(seg)), seg[0], seg[1])

    groups: dict[tuple[int, int], list[tuple[int, int]]] = {}
    for seg in segments:
        groups.setdefault(uf.find(seg), []).append(seg)
    components = sorted(groups.values(), key=lambda segs: min(order_key(s) for s in segs))

    frag_of: dict[tuple[int, int], tuple[int, int]] = {}
    fragments: list[Fragment] = []
    for fi, segs in enumerate(components):
        last = {seg: seg[1] == len(per_wire[seg[0]]) for seg in segs}
        meas = sorted((s for s in segs if last[s] and s[0] in circuit.measured), key=lambda s: s[0])
        qout = sorted((s for s in segs if not last[s]), key=lambda s: cut_id[(s[0], per_wire[s[0]][s[1]])])
        rest = sorted(s for s in segs if last[s] and s[0] not in circuit.measured)
        local_order = meas + qout + rest
        local = {seg: i for i, seg in enumerate(local_order)}
        gate_idx, gates = [], []
        for i, g in enumerate(circuit.gates):
            segs_g = [(q, seg_of(q, i)) for q in g.qubits]
            if segs_g[0] in local:
                gate_idx.append(i)
                gates.append(Gate(g.kind, tuple(local[s] for s in segs_g), g.angle))
        inputs = tuple(QUANTUM if s[1] else CIRCUIT for s in local_order)
        outputs = tuple(CIRCUIT if last[s] else QUANTUM for s in local_order)
        in_legs = sorted((cut_id[(s[0], per_wire[s[0]][s[1] - 1])], local[s]) for s in local_order if s[1])
        out_legs = sorted((cut_id[(s[0], per_wire[s[0]][s[1]])], local[s]) for s in qout)
        sub = Circuit(len(local_order), tuple(gates), frozenset(range(len(meas))))
        fragments.append(
            Fragment(fi, sub, tuple(local_order), inputs, outputs, tuple(in_legs), tuple(out_legs), tuple(gate_idx))
        )
        for seg, loc in local.items():
            frag_of[seg] = (fi, loc)

    edges = []
    for j, c in enumerate(cuts):
        s = bisect_right(per_wire[c.qubit], c.position) - 1
        edges.append(CutEdge(j, c, frag_of[(c.qubit, s)], frag_of[(c.qubit, s + 1)]))
    return FragmentGraph(circuit.n_qubits, circuit.measured, tuple(fragments), tuple(edges))


def cut_circuit(circuit: Circuit) -> FragmentGraph:
    return fragment(circuit, find_cuts(circuit))


@dataclass(frozen=True)
class CostEstimate:
    ok: bool
    k: int
    k_max: int
    terms: int
    variants: tuple[int, ...] = field(default_factory=tuple)

    @property
    def total_variants(self) -> int:
        return sum(self.variants)

    def describe(self) -> str:
        verdict = "ok" if self.ok else "refused"
        return (
            f"{verdict}: k={self.k} (k_max={self.k_max}), {self.terms} contraction terms, "
            f"{self.total_variants} fragment variants {list(self.variants)}"
        )


def cost_guard(graph: FragmentGraph, k_max: int = DEFAULT_K_MAX) -> CostEstimate:
    k = graph.k
    return CostEstimate(k <= k_max, k, k_max, 4**k, tuple(f.n_variants for f in graph.fragments))
