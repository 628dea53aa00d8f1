"""Stabilizer tableau simulation of Clifford circuits.

The tableau follows Aaronson & Gottesman: rows ``0..n-1`` are destabilizers,
rows ``n..2n-1`` stabilizers. Each row's X and Z parts are bit-packed into
``uint64`` words (qubit ``q`` lives in word ``q >> 6``, bit ``q & 63``), so
row products are word-wise XORs with a popcount phase update.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np

from .circuit import Circuit, Gate, GateKind, classify_gate, quarter_turns
from .distribution import Distribution

DEFAULT_SUPPORT_CAP = 1 << 20

_ONE = np.uint64(1)
_ZERO = np.uint64(0)


class NonCliffordError(ValueError):
    pass


class SupportTooLarge(RuntimeError):
    def __init__(self, dimension: int, cap: int):
        super().__init__(f"outcome support 2**{dimension} exceeds cap {cap}")
        self.dimension = dimension
        self.cap = cap


# -- Clifford canonicalization ------------------------------------------------

_ELEMENTARY = frozenset(
    {
        GateKind.I, GateKind.X, GateKind.Y, GateKind.Z, GateKind.H, GateKind.S,
        GateKind.SDG, GateKind.SQRT_X, GateKind.CX, GateKind.CZ, GateKind.SWAP,
    }
)
_RZ_STEPS = {0: (), 1: (GateKind.S,), 2: (GateKind.Z,), 3: (GateKind.SDG,)}
_RX_STEPS = {0: (), 1: (GateKind.SQRT_X,), 2: (GateKind.X,), 3: (GateKind.H, GateKind.SDG, GateKind.H)}


@lru_cache(maxsize=None)
def _rotation_steps(kind: GateKind, turns: int) -> tuple[GateKind, ...]:
    if kind is GateKind.RZ:
        return _RZ_STEPS[turns]
    if kind is GateKind.RX:
        return _RX_STEPS[turns]
    # ry(a) = s . rx(a) . sdg
    return (GateKind.SDG,) + _RX_STEPS[turns] + (GateKind.S,)


def clifford_decompose(gate: Gate) -> list[Gate]:
    """Rewrite a Clifford gate into tableau generators (global phase dropped)."""
    if gate.kind in _ELEMENTARY:
        return [gate]
    if not classify_gate(gate):
        raise NonCliffordError(f"{gate} is not a Clifford gate")
    q = gate.qubits
    return [Gate(k, q) for k in _rotation_steps(gate.kind, quarter_turns(gate))]


def canonicalize(circuit: Circuit) -> list[Gate]:
    out: list[Gate] = []
    for g in circuit.gates:
        out.extend(clifford_decompose(g))
    return out


# -- bit helpers ------------------------------------------------------------------


def _popcount_rows(words: np.ndarray) -> np.ndarray:
    return np.bitwise_count(words).sum(axis=-1, dtype=np.int64)


def _pauli_phase(x1, z1, x2, z2) -> np.ndarray:
    """Exponent of i (mod 4) picked up by Pauli(x1,z1) * Pauli(x2,z2), summed over qubits.

    x1/z1 may broadcast against x2/z2 along the row axis.
    """
    nx1, nz1, nx2, nz2 = ~x1, ~z1, ~x2, ~z2
    plus = (x1 & z1 & z2 & nx2) | (x1 & nz1 & z2 & x2) | (nx1 & z1 & x2 & nz2)
    minus = (x1 & z1 & x2 & nz2) | (x1 & nz1 & z2 & nx2) | (nx1 & z1 & x2 & z2)
    return _popcount_rows(plus) - _popcount_rows(minus)


class Tableau:
    """Stabilizer state on ``n`` qubits; mutable, single-writer."""

    def __init__(self, n: int):
        if n < 1:
            raise ValueError(f"tableau needs at least one qubit, got {n}")
        self.n = n
        self.words = (n + 63) >> 6
        self.x = np.zeros((2 * n, self.words), dtype=np.uint64)
        self.z = np.zeros((2 * n, self.words), dtype=np.uint64)
        self.r = np.zeros(2 * n, dtype=np.uint8)
        for q in range(n):
            w, m = q >> 6, np.uint64(1 << (q & 63))
            self.x[q, w] = m
            self.z[n + q, w] = m

    def copy(self) -> "Tableau":
        t = Tableau.__new__(Tableau)
        t.n, t.words = self.n, self.words
        t.x, t.z, t.r = self.x.copy(), self.z.copy(), self.r.copy()
        return t

    # -- inspection

    def bits(self) -> tuple[np.ndarray, np.ndarray]:
        """Unpacked (2n, n) boolean X and Z matrices."""
        def unpack(a):
            b = np.unpackbits(a.view(np.uint8), axis=1, bitorder="little")
            return b[:, : self.n].astype(bool)
        return unpack(self.x), unpack(self.z)

    def row_string(self, i: int) -> str:
        x, z = self.bits()
        sym = {(0, 0): "I", (1, 0): "X", (0, 1): "Z", (1, 1): "Y"}
        return ("-" if self.r[i] else "+") + "".join(sym[(int(a), int(b))] for a, b in zip(x[i], z[i]))

    def stabilizers(self) -> list[str]:
        return [self.row_string(i) for i in range(self.n, 2 * self.n)]

    def destabilizers(self) -> list[str]:
        return [self.row_string(i) for i in range(self.n)]

    def commutation_matrix(self) -> np.ndarray:
        """Symplectic products between all rows (1 = anticommute)."""
        x, z = self.bits()
        xi, zi = x.astype(np.uint8), z.astype(np.uint8)
        return ((xi @ zi.T) + (zi @ xi.T)) % 2

    def check_invariants(self) -> bool:
        n = self.n
        c = self.commutation_matrix()
        expected = np.zeros((2 * n, 2 * n), dtype=np.uint8)
        expected[np.arange(n), np.arange(n) + n] = 1
        expected[np.arange(n) + n, np.arange(n)] = 1
        x, z = self.bits()
        nonidentity = bool(np.all(x.any(axis=1) | z.any(axis=1)))
        return bool(np.array_equal(c, expected)) and nonidentity

    # -- column access

    def _col(self, arr: np.ndarray, q: int) -> np.ndarray:
        return (arr[:, q >> 6] >> np.uint64(q & 63)) & _ONE

    def _xor_col(self, arr: np.ndarray, q: int, bits: np.ndarray) -> None:
        arr[:, q >> 6] ^= bits << np.uint64(q & 63)

    # -- gates

    def h(self, q: int) -> None:
        xa, za = self._col(self.x, q), self._col(self.z, q)
        self.r ^= (xa & za).astype(np.uint8)
        d = xa ^ za
        self._xor_col(self.x, q, d)
        self._xor_col(self.z, q, d)

    def s(self, q: int) -> None:
        xa, za = self._col(self.x, q), self._col(self.z, q)
        self.r ^= (xa & za).astype(np.uint8)
        self._xor_col(self.z, q, xa)

    def sdg(self, q: int) -> None:
        xa, za = self._col(self.x, q), self._col(self.z, q)
        self.r ^= (xa & (za ^ _ONE)).astype(np.uint8)
        self._xor_col(self.z, q, xa)

    def pauli_x(self, q: int) -> None:
        self.r ^= self._col(self.z, q).astype(np.uint8)

    def pauli_z(self, q: int) -> None:
        self.r ^= self._col(self.x, q).astype(np.uint8)

    def pauli_y(self, q: int) -> None:
        self.r ^= (self._col(self.x, q) ^ self._col(self.z, q)).astype(np.uint8)

    def sqrt_x(self, q: int) -> None:
        self.h(q)
        self.s(q)
        self.h(q)

    def cx(self, a: int, b: int) -> None:
        xa, za = self._col(self.x, a), self._col(self.z, a)
        xb, zb = self._col(self.x, b), self._col(self.z, b)
        self.r ^= (xa & zb & (xb ^ za ^ _ONE)).astype(np.uint8)
        self._xor_col(self.x, b, xa)
        self._xor_col(self.z, a, zb)

    def cz(self, a: int, b: int) -> None:
        xa, za = self._col(self.x, a), self._col(self.z, a)
        xb, zb = self._col(self.x, b), self._col(self.z, b)
        self.r ^= (xa & xb & (za ^ zb)).astype(np.uint8)
        self._xor_col(self.z, a, xb)
        self._xor_col(self.z, b, xa)

    def swap(self, a: int, b: int) -> None:
        for arr in (self.x, self.z):
            d = self._col(arr, a) ^ self._col(arr, b)
            self._xor_col(arr, a, d)
            self._xor_col(arr, b, d)

    _DISPATCH = {
        GateKind.H: h, GateKind.S: s, GateKind.SDG: sdg, GateKind.X: pauli_x,
        GateKind.Y: pauli_y, GateKind.Z: pauli_z, GateKind.SQRT_X: sqrt_x,
        GateKind.CX: cx, GateKind.CZ: cz, GateKind.SWAP: swap,
    }

    def apply(self, gate: Gate) -> "Tableau":
        for q in gate.qubits:
            if q >= self.n:
                raise ValueError(f"qubit {q} out of range for {self.n}-qubit tableau")
        for g in clifford_decompose(gate):
            if g.kind is not GateKind.I:
                self._DISPATCH[g.kind](self, *g.qubits)
        return self

    # -- row products

    def _rowmul(self, targets: np.ndarray, src: int) -> None:
        """rows[targets] <- rows[src] * rows[targets], with phases."""
        if targets.size == 0:
            return
        x1, z1 = self.x[src], self.z[src]
        x2, z2 = self.x[targets], self.z[targets]
        e = 2 * self.r[src].astype(np.int64) + 2 * self.r[targets].astype(np.int64) + _pauli_phase(x1, z1, x2, z2)
        self.r[targets] = ((e % 4) // 2).astype(np.uint8)
        self.x[targets] = x2 ^ x1
        self.z[targets] = z2 ^ z1

    # -- measurement

    def measure(self, q: int, rng: np.random.Generator | None = None, forced: int | None = None) -> tuple[int, bool]:
        """Measure qubit ``q`` in the Z basis; returns (bit, was_deterministic)."""
        n = self.n
        if not 0 <= q < n:
            raise ValueError(f"qubit {q} out of range")
        xq = self._col(self.x, q).astype(bool)
        stab_hits = np.flatnonzero(xq[n:])
        if stab_hits.size:
            p = n + int(stab_hits[0])
            others = np.flatnonzero(xq)
            others = others[others != p]
            self._rowmul(others, p)
            self.x[p - n], self.z[p - n], self.r[p - n] = self.x[p], self.z[p], self.r[p]
            self.x[p] = 0
            self.z[p] = 0
            self.z[p, q >> 6] = np.uint64(1 << (q & 63))
            if forced is not None:
                bit = int(forced)
            else:
                if rng is None:
                    raise ValueError("random outcome needs an rng")
                bit = int(rng.integers(0, 2))
            self.r[p] = bit
            return bit, False
        # deterministic: outcome is the sign of the product of stabilizers
        # paired with destabilizers that anticommute with Z_q
        sx = np.zeros(self.words, dtype=np.uint64)
        sz = np.zeros(self.words, dtype=np.uint64)
        phase = 0
        for i in np.flatnonzero(xq[:n]):
            row = n + int(i)
            phase += 2 * int(self.r[row]) + int(_pauli_phase(self.x[row], self.z[row], sx, sz))
            sx ^= self.x[row]
            sz ^= self.z[row]
        return (phase % 4) // 2, True

    # -- outcome distribution

    def outcome_space(self, qubits: list[int]) -> tuple[np.ndarray, np.ndarray]:
        """Affine support of a Z measurement of ``qubits``.

        Returns ``(offset, basis)``: offset is a bool vector over ``qubits``,
        basis a (d, len(qubits)) bool matrix of independent directions. The
        outcome distribution is uniform over ``offset + span(basis)``.
        """
        n = self.n
        sx, sz, sr = self.x[n:].copy(), self.z[n:].copy(), self.r[n:].copy()
        sub = Tableau.__new__(Tableau)
        sub.n, sub.words, sub.x, sub.z, sub.r = n, self.words, sx, sz, sr
        # eliminate X parts; rows left with no X are Z-type stabilizers
        used = np.zeros(n, dtype=bool)
        for q in range(n):
            col = sub._col(sx, q).astype(bool) & ~used
            hits = np.flatnonzero(col)
            if hits.size == 0:
                continue
            p = int(hits[0])
            used[p] = True
            rows = np.flatnonzero(sub._col(sx, q).astype(bool))
            sub._rowmul(rows[rows != p], p)
        ztype = np.flatnonzero(~used)
        zbits = np.unpackbits(sz[ztype].view(np.uint8), axis=1, bitorder="little")[:, :n].astype(bool)
        rhs = sr[ztype].astype(bool)
        # solve zbits . b = rhs over GF(2)
        aug = np.concatenate([zbits, rhs[:, None]], axis=1)
        reduced, pivots = _rref(aug, n)
        offset = np.zeros(n, dtype=bool)
        for row, col in enumerate(pivots):
            offset[col] = reduced[row, n]
        free = [c for c in range(n) if c not in set(pivots)]
        basis = np.zeros((len(free), n), dtype=bool)
        for i, f in enumerate(free):
            basis[i, f] = True
            for row, col in enumerate(pivots):
                basis[i, col] = reduced[row, f]
        sel = list(qubits)
        proj = basis[:, sel]
        proj_reduced, proj_pivots = _rref(proj, len(sel))
        return offset[sel], proj_reduced[: len(proj_pivots)]


def _rref(mat: np.ndarray, ncols: int) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form over GF(2) on the first ``ncols`` columns."""
    m = mat.copy()
    pivots: list[int] = []
    row = 0
    for col in range(ncols):
        if row >= m.shape[0]:
            break
        hits = np.flatnonzero(m[row:, col]) + row
        if hits.size == 0:
            continue
        p = int(hits[0])
        if p != row:
            m[[row, p]] = m[[p, row]]
        mask = m[:, col].copy()
        mask[row] = False
        m[mask] ^= m[row]
        pivots.append(col)
        row += 1
    return m, pivots


# -- module-level API -------------------------------------------------------------


def tableau_init(n: int) -> Tableau:
    return Tableau(n)


def apply_clifford(t: Tableau, gate: Gate) -> Tableau:
    return t.apply(gate)


def measure_z(t: Tableau, q: int, rng: np.random.Generator) -> tuple[int, bool]:
    return t.measure(q, rng)


def _require_clifford(circuit: Circuit) -> None:
    for g in circuit.gates:
        if not classify_gate(g):
            raise NonCliffordError(f"non-Clifford gate {g} in circuit")


def run_tableau(circuit: Circuit, tableau: Tableau | None = None) -> Tableau:
    """Apply ``circuit`` to ``tableau`` (a fresh |0...0> one by default)."""
    _require_clifford(circuit)
    t = Tableau(circuit.n_qubits) if tableau is None else tableau
    for g in canonicalize(circuit):
        if g.kind is not GateKind.I:
            Tableau._DISPATCH[g.kind](t, *g.qubits)
    return t


def _rows_to_keys(rows: np.ndarray) -> list[int]:
    """Pack bool rows (leftmost column = most significant bit) into ints."""
    n = rows.shape[1]
    if n == 0:
        return [0] * rows.shape[0]
    if n <= 63:
        return _rows_to_array(rows).tolist()
    packed = np.packbits(rows, axis=1)
    pad = packed.shape[1] * 8 - n
    return [int.from_bytes(r.tobytes(), "big") >> pad for r in packed]


def _rows_to_array(rows: np.ndarray) -> np.ndarray:
    n = rows.shape[1]
    weights = np.left_shift(np.int64(1), np.arange(n - 1, -1, -1, dtype=np.int64))
    return (rows.astype(np.int64) * weights).sum(axis=1, dtype=np.int64)


def support_dimension(circuit: Circuit) -> int:
    _, basis = run_tableau(circuit).outcome_space(circuit.measured_order)
    return basis.shape[0]


def tableau_distribution(t: Tableau, qubits: list[int], cap: int = DEFAULT_SUPPORT_CAP) -> Distribution:
    """Exact Z-measurement distribution of ``qubits`` (in that bit order)."""
    offset, basis = t.outcome_space(qubits)
    d, n = basis.shape[0], len(qubits)
    if (1 << d) > cap:
        raise SupportTooLarge(d, cap)
    p = 1.0 / (1 << d)
    if n <= 63:
        keys = _rows_to_array(offset[None, :]) if n else np.zeros(1, dtype=np.int64)
        for v in _rows_to_array(basis).tolist() if d else []:
            keys = np.concatenate([keys, keys ^ v])
        return Distribution.from_arrays(n, keys, np.full(keys.size, p))
    points = offset[None, :].copy()
    for v in basis:
        points = np.concatenate([points, points ^ v], axis=0)
    return Distribution(n, {k: p for k in _rows_to_keys(points)})


def tableau_sample(t: Tableau, qubits: list[int], shots: int, rng: np.random.Generator) -> Distribution:
    """Empirical distribution of ``shots`` independent Z measurements of ``qubits``."""
    if shots < 1:
        raise ValueError("shots must be positive")
    offset, basis = t.outcome_space(qubits)
    n = len(qubits)
    if n == 0:
        return Distribution(0, {0: 1.0})
    coeffs = rng.integers(0, 2, size=(shots, basis.shape[0]), dtype=np.uint8)
    outcomes = ((coeffs.astype(np.int64) @ basis.astype(np.int64)) % 2).astype(bool) ^ offset
    uniq, counts = np.unique(outcomes, axis=0, return_counts=True)
    if n <= 63:
        return Distribution.from_arrays(n, _rows_to_array(uniq), counts / shots)
    return Distribution(n, dict(zip(_rows_to_keys(uniq), (counts / shots).tolist())))


def exact_distribution(circuit: Circuit, cap: int = DEFAULT_SUPPORT_CAP) -> Distribution:
    """Exact outcome distribution; raises SupportTooLarge if it has more than ``cap`` entries."""
    return tableau_distribution(run_tableau(circuit), circuit.measured_order, cap)


def sample_counts(circuit: Circuit, shots: int, rng: np.random.Generator) -> Distribution:
    """Empirical distribution of ``shots`` independent Z-basis measurements.

    Measurement outcomes of a stabilizer state are uniform over an affine
    subspace, so every shot is drawn directly from that subspace rather than
    by re-running the tableau.
    """
    return tableau_sample(run_tableau(circuit), circuit.measured_order, shots, rng)


def sample_counts_by_measurement(circuit: Circuit, shots: int, rng: np.random.Generator) -> Distribution:
    """Reference sampler: one full tableau run plus sequential measurement per shot."""
    qubits = circuit.measured_order
    base = run_tableau(circuit)
    counts: dict[int, int] = {}
    for _ in range(shots):
        t = base.copy()
        key = 0
        for q in qubits:
            bit, _ = t.measure(q, rng)
            key = (key << 1) | bit
        counts[key] = counts.get(key, 0) + 1
    return Distribution.from_counts(len(qubits), counts)
