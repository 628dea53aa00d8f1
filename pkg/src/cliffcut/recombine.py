"""Quasi-probability recombination of fragment data over the cuts.

Each cut is an identity channel expanded in the Pauli basis,
``rho = 1/2 * sum_P Tr(P rho) P``. An upstream fragment supplies ``Tr(P rho)``
from its X/Y/Z-basis data; a downstream fragment receives ``P`` written as a
signed combination of the states |0>, |1>, |+>, |+i>. Multiplying fragment
tensors over all ``4**k`` label assignments and scaling by ``2**-k`` gives the
output distribution of the uncut circuit.
"""
from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from functools import reduce

import numpy as np

from .cutter import FragmentGraph, Fragment
from .distribution import Distribution
from .variants import (
    BASIS_ORDER,
    EXACT,
    PREP_ORDER,
    MeasBasis,
    VariantResult,
    check_deadline,
    enumerate_variants,
)

PAULI_LABELS = ("I", "X", "Y", "Z")
DENSE_BITS = 16
PRODUCT_LIMIT = 1 << 22
CONTRACTION_CHUNKS = 64
BATCH_CELLS = 1 << 20
FINALIZE_PRUNE = 1e-12
CORRECTION_NAME = "simplex+consistency"

# rows: Pauli label I, X, Y, Z; columns: prepared state 0, 1, +, +i
PREP_COEFFS = np.array(
    [
        [1.0, 1.0, 0.0, 0.0],
        [-1.0, -1.0, 2.0, 0.0],
        [-1.0, -1.0, 0.0, 2.0],
        [1.0, -1.0, 0.0, 0.0],
    ]
)
# measurement basis able to estimate each label (I comes from Z data)
_LABEL_BASIS = (MeasBasis.Z, MeasBasis.X, MeasBasis.Y, MeasBasis.Z)


class MissingVariant(KeyError):
    pass


class GuardExceeded(RuntimeError):
    pass


@dataclass
class FragmentTensor:
    """Pauli-labelled quasi-distributions over a fragment's circuit-output bits.

    ``values`` has one length-4 axis per entry of ``axes`` (cut ids; quantum
    inputs first, then quantum outputs) followed by an axis over ``keys``.
    """

    fragment: Fragment
    axes: tuple[int, ...]
    keys: list[int]
    values: np.ndarray
    results: tuple[VariantResult, ...] = ()
    corrected: bool = False
    dense: bool = True

    @property
    def legs(self) -> tuple[int, ...]:
        return tuple(sorted(set(self.axes)))

    def entry(self, labels: dict[int, str] | tuple[str, ...]) -> Distribution:
        """Quasi-distribution for a labelling of this fragment's cuts."""
        if not isinstance(labels, dict):
            labels = dict(zip(self.legs, labels))
        idx = tuple(PAULI_LABELS.index(labels[c]) for c in self.axes)
        vec = self.values[idx]
        n = self.fragment.n_circuit_outputs
        return Distribution(n, {k: float(v) for k, v in zip(self.keys, vec) if v != 0.0})

    def entries(self) -> dict[tuple[str, ...], Distribution]:
        return {
            labels: self.entry(labels)
            for labels in itertools.product(PAULI_LABELS, repeat=len(self.legs))
        }


# -- tensor construction ----------------------------------------------------------------


def _support(results, q_out: int, n_co: int) -> tuple[list[int], bool]:
    if n_co <= DENSE_BITS:
        return list(range(1 << n_co)), True
    if n_co + q_out <= 63:
        parts = [r.dist.arrays()[0] >> q_out for r in results]
        return np.unique(np.concatenate(parts)).tolist(), False
    keys = set()
    for r in results:
        keys.update(k >> q_out for k in r.dist.probs)
    return sorted(keys), False


def _variant_matrix(dist: Distribution, q_out: int, keys, dense: bool, index) -> np.ndarray:
    """Rows: circuit-output key index; columns: quantum-output bits.

    ``index`` is a sorted key array (narrow keys) or a key -> row dict (wide keys).
    """
    width = 1 << q_out
    mat = np.zeros((len(keys), width))
    if len(dist) == 0:
        return mat
    mask = width - 1
    if dense:
        k, v = dist.arrays()
        mat.reshape(-1)[k] = v
    elif isinstance(index, np.ndarray):
        k, v = dist.arrays()
        order = np.argsort(k, kind="stable")  # sorted queries keep searchsorted cache-friendly
        k, v = k[order], v[order]
        flat = np.searchsorted(index, k >> q_out) * width + (k & mask)
        mat = np.bincount(flat, weights=v, minlength=mat.size).reshape(mat.shape)
    else:
        for k, v in dist.probs.items():
            mat[index[k >> q_out], k & mask] += v
    return mat


def _sign_vector(labels: tuple[int, ...]) -> np.ndarray:
    """Weights over quantum-output bits: 1 for an I leg, (-1)**s otherwise."""
    q = len(labels)
    w = np.ones(1 << q)
    for j, lab in enumerate(labels):
        if lab:
            bit = (np.arange(1 << q) >> (q - 1 - j)) & 1
            w *= 1 - 2 * bit
    return w


def build_tensor(results: list[VariantResult], frag: Fragment) -> FragmentTensor:
    specs = enumerate_variants(frag)
    by_spec = {r.spec: r for r in results}
    for s in specs:
        if s not in by_spec:
            raise MissingVariant(f"fragment {frag.index} lacks variant {s.label()}")
    q_in, q_out, n_co = len(frag.in_legs), len(frag.out_legs), frag.n_circuit_outputs
    keys, dense = _support(by_spec.values(), q_out, n_co)
    if dense:
        index = None
    elif n_co + q_out <= 63:
        index = np.asarray(keys, dtype=np.int64)
    else:
        index = {k: i for i, k in enumerate(keys)}

    out_labels = list(itertools.product(range(4), repeat=q_out))
    signs = {lab: _sign_vector(lab) for lab in out_labels}
    values = np.zeros((4,) * q_in + (4,) * q_out + (len(keys),))
    for prep_combo in itertools.product(range(4), repeat=q_in):
        preps = tuple(PREP_ORDER[i] for i in prep_combo)
        mats = {}
        for lab in out_labels:
            bases = tuple(_LABEL_BASIS[l] for l in lab)
            if bases not in mats:
                spec = next(s for s in specs if s.preps == preps and s.bases == bases)
                mats[bases] = _variant_matrix(by_spec[spec].dist, q_out, keys, dense, index)
            values[prep_combo + lab] = mats[bases] @ signs[lab]
    # turn prepared-state data into Pauli-label data, one input axis at a time
    for axis in range(q_in):
        values = np.moveaxis(np.tensordot(PREP_COEFFS, values, axes=([1], [axis])), 0, axis)
    axes = tuple(c for c, _ in frag.in_legs) + tuple(c for c, _ in frag.out_legs)
    ordered = tuple(by_spec[s] for s in specs)
    return FragmentTensor(frag, axes, keys, values, ordered, False, dense)


# -- sampling-noise corrections -------------------------------------------------------


def project_simplex(values: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        return v.copy()
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    ind = np.arange(1, v.size + 1)
    rho = np.flatnonzero(u - css / ind > 0)[-1]
    theta = css[rho] / (rho + 1)
    return np.maximum(v - theta, 0.0)


def project_distribution(dist: Distribution) -> Distribution:
    """Simplex projection restricted to the distribution's support."""
    if len(dist) == 0:
        return dist
    if dist.n_bits <= 63:
        keys, values = dist.arrays()
        proj = project_simplex(values)
        keep = proj > 0
        return Distribution.from_arrays(dist.n_bits, keys[keep], proj[keep])
    keys = list(dist.probs)
    proj = project_simplex(np.array([dist.probs[k] for k in keys]))
    return Distribution(dist.n_bits, {k: float(v) for k, v in zip(keys, proj) if v > 0})


def _marginal_high(dist: Distribution, q_out: int) -> dict[int, float]:
    out: dict[int, float] = {}
    for k, v in dist.probs.items():
        b = k >> q_out
        out[b] = out.get(b, 0.0) + v
    return out


def _rescale_narrow(dists: list[Distribution], q_out: int) -> list[Distribution]:
    """Array version of the marginal-consistency step for keys below 64 bits."""
    arrays = [d.arrays() for d in dists]
    support = np.unique(np.concatenate([k >> q_out for k, _ in arrays]))
    rows = [np.searchsorted(support, k >> q_out) for k, _ in arrays]
    margs = [np.bincount(r, weights=v, minlength=support.size) for r, (_, v) in zip(rows, arrays)]
    avg = np.mean(margs, axis=0)
    fill = np.arange(1 << q_out, dtype=np.int64)
    out = []
    for d, (k, v), r, marg in zip(dists, arrays, rows, margs):
        new_v = v * (avg[r] / marg[r])
        missing = np.flatnonzero((marg == 0.0) & (avg > 0))
        if missing.size:
            extra_k = ((support[missing] << q_out)[:, None] | fill).reshape(-1)
            extra_v = np.repeat(avg[missing] / (1 << q_out), 1 << q_out)
            k = np.concatenate([k, extra_k])
            new_v = np.concatenate([new_v, extra_v])
        out.append(Distribution.from_arrays(d.n_bits, k, new_v))
    return out


def _rescale_wide(dists: list[Distribution], q_out: int) -> list[Distribution]:
    margs = [_marginal_high(d, q_out) for d in dists]
    support = sorted(set().union(*margs))
    avg = {b: math.fsum(m.get(b, 0.0) for m in margs) / len(margs) for b in support}
    out = []
    for d, marg in zip(dists, margs):
        new: dict[int, float] = {}
        for k, v in d.probs.items():
            b = k >> q_out
            new[k] = v * (avg[b] / marg[b])
        for b in support:
            if marg.get(b, 0.0) == 0.0 and avg[b] > 0:
                share = avg[b] / (1 << q_out)
                for s in range(1 << q_out):
                    new[(b << q_out) | s] = share
        out.append(Distribution(d.n_bits, new))
    return out


def _consistent_results(results: tuple[VariantResult, ...], frag: Fragment) -> list[VariantResult]:
    q_out = len(frag.out_legs)
    projected = [replace(r, dist=project_distribution(r.dist)) for r in results]
    if q_out == 0:
        return projected
    groups: dict[tuple, list[int]] = {}
    for i, r in enumerate(projected):
        groups.setdefault(r.spec.preps, []).append(i)
    out = list(projected)
    for members in groups.values():
        dists = [projected[i].dist for i in members]
        if any(len(d) == 0 for d in dists):
            continue
        rescale = _rescale_narrow if dists[0].n_bits <= 63 else _rescale_wide
        for i, d in zip(members, rescale(dists, q_out)):
            out[i] = replace(projected[i], dist=d)
    return out


def correct_tensor(tensor: FragmentTensor, mode: str = EXACT) -> FragmentTensor:
    """Identity in exact mode. Otherwise project each variant distribution onto
    the simplex, force every measurement basis to share the across-basis average
    circuit-output marginal, and rebuild the tensor."""
    if mode == EXACT:
        return tensor
    fixed = _consistent_results(tensor.results, tensor.fragment)
    rebuilt = build_tensor(fixed, tensor.fragment)
    rebuilt.corrected = True
    return rebuilt


# -- contraction ------------------------------------------------------------------------


@dataclass
class Contraction:
    quasi: Distribution
    term_count: int
    k: int
    nonzero_terms: int = 0


def _global_shifts(graph: FragmentGraph, frag: Fragment) -> list[int]:
    pos = {q: i for i, q in enumerate(graph.measured_order)}
    n = len(pos)
    return [n - 1 - pos[q] for q in frag.circuit_outputs]


def _scatter(keys: list[int], n_local: int, shifts: list[int], wide: bool):
    if not wide:
        k = np.asarray(keys, dtype=np.uint64)
        out = np.zeros(len(keys), dtype=np.uint64)
        for i, sh in enumerate(shifts):
            bit = (k >> np.uint64(n_local - 1 - i)) & np.uint64(1)
            out |= bit << np.uint64(sh)
        return out
    out = []
    for key in keys:
        g = 0
        for i, sh in enumerate(shifts):
            g |= ((key >> (n_local - 1 - i)) & 1) << sh
        out.append(g)
    return out


def _assignment_chunks(k: int) -> list[tuple[int, int]]:
    total = 4**k
    n = min(total, CONTRACTION_CHUNKS)
    bounds = [total * i // n for i in range(n + 1)]
    return list(zip(bounds[:-1], bounds[1:]))


def contract(
    graph: FragmentGraph,
    tensors: list[FragmentTensor],
    *,
    k_max: int | None = None,
    workers: int = 1,
    deadline: float | None = None,
) -> Contraction:
    """Sum the product of fragment entries over all ``4**k`` label assignments."""
    k = graph.k
    if k_max is not None and k > k_max:
        raise GuardExceeded(f"k={k} exceeds k_max={k_max} ({4**k} terms)")
    if len(tensors) != len(graph.fragments):
        raise ValueError("need exactly one tensor per fragment")
    n_bits = len(graph.measured)
    wide = n_bits > 63

    scalars = [t for t in tensors if t.fragment.n_circuit_outputs == 0 and len(t.keys) == 1]
    vectors = [t for t in tensors if not (t.fragment.n_circuit_outputs == 0 and len(t.keys) == 1)]
    order = scalars + vectors
    nz_order = [np.any(t.values != 0, axis=-1) for t in order]
    dims = [len(t.keys) for t in vectors]
    product_size = math.prod(dims)
    use_dense = product_size <= PRODUCT_LIMIT
    scattered = [
        _scatter(t.keys, t.fragment.n_circuit_outputs, _global_shifts(graph, t.fragment), wide) for t in vectors
    ]

    n_scalars = len(scalars)
    batch = max(1, BATCH_CELLS // max(1, product_size)) if use_dense else 1

    def run_chunk(bounds):
        start, stop = bounds
        acc = np.zeros(product_size) if use_dense else {}
        hits = 0
        for lo in range(start, stop, batch):
            check_deadline(deadline)
            hi = min(stop, lo + batch)
            idx = np.arange(lo, hi, dtype=np.int64)
            labels = (idx[:, None] >> (2 * np.arange(k - 1, -1, -1, dtype=np.int64))) & 3
            picks = [tuple(labels[:, c] for c in t.axes) for t in order]
            live = np.ones(hi - lo, dtype=bool)
            for nz, p in zip(nz_order, picks):
                live &= nz[p] if p else bool(nz)
            rows = np.flatnonzero(live)
            hits += rows.size
            if rows.size == 0:
                continue
            coef = np.ones(rows.size)
            for t, p in zip(scalars, picks):
                coef *= t.values[tuple(a[rows] for a in p) + (0,)]
            vecs = [
                t.values[tuple(a[rows] for a in p)] if p else np.broadcast_to(t.values, (rows.size, len(t.keys)))
                for t, p in zip(vectors, picks[n_scalars:])
            ]
            if use_dense:
                if not vecs:
                    acc[0] += coef.sum()
                    continue
                m = coef[:, None] * vecs[0]
                for v in vecs[1:-1]:
                    m = (m[:, :, None] * v[:, None, :]).reshape(rows.size, -1)
                acc += (m.T @ vecs[-1]).reshape(-1) if len(vecs) > 1 else m.sum(axis=0)
            else:
                for r in range(rows.size):
                    partial = {0: float(coef[r])}
                    for vec, keys in zip(vecs, scattered):
                        vec = vec[r]
                        nzi = np.flatnonzero(vec)
                        partial = {
                            g | keys[i]: w * vec[i] for g, w in partial.items() for i in nzi.tolist()
                        }
                    for g, w in partial.items():
                        acc[g] = acc.get(g, 0.0) + w
        return acc, stop - start, hits

    chunks = _assignment_chunks(k)
    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            partials = list(pool.map(run_chunk, chunks))
    else:
        partials = [run_chunk(c) for c in chunks]

    scale = 0.5**k
    terms = sum(n for _, n, _ in partials)
    hits = sum(h for _, _, h in partials)
    if use_dense:
        total = np.zeros(product_size)
        for acc, _, _ in partials:
            total += acc
        if vectors:
            if wide:
                grid = reduce(lambda a, b: [x | y for x in a for y in b], scattered)
            else:
                grid = reduce(lambda a, b: np.bitwise_or.outer(a, b).reshape(-1), scattered).tolist()
        else:
            grid = [0]
        probs = {int(g): float(v) * scale for g, v in zip(grid, total.tolist()) if v != 0.0}
    else:
        merged: dict[int, float] = {}
        for acc, _, _ in partials:
            for g, v in acc.items():
                merged[g] = merged.get(g, 0.0) + v
        probs = {g: v * scale for g, v in merged.items() if v != 0.0}
    return Contraction(Distribution(n_bits, dict(sorted(probs.items()))), terms, k, hits)


@dataclass
class Finalized:
    dist: Distribution
    negativity: float
    raw_total: float = 1.0


def finalize(quasi: Distribution, prune: float = FINALIZE_PRUNE) -> Finalized:
    """Clip negative weights, renormalize, and report the clipped mass."""
    negativity = quasi.negativity()
    kept = {k: v for k, v in quasi.probs.items() if v > 0}
    total = math.fsum(kept.values())
    if total <= 0:
        raise ValueError("quasi-distribution has no positive mass")
    kept = {k: v for k, v in kept.items() if v > prune * total}
    total = math.fsum(kept.values())
    probs = {k: v / total for k, v in kept.items()}
    return Finalized(Distribution(quasi.n_bits, probs), negativity, quasi.total())


def strong_probability(graph: FragmentGraph, tensors: list[FragmentTensor], bitstring: str | int) -> float:
    """Probability of one output bitstring, by direct tensor-network contraction."""
    n_bits = len(graph.measured)
    if isinstance(bitstring, str):
        if len(bitstring) != n_bits or set(bitstring) - {"0", "1"}:
            raise ValueError(f"bitstring must be {n_bits} binary digits")
        key = int(bitstring, 2) if bitstring else 0
    else:
        key = int(bitstring)
        if not 0 <= key < (1 << n_bits):
            raise ValueError("bitstring out of range")
    k = graph.k
    if k > 50:
        raise GuardExceeded(f"k={k} too large for direct contraction")
    letters = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
    operands, subscripts = [], []
    for t in tensors:
        shifts = _global_shifts(graph, t.fragment)
        local = 0
        for sh in shifts:
            local = (local << 1) | ((key >> sh) & 1)
        if t.dense:
            idx = local
        else:
            try:
                idx = t.keys.index(local)
            except ValueError:
                return 0.0
        operands.append(t.values[..., idx])
        subscripts.append("".join(letters[c] for c in t.axes))
    expr = ",".join(subscripts) + "->"
    value = np.einsum(expr, *operands, optimize=len(operands) > 2) if operands else 1.0
    return float(value) * 0.5**k
