"""Sparse (quasi-)probability distributions over measured bitstrings.

Keys are integers. Bit ``n_bits - 1 - i`` of a key is the ``i``-th measured
bit, so ``format(key, f"0{n_bits}b")`` reads left to right in ascending
measured-qubit order.
"""
from __future__ import annotations

import math
from typing import Iterable, Mapping

import numpy as np

NORM_TOL = 1e-9


class Distribution:
    """Immutable map from outcome keys to weights.

    Built either from a mapping or, for up to 63 bits, from parallel key/value
    arrays; the dict view is materialized on first use.
    """

    __slots__ = ("n_bits", "_probs", "_keys", "_values")

    def __init__(self, n_bits: int, probs: Mapping[int, float] | None = None):
        self.n_bits = int(n_bits)
        probs = dict(probs or {})
        limit = 1 << self.n_bits
        for key in probs:
            if not 0 <= key < limit:
                raise ValueError(f"key {key} does not fit in {self.n_bits} bits")
        self._probs = probs
        self._keys = None
        self._values = None

    @classmethod
    def from_arrays(cls, n_bits: int, keys: np.ndarray, values: np.ndarray) -> "Distribution":
        if n_bits > 63:
            return cls(n_bits, dict(zip(np.asarray(keys).tolist(), np.asarray(values).tolist())))
        keys = np.asarray(keys, dtype=np.int64)
        values = np.asarray(values, dtype=float)
        if keys.shape != values.shape:
            raise ValueError("keys and values differ in shape")
        if keys.size and (keys.min() < 0 or keys.max() >= (1 << n_bits)):
            raise ValueError(f"key does not fit in {n_bits} bits")
        d = cls.__new__(cls)
        d.n_bits, d._probs, d._keys, d._values = int(n_bits), None, keys, values
        return d

    @classmethod
    def point(cls, n_bits: int, key: int = 0) -> "Distribution":
        return cls(n_bits, {key: 1.0})

    @classmethod
    def from_dense(cls, values: np.ndarray, n_bits: int | None = None, prune: float = 0.0) -> "Distribution":
        values = np.asarray(values, dtype=float).reshape(-1)
        if n_bits is None:
            n_bits = int(values.size).bit_length() - 1
        if values.size != 1 << n_bits:
            raise ValueError("dense vector length must be 2**n_bits")
        idx = np.flatnonzero(np.abs(values) > prune)
        return cls.from_arrays(n_bits, idx, values[idx])

    @classmethod
    def from_counts(cls, n_bits: int, counts: Mapping[int, int]) -> "Distribution":
        total = sum(counts.values())
        if total <= 0:
            raise ValueError("counts are empty")
        return cls(n_bits, {k: c / total for k, c in sorted(counts.items())})

    @classmethod
    def from_bitstrings(cls, probs: Mapping[str, float]) -> "Distribution":
        widths = {len(k) for k in probs}
        if len(widths) > 1:
            raise ValueError("bitstrings of mixed length")
        n_bits = widths.pop() if widths else 0
        return cls(n_bits, {int(k, 2) if k else 0: float(v) for k, v in probs.items()})

    @property
    def probs(self) -> dict[int, float]:
        if self._probs is None:
            self._probs = dict(zip(self._keys.tolist(), self._values.tolist()))
        return self._probs

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """(keys, values) as int64/float arrays; only for n_bits <= 63."""
        if self.n_bits > 63:
            raise ValueError("array view needs n_bits <= 63")
        if self._keys is None:
            p = self._probs
            self._keys = np.fromiter(p.keys(), dtype=np.int64, count=len(p))
            self._values = np.fromiter(p.values(), dtype=float, count=len(p))
        return self._keys, self._values

    def to_dense(self) -> np.ndarray:
        out = np.zeros(1 << self.n_bits)
        keys, values = self.arrays()
        np.add.at(out, keys, values)
        return out

    def bitstring(self, key: int) -> str:
        return format(key, f"0{self.n_bits}b") if self.n_bits else ""

    def to_bitstrings(self) -> dict[str, float]:
        return {self.bitstring(k): v for k, v in sorted(self.probs.items())}

    def get(self, key: int, default: float = 0.0) -> float:
        return self.probs.get(key, default)

    def items(self):
        return self.probs.items()

    def total(self) -> float:
        if self._probs is None:
            return math.fsum(self._values.tolist())
        return math.fsum(self._probs.values())

    def is_normalized(self, tol: float = NORM_TOL) -> bool:
        return abs(self.total() - 1.0) <= tol and all(v >= -tol for v in self.probs.values())

    def negativity(self) -> float:
        return math.fsum(-v for v in self.probs.values() if v < 0)

    def marginal(self, bits: Iterable[int]) -> "Distribution":
        """Marginal over the given bit positions (0 = leftmost), kept in given order."""
        bits = list(bits)
        out: dict[int, float] = {}
        for key, v in self.probs.items():
            sub = 0
            for b in bits:
                sub = (sub << 1) | ((key >> (self.n_bits - 1 - b)) & 1)
            out[sub] = out.get(sub, 0.0) + v
        return Distribution(len(bits), out)

    def qubit_marginals(self) -> np.ndarray:
        """Array of shape (n_bits, 2) with per-bit marginals."""
        out = np.zeros((self.n_bits, 2))
        if 0 < self.n_bits <= 63:
            keys, values = self.arrays()
            shifts = np.arange(self.n_bits - 1, -1, -1, dtype=np.int64)
            bits = (keys[:, None] >> shifts) & 1
            out[:, 1] = values @ bits
            out[:, 0] = values.sum() - out[:, 1]
            return out
        for key, v in self.probs.items():
            for i in range(self.n_bits):
                out[i, (key >> (self.n_bits - 1 - i)) & 1] += v
        return out

    def pruned(self, tol: float = 1e-12) -> "Distribution":
        return Distribution(self.n_bits, {k: v for k, v in self.probs.items() if abs(v) > tol})

    def __len__(self) -> int:
        return len(self._keys) if self._probs is None else len(self._probs)

    def __getitem__(self, key: int) -> float:
        return self.probs.get(key, 0.0)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Distribution):
            return NotImplemented
        return self.n_bits == other.n_bits and self.probs == other.probs

    def __repr__(self) -> str:
        body = ", ".join(f"{self.bitstring(k)}: {v:.6g}" for k, v in sorted(self.probs.items())[:8])
        more = ", ..." if len(self) > 8 else ""
        return f"Distribution({self.n_bits} bits, {{{body}{more}}})"


def total_variation(p: Distribution, q: Distribution) -> float:
    if p.n_bits != q.n_bits:
        raise ValueError(f"width mismatch: {p.n_bits} vs {q.n_bits} bits")
    keys = set(p.probs) | set(q.probs)
    return 0.5 * math.fsum(abs(p[k] - q[k]) for k in keys)
