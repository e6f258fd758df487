"""Bit-packed {-1, 1} vectors and exact inner products.

Coordinate ``c`` of a row lives in bit ``c % 64`` of word ``c // 64``; a set
bit encodes +1 and a clear bit -1, so ``<x, y> = d - 2 * popcount(x ^ y)``.
Padding bits past ``d`` are always zero.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import UsageError

WORD_BITS = 64
# float32 sums of +-1 products are exact while |partial sum| < 2**24
_F32_EXACT_D = 1 << 24
_BLOCK_ROWS = 1024


def words_per_row(d: int) -> int:
    return (d + WORD_BITS - 1) // WORD_BITS


def _padding_mask(d: int) -> np.uint64:
    rem = d % WORD_BITS
    return np.uint64((1 << rem) - 1 if rem else (1 << 64) - 1)


@dataclass(frozen=True, eq=False)
class PackedVectorSet:
    n: int
    d: int
    rows: np.ndarray  # (n, words_per_row(d)) little-endian uint64

    def __post_init__(self):
        rows = np.ascontiguousarray(self.rows, dtype="<u8")
        if self.d < 1:
            raise UsageError("dimension must be at least 1")
        if rows.ndim != 2 or rows.shape != (self.n, words_per_row(self.d)):
            raise UsageError(
                f"rows must have shape ({self.n}, {words_per_row(self.d)}), got {rows.shape}"
            )
        if self.n < 1:
            raise UsageError("need at least one vector")
        if np.any(rows[:, -1] & ~_padding_mask(self.d)):
            raise UsageError("padding bits beyond d must be zero")
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)

    @classmethod
    def from_signs(cls, signs) -> PackedVectorSet:
        s = np.asarray(signs)
        if s.ndim != 2:
            raise UsageError("expected a 2-d array of signs")
        if not np.all((s == 1) | (s == -1)):
            raise UsageError("entries must be +1 or -1")
        n, d = s.shape
        nbytes = words_per_row(d) * 8
        packed = np.packbits(s > 0, axis=1, bitorder="little")
        buf = np.zeros((n, nbytes), dtype=np.uint8)
        buf[:, : packed.shape[1]] = packed
        return cls(n, d, buf.view("<u8"))

    def __eq__(self, other) -> bool:
        if not isinstance(other, PackedVectorSet):
            return NotImplemented
        return self.n == other.n and self.d == other.d and np.array_equal(self.rows, other.rows)

    def __len__(self) -> int:
        return self.n

    @property
    def words(self) -> int:
        return self.rows.shape[1]

    def signs(self, rows=None) -> np.ndarray:
        """Unpacked int8 +-1 matrix for the selected rows (all rows by default)."""
        sel = self.rows if rows is None else self.rows[np.asarray(rows, dtype=np.int64)]
        bits = np.unpackbits(sel.view(np.uint8), axis=-1, bitorder="little")
        bits = bits.reshape(*sel.shape[:-1], -1)[..., : self.d]
        return (2 * bits.astype(np.int8) - 1).astype(np.int8)

    def subset(self, rows) -> PackedVectorSet:
        idx = np.asarray(rows, dtype=np.int64)
        return PackedVectorSet(int(idx.size), self.d, self.rows[idx])

    def check_index(self, i: int) -> int:
        if not 0 <= int(i) < self.n:
            raise UsageError(f"vector index {i} out of range [0, {self.n})")
        return int(i)


def concat(*sets: PackedVectorSet) -> PackedVectorSet:
    d = sets[0].d
    if any(s.d != d for s in sets):
        raise UsageError("dimensions differ")
    return PackedVectorSet(sum(s.n for s in sets), d, np.vstack([s.rows for s in sets]))


def inner_product(vs: PackedVectorSet, i: int, j: int) -> int:
    i, j = vs.check_index(i), vs.check_index(j)
    diff = int(np.bitwise_count(vs.rows[i] ^ vs.rows[j]).sum())
    return vs.d - 2 * diff


def inner_products(vs: PackedVectorSet, rows_a=None, rows_b=None) -> np.ndarray:
    """Exact int64 Gram block between two row selections."""
    a = vs.signs(rows_a)
    b = a if rows_b is None and rows_a is None else vs.signs(rows_b)
    dtype = np.float32 if vs.d < _F32_EXACT_D else np.float64
    g = a.astype(dtype) @ b.astype(dtype).T
    return np.rint(g).astype(np.int64)


def brute_force_best_pair(vs: PackedVectorSet) -> tuple[tuple[int, int], int]:
    """Pair ``i < j`` maximising ``|<x_i, x_j>|``; ties go to the smallest (i, j).

    Returns the pair and its signed inner product.
    """
    if vs.n < 2:
        raise UsageError("need at least two vectors")
    dtype = np.float32 if vs.d < _F32_EXACT_D else np.float64
    s = vs.signs().astype(dtype)
    best_val = -1
    best = (0, 1)
    best_signed = 0
    for start in range(0, vs.n - 1, _BLOCK_ROWS):
        stop = min(start + _BLOCK_ROWS, vs.n - 1)
        g = np.rint(s[start:stop] @ s.T).astype(np.int64)
        rows = np.arange(start, stop)[:, None]
        cols = np.arange(vs.n)[None, :]
        mag = np.where(cols > rows, np.abs(g), -1)
        flat = int(np.argmax(mag))  # first maximum in row-major order
        r, c = divmod(flat, vs.n)
        if mag[r, c] > best_val:
            best_val = int(mag[r, c])
            best = (start + r, c)
            best_signed = int(g[r, c])
    return best, best_signed


def restricted_best_pair(
    vs: PackedVectorSet, indices_a, indices_b, threshold: int, *, absolute: bool = False
) -> tuple[int, int] | None:
    """First ``(a, b)`` in ``indices_a x indices_b`` order with ``a != b`` and
    ``<x_a, x_b> >= threshold`` (``|<x_a, x_b>|`` when ``absolute``)."""
    a = np.asarray(indices_a, dtype=np.int64)
    b = np.asarray(indices_b, dtype=np.int64)
    if a.size == 0 or b.size == 0:
        raise UsageError("index lists must be nonempty")
    for idx in (a, b):
        if idx.min() < 0 or idx.max() >= vs.n:
            raise UsageError("index out of range")
    g = inner_products(vs, a, b)
    if absolute:
        g = np.abs(g)
    ok = (g >= threshold) & (a[:, None] != b[None, :])
    hits = np.flatnonzero(ok)
    if hits.size == 0:
        return None
    r, c = divmod(int(hits[0]), b.size)
    return int(a[r]), int(b[c])


def pairs_at_least(
    vs: PackedVectorSet, indices_a, indices_b, threshold: int, *, absolute: bool = False
) -> list[tuple[int, int]]:
    """Every qualifying ``(a, b)`` with ``a != b``, in row-major order."""
    a = np.asarray(indices_a, dtype=np.int64)
    b = np.asarray(indices_b, dtype=np.int64)
    g = inner_products(vs, a, b)
    if absolute:
        g = np.abs(g)
    ok = (g >= threshold) & (a[:, None] != b[None, :])
    r, c = np.nonzero(ok)
    return [(int(a[i]), int(b[j])) for i, j in zip(r, c)]
