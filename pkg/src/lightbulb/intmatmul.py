"""Exact integer matrix products with a-priori width selection.

Every product carries a magnitude bound ``inner * bound_a * bound_b``; the
entry representation is chosen from that bound before any arithmetic:

* up to 24 bits: float32 BLAS (every partial sum is an integer below 2**24)
* up to 53 bits: float64 BLAS (same argument at 2**53)
* up to 63 bits: int64
* otherwise: Python integers in object arrays

so no entry can overflow or round.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import UsageError

DEFAULT_CROSSOVER = 128
_BACKEND_LIMITS = (("float32", 24), ("float64", 53), ("int64", 63))


@dataclass
class MatmulCounter:
    muladds: int = 0
    calls: int = 0
    dims: list = field(default_factory=list)
    max_dims: int = 64  # keep reports small

    def record(self, a: int, b: int, c: int, muladds: int | None = None):
        self.calls += 1
        self.muladds += a * b * c if muladds is None else muladds
        if len(self.dims) < self.max_dims:
            self.dims.append([a, b, c])


@dataclass(eq=False)
class IntMatrix:
    data: np.ndarray
    magnitude_bound: int

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.ndim != 2:
            raise UsageError("IntMatrix must be 2-d")
        if arr.dtype.kind not in "iuO":
            raise UsageError(f"IntMatrix entries must be integers, got {arr.dtype}")
        self.data = arr
        self.magnitude_bound = int(self.magnitude_bound)

    @classmethod
    def of(cls, values, bound: int | None = None) -> IntMatrix:
        arr = np.asarray(values)
        if arr.dtype.kind == "f":
            if not np.all(np.isfinite(arr)) or np.any(arr != np.rint(arr)):
                raise UsageError("IntMatrix.of needs integer-valued entries")
            arr = arr.astype(np.int64)
        out = cls(arr, 0 if bound is None else bound)
        if bound is None:
            out.magnitude_bound = int(np.abs(arr).max()) if arr.size else 0
        elif not out.check_bound():
            raise UsageError(f"entries exceed the declared bound {bound}")
        return out

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self):
        return self.data.shape

    @property
    def T(self) -> IntMatrix:
        return IntMatrix(self.data.T, self.magnitude_bound)

    def check_bound(self) -> bool:
        if self.data.size == 0:
            return True
        return int(np.abs(self.data).max()) <= self.magnitude_bound

    def __eq__(self, other) -> bool:
        if not isinstance(other, IntMatrix):
            return NotImplemented
        return self.shape == other.shape and bool(np.all(self.data == other.data))

    def tolist(self) -> list[list[int]]:
        return [[int(v) for v in row] for row in self.data]


def predict_width(a: int, b: int, c: int, bound1: int, bound2: int) -> int:
    """Bits for a signed entry of an (a x b)(b x c) product: magnitude bits of
    b * bound1 * bound2, plus one sign bit."""
    if min(a, b, c) < 0 or bound1 < 0 or bound2 < 0:
        raise UsageError("dimensions and bounds must be non-negative")
    return (b * bound1 * bound2).bit_length() + 1


def select_backend(width: int) -> str:
    for name, bits in _BACKEND_LIMITS:
        if width <= bits + 1:  # width counts the sign bit
            return name
    return "object"


def _to_backend(arr: np.ndarray, backend: str) -> np.ndarray:
    if backend == "object":
        if arr.dtype == object:
            return arr
        return arr.astype(np.int64).astype(object)
    return arr.astype(backend, copy=False)


def _from_backend(arr: np.ndarray, backend: str, bound: int) -> np.ndarray:
    if backend in ("float32", "float64"):
        return np.rint(arr).astype(np.int64)
    if backend == "object" and bound < 2**63:
        return arr.astype(np.int64)
    return arr


_F32_LIMIT = 1 << 24
_MIN_F32_CHUNK = 1024


def _f32_chunk(ba: int, bb: int) -> int:
    """Inner-dimension chunk whose partial sums stay exact in float32 (0 if
    chunks would be too short to pay off)."""
    step = (_F32_LIMIT - 1) // max(1, ba * bb)
    return step if step >= _MIN_F32_CHUNK else 0


def _chunked_f32(a, b, step: int, same: bool) -> np.ndarray:
    """Exact float64 result from float32 products over inner chunks; each
    chunk's sums are below 2**24 and the running total below 2**53."""
    a32 = a.astype(np.float32)
    b32 = a32.T if same else b.astype(np.float32)
    out = None
    for k0 in range(0, a32.shape[1], step):
        x = a32[:, k0 : k0 + step]  # strided view; BLAS takes it as is
        part = x @ x.T if same else x @ b32[k0 : k0 + step]
        out = part.astype(np.float64) if out is None else out + part
    return out


def _classical(a: np.ndarray, b: np.ndarray, ba: int, bb: int, counter, raw: bool = False) -> np.ndarray:
    m, k = a.shape
    n = b.shape[1]
    bound = k * ba * bb
    backend = select_backend(bound.bit_length() + 1)
    if raw and a.dtype == np.float64 and backend == "float32":
        backend = "float64"  # already widened by the caller
    step = _f32_chunk(ba, bb) if backend == "float64" else 0
    if step and step < k:
        out = _chunked_f32(a, b, step, same=False)
    else:
        out = _to_backend(a, backend) @ _to_backend(b, backend)
    if counter is not None:
        counter.record(m, k, n)
    return out if raw else _from_backend(out, backend, bound)


def _gram(x: np.ndarray, bx: int, counter) -> np.ndarray:
    """Exact ``x @ x.T`` through the symmetric (syrk) BLAS kernel when possible."""
    m, k = x.shape
    bound = k * bx * bx
    backend = select_backend(bound.bit_length() + 1)
    step = _f32_chunk(bx, bx) if backend == "float64" else 0
    if step and step < k:
        out = _chunked_f32(x, None, step, same=True)
    elif backend in ("float32", "float64"):
        xf = np.ascontiguousarray(x, dtype=backend)
        out = xf @ xf.T
    else:
        xo = _to_backend(x, backend)
        out = xo @ xo.T
    if counter is not None:
        counter.record(m, k, m)
    return _from_backend(out, backend, bound)


def weighted_gram(A: IntMatrix, weights, *, counter: MatmulCounter | None = None) -> IntMatrix:
    """Exact ``A diag(weights) A^T``, i.e. ``A @ B.T`` for B = A scaled
    column-wise by ``weights``, computed as one symmetric product per
    distinct weight."""
    w = np.asarray(weights)
    if w.shape != (A.cols,):
        raise UsageError("need one weight per column")
    if w.dtype == object:
        values = sorted(set(int(v) for v in w))
        keys = w
    else:
        values = [int(v) for v in np.unique(w)]
        keys = w
    wmax = max((abs(v) for v in values), default=0)
    bound = A.cols * A.magnitude_bound * A.magnitude_bound * wmax
    wide = bound >= 2**63
    out = np.zeros((A.rows, A.rows), dtype=object if wide else np.int64)
    for value in values:
        if value == 0:
            continue
        cols = np.flatnonzero(keys == value)
        if cols[-1] - cols[0] + 1 == len(cols):
            x = A.data[:, cols[0] : cols[-1] + 1]  # contiguous run, no copy
        else:
            x = A.data[:, cols]
        g = _gram(x, A.magnitude_bound, counter)
        out += (g.astype(object) if wide else g) * value
    return IntMatrix(out, bound)
def _pad_even(x: np.ndarray) -> np.ndarray:
    r, c = x.shape
    if r % 2 == 0 and c % 2 == 0:
        return x
    out = np.zeros((r + r % 2, c + c % 2), dtype=x.dtype)
    out[:r, :c] = x
    return out


def _strassen(a: np.ndarray, b: np.ndarray, ba: int, bb: int, crossover: int, counter) -> np.ndarray:
    m, k = a.shape
    n = b.shape[1]
    if min(m, k, n) <= crossover:
        # float64 operands only arrive when the whole recursion fits in 53 bits
        return _classical(a, b, ba, bb, counter, raw=a.dtype == np.float64)
    a2, b2 = _pad_even(a), _pad_even(b)
    hm, hk = a2.shape[0] // 2, a2.shape[1] // 2
    hn = b2.shape[1] // 2
    a11, a12, a21, a22 = a2[:hm, :hk], a2[:hm, hk:], a2[hm:, :hk], a2[hm:, hk:]
    b11, b12, b21, b22 = b2[:hk, :hn], b2[:hk, hn:], b2[hk:, :hn], b2[hk:, hn:]
    # operand sums double the entry bound
    sa, sb = 2 * ba, 2 * bb
    rec = lambda x, y, bx, by: _strassen(x, y, bx, by, crossover, counter)  # noqa: E731
    m1 = rec(a11 + a22, b11 + b22, sa, sb)
    m2 = rec(a21 + a22, b11, sa, bb)
    m3 = rec(a11, b12 - b22, ba, sb)
    m4 = rec(a22, b21 - b11, ba, sb)
    m5 = rec(a11 + a12, b22, sa, bb)
    m6 = rec(a21 - a11, b11 + b12, sa, sb)
    m7 = rec(a12 - a22, b21 + b22, sa, sb)
    dtype = object if object in (m1.dtype, m2.dtype, m3.dtype, m4.dtype) else m1.dtype
    out = np.empty((2 * hm, 2 * hn), dtype=dtype)
    out[:hm, :hn] = m1 + m4 - m5 + m7
    out[:hm, hn:] = m3 + m5
    out[hm:, :hn] = m2 + m4
    out[hm:, hn:] = m1 - m2 + m3 + m6
    return out[:m, :n]


def _strassen_dtype(a: IntMatrix, b: IntMatrix, crossover: int):
    """Narrowest exact representation for every Strassen intermediate:
    integer-valued float64, int64, or Python integers."""
    levels = 0
    size = min(a.rows, a.cols, b.cols)
    while size > crossover:
        size = (size + 1) // 2
        levels += 1
    # each level doubles both operand bounds; combining adds at most 4 terms
    bound = a.cols * a.magnitude_bound * b.magnitude_bound * 4 ** (levels + 1)
    if bound < 2**53:
        return np.float64
    return np.int64 if bound < 2**62 else object


def _square_blocks(a: np.ndarray, b: np.ndarray, fn):
    """Split a rectangular product into near-square block products."""
    m, k = a.shape
    n = b.shape[1]
    side = min(m, k, n)
    out = None
    for i0 in range(0, m, side):
        row_parts = []
        for j0 in range(0, n, side):
            acc = None
            for k0 in range(0, k, side):
                part = fn(a[i0 : i0 + side, k0 : k0 + side], b[k0 : k0 + side, j0 : j0 + side])
                acc = part if acc is None else acc + part
            row_parts.append(acc)
        row = np.hstack(row_parts)
        out = row if out is None else np.vstack([out, row])
    return out


def matmul(
    A: IntMatrix,
    B: IntMatrix,
    algorithm: str = "auto",
    *,
    crossover: int = DEFAULT_CROSSOVER,
    counter: MatmulCounter | None = None,
) -> IntMatrix:
    """Exact product ``A @ B``.

    ``auto`` runs Strassen when every dimension exceeds ``crossover`` and the
    classical product otherwise. Strassen pads odd dimensions to even at each
    level and handles rectangular shapes as a grid of near-square blocks.
    """
    if A.cols != B.rows:
        raise UsageError(f"inner dimensions differ: {A.shape} @ {B.shape}")
    if algorithm not in ("classical", "strassen", "auto"):
        raise UsageError(f"unknown algorithm {algorithm!r}")
    bound = A.cols * A.magnitude_bound * B.magnitude_bound
    if A.rows == 0 or B.cols == 0 or A.cols == 0:
        dtype = np.int64 if bound < 2**63 else object
        return IntMatrix(np.zeros((A.rows, B.cols), dtype=dtype), bound)
    use_strassen = algorithm == "strassen" or (
        algorithm == "auto" and min(A.rows, A.cols, B.cols) > crossover
    )
    if not use_strassen:
        return IntMatrix(_classical(A.data, B.data, A.magnitude_bound, B.magnitude_bound, counter), bound)

    dtype = _strassen_dtype(A, B, crossover)
    a = A.data.astype(dtype) if A.data.dtype != dtype else A.data
    b = B.data.astype(dtype) if B.data.dtype != dtype else B.data
    ba, bb = A.magnitude_bound, B.magnitude_bound
    fn = lambda x, y: _strassen(x, y, ba, bb, crossover, counter)  # noqa: E731
    out = _square_blocks(a, b, fn)
    if out.dtype == np.float64:
        out = np.rint(out).astype(np.int64)
    elif out.dtype == object and bound < 2**63:
        out = out.astype(np.int64)
    return IntMatrix(out, bound)


def matmul_batch(
    a: np.ndarray,
    b: np.ndarray,
    bound_a: int,
    bound_b: int,
    *,
    counter: MatmulCounter | None = None,
    raw: bool = False,
) -> np.ndarray:
    """Classical exact products of stacked matrices, ``a[i] @ b[i]``.

    With ``raw`` the result stays in the backend dtype (integer-valued floats
    on the BLAS paths) so callers can gather before converting.
    """
    if a.ndim != 3 or b.ndim != 3 or a.shape[0] != b.shape[0] or a.shape[2] != b.shape[1]:
        raise UsageError(f"incompatible batch shapes {a.shape} and {b.shape}")
    batch, m, k = a.shape
    n = b.shape[2]
    bound = k * bound_a * bound_b
    backend = select_backend(bound.bit_length() + 1)
    out = np.matmul(_to_backend(a, backend), _to_backend(b, backend))
    if counter is not None:
        for _ in range(batch):
            counter.record(m, k, n)
    return out if raw else _from_backend(out, backend, bound)
