"""Planted-correlation instance generators and the instance file formats.

Binary layout (little-endian)::

    magic "LBP1" | u8 kind | u32 n | u32 d | f64 rho | f64 tau | f64 promise_w
    | u64 seed | u32 q | q x (u32, u32) planted pairs
    | n * ceil(d/64) u64 payload words | u32 CRC32 of everything before it

``n`` is the number of stored rows; a findcorr instance over two sets of
``n`` vectors stores ``2n`` rows with X first. Planted pairs live in the
header only, never in the payload the solvers read.
"""
from __future__ import annotations

import math
import struct
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corevec import PackedVectorSet, _padding_mask, inner_products, words_per_row
from .errors import FormatError, GenerationError, UsageError
from .exact import ceil_times, to_fraction
from .randsrc import SeededStream

MAGIC = b"LBP1"
KINDS = ("lightbulb", "promise", "findcorr")
_HEADER = struct.Struct("<4sBIIdddQI")
_PAIR = struct.Struct("<II")
_CRC = struct.Struct("<I")


@dataclass(eq=False)
class Instance:
    vectors: PackedVectorSet
    kind: str
    rho: float
    planted: list[tuple[int, int]]
    tau: float = 0.0
    promise_w: float = 0.0
    seed: int = 0
    # realized max |<x, y>| over non-planted pairs, when the generator scanned
    background_max: int | None = field(default=None, repr=False)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Instance):
            return NotImplemented
        return (
            self.vectors == other.vectors
            and self.kind == other.kind
            and self.rho == other.rho
            and self.tau == other.tau
            and self.promise_w == other.promise_w
            and self.seed == other.seed
            and [tuple(p) for p in self.planted] == [tuple(p) for p in other.planted]
        )

    @property
    def n(self) -> int:
        """Vectors per side: all rows, or half of them for findcorr."""
        return self.vectors.n // 2 if self.kind == "findcorr" else self.vectors.n

    @property
    def d(self) -> int:
        return self.vectors.d

    def summary(self) -> str:
        parts = [f"kind={self.kind}", f"n={self.n}", f"d={self.d}", f"rho={self.rho}"]
        if self.kind == "promise":
            parts.append(f"w={self.promise_w}")
        if self.kind == "findcorr":
            parts.append(f"tau={self.tau}")
        parts.append(f"seed={self.seed}")
        parts.append("planted=" + ",".join(f"{a}:{b}" for a, b in self.planted))
        if self.background_max is not None:
            parts.append(f"background_max={self.background_max}")
        return " ".join(parts)


def _check_common(n: int, d: int, rho: float):
    if n < 2:
        raise UsageError("n must be at least 2")
    if d < 1:
        raise UsageError("d must be at least 1")
    if not 0 < rho <= 1:
        raise UsageError(f"rho must lie in (0, 1], got {rho}")


def agreement_count(d: int, rho: float) -> int:
    """Coordinates on which a planted partner agrees: ceil((1 + rho) d / 2)."""
    return ceil_times(1 + to_fraction(rho), d, 2)


def planted_inner_product(d: int, rho: float) -> int:
    return 2 * agreement_count(d, rho) - d


def _random_rows(stream: SeededStream, count: int, d: int) -> np.ndarray:
    w = words_per_row(d)
    rows = stream.words(count * w).reshape(count, w)
    rows[:, -1] &= _padding_mask(d)
    return rows


def _flip_mask(stream: SeededStream, d: int, rho: float) -> np.ndarray:
    flips = stream.sample(d, d - agreement_count(d, rho))
    bits = np.zeros(words_per_row(d) * 64, dtype=bool)
    bits[flips] = True
    return np.packbits(bits, bitorder="little").view("<u8")


def _draw_lightbulb(stream: SeededStream, n: int, d: int, rho: float):
    rows = _random_rows(stream, n, d)
    p, q = (int(v) for v in stream.sample(n, 2))
    rows[q] = rows[p] ^ _flip_mask(stream, d, rho)
    return PackedVectorSet(n, d, rows), (min(p, q), max(p, q))


def gen_lightbulb(n: int, d: int, rho: float, seed: int) -> Instance:
    _check_common(n, d, rho)
    vectors, pair = _draw_lightbulb(SeededStream(seed), n, d, rho)
    return Instance(vectors, "lightbulb", float(rho), [pair], seed=int(seed))


def promise_bound(n: int, d: int, w: float) -> float:
    return w * math.sqrt(d * math.log(n))


def background_max(vectors: PackedVectorSet, planted, rows_a=None, rows_b=None) -> int:
    """max |<x, y>| over distinct pairs of the selection that are not planted."""
    a = np.arange(vectors.n) if rows_a is None else np.asarray(rows_a)
    b = a if rows_b is None else np.asarray(rows_b)
    g = np.abs(inner_products(vectors, a, b))
    g[a[:, None] == b[None, :]] = -1
    pos_a = {int(v): k for k, v in enumerate(a)}
    pos_b = {int(v): k for k, v in enumerate(b)}
    for x, y in planted:
        for u, v in ((x, y), (y, x)):
            if u in pos_a and v in pos_b:
                g[pos_a[u], pos_b[v]] = -1
    return int(g.max()) if g.size else 0


def gen_promise(
    n: int, d: int, rho: float, w: float, seed: int, max_retries: int = 5
) -> Instance:
    """Light Bulb draws, rejected until every non-planted pair has
    ``|<x, y>| <= w sqrt(d ln n)``."""
    _check_common(n, d, rho)
    if w <= 0:
        raise UsageError("w must be positive")
    bound = promise_bound(n, d, w)
    root = SeededStream(seed)
    for attempt in range(max(1, max_retries)):
        stream = root if attempt == 0 else root.split(attempt)
        vectors, pair = _draw_lightbulb(stream, n, d, rho)
        bg = background_max(vectors, [pair]) if n > 2 else 0
        if bg <= bound:
            return Instance(
                vectors, "promise", float(rho), [pair],
                promise_w=float(w), seed=int(seed), background_max=bg,
            )
    raise GenerationError(
        f"promise |<x,y>| <= {bound:.2f} not met in {max_retries} draws (n={n}, d={d}, w={w})"
    )


def gen_findcorr(
    n: int, d: int, rho: float, tau: float, q: int, seed: int, max_retries: int = 100
) -> Instance:
    """Two sets X (rows 0..n-1) and Y (rows n..2n-1) with ``q`` planted cross
    pairs; offending background vectors are redrawn until every other cross
    pair has ``|<x, y>| <= ceil(tau d)``."""
    _check_common(n, d, rho)
    if not 0 < tau < rho:
        raise UsageError("need 0 < tau < rho")
    if not 1 <= q <= n:
        raise UsageError(f"q must lie in [1, n], got {q}")
    limit = ceil_times(tau, d)
    stream = SeededStream(seed)
    xs = _random_rows(stream, n, d)
    ys = _random_rows(stream, n, d)
    xp = [int(v) for v in stream.sample(n, q)]
    yp = [int(v) for v in stream.sample(n, q)]
    for a, b in zip(xp, yp):
        ys[b] = xs[a] ^ _flip_mask(stream, d, rho)
    x_planted = {a: k for k, a in enumerate(xp)}
    y_planted = {b: k for k, b in enumerate(yp)}

    for _ in range(max(1, max_retries)):
        vectors = PackedVectorSet(2 * n, d, np.vstack([xs, ys]))
        g = np.abs(inner_products(vectors, np.arange(n), np.arange(n, 2 * n)))
        g[xp, yp] = -1
        bad_a, bad_b = np.nonzero(g > limit)
        if bad_a.size == 0:
            planted = sorted((a, n + b) for a, b in zip(xp, yp))
            return Instance(
                vectors, "findcorr", float(rho), planted,
                tau=float(tau), seed=int(seed), background_max=int(g.max()),
            )
        redraw_x, redraw_y, redraw_pairs = set(), set(), set()
        for a, b in zip(bad_a.tolist(), bad_b.tolist()):
            if b not in y_planted:
                redraw_y.add(b)
            elif a not in x_planted:
                redraw_x.add(a)
            else:
                redraw_pairs.add(y_planted[b])
        for b in sorted(redraw_y):
            ys[b] = _random_rows(stream, 1, d)[0]
        for a in sorted(redraw_x):
            xs[a] = _random_rows(stream, 1, d)[0]
        for k in sorted(redraw_pairs):
            xs[xp[k]] = _random_rows(stream, 1, d)[0]
            ys[yp[k]] = xs[xp[k]] ^ _flip_mask(stream, d, rho)
    raise GenerationError(
        f"background bound |<x,y>| <= {limit} not reached after {max_retries} resampling passes"
    )


def generate(kind: str, **kw) -> Instance:
    if kind == "lightbulb":
        return gen_lightbulb(kw["n"], kw["d"], kw["rho"], kw["seed"])
    if kind == "promise":
        return gen_promise(kw["n"], kw["d"], kw["rho"], kw["w"], kw["seed"], kw.get("max_retries", 5))
    if kind == "findcorr":
        return gen_findcorr(
            kw["n"], kw["d"], kw["rho"], kw["tau"], kw["q"], kw["seed"], kw.get("max_retries", 100)
        )
    raise UsageError(f"unknown instance kind {kind!r}")


# -- binary format -----------------------------------------------------------


def instance_to_bytes(inst: Instance) -> bytes:
    vs = inst.vectors
    head = _HEADER.pack(
        MAGIC, KINDS.index(inst.kind), vs.n, vs.d,
        float(inst.rho), float(inst.tau), float(inst.promise_w),
        int(inst.seed), len(inst.planted),
    )
    pairs = b"".join(_PAIR.pack(int(a), int(b)) for a, b in inst.planted)
    body = head + pairs + vs.rows.astype("<u8").tobytes()
    return body + _CRC.pack(zlib.crc32(body))


def instance_from_bytes(data: bytes) -> Instance:
    if len(data) < _HEADER.size + _CRC.size:
        raise FormatError("file too short for header")
    magic, kind, n, d, rho, tau, w, seed, q = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}")
    if kind >= len(KINDS):
        raise FormatError(f"unknown kind code {kind}")
    if n < 1 or d < 1:
        raise FormatError("empty instance")
    words = words_per_row(d)
    expected = _HEADER.size + q * _PAIR.size + n * words * 8 + _CRC.size
    if len(data) != expected:
        raise FormatError(f"expected {expected} bytes, got {len(data)}")
    (crc,) = _CRC.unpack_from(data, len(data) - _CRC.size)
    if zlib.crc32(data[: -_CRC.size]) != crc:
        raise FormatError("checksum mismatch")
    off = _HEADER.size
    planted = [_PAIR.unpack_from(data, off + k * _PAIR.size) for k in range(q)]
    off += q * _PAIR.size
    rows = np.frombuffer(data, dtype="<u8", count=n * words, offset=off).reshape(n, words).copy()
    if np.any(rows[:, -1] & ~_padding_mask(d)):
        raise FormatError("nonzero padding bits")
    if any(not (0 <= a < n and 0 <= b < n) for a, b in planted):
        raise FormatError("planted index out of range")
    return Instance(
        PackedVectorSet(n, d, rows), KINDS[kind], rho,
        [(int(a), int(b)) for a, b in planted], tau=tau, promise_w=w, seed=seed,
    )


def write_instance(inst: Instance, path) -> None:
    Path(path).write_bytes(instance_to_bytes(inst))


def read_instance(path) -> Instance:
    return instance_from_bytes(Path(path).read_bytes())


# -- text format ---------------------------------------------------------------


def vectors_to_text(vs: PackedVectorSet) -> str:
    lines = [f"{vs.n} {vs.d}"]
    for row in vs.signs():
        lines.append(" ".join("1" if v > 0 else "-1" for v in row))
    return "\n".join(lines) + "\n"


def vectors_from_text(text: str) -> PackedVectorSet:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise FormatError("empty text instance")
    try:
        n, d = (int(v) for v in lines[0].split())
    except ValueError as exc:
        raise FormatError(f"bad header line {lines[0]!r}") from exc
    if len(lines) - 1 != n:
        raise FormatError(f"header declares {n} vectors, found {len(lines) - 1}")
    try:
        signs = np.array([[int(v) for v in ln.split()] for ln in lines[1:]], dtype=np.int64)
    except ValueError as exc:
        raise FormatError("non-integer entry") from exc
    if signs.shape != (n, d) or not np.all(np.abs(signs) == 1):
        raise FormatError("rows must hold exactly d entries of +1/-1")
    return PackedVectorSet.from_signs(signs)
