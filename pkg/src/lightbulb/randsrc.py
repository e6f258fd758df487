"""Randomness: a reproducible word stream, pairwise-independent signs, and
bits harvested from input vectors.

The word stream is numpy's Philox-4x64 counter-based generator keyed by the
64-bit seed, read through ``random_raw`` only. Every derived quantity
(bounded integers, permutations, signs, Gaussians) is computed here from raw
words, so the output does not depend on numpy's distribution code and is
identical on every platform.

Split rule: sub-stream ``i`` of seed ``s`` is Philox keyed by ``s`` advanced
by ``(i + 1) * 2**128`` steps (``Philox.jumped``). Sub-streams never overlap
the parent or each other.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError, UsageError

_U64 = (1 << 64) - 1
_TWO_PI = 2.0 * np.pi


class SeededStream:
    def __init__(self, seed: int, _bitgen: np.random.Philox | None = None):
        if not 0 <= int(seed) <= _U64:
            raise UsageError(f"seed must be an unsigned 64-bit integer, got {seed}")
        self.seed = int(seed)
        self._bitgen = _bitgen if _bitgen is not None else np.random.Philox(key=self.seed)

    def split(self, index: int) -> SeededStream:
        if index < 0:
            raise UsageError("sub-stream index must be non-negative")
        root = np.random.Philox(key=self.seed)
        return SeededStream(self.seed, root.jumped(index + 1))

    def words(self, count: int) -> np.ndarray:
        if count <= 0:
            return np.zeros(0, dtype=np.uint64)
        return np.asarray(self._bitgen.random_raw(count), dtype=np.uint64)

    def below(self, bound: int, count: int) -> np.ndarray:
        """``count`` unbiased integers in ``[0, bound)`` by masked rejection."""
        if bound <= 0:
            raise UsageError("bound must be positive")
        if bound == 1:
            return np.zeros(count, dtype=np.int64)
        mask = np.uint64((1 << (bound - 1).bit_length()) - 1)
        out = self.words(count) & mask
        bad = np.flatnonzero(out >= np.uint64(bound))
        while bad.size:
            out[bad] = self.words(bad.size) & mask
            bad = bad[out[bad] >= np.uint64(bound)]
        return out.astype(np.int64)

    def permutation(self, n: int) -> np.ndarray:
        # stable argsort of 64-bit keys; key ties fall back to index order
        return np.argsort(self.words(n), kind="stable").astype(np.int64)

    def sample(self, n: int, k: int) -> np.ndarray:
        """``k`` distinct values from ``range(n)`` in random order."""
        if not 0 <= k <= n:
            raise UsageError(f"cannot sample {k} of {n}")
        return self.permutation(n)[:k]

    def signs(self, count: int) -> np.ndarray:
        bits = (self.words(count) >> np.uint64(63)).astype(np.int8)
        return (2 * bits - 1).astype(np.int8)

    def uniforms(self, count: int) -> np.ndarray:
        """Doubles in (0, 1]: top 53 bits of each word, plus one ulp."""
        w = self.words(count) >> np.uint64(11)
        return (w.astype(np.float64) + 1.0) * 2.0**-53

    def gaussians(self, count: int) -> np.ndarray:
        """Standard normals by Box-Muller; each pair of words yields two values."""
        pairs = (count + 1) // 2
        u = self.uniforms(2 * pairs).reshape(pairs, 2)
        radius = np.sqrt(-2.0 * np.log(u[:, 0]))
        angle = _TWO_PI * u[:, 1]
        out = np.empty((pairs, 2))
        out[:, 0] = radius * np.cos(angle)
        out[:, 1] = radius * np.sin(angle)
        return out.reshape(-1)[:count]


def seeded_stream(seed: int) -> SeededStream:
    return SeededStream(seed)


@dataclass(frozen=True)
class PairwiseSigns:
    """Signs ``a^k = prod_{i in I(k)} base_i`` for ``1 <= k <= 2**ell - 1``,
    where ``I(k)`` is the set of bit positions of ``k`` (bit 0 is base 1).

    Any two distinct outputs are jointly uniform over {-1, 1}^2 when the base
    signs are uniform.
    """

    ell: int
    base: tuple[int, ...]
    _negmask: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.ell < 1 or len(self.base) != self.ell:
            raise UsageError("need ell >= 1 base signs")
        if any(b not in (1, -1) for b in self.base):
            raise UsageError("base signs must be +1 or -1")
        object.__setattr__(
            self, "_negmask", sum(1 << i for i, b in enumerate(self.base) if b == -1)
        )

    @property
    def size(self) -> int:
        return (1 << self.ell) - 1

    def __len__(self) -> int:
        return self.size

    def __getitem__(self, k: int) -> int:
        if not 1 <= k <= self.size:
            raise UsageError(f"sign index {k} outside [1, {self.size}]")
        return -1 if (k & self._negmask).bit_count() & 1 else 1

    def take(self, indices) -> np.ndarray:
        idx = np.asarray(indices, dtype=np.uint64)
        if idx.size and (idx.min() < 1 or idx.max() > self.size):
            raise UsageError(f"sign indices must lie in [1, {self.size}]")
        parity = np.bitwise_count(idx & np.uint64(self._negmask)) & 1
        return (1 - 2 * parity.astype(np.int8)).astype(np.int8)

    def for_vectors(self, count: int) -> np.ndarray:
        """Signs for vectors of rank 0..count-1 (vector rank x uses index x+1)."""
        return self.take(np.arange(1, count + 1))


def pairwise_signs(ell: int, base_bits) -> PairwiseSigns:
    return PairwiseSigns(int(ell), tuple(int(b) for b in base_bits))


def sign_index_bits(count: int) -> int:
    """Smallest ell whose family covers ``count`` vectors: ceil(log2(count + 1))."""
    return max(1, int(count).bit_length())


class BitPool:
    """Signs consumed strictly in order; each bit is handed out once."""

    def __init__(self, bits: np.ndarray):
        self.bits = np.asarray(bits, dtype=np.int8)
        self.bits.setflags(write=False)
        self.cursor = 0

    def __len__(self) -> int:
        return int(self.bits.size)

    @property
    def remaining(self) -> int:
        return len(self) - self.cursor

    def take(self, count: int) -> np.ndarray:
        if count > self.remaining:
            raise ParameterError(
                f"bit pool exhausted: need {count}, have {self.remaining} of {len(self)}; "
                "increase the holdout size"
            )
        out = self.bits[self.cursor : self.cursor + count]
        self.cursor += count
        return out


def harvest_bits(vectors, indices) -> BitPool:
    """Coordinates of the selected vectors, vector-major then coordinate order."""
    idx = np.asarray(indices, dtype=np.int64)
    if idx.size == 0:
        raise UsageError("no vectors selected for harvesting")
    return BitPool(vectors.signs(idx).reshape(-1))


class StreamSigns:
    """Base-bit source backed by a seeded stream."""

    def __init__(self, stream: SeededStream):
        self.stream = stream

    def take(self, count: int) -> np.ndarray:
        return self.stream.signs(count)
