"""Random-hyperplane rounding from the unit sphere to {-1, 1}^d."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .corevec import PackedVectorSet
from .errors import FormatError, UsageError
from .randsrc import SeededStream

NORM_TOL = 1e-9
_COLUMN_CHUNK = 4096


@dataclass(frozen=True)
class SpherePointSet:
    points: np.ndarray  # (n, D) float64

    def __post_init__(self):
        p = np.asarray(self.points, dtype=np.float64)
        if p.ndim != 2 or p.shape[0] < 1 or p.shape[1] < 1:
            raise UsageError("points must be a nonempty (n, D) array")
        norms = np.linalg.norm(p, axis=1)
        bad = np.flatnonzero(np.abs(norms - 1.0) > NORM_TOL)
        if bad.size:
            raise UsageError(f"point {int(bad[0])} has norm {norms[bad[0]]!r}, not 1")
        object.__setattr__(self, "points", p)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @classmethod
    def normalized(cls, points) -> SpherePointSet:
        p = np.asarray(points, dtype=np.float64)
        return cls(p / np.linalg.norm(p, axis=1, keepdims=True))


def round_to_cube(points: SpherePointSet, d_out: int, seed: int) -> PackedVectorSet:
    """Bit (p, c) is +1 iff <w_c, p> >= 0 for Gaussian directions w_c.

    Directions come from ``SeededStream(seed).gaussians`` in column order,
    D values per column, so the output depends only on the seed.
    """
    if d_out < 1:
        raise UsageError("d_out must be at least 1")
    stream = SeededStream(seed)
    out = np.empty((points.n, d_out), dtype=np.int8)
    for c0 in range(0, d_out, _COLUMN_CHUNK):
        c1 = min(d_out, c0 + _COLUMN_CHUNK)
        w = stream.gaussians((c1 - c0) * points.dim).reshape(c1 - c0, points.dim)
        out[:, c0:c1] = hyperplane_signs(points.points, w)
    return PackedVectorSet.from_signs(out)


def hyperplane_signs(points: np.ndarray, directions: np.ndarray) -> np.ndarray:
    """sign(<w, p>) per (point, direction); an exact zero counts as +1."""
    return np.where(points @ directions.T >= 0, 1, -1).astype(np.int8)


def disagreement_probability(rho: float) -> float:
    """P[sign(<w, p>) != sign(<w, q>)] for <p, q> = rho."""
    return math.acos(max(-1.0, min(1.0, rho))) / math.pi


def rounded_correlation(rho: float) -> float:
    """Expected normalized inner product after rounding."""
    return 1.0 - 2.0 * disagreement_probability(rho)


def sphere_to_text(points: SpherePointSet) -> str:
    lines = [f"{points.n} {points.dim}"]
    lines += [" ".join(repr(float(v)) for v in row) for row in points.points]
    return "\n".join(lines) + "\n"


def sphere_from_text(text: str) -> SpherePointSet:
    rows = [ln.split() for ln in text.splitlines() if ln.strip()]
    if not rows or len(rows[0]) != 2:
        raise FormatError("sphere file needs an 'n D' header line")
    try:
        n, dim = int(rows[0][0]), int(rows[0][1])
        body = np.array([[float(v) for v in r] for r in rows[1:]], dtype=np.float64)
    except ValueError as exc:
        raise FormatError(f"bad number in sphere file: {exc}") from None
    if body.shape != (n, dim):
        raise FormatError(f"header says {n}x{dim} but found {body.shape[0]} rows")
    return SpherePointSet(body)
