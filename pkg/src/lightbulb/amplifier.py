"""Polynomial amplification: solver parameters, monomial bases, and the
multilinear coefficients of (z_1 + ... + z_d)^r.

A multilinear polynomial that is symmetric in its variables is stored as a
size-indexed table ``f[j]`` = coefficient of every monomial with ``j``
variables. Multiplying two such tables reduces exponents mod 2, so a
product of monomials over sets A and B is the monomial over A xor B.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from itertools import combinations

import numpy as np

from .errors import CapacityError, ParameterError, UsageError
from .exact import to_fraction

DEFAULT_BASIS_CAP = 20_000_000
DEFAULT_TAU = 4.0
DEFAULT_ROUNDS_FACTOR = 3.0


# -- coefficients ----------------------------------------------------------------


def _sym_product(f: list[int], g: list[int], d: int, top: int) -> list[int]:
    """Multilinear product of two symmetric tables, truncated at size ``top``.

    A size-k target K arises from A (size i + o) and B (size k - i + o) that
    split K into i / k - i elements and share o elements outside K.
    """
    out = [0] * (top + 1)
    for k in range(min(top, d) + 1):
        acc = 0
        for i in range(k + 1):
            ck = math.comb(k, i)
            for o in range(d - k + 1):
                a, b = i + o, k - i + o
                if a >= len(f) or b >= len(g):
                    break
                if f[a] and g[b]:
                    acc += ck * math.comb(d - k, o) * f[a] * g[b]
        out[k] = acc
    return out


@lru_cache(maxsize=256)
def multilinear_coeffs(d: int, r: int) -> tuple[int, ...]:
    """``c[j]`` for j = 0..r: coefficient of each size-j monomial in the
    multilinearization of (z_1 + ... + z_d)^r, by repeated squaring."""
    if d < 1 or r < 1:
        raise UsageError("need d >= 1 and r >= 1")
    linear = [0, 1]
    result = [1]
    base = linear
    e = r
    while e:
        if e & 1:
            result = _sym_product(result, base, d, r)
        e >>= 1
        if e:
            base = _sym_product(base, base, d, r)
    result = result + [0] * (r + 1 - len(result))
    return tuple(result[: r + 1])


def amplified_value(plan: AmplifierPlan | int, s: int) -> int:
    r = plan if isinstance(plan, int) else plan.r
    return int(s) ** r


# -- monomial bases --------------------------------------------------------------


def basis_count(d: int, max_size: int) -> int:
    return sum(math.comb(d, i) for i in range(max_size + 1))


def estimate_sizes(n: int, d: int, r: int) -> tuple[float, float]:
    """Upper bounds (r+1)(ed/r)^r on t and the same form at ceil(r/2) for u."""
    if not 1 <= r <= d:
        raise UsageError("need 1 <= r <= d")
    h = (r + 1) // 2
    return (r + 1) * (math.e * d / r) ** r, (h + 1) * (math.e * d / h) ** h


class MonomialBasis:
    """All subsets of range(d) with at most ``max_size`` elements, ordered by
    size and then lexicographically.

    ``members`` is a (len, max(max_size, 1)) int array whose unused slots hold
    ``d``, an index that evaluation code maps to a constant +1 coordinate.
    """

    def __init__(self, d: int, max_size: int):
        self.d = d
        self.max_size = max_size
        width = max(max_size, 1)
        blocks, sizes = [], []
        self.offsets = [0]
        for j in range(max_size + 1):
            cnt = math.comb(d, j)
            if j == 0:
                block = np.full((1, width), d, dtype=np.int32)
            else:
                block = np.full((cnt, width), d, dtype=np.int32)
                block[:, :j] = np.fromiter(
                    (c for combo in combinations(range(d), j) for c in combo),
                    dtype=np.int32, count=cnt * j,
                ).reshape(cnt, j)
            blocks.append(block)
            sizes.append(np.full(cnt, j, dtype=np.int16))
            self.offsets.append(self.offsets[-1] + cnt)
        self.members = np.vstack(blocks)
        self.sizes = np.concatenate(sizes)
        self.members.setflags(write=False)
        self.sizes.setflags(write=False)
        self._binom = np.array(
            [[math.comb(a, b) for b in range(max_size + 2)] for a in range(d + 2)],
            dtype=np.int64 if math.comb(d + 1, min(max_size + 1, (d + 1) // 2)) < 2**62 else object,
        )

    def __len__(self) -> int:
        return int(self.sizes.size)

    def __getitem__(self, s: int) -> tuple[int, ...]:
        j = int(self.sizes[s])
        return tuple(int(c) for c in self.members[s, :j])

    @property
    def sets(self) -> list[tuple[int, ...]]:
        return [self[s] for s in range(len(self))]

    def rank(self, subset) -> int:
        items = sorted(int(c) for c in subset)
        if len(set(items)) != len(items) or any(not 0 <= c < self.d for c in items):
            raise UsageError(f"{subset!r} is not a subset of range({self.d})")
        if len(items) > self.max_size:
            raise UsageError(f"subset larger than {self.max_size}")
        block = np.full((1, max(self.max_size, 1)), self.d, dtype=np.int64)
        block[0, : len(items)] = items
        return int(self.rank_many(block, np.array([len(items)]))[0])

    def rank_many(self, members: np.ndarray, sizes: np.ndarray) -> np.ndarray:
        """Vectorized rank of sorted, sentinel-padded rows."""
        members = np.asarray(members, dtype=np.int64)
        sizes = np.asarray(sizes, dtype=np.int64)
        out = np.asarray(self.offsets, dtype=np.int64)[sizes].copy()
        prev = np.full(sizes.shape, -1, dtype=np.int64)
        binom = self._binom
        for i in range(members.shape[1] if members.ndim == 2 else 0):
            active = i < sizes
            if not active.any():
                break
            c = np.where(active, members[:, i], 0)
            rem = np.where(active, sizes - i, 0)
            # lex rank of a combination: sum over positions of skipped prefixes
            term = binom[self.d - prev - 1, rem] - binom[self.d - c, rem]
            out += np.where(active, term, 0).astype(np.int64)
            prev = np.where(active, c, prev)
        return out


@lru_cache(maxsize=8)
def _cached_basis(d: int, max_size: int) -> MonomialBasis:
    return MonomialBasis(d, max_size)


def enumerate_basis(d: int, max_size: int, cap: int = DEFAULT_BASIS_CAP) -> MonomialBasis:
    if not 0 <= max_size <= d:
        raise UsageError("need 0 <= max_size <= d")
    count = basis_count(d, max_size)
    if count > cap:
        bound = estimate_sizes(0, d, max_size)[0] if max_size else 1.0
        raise CapacityError(
            f"basis of {count} subsets exceeds cap {cap} "
            f"(size bound (r+1)(ed/r)^r = {bound:.3g} for d={d}, r={max_size})"
        )
    return _cached_basis(d, max_size)


def symdiff_factor(basis_r: MonomialBasis, basis_half: MonomialBasis, s: int) -> tuple[int, int]:
    """Indices (s1, s2) of half-size sets whose symmetric difference is M_s:
    the first ceil(|M_s|/2) elements and the rest."""
    members = basis_r[s]
    h = (len(members) + 1) // 2
    return basis_half.rank(members[:h]), basis_half.rank(members[h:])


def symdiff_factors(basis_r: MonomialBasis, basis_half: MonomialBasis) -> tuple[np.ndarray, np.ndarray]:
    """``symdiff_factor`` for every element of ``basis_r`` at once."""
    sizes = basis_r.sizes.astype(np.int64)
    h = (sizes + 1) // 2
    width = max(basis_half.max_size, 1)
    cols = np.arange(basis_r.members.shape[1])
    sentinel = basis_r.d
    first = np.where(cols[None, :] < h[:, None], basis_r.members, sentinel)[:, :width]
    shifted = np.full_like(basis_r.members, sentinel)
    for i in range(basis_r.members.shape[1]):
        src = i + h
        ok = src < sizes
        shifted[ok, i] = basis_r.members[ok, src[ok]]
    second = shifted[:, :width]
    return (
        basis_half.rank_many(first, h),
        basis_half.rank_many(second, sizes - h),
    )


def monomial_values(signs: np.ndarray, basis: MonomialBasis, chunk: int = 1 << 22) -> np.ndarray:
    """(n, len(basis)) int8 matrix of x_M for each row x of ``signs``."""
    signs = np.asarray(signs, dtype=np.int8)
    n = signs.shape[0]
    ext = np.hstack([signs, np.ones((n, 1), dtype=np.int8)])
    out = np.empty((n, len(basis)), dtype=np.int8)
    step = max(1, chunk // max(1, n * basis.members.shape[1]))
    for start in range(0, len(basis), step):
        cols = basis.members[start : start + step]
        out[:, start : start + step] = ext[:, cols].prod(axis=2, dtype=np.int8)
    return out


# -- plans ----------------------------------------------------------------------


def _int_root_ceil(n: int, num: int, den: int) -> int:
    """Smallest integer m with m**den >= n**num, i.e. ceil(n^(num/den))."""
    target = n**num
    m = max(1, int(round(n ** (num / den))))
    while m**den < target:
        m += 1
    while m > 1 and (m - 1) ** den >= target:
        m -= 1
    return m


def _parity_up(v: int, d: int) -> int:
    return v + ((v - d) & 1)


def smallest_power(k: int, target: float) -> int:
    """Least r >= 1 with k**r >= target."""
    r = 1
    while k**r < target:
        r += 1
    return r


@dataclass(frozen=True)
class AmplifierPlan:
    n: int
    d: int
    rho: float
    mode: str
    k: int
    v: int
    r: int
    m: int
    g: int
    t: int
    u: int
    tau: float
    theta: float
    rounds: int
    coeffs: tuple[int, ...] = field(repr=False)
    calibrate: bool = False
    overrides: dict = field(default_factory=dict, compare=False)

    @property
    def half(self) -> int:
        return (self.r + 1) // 2

    def to_dict(self) -> dict:
        out = asdict(self)
        out["coeffs"] = [str(c) for c in self.coeffs]
        out["overrides"] = dict(sorted(self.overrides.items()))
        return out


PLAN_KEYS = ("m", "v", "k", "r", "tau", "rounds", "rounds_factor", "theta")


def derive_plan(
    n: int,
    d: int,
    rho: float,
    mode: str = "thm1",
    overrides: dict | None = None,
    *,
    calibrate: bool = False,
) -> AmplifierPlan:
    """Concrete parameters for the amplified group-score algorithm.

    ``mode`` is ``thm1`` (n^(2/3) groups, repeated random rounds) or ``thm3``
    (n^(4/5) groups, one unit-sign round). The uncorrelated bound ``v`` is
    ceil(sqrt(6 d ln n)), a per-pair n^-3 Chernoff tail; with ``calibrate``
    it is the typical scale ceil(sqrt(d)) instead. Inner products share the
    parity of d, so v is moved up to that parity.
    """
    ov = dict(overrides or {})
    unknown = set(ov) - set(PLAN_KEYS)
    if unknown:
        raise UsageError(f"unknown plan override(s): {sorted(unknown)}")
    if mode not in ("thm1", "thm3"):
        raise UsageError(f"unknown plan mode {mode!r}")
    if n < 4:
        raise UsageError("plans need n >= 4")
    if not 0 < rho <= 1:
        raise UsageError(f"rho must lie in (0, 1], got {rho}")

    if mode == "thm1":
        m = int(ov.get("m", _int_root_ceil(n, 2, 3)))
        target_scale = n ** (1 / 3)
    else:
        m = int(ov.get("m", _int_root_ceil(n, 4, 5)))
        target_scale = n ** (2 / 5)
    if not 1 <= m <= n:
        raise ParameterError(f"group count m={m} must lie in [1, n]")
    g = -(-n // m)

    if "v" in ov:
        v = int(ov["v"])
    else:
        raw = math.sqrt(d) if calibrate else math.sqrt(6 * d * math.log(n))
        v = max(_parity_up(math.ceil(raw), d), 1)
    if "k" in ov:
        k = int(ov["k"])
    else:
        k = math.floor(to_fraction(rho) * d / v)

    tau = float(ov.get("tau", DEFAULT_TAU))
    factor = tau if mode == "thm1" else 3.0
    target = factor * target_scale
    if "r" in ov:
        r = int(ov["r"])
        if r < 1:
            raise ParameterError("r must be at least 1")
    else:
        if k < 2:
            raise ParameterError(
                f"amplification ratio k = floor(rho*d/v) = {k} < 2 "
                f"(rho={rho}, d={d}, v={v}); use a larger dimension d"
            )
        r = max(smallest_power(k, target), 2)

    theta = float(ov.get("theta", target * float(v) ** r / 3))
    if mode == "thm1":
        c_r = float(ov.get("rounds_factor", DEFAULT_ROUNDS_FACTOR))
        rounds = int(ov.get("rounds", math.ceil(c_r * math.log2(n))))
    else:
        rounds = int(ov.get("rounds", 1))
    if rounds < 1:
        raise ParameterError("need at least one round")
    r_eff = min(r, d)
    return AmplifierPlan(
        n=n, d=d, rho=float(rho), mode=mode, k=k, v=v, r=r, m=m, g=g,
        t=basis_count(d, r_eff), u=basis_count(d, min((r + 1) // 2, d)),
        tau=tau, theta=theta, rounds=rounds, coeffs=multilinear_coeffs(d, r),
        calibrate=calibrate, overrides=ov,
    )
