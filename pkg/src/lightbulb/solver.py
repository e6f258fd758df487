"""Randomized group-score solver for the Light Bulb Problem.

The input is split into m groups. For random signs a^x the score of a group
pair is

    C[i, j] = sum_{x in S_i, y in S_j} a^x a^y <x, y>^r
            = sum_s c_|M_s| A[i, s] A[j, s],   A[i, s] = sum_{x in S_i} a^x x_{M_s}

so C = A B^T with B = A scaled column-wise by the coefficients. Rows of A are
read off the per-group products L^i (L~^i)^T of half-degree monomial
matrices. The group pair holding the planted pair stands out across rounds
and is finished by brute force.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .amplifier import (
    AmplifierPlan,
    enumerate_basis,
    monomial_values,
    symdiff_factors,
)
from .corevec import PackedVectorSet, brute_force_best_pair, inner_product, restricted_best_pair
from .errors import UsageError
from .exact import ceil_times
from .intmatmul import IntMatrix, MatmulCounter, matmul, matmul_batch, weighted_gram
from .randsrc import SeededStream, StreamSigns, pairwise_signs, sign_index_bits
from .report import SolveReport

_GROUP_CHUNK_ENTRIES = 1 << 24


@dataclass(frozen=True)
class GroupPartition:
    groups: tuple[np.ndarray, ...]
    n: int

    @classmethod
    def from_order(cls, order, m: int) -> GroupPartition:
        """Balanced split of ``order`` into m consecutive runs of size g or g-1."""
        order = np.asarray(order, dtype=np.int64)
        n = order.size
        if not 1 <= m <= n:
            raise UsageError(f"cannot split {n} vectors into {m} groups")
        g = -(-n // m)
        big = n - m * (g - 1)
        sizes = [g] * big + [g - 1] * (m - big)
        bounds = np.cumsum([0] + sizes)
        return cls(tuple(order[bounds[i] : bounds[i + 1]] for i in range(m)), n)

    @classmethod
    def contiguous(cls, n: int, m: int) -> GroupPartition:
        return cls.from_order(np.arange(n), m)

    @classmethod
    def scrambled(cls, n: int, m: int, stream: SeededStream) -> GroupPartition:
        return cls.from_order(stream.permutation(n), m)

    @property
    def m(self) -> int:
        return len(self.groups)

    @property
    def g(self) -> int:
        return max(len(grp) for grp in self.groups)

    @property
    def assignment(self) -> np.ndarray:
        out = np.empty(self.n, dtype=np.int64)
        for i, grp in enumerate(self.groups):
            out[grp] = i
        return out

    def padded(self) -> np.ndarray:
        """(m, g) member table, short groups padded with -1."""
        out = np.full((self.m, self.g), -1, dtype=np.int64)
        for i, grp in enumerate(self.groups):
            out[i, : len(grp)] = grp
        return out


def within_group_scan(vs: PackedVectorSet, partition: GroupPartition, threshold: int):
    """Lexicographically smallest pair inside one group with <x, y> >= threshold."""
    table = partition.padded()
    s = vs.signs()
    padded = np.vstack([s, np.zeros((1, vs.d), dtype=np.int8)]).astype(np.float32)
    best = None
    chunk = max(1, _GROUP_CHUNK_ENTRIES // max(1, table.shape[1] * vs.d))
    g = table.shape[1]
    upper = np.triu(np.ones((g, g), dtype=bool), 1)
    for start in range(0, partition.m, chunk):
        idx = table[start : start + chunk]
        x = padded[idx]  # -1 rows pick the zero row
        gram = np.rint(np.matmul(x, x.transpose(0, 2, 1))).astype(np.int64)
        valid = (idx[:, :, None] >= 0) & (idx[:, None, :] >= 0) & upper
        hit_b, hit_p, hit_q = np.nonzero(valid & (gram >= threshold))
        for b, p, q in zip(hit_b, hit_p, hit_q):
            u, v = int(idx[b, p]), int(idx[b, q])
            pair = (min(u, v), max(u, v))
            if best is None or pair < best:
                best = pair
    return best


class ScoreEngine:
    """Per-instance state for computing A and C; built once per solve."""

    def __init__(
        self,
        vs: PackedVectorSet,
        plan: AmplifierPlan,
        partition: GroupPartition,
        *,
        algorithm: str = "auto",
        counter: MatmulCounter | None = None,
    ):
        self.vs = vs
        self.plan = plan
        self.partition = partition
        self.algorithm = algorithm
        self.counter = counter if counter is not None else MatmulCounter()
        r = min(plan.r, vs.d)
        self.full = enumerate_basis(vs.d, r)
        self.half = enumerate_basis(vs.d, min((plan.r + 1) // 2, vs.d))
        self.first, self.second = symdiff_factors(self.full, self.half)
        self.flat = self.first.astype(np.int64) * len(self.half) + self.second
        # half-degree monomials of every vector, plus a zero row for padding
        values = monomial_values(vs.signs(), self.half)
        self.monomials = np.vstack([values, np.zeros((1, values.shape[1]), dtype=np.int8)])
        self.table = partition.padded()
        coeffs = [plan.coeffs[j] if j < len(plan.coeffs) else 0 for j in range(r + 1)]
        big = max(abs(c) for c in coeffs) >= 2**62
        self.coeff_columns = np.array(coeffs, dtype=object if big else np.int64)[self.full.sizes]
        self.coeff_bound = max(abs(c) for c in coeffs)

    @property
    def t(self) -> int:
        return len(self.full)

    @property
    def u(self) -> int:
        return len(self.half)

    def build_A(self, signs: np.ndarray) -> IntMatrix:
        """A[i, s] = sum_{x in S_i} a^x x_{M_s}, via P^i = L^i (L~^i)^T."""
        signs = np.asarray(signs, dtype=np.int8)
        if signs.shape != (self.vs.n,):
            raise UsageError("need one sign per vector")
        scaled = self.monomials * np.append(signs, 0)[:, None].astype(np.int8)
        m, g = self.table.shape
        u = self.u
        g_bound = g
        dtype = np.int16 if g < 2**15 else np.int64
        a = np.empty((m, self.t), dtype=dtype)
        chunk = max(1, _GROUP_CHUNK_ENTRIES // (u * u))
        for start in range(0, m, chunk):
            idx = self.table[start : start + chunk]
            left = self.monomials[idx].transpose(0, 2, 1)  # (c, u, g): L^i
            right = scaled[idx]  # (c, g, u): (L~^i)^T
            p = matmul_batch(left, right, 1, 1, counter=self.counter, raw=True)
            flat = p.reshape(p.shape[0], -1)
            a[start : start + chunk] = np.take(flat, self.flat, axis=1)  # exact integers
        return IntMatrix(a, g_bound)

    def score(self, A: IntMatrix) -> IntMatrix:
        """C = A B^T with B = A scaled by c_|M_s| column-wise."""
        if self.algorithm == "auto":
            # same product, one symmetric kernel per distinct coefficient
            return weighted_gram(A, self.coeff_columns, counter=self.counter)
        B = IntMatrix(A.data * self.coeff_columns, A.magnitude_bound * self.coeff_bound)
        return matmul(A, B.T, self.algorithm, counter=self.counter)


def build_A(vs, partition, plan, signs, **kw) -> IntMatrix:
    return ScoreEngine(vs, plan, partition, **kw).build_A(signs)


def score_round(A: IntMatrix, coeffs, sizes, *, algorithm: str = "auto", counter=None) -> IntMatrix:
    """C = A B^T for B_{i,s} = coeffs[sizes[s]] * A_{i,s}."""
    cols = np.array([coeffs[j] for j in range(len(coeffs))], dtype=object)[np.asarray(sizes)]
    bound = max(abs(int(c)) for c in coeffs)
    if bound < 2**62:
        cols = cols.astype(np.int64)
    B = IntMatrix(A.data * cols, A.magnitude_bound * bound)
    return matmul(A, B.T, algorithm, counter=counter)


def _upper_mask(m: int) -> np.ndarray:
    return np.triu(np.ones((m, m), dtype=bool), 1)


def _pick_winner(votes: np.ndarray, sums: np.ndarray):
    """Most votes, then larger summed |C|, then lexicographic."""
    top = votes.max()
    if top <= 0:
        return None
    cand = [tuple(map(int, p)) for p in np.argwhere(votes == top)]
    cand.sort(key=lambda ij: (-int(sums[ij]), ij))
    return cand[0]


class RoundRunner:
    """Sign draws, score matrices, and voting over ``plan.rounds`` rounds."""

    def __init__(self, engine: ScoreEngine, plan: AmplifierPlan, calibrate: bool):
        self.engine = engine
        self.plan = plan
        self.calibrate = calibrate
        m = engine.table.shape[0]
        self.mask = _upper_mask(m)
        self.votes = np.zeros((m, m), dtype=np.int64)
        self.sums = np.zeros((m, m), dtype=object)
        self.records: list[dict] = []

    def run_round(self, signs: np.ndarray) -> np.ndarray:
        A = self.engine.build_A(signs)
        C = self.engine.score(A).data
        mag = np.abs(C).astype(object) if C.dtype == object else np.abs(C)
        self.sums = self.sums + np.where(self.mask, mag, 0)
        masked = np.where(self.mask, mag, -1)
        flat = int(np.argmax(masked))
        i, j = divmod(flat, masked.shape[1])
        max_score = int(masked[i, j])
        if self.calibrate:
            self.votes[i, j] += 1
            cast = 1
        else:
            hits = self.mask & (mag >= 2 * self.plan.theta)
            self.votes += hits
            cast = int(hits.sum())
        self.records.append({"winner": [i, j], "votes": cast, "max_score": max_score})
        return C

    def winner(self):
        return _pick_winner(self.votes, self.sums)


def _counters(engine: ScoreEngine | None, plan: AmplifierPlan | None, counter: MatmulCounter) -> dict:
    return {
        "t": engine.t if engine else (plan.t if plan else 0),
        "u": engine.u if engine else (plan.u if plan else 0),
        "muladds": counter.muladds,
        "matmul_calls": counter.calls,
        "matmul_dims": counter.dims,
    }


def solve_with_signs(
    vs: PackedVectorSet,
    rho: float,
    plan: AmplifierPlan,
    partition: GroupPartition,
    sign_source,
    *,
    calibrate: bool | None = None,
    fallback: bool = False,
    algorithm: str = "auto",
    mode: str = "thm1",
    seed: int | None = None,
) -> SolveReport:
    """Group-score pipeline with an explicit partition and base-bit source.

    ``sign_source.take(ell)`` supplies the ell base signs for each round.
    """
    start = time.perf_counter()
    calibrate = plan.calibrate if calibrate is None else calibrate
    threshold = ceil_times(rho, vs.d)
    counter = MatmulCounter()
    timings = {}

    def finish(pair, stage, engine=None, rounds=()):
        timings["total"] = round((time.perf_counter() - start) * 1000, 3)
        ip = inner_product(vs, *pair) if pair is not None else None
        return SolveReport(
            mode=mode, n=vs.n, d=vs.d, found=pair, verified_inner_product=ip,
            stage=stage, plan=plan.to_dict(), rounds=list(rounds),
            counters=_counters(engine, plan, counter), seed=seed, wall_ms=timings,
        )

    pair = within_group_scan(vs, partition, threshold)
    timings["within_group"] = round((time.perf_counter() - start) * 1000, 3)
    if pair is not None:
        return finish(pair, "within_group")

    engine = ScoreEngine(vs, plan, partition, algorithm=algorithm, counter=counter)
    runner = RoundRunner(engine, plan, calibrate)
    ell = sign_index_bits(vs.n)
    for _ in range(plan.rounds):
        family = pairwise_signs(ell, sign_source.take(ell))
        runner.run_round(family.for_vectors(vs.n))
    timings["rounds"] = round((time.perf_counter() - start) * 1000, 3)

    best = runner.winner()
    if best is not None:
        i, j = best
        members = np.concatenate([partition.groups[i], partition.groups[j]])
        hit = restricted_best_pair(vs, members, members, threshold)
        if hit is not None:
            return finish((min(hit), max(hit)), "vote", engine, runner.records)
    if fallback:
        (a, b), ip = brute_force_best_pair(vs)
        if ip >= threshold:
            return finish((a, b), "fallback", engine, runner.records)
    return finish(None, "not_found", engine, runner.records)


def solve_small(vs: PackedVectorSet, rho: float, plan_dict: dict, mode: str, seed=None) -> SolveReport:
    """Instances too small for a plan (n < 4): one group, scanned directly."""
    start = time.perf_counter()
    threshold = ceil_times(rho, vs.d)
    pair = within_group_scan(vs, GroupPartition.contiguous(vs.n, 1), threshold)
    return SolveReport(
        mode=mode, n=vs.n, d=vs.d, found=pair,
        verified_inner_product=inner_product(vs, *pair) if pair else None,
        stage="within_group" if pair else "not_found", plan=plan_dict,
        counters={"t": 0, "u": 0, "muladds": 0, "matmul_calls": 0, "matmul_dims": []},
        seed=seed, wall_ms={"total": round((time.perf_counter() - start) * 1000, 3)},
    )


def solve(
    vs: PackedVectorSet,
    rho: float,
    plan: AmplifierPlan | None,
    seed: int,
    *,
    calibrate: bool | None = None,
    fallback: bool = False,
    algorithm: str = "auto",
    partition: GroupPartition | None = None,
) -> SolveReport:
    """Randomized solver. Sub-stream 0 of ``seed`` orders the partition and
    sub-stream 1 supplies every round's base signs."""
    if plan is None or vs.n < 4:
        return solve_small(vs, rho, plan.to_dict() if plan else {}, "thm1", seed)
    if plan.n != vs.n or plan.d != vs.d:
        raise UsageError(f"plan shape ({plan.n}, {plan.d}) does not match input ({vs.n}, {vs.d})")
    root = SeededStream(seed)
    if partition is None:
        partition = GroupPartition.scrambled(vs.n, plan.m, root.split(0))
    return solve_with_signs(
        vs, rho, plan, partition, StreamSigns(root.split(1)),
        calibrate=calibrate, fallback=fallback, algorithm=algorithm, mode="thm1", seed=seed,
    )
