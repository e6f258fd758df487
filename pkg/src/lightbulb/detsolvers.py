"""Deterministic solvers.

``solve_thm2`` replaces every random draw of the group-score solver with
coordinates of a few held-out input vectors. ``solve_thm3`` assumes the
background promise and runs one round with all signs +1. ``solve_findcorr``
does the same over two sets with an even degree, so every summand is
nonnegative and no signs are needed at all.
"""
from __future__ import annotations

import math
import time
from dataclasses import replace

import numpy as np

from .amplifier import AmplifierPlan, derive_plan, multilinear_coeffs, basis_count
from .corevec import PackedVectorSet, inner_product, pairs_at_least, restricted_best_pair
from .errors import ParameterError, PromiseViolation, UsageError
from .exact import ceil_times, to_fraction
from .intmatmul import MatmulCounter
from .randsrc import harvest_bits, sign_index_bits
from .report import SolveReport
from .solver import GroupPartition, ScoreEngine, _counters, solve_small, solve_with_signs, within_group_scan

HOLDOUT_FACTOR = 2
FINDCORR_SAFETY = 4


def holdout_size(n: int, factor: float = HOLDOUT_FACTOR) -> int:
    """|S'| = ceil(factor * log2 n), capped so at least 4 vectors remain."""
    return max(1, min(math.ceil(factor * math.log2(max(n, 2))), n - 4))


# -- Theorem 2 -----------------------------------------------------------------


def solve_thm2(
    vs: PackedVectorSet,
    rho: float,
    *,
    overrides: dict | None = None,
    calibrate: bool = False,
    fallback: bool = False,
    algorithm: str = "auto",
    holdout_factor: float = HOLDOUT_FACTOR,
) -> SolveReport:
    """Deterministic solver fed by the input itself.

    The first ``holdout_size(n)`` vectors form S'. They are checked against
    every vector directly; the rest R is then solved with a contiguous
    partition and per-round base signs read in order from the coordinates
    of S'.
    """
    n, d = vs.n, vs.d
    if n < 8:
        return solve_small(vs, rho, {}, "thm2")
    start = time.perf_counter()
    threshold = ceil_times(rho, d)
    s = holdout_size(n, holdout_factor)
    held = np.arange(s)
    rest = np.arange(s, n)

    hit = restricted_best_pair(vs, held, np.arange(n), threshold)
    if hit is not None:
        pair = (min(hit), max(hit))
        return SolveReport(
            mode="thm2", n=n, d=d, found=pair, verified_inner_product=inner_product(vs, *pair),
            stage="holdout_scan", plan={"sprime_size": s},
            counters=_counters(None, None, MatmulCounter()),
            wall_ms={"total": round((time.perf_counter() - start) * 1000, 3)},
        )

    sub = vs.subset(rest)
    plan = derive_plan(sub.n, d, rho, "thm1", overrides, calibrate=calibrate)
    pool = harvest_bits(vs, held)
    need = plan.rounds * sign_index_bits(sub.n)
    if need > len(pool):
        raise ParameterError(
            f"holdout of {s} vectors gives {len(pool)} bits but {plan.rounds} rounds need {need}; "
            "raise the holdout factor or lower the round count"
        )
    partition = GroupPartition.contiguous(sub.n, plan.m)
    rep = solve_with_signs(
        sub, rho, plan, partition, pool,
        calibrate=calibrate, fallback=fallback, algorithm=algorithm, mode="thm2",
    )
    rep.n = n
    rep.plan = dict(rep.plan, sprime_size=s)
    if rep.found is not None:
        a, b = (int(rest[i]) for i in rep.found)
        rep.found = (min(a, b), max(a, b))
        rep.verified_inner_product = inner_product(vs, *rep.found)
    rep.wall_ms = dict(rep.wall_ms, total=round((time.perf_counter() - start) * 1000, 3))
    return rep


# -- Theorem 3 -----------------------------------------------------------------


def unit_sign_scores(vs: PackedVectorSet, plan: AmplifierPlan, partition: GroupPartition, *,
                     algorithm: str = "auto", counter: MatmulCounter | None = None):
    """Exact C for a^x = 1 on every vector; returns (engine, C)."""
    engine = ScoreEngine(vs, plan, partition, algorithm=algorithm, counter=counter)
    A = engine.build_A(np.ones(vs.n, dtype=np.int8))
    return engine, engine.score(A).data


def top_group_pair(C: np.ndarray) -> tuple[int, int]:
    """Off-diagonal (i < j) maximizing |C[i, j]|; row-major first on ties."""
    m = C.shape[0]
    mag = np.abs(C)
    if mag.dtype == object:
        mag = mag.astype(object)
    masked = np.where(np.triu(np.ones((m, m), dtype=bool), 1), mag, -1)
    i, j = divmod(int(np.argmax(masked)), m)
    return i, j


def solve_thm3(
    vs: PackedVectorSet,
    rho: float,
    *,
    overrides: dict | None = None,
    calibrate: bool = False,
    algorithm: str = "auto",
    plan: AmplifierPlan | None = None,
) -> SolveReport:
    """Promise solver: one unit-sign round over ceil(n^(4/5)) contiguous groups."""
    n, d = vs.n, vs.d
    if n < 4:
        return solve_small(vs, rho, {}, "thm3")
    start = time.perf_counter()
    if plan is None:
        plan = derive_plan(n, d, rho, "thm3", overrides, calibrate=calibrate)
    threshold = ceil_times(rho, d)
    partition = GroupPartition.contiguous(n, plan.m)
    counter = MatmulCounter()
    timings = {}

    def finish(pair, stage, engine=None, rounds=()):
        timings["total"] = round((time.perf_counter() - start) * 1000, 3)
        return SolveReport(
            mode="thm3", n=n, d=d, found=pair,
            verified_inner_product=inner_product(vs, *pair) if pair else None,
            stage=stage, plan=plan.to_dict(), rounds=list(rounds),
            counters=_counters(engine, plan, counter), wall_ms=timings,
        )

    pair = within_group_scan(vs, partition, threshold)
    timings["within_group"] = round((time.perf_counter() - start) * 1000, 3)
    if pair is not None:
        return finish(pair, "within_group")
    engine, C = unit_sign_scores(vs, plan, partition, algorithm=algorithm, counter=counter)
    i, j = top_group_pair(C)
    record = {"winner": [i, j], "votes": 1, "max_score": int(abs(C[i, j]))}
    members = np.concatenate([partition.groups[i], partition.groups[j]])
    hit = restricted_best_pair(vs, members, members, threshold)
    if hit is None:
        return finish(None, "not_found", engine, [record])
    return finish((min(hit), max(hit)), "vote", engine, [record])


# -- Finding Correlations ------------------------------------------------------


def findcorr_degree(sigma: float, g: int) -> int:
    """Smallest even r with sigma**r >= 3 g^2."""
    if sigma <= 1:
        raise ParameterError(f"need rho/tau > 1, got {sigma}")
    target = 3 * g * g
    r = 2
    while sigma**r < target:
        r += 2
    return r


def findcorr_plan(n: int, d: int, rho: float, tau: float, q_max: int) -> AmplifierPlan:
    """Plan for two sets of n vectors each, split into ceil(n^(4/5)) groups apiece."""
    base = derive_plan(max(n, 4), d, rho, "thm3", {"r": 2, "tau": tau})
    sigma = float(to_fraction(rho) / to_fraction(tau))
    r = findcorr_degree(sigma, base.g)
    bound = ceil_times(tau, d)
    return replace(
        base, n=n, r=r, v=bound, k=0, coeffs=multilinear_coeffs(d, r),
        t=basis_count(d, min(r, d)), u=basis_count(d, min((r + 1) // 2, d)),
        theta=float(base.g**2 * bound**r), rounds=1,
        overrides={"sigma": sigma, "q_max": q_max},
    )


def solve_findcorr(
    vs: PackedVectorSet,
    rho: float,
    tau: float,
    *,
    q_max: int | None = None,
    safety: int = FINDCORR_SAFETY,
    algorithm: str = "auto",
) -> SolveReport:
    """All cross pairs of X = rows [0, n) and Y = rows [n, 2n) with
    |<x, y>| >= ceil(rho d), assuming every other cross pair is within tau d.

    Group pairs with C >= 2 g^2 ceil(tau d)^r are scanned; pairs come back as
    (x_row, y_row) in the stacked numbering, sorted.
    """
    if vs.n % 2:
        raise UsageError("findcorr input must stack two sets of equal size")
    if not 0 < tau < rho:
        raise UsageError("need 0 < tau < rho")
    n, d = vs.n // 2, vs.d
    start = time.perf_counter()
    q_max = n if q_max is None else q_max
    plan = findcorr_plan(n, d, rho, tau, q_max)
    xs = GroupPartition.contiguous(n, plan.m)
    partition = GroupPartition(xs.groups + tuple(grp + n for grp in xs.groups), 2 * n)
    counter = MatmulCounter()
    engine, C = unit_sign_scores(vs, plan, partition, algorithm=algorithm, counter=counter)
    m = plan.m
    block = C[:m, m:]
    if (block < 0).any():
        raise AssertionError("even-degree scores must be nonnegative")
    cut = 2 * plan.g**2 * ceil_times(tau, d) ** plan.r
    reported = [tuple(map(int, ij)) for ij in np.argwhere(block >= cut)]
    if len(reported) > q_max * safety:
        raise PromiseViolation(
            f"{len(reported)} group pairs exceed the score cut (limit {q_max}*{safety}); "
            "the background bound probably does not hold"
        )
    threshold = ceil_times(rho, d)
    found = set()
    for i, j in reported:
        found.update(pairs_at_least(vs, partition.groups[i], partition.groups[m + j], threshold, absolute=True))
    pairs = sorted(found)
    for a, b in pairs:  # soundness
        if abs(inner_product(vs, a, b)) < threshold:
            raise AssertionError(f"returned pair {(a, b)} is below the threshold")
    record = {"winner": list(reported[0]) if reported else None, "votes": len(reported),
              "max_score": int(block.max()) if block.size else 0}
    return SolveReport(
        mode="findcorr", n=n, d=d, found=pairs[0] if pairs else None,
        verified_inner_product=inner_product(vs, *pairs[0]) if pairs else None,
        stage="vote" if pairs else "not_found", plan=plan.to_dict(), rounds=[record],
        counters=_counters(engine, plan, counter),
        wall_ms={"total": round((time.perf_counter() - start) * 1000, 3)}, pairs=pairs,
    )
