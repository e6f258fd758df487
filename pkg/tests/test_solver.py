from __future__ import annotations

import numpy as np
import pytest

from lightbulb.amplifier import derive_plan, enumerate_basis
from lightbulb.corevec import PackedVectorSet
from lightbulb.instancegen import gen_lightbulb
from lightbulb.randsrc import SeededStream, pairwise_signs
from lightbulb.solver import (
    GroupPartition,
    ScoreEngine,
    build_A,
    score_round,
    solve,
    within_group_scan,
)

from conftest import direct_A, direct_C, random_signs


def small_plan(n, d, r, m):
    return derive_plan(n, d, 0.5, overrides={"r": r, "m": m})


def test_partition_shapes():
    p = GroupPartition.contiguous(10, 4)
    assert [len(g) for g in p.groups] == [3, 3, 2, 2]
    assert p.g == 3 and p.m == 4
    assert sorted(np.concatenate(p.groups).tolist()) == list(range(10))
    assert p.assignment.tolist() == [0, 0, 0, 1, 1, 1, 2, 2, 3, 3]
    s = GroupPartition.scrambled(50, 7, SeededStream(1))
    assert sorted(np.concatenate(s.groups).tolist()) == list(range(50))
    assert s.m * s.g >= 50 > s.m * (s.g - 1)


def test_within_group_scan(rng):
    s = random_signs(rng, 12, 64)
    s[5] = s[4]
    vs = PackedVectorSet.from_signs(s)
    same = GroupPartition.from_order([4, 5, 0, 1, 2, 3, 6, 7, 8, 9, 10, 11], 4)
    assert within_group_scan(vs, same, 64) == (4, 5)
    split = GroupPartition.from_order([4, 0, 1, 5, 2, 3, 6, 7, 8, 9, 10, 11], 4)
    assert within_group_scan(vs, split, 64) is None
    assert within_group_scan(vs, split, -64) == (0, 1)


def test_build_A_single_vector_groups(rng):
    s = random_signs(rng, 6, 8)
    vs = PackedVectorSet.from_signs(s)
    plan = small_plan(6, 8, 2, 6)
    A = build_A(vs, GroupPartition.contiguous(6, 6), plan, np.ones(6, dtype=np.int8))
    basis = enumerate_basis(8, 2)
    for i in range(6):
        for sidx in range(len(basis)):
            assert A.data[i, sidx] == np.prod([s[i, c] for c in basis[sidx]])


@pytest.mark.parametrize("seed", range(6))
def test_build_A_matches_direct_sum(seed):
    rng = np.random.default_rng(seed)
    n, d, r, m = 64, 16, 4, 8
    s = random_signs(rng, n, d)
    vs = PackedVectorSet.from_signs(s)
    plan = small_plan(n, d, r, m)
    part = GroupPartition.scrambled(n, m, SeededStream(seed))
    a = pairwise_signs(7, SeededStream(seed + 100).signs(7)).for_vectors(n)
    A = build_A(vs, part, plan, a)
    basis = enumerate_basis(d, r)
    ref = direct_A(s, [g.tolist() for g in part.groups], a, basis.sets)
    assert A.tolist() == ref
    # empty monomial column is the plain sign sum
    assert A.data[:, 0].tolist() == [int(a[g].sum()) for g in part.groups]


@pytest.mark.parametrize("seed", range(4))
def test_score_round_matches_double_loop(seed):
    rng = np.random.default_rng(10 + seed)
    n, d, r, m = 40, 12, 3, 5
    s = random_signs(rng, n, d)
    vs = PackedVectorSet.from_signs(s)
    plan = small_plan(n, d, r, m)
    part = GroupPartition.contiguous(n, m)
    a = pairwise_signs(6, SeededStream(seed).signs(6)).for_vectors(n)
    engine = ScoreEngine(vs, plan, part)
    A = engine.build_A(a)
    ref = direct_C(s, [g.tolist() for g in part.groups], a, r)
    for algo in ("classical", "strassen", "auto"):
        C = score_round(A, plan.coeffs, engine.full.sizes, algorithm=algo)
        assert C.tolist() == ref
    assert engine.score(A).tolist() == ref
    C = np.array(ref, dtype=object)
    assert (C == C.T).all()


def test_one_group():
    rng = np.random.default_rng(3)
    s = random_signs(rng, 5, 10)
    vs = PackedVectorSet.from_signs(s)
    plan = small_plan(5, 10, 2, 1)
    a = np.array([1, -1, 1, 1, -1], dtype=np.int8)
    part = GroupPartition.contiguous(5, 1)
    engine = ScoreEngine(vs, plan, part)
    C = score_round(engine.build_A(a), plan.coeffs, engine.full.sizes)
    assert C.shape == (1, 1)
    assert C.tolist() == direct_C(s, [list(range(5))], a, 2)


def test_unit_sign_planted_lower_bound():
    inst = gen_lightbulb(64, 256, 0.8, 5)
    s = inst.vectors.signs().astype(np.int64)
    plan = derive_plan(64, 256, 0.8, overrides={"r": 2, "m": 16})
    part = GroupPartition.contiguous(64, 16)
    engine = ScoreEngine(inst.vectors, plan, part)
    C = engine.score(engine.build_A(np.ones(64, dtype=np.int8))).data
    g = s @ s.T
    a, b = inst.planted[0]
    v = max(abs(int(g[i, j])) for i in range(64) for j in range(i + 1, 64) if (i, j) != (a, b))
    ia, ib = part.assignment[a], part.assignment[b]
    if ia != ib:
        gs = part.g
        assert abs(int(C[ia, ib])) >= int(g[a, b]) ** 2 - gs * gs * v**2


def test_tiny_inputs():
    vs = PackedVectorSet.from_signs([[1, -1, 1], [1, -1, 1]])
    rep = solve(vs, 0.5, None, seed=0)
    assert rep.found == (0, 1) and rep.stage == "within_group"


def test_planted_in_one_group_exits_early():
    inst = gen_lightbulb(128, 256, 0.9, 2)
    a, b = inst.planted[0]
    order = [a, b] + [i for i in range(128) if i not in (a, b)]
    plan = derive_plan(128, 256, 0.9, calibrate=True)
    rep = solve(inst.vectors, 0.9, plan, 0, partition=GroupPartition.from_order(order, plan.m))
    assert rep.found == (min(a, b), max(a, b))
    assert rep.stage == "within_group"
    assert rep.counters["matmul_calls"] == 0 and rep.counters["muladds"] == 0


def test_solve_recovers_and_is_deterministic():
    inst = gen_lightbulb(512, 384, 0.6, 9)
    plan = derive_plan(512, 384, 0.6, calibrate=True)
    r1 = solve(inst.vectors, 0.6, plan, 4)
    r2 = solve(inst.vectors, 0.6, plan, 4)
    assert r1.to_json(timing=False) == r2.to_json(timing=False)
    assert r1.judge(inst.planted)
    assert len(r1.rounds) == plan.rounds or r1.stage == "within_group"


def test_not_found_and_fallback():
    rng = np.random.default_rng(0)
    s = random_signs(rng, 64, 128)
    s[40] = s[3]
    vs = PackedVectorSet.from_signs(s)
    plan = derive_plan(64, 128, 1.0, overrides={"r": 2, "rounds": 3, "m": 8}, calibrate=True)
    part = GroupPartition.from_order(list(range(64)), 8)  # 3 and 40 in groups 0 and 5
    # sabotaged: one vote round that cannot see the pair under a huge theta
    bad = derive_plan(64, 128, 1.0, overrides={"r": 2, "rounds": 1, "m": 8, "theta": 1e30})
    rep = solve(vs, 1.0, bad, 0, partition=part)
    assert rep.found is None and rep.stage == "not_found"
    rep = solve(vs, 1.0, bad, 0, partition=part, fallback=True)
    assert rep.found == (3, 40) and rep.stage == "fallback"
    assert solve(vs, 1.0, plan, 0, partition=part).found == (3, 40)


@pytest.mark.slow
def test_full_correlation_recovery():
    # rho = 1 at n = 1024, d = 6 ln(n) * 36; calibrated plan keeps r = 2
    n, d = 1024, 1500
    for seed in range(10):
        inst = gen_lightbulb(n, d, 1.0, seed)
        plan = derive_plan(n, d, 1.0, calibrate=True)
        assert solve(inst.vectors, 1.0, plan, seed).judge(inst.planted)
