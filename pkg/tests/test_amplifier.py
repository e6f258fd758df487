from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lightbulb.amplifier import (
    MonomialBasis,
    amplified_value,
    basis_count,
    derive_plan,
    enumerate_basis,
    estimate_sizes,
    monomial_values,
    multilinear_coeffs,
    symdiff_factor,
    symdiff_factors,
)
from lightbulb.errors import CapacityError, ParameterError, UsageError

from conftest import expand_power_coeffs, naive_ip, random_signs


def test_small_coefficients():
    assert multilinear_coeffs(3, 2) == (3, 0, 2)
    assert multilinear_coeffs(2, 3)[1] == 4


@pytest.mark.parametrize("d,r", [(d, r) for d in range(1, 7) for r in range(1, 6)])
def test_coefficients_match_expansion(d, r):
    ref = expand_power_coeffs(d, r)
    got = multilinear_coeffs(d, r)
    for j, c in enumerate(got):
        assert c == ref.get(j, 0)


@pytest.mark.parametrize("d,r", [(d, r) for d in (1, 2, 5, 9, 16, 40) for r in range(1, 8)])
def test_parity_and_sum_rule(d, r):
    c = multilinear_coeffs(d, r)
    assert all(c[j] == 0 for j in range(len(c)) if (j - r) % 2)
    assert sum(c[j] * math.comb(d, j) for j in range(min(r, d) + 1)) == d**r


def test_amplified_value():
    assert amplified_value(3, 4) == 64
    assert amplified_value(5, 0) == 0
    assert amplified_value(4, -3) == 81


def test_basis_counts_and_order():
    assert len(enumerate_basis(10, 2)) == 56
    assert enumerate_basis(7, 0).sets == [()]
    full = enumerate_basis(4, 4)
    assert len(full) == 16
    ref = [c for j in range(5) for c in itertools.combinations(range(4), j)]
    assert full.sets == ref


def test_rank_roundtrip():
    b = MonomialBasis(9, 4)
    for s in range(len(b)):
        assert b.rank(b[s]) == s
    with pytest.raises(UsageError):
        b.rank((1, 1))
    with pytest.raises(UsageError):
        b.rank((0, 1, 2, 3, 4))


def test_capacity_error_reports_bound():
    with pytest.raises(CapacityError, match=r"\(r\+1\)\(ed/r\)\^r"):
        enumerate_basis(200, 4, cap=1000)


def test_symdiff_examples():
    b = enumerate_basis(8, 3)
    h = enumerate_basis(8, 2)
    assert symdiff_factor(b, h, 0) == (0, 0)
    s1, s2 = symdiff_factor(b, h, b.rank((2, 5, 7)))
    assert h[s1] == (2, 5) and h[s2] == (7,)


@pytest.mark.parametrize("d,r", [(8, 4)] + [(d, r) for d in range(1, 11) for r in (1, 2, 3) if r <= d])
def test_symdiff_total(d, r):
    b = enumerate_basis(d, r)
    h = enumerate_basis(d, (r + 1) // 2)
    first, second = symdiff_factors(b, h)
    for s in range(len(b)):
        assert set(h[first[s]]) ^ set(h[second[s]]) == set(b[s])
        assert (first[s], second[s]) == symdiff_factor(b, h, s)


def test_lemma_size_bound():
    for d in range(1, 21):
        for r in range(1, min(d, 6) + 1):
            t_bound, u_bound = estimate_sizes(0, d, r)
            assert basis_count(d, r) <= t_bound
            assert basis_count(d, (r + 1) // 2) <= u_bound
    assert estimate_sizes(0, 9, 1)[0] == pytest.approx(2 * math.e * 9)
    assert estimate_sizes(0, 12, 12)[0] >= 2**12


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 12), st.integers(1, 5), st.integers(0, 2**31))
def test_amplification_identity(d, r, seed):
    rng = np.random.default_rng(seed)
    basis = enumerate_basis(d, min(r, d))
    coeffs = np.array(multilinear_coeffs(d, r), dtype=object)[basis.sizes]
    x, y = random_signs(rng, 2, d)
    vx = monomial_values(x[None], basis)[0].astype(object)
    vy = monomial_values(y[None], basis)[0].astype(object)
    assert int((coeffs * vx * vy).sum()) == naive_ip(x, y) ** r


def test_plan_examples():
    p = derive_plan(4096, 4096, 0.5)
    assert (p.m, p.g) == (256, 16)
    q = derive_plan(1024, 2048, 0.6, "thm3")
    assert (q.m, q.g) == (256, 4)
    with pytest.raises(ParameterError):
        derive_plan(4096, 64, 0.5)


def test_plan_invariants():
    for n, d, rho, mode in [(100, 900, 0.7, "thm1"), (4096, 4096, 0.5, "thm1"), (777, 2000, 0.9, "thm3")]:
        p = derive_plan(n, d, rho, mode)
        assert p.m * p.g >= n > p.m * (p.g - 1)
        assert (p.v - d) % 2 == 0
        assert p.k == math.floor(rho * d / p.v)
        assert p.t == basis_count(d, p.r) and p.u == basis_count(d, (p.r + 1) // 2)
        scale = n ** (1 / 3) * 4.0 if mode == "thm1" else 3 * n ** 0.4
        assert p.k**p.r >= scale and (p.r == 2 or p.k ** (p.r - 1) < scale)


def test_plan_overrides():
    p = derive_plan(4096, 512, 0.5, overrides={"r": 3, "rounds": 5, "m": 100}, calibrate=True)
    assert (p.r, p.rounds, p.m) == (3, 5, 100)
    with pytest.raises(UsageError):
        derive_plan(4096, 512, 0.5, overrides={"bogus": 1})
    # r given explicitly: no k >= 2 requirement
    assert derive_plan(64, 16, 0.5, overrides={"r": 2}).k < 2


def test_k_trend_in_d():
    # k = floor(rho d / v) with v ~ sqrt(d): quadrupling d at least doubles
    # the real ratio, so k never drops across a factor of four
    for n in (64, 1024, 4096):
        for rho in (0.3, 0.5, 0.9):
            for d in range(16, 1025, 7):
                a = derive_plan(n, d, rho, overrides={"r": 2}).k
                b = derive_plan(n, 4 * d, rho, overrides={"r": 2}).k
                assert b >= a


def test_k_not_monotone_stepwise():
    # one-step monotonicity in d fails at parity / ceiling jumps of v
    ks = [derive_plan(64, d, 0.3, overrides={"r": 2}).k for d in (280, 281)]
    assert ks == [1, 0]
