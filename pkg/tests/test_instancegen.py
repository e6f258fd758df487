from __future__ import annotations

import math

import numpy as np
import pytest

from lightbulb.corevec import inner_product, inner_products
from lightbulb.errors import FormatError, GenerationError, UsageError
from lightbulb.instancegen import (
    agreement_count,
    gen_findcorr,
    gen_lightbulb,
    gen_promise,
    generate,
    instance_from_bytes,
    instance_to_bytes,
    promise_bound,
    read_instance,
    vectors_from_text,
    vectors_to_text,
    write_instance,
)

from conftest import naive_gram, naive_ip


def test_full_correlation():
    inst = gen_lightbulb(50, 33, 1.0, 1)
    a, b = inst.planted[0]
    assert inner_product(inst.vectors, a, b) == 33


def test_two_vectors():
    assert gen_lightbulb(2, 16, 0.3, 0).planted == [(0, 1)]


def test_planted_meets_threshold():
    inst = gen_lightbulb(256, 64, 0.5, 11)
    a, b = inst.planted[0]
    s = inst.vectors.signs()
    assert naive_ip(s[a], s[b]) >= 32


@pytest.mark.parametrize("d,rho", [(64, 0.5), (65, 0.5), (100, 0.37), (7, 0.9), (128, 1 / 3)])
def test_planted_exact_threshold(d, rho):
    for seed in range(5):
        inst = gen_lightbulb(20, d, rho, seed)
        a, b = inst.planted[0]
        assert inner_product(inst.vectors, a, b) >= math.ceil(rho * d - 1e-12)
    assert 2 * agreement_count(d, rho) - d >= rho * d - 1e-9


@pytest.mark.parametrize("bad", [dict(n=1, d=8, rho=0.5), dict(n=8, d=0, rho=0.5),
                                 dict(n=8, d=8, rho=0.0), dict(n=8, d=8, rho=1.5)])
def test_invalid_arguments(bad):
    with pytest.raises(UsageError):
        gen_lightbulb(seed=0, **bad)


def test_pure_function():
    a = instance_to_bytes(gen_lightbulb(100, 90, 0.4, 5))
    b = instance_to_bytes(gen_lightbulb(100, 90, 0.4, 5))
    assert a == b


def test_background_mean_near_zero():
    n, d = 300, 128
    inst = gen_lightbulb(n, d, 0.5, 2)
    g = inner_products(inst.vectors).astype(float)
    iu = np.triu_indices(n, 1)
    vals = g[iu]
    a, b = inst.planted[0]
    mask = ~((iu[0] == a) & (iu[1] == b))
    vals = vals[mask]
    stderr = math.sqrt(d / vals.size)
    assert abs(vals.mean()) <= 4 * stderr


def test_promise_verified():
    n, d, w = 128, 512, 3.0
    inst = gen_promise(n, d, 0.6, w, 4)
    bound = promise_bound(n, d, w)
    g = naive_gram(inst.vectors.signs())
    planted = set(inst.planted)
    for i in range(n):
        for j in range(i + 1, n):
            if (i, j) not in planted:
                assert abs(g[i][j]) <= bound
    a, b = inst.planted[0]
    assert g[a][b] >= math.ceil(0.6 * d)


def test_promise_trivial_and_failure():
    assert gen_promise(2, 8, 0.5, 0.01, 0).planted == [(0, 1)]
    with pytest.raises(GenerationError):
        gen_promise(64, 64, 0.5, 0.05, 0)


def test_promise_chernoff_width_succeeds():
    # per-pair tail exp(-w^2 ln n / 2) <= n^-3 needs w >= sqrt(6)
    for seed in range(3):
        gen_promise(256, 128, 0.5, math.sqrt(6), seed, max_retries=5)


def test_findcorr_oracle():
    n, d, q = 128, 1024, 8
    inst = gen_findcorr(n, d, 0.5, 0.15, q, 3)
    s = inst.vectors.signs()
    assert len(inst.planted) == q
    planted = set(inst.planted)
    limit = math.ceil(0.15 * d)
    g = s[:n].astype(np.int64) @ s[n:].astype(np.int64).T
    for x in range(n):
        for y in range(n):
            if (x, n + y) in planted:
                assert g[x, y] >= 512
            else:
                assert abs(g[x, y]) <= limit


def test_findcorr_single_and_zero():
    inst = gen_findcorr(32, 512, 0.5, 0.3, 1, 0)
    assert len(inst.planted) == 1 and inst.n == 32
    with pytest.raises(UsageError):
        gen_findcorr(32, 512, 0.5, 0.3, 0, 0)


def test_generate_dispatch():
    assert generate("lightbulb", n=10, d=10, rho=0.5, seed=1) == gen_lightbulb(10, 10, 0.5, 1)
    with pytest.raises(UsageError):
        generate("nope")


@pytest.mark.parametrize("kind", ["lightbulb", "promise", "findcorr"])
def test_binary_roundtrip(kind, tmp_path):
    inst = generate(kind, n=40, d=300, rho=0.6, seed=2, w=4.0, tau=0.3, q=3)
    path = tmp_path / "x.bin"
    write_instance(inst, path)
    assert read_instance(path) == inst


def test_format_errors():
    data = instance_to_bytes(gen_lightbulb(10, 70, 0.5, 0))
    with pytest.raises(FormatError):
        instance_from_bytes(b"XXXX" + data[4:])
    with pytest.raises(FormatError):
        instance_from_bytes(data[:20])
    with pytest.raises(FormatError):
        instance_from_bytes(data[:-1])
    flipped = bytearray(data)
    flipped[60] ^= 1
    with pytest.raises(FormatError):
        instance_from_bytes(bytes(flipped))
    # payload intact but the metadata shortened
    with pytest.raises(FormatError):
        instance_from_bytes(data[:8] + data[12:])


def test_text_roundtrip():
    inst = gen_lightbulb(5, 9, 0.5, 0)
    assert vectors_from_text(vectors_to_text(inst.vectors)) == inst.vectors
    with pytest.raises(FormatError):
        vectors_from_text("2 3\n1 1 1\n")
    with pytest.raises(FormatError):
        vectors_from_text("1 3\n1 0 1\n")
