from __future__ import annotations

import math

import numpy as np
import pytest

from lightbulb.corevec import inner_product
from lightbulb.errors import FormatError, UsageError
from lightbulb.spherical import (
    SpherePointSet,
    disagreement_probability,
    hyperplane_signs,
    round_to_cube,
    rounded_correlation,
    sphere_from_text,
    sphere_to_text,
)


def pair_at(rho, dim=3):
    p = np.zeros((2, dim))
    p[0, 0] = 1
    p[1, 0], p[1, 1] = rho, math.sqrt(1 - rho * rho)
    return SpherePointSet(p)


def test_norm_check():
    with pytest.raises(UsageError):
        SpherePointSet(np.array([[1.0, 1e-4]]))
    SpherePointSet(np.array([[1.0 + 1e-10, 0.0]]))
    assert SpherePointSet.normalized([[3.0, 4.0]]).points.tolist() == [[0.6, 0.8]]


def test_identical_and_antipodal():
    p = SpherePointSet.normalized([[1.0, 2.0, -2.0], [1.0, 2.0, -2.0], [-1.0, -2.0, 2.0]])
    vs = round_to_cube(p, 500, 3)
    assert inner_product(vs, 0, 1) == 500
    assert inner_product(vs, 0, 2) == -500


def test_zero_dot_goes_positive():
    p = np.array([[1.0, 0.0], [0.0, 1.0]])
    w = np.array([[0.0, 2.0], [0.0, -1.0], [-3.0, 0.0]])
    assert hyperplane_signs(p, w).tolist() == [[1, 1, -1], [1, -1, 1]]


def test_deterministic():
    p = pair_at(0.3, 5)
    assert round_to_cube(p, 1000, 9) == round_to_cube(p, 1000, 9)
    assert round_to_cube(p, 1000, 9) != round_to_cube(p, 1000, 10)


def test_identity_values():
    assert disagreement_probability(0.5) == pytest.approx(1 / 3)
    assert disagreement_probability(1.0) == 0.0
    assert rounded_correlation(0.0) == pytest.approx(0.0)
    assert rounded_correlation(-1.0) == pytest.approx(-1.0)


def test_monte_carlo_half():
    d_out = 100_000
    vs = round_to_cube(pair_at(0.5), d_out, 1)
    frac = (d_out - inner_product(vs, 0, 1)) / (2 * d_out)
    assert abs(frac - 1 / 3) <= 0.02
    assert abs(inner_product(vs, 0, 1) / d_out - rounded_correlation(0.5)) <= 0.02


def test_text_roundtrip():
    p = SpherePointSet.normalized(np.random.default_rng(0).normal(size=(4, 6)))
    q = sphere_from_text(sphere_to_text(p))
    assert np.array_equal(p.points, q.points)
    with pytest.raises(FormatError):
        sphere_from_text("2 2\n1 0\n")
    with pytest.raises(FormatError):
        sphere_from_text("1 2\n1 x\n")
