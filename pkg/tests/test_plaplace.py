import math

import numpy as np
import pytest
from scipy.stats import special_ortho_group

from pmeanlab import fields
from pmeanlab.plaplace import (
    QuadraticProbe,
    SmoothField,
    ZeroGradientError,
    case_one_coefficient,
    case_one_coefficient_quadrature,
    elliptic_coefficient,
    normalized_p_laplacian,
    parabolic_coefficient,
    probe_field,
    random_probe,
)


def probe(a, xi, slope=0.0):
    return QuadraticProbe(0.0, np.asarray(xi, float), np.asarray(a, float), slope)


def test_operator_examples():
    rng = np.random.default_rng(0)
    for n in (2, 3):
        for p in (1.0, 1.5, 4.0):
            xi = rng.standard_normal(n)
            assert normalized_p_laplacian(np.eye(n), xi, p) == pytest.approx(n + p - 2)
    assert normalized_p_laplacian(np.diag([2.0, 0.0]), [1, 0], 4) == pytest.approx(6.0)
    assert normalized_p_laplacian(np.eye(2), [1, 0], math.inf) == pytest.approx(1.0)
    with pytest.raises(ZeroGradientError):
        normalized_p_laplacian(np.eye(2), [0, 0], 3)


def test_elliptic_examples():
    assert elliptic_coefficient(probe(np.eye(2), [1, 0]), 4) == pytest.approx(1 / 3)
    assert elliptic_coefficient(probe(np.diag([0.0, 2.0]), [1, 0]), 1) == pytest.approx(1 / 3)
    assert elliptic_coefficient(probe(np.eye(3), [1, 0, 0]), 2, geometry="Sphere") == pytest.approx(0.5)
    a = np.diag([1.0, 3.0])
    for geometry in ("Ball", "Sphere"):
        assert elliptic_coefficient(probe(a, [1, 1]), math.inf, geometry=geometry) == pytest.approx(1.0)
    assert elliptic_coefficient(probe(a, [1, 1]), 2) == pytest.approx(np.trace(a) / 8)
    with pytest.raises(ValueError):
        elliptic_coefficient(probe(a, [1, 1]), 2, geometry="Cube")


def test_parabolic_examples():
    assert parabolic_coefficient(probe(np.eye(2), [1, 0], 1.0), 2) == pytest.approx(1 / (32 * math.pi))
    assert parabolic_coefficient(probe(np.eye(2), [1, 0], 2.0), 2) == pytest.approx(0.0, abs=1e-16)
    assert parabolic_coefficient(probe(np.eye(2), [1, 0]), math.inf) == pytest.approx(1 / (2 * math.pi * math.e))
    # the finite-p prefactor tends to the p = inf one
    big = parabolic_coefficient(probe(np.eye(2), [1, 0]), 1e6) * 4 * math.pi * math.e
    assert big == pytest.approx(2.0 * 1e6 / (1e6), rel=1e-4)
    with pytest.raises(ValueError):
        parabolic_coefficient(probe([[1.0]], [1.0]), 1)


def test_rotation_and_scale_invariance():
    rng = np.random.default_rng(1)
    for n in (2, 3):
        for _ in range(20):
            pr = random_probe(rng, n)
            r = special_ortho_group.rvs(n, random_state=rng)
            for p in (1, 1.5, 3, math.inf):
                ref = normalized_p_laplacian(pr.hessian, pr.gradient, p)
                rot = normalized_p_laplacian(r.T @ pr.hessian @ r, r.T @ pr.gradient, p)
                assert abs(rot - ref) <= 1e-12 * max(1.0, abs(ref))
                for c in (3.0, -0.5):
                    scaled = probe(pr.hessian, c * pr.gradient)
                    for geo in ("Ball", "Sphere"):
                        assert elliptic_coefficient(scaled, p, geometry=geo) == pytest.approx(
                            elliptic_coefficient(pr, p, geometry=geo), abs=1e-12)


def test_case_one_agrees_with_unified_formula():
    rng = np.random.default_rng(2)
    for n in (2, 3, 4):
        for _ in range(20):
            pr = random_probe(rng, n)
            unified = elliptic_coefficient(pr, 1)
            assert abs(case_one_coefficient(pr) - unified) <= 1e-12
            assert abs(case_one_coefficient_quadrature(pr) - unified) <= 1e-12


def test_probe_field():
    f = probe_field(probe(np.zeros((2, 2)), [1, 0]), [0.3, 0.4])
    assert f.value([1.0, 2.0]) == pytest.approx(0.7)
    a = np.array([[2.0, 0.5], [0.5, -1.0]])
    g = probe_field(QuadraticProbe(1.0, np.array([1.0, 2.0]), a), [0.0, 0.0])
    assert np.array_equal(g.hessian([0.3, 0.1]), a)
    pr = QuadraticProbe(1.0, np.array([1.0, 2.0]), a, 0.7)
    h = probe_field(pr, [0.1, 0.2], t0=1.0)
    z, s, eps = np.array([0.3, -0.4]), 0.02, 0.5
    expected = 1.0 + eps * z @ pr.gradient - 0.7 * eps**2 * s + 0.5 * eps**2 * z @ a @ z
    assert h.value([0.1, 0.2] + eps * z, 1.0 - eps**2 * s) == pytest.approx(expected, abs=1e-14)


def test_probe_validation():
    with pytest.raises(ValueError):
        QuadraticProbe(0.0, np.ones(2), np.array([[1.0, 2.0], [0.0, 1.0]]))
    with pytest.raises(ValueError):
        QuadraticProbe(0.0, np.ones(3), np.eye(2))


def test_finite_differences_match_analytic():
    rng = np.random.default_rng(4)
    for name in ("normpow:3", "harmonic", "quadratic"):
        f = fields.make_field(name, 2)
        bare = SmoothField(f.func, 2)
        for _ in range(5):
            x = rng.uniform(0.3, 1.0, 2)
            g, h = f.gradient(x), f.hessian(x)
            assert np.allclose(bare.gradient(x), g, rtol=1e-6, atol=1e-6 * np.abs(g).max())
            assert np.allclose(bare.hessian(x), h, rtol=1e-6, atol=1e-6 * np.abs(h).max())
    cal = fields.caloric(2)
    bare = SmoothField(cal.func, 2, parabolic=True)
    assert bare.time_derivative(np.array([0.2, 0.1]), 0.5) == pytest.approx(1.0, rel=1e-6)
