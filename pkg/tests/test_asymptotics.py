import json
import math

import numpy as np
import pytest

from pmeanlab import fields
from pmeanlab.asymptotics import (
    DEFAULT_EPSILONS,
    StencilDomainError,
    amvp_residual_sweep,
    default_rule,
    delta_curve,
    extrapolate,
    fit_limit,
    verify_elliptic,
    verify_parabolic,
)
from pmeanlab.measure import unit_ball_rule
from pmeanlab.plaplace import QuadraticProbe, ZeroGradientError, random_probe

EPS = np.array(DEFAULT_EPSILONS)


def probe(a, xi, slope=0.0):
    return QuadraticProbe(0.0, np.asarray(xi, float), np.asarray(a, float), slope)


# ---------------------------------------------------------------------------
# extrapolation


def test_fit_examples():
    assert extrapolate(EPS, np.full(4, 0.7)) == pytest.approx(0.7, abs=1e-14)
    assert extrapolate(EPS, 1 + 3 * EPS) == pytest.approx(1.0, abs=1e-12)
    noise = 1e-8 * np.array([1, -1, 1, -1])
    assert extrapolate(EPS, 1 + 3 * EPS + noise) == pytest.approx(1.0, abs=1e-6)
    assert fit_limit(EPS, 2 + 5 * EPS**2, "even").limit == pytest.approx(2.0, abs=1e-12)
    with pytest.raises(ValueError):
        extrapolate([0.2, 0.1], [1, 1])
    with pytest.raises(ValueError):
        fit_limit(EPS, 2 + EPS, "cubic")


def test_richardson_cross_check():
    fit = fit_limit(EPS, 1 + 3 * EPS, "linear")
    assert fit.richardson == pytest.approx(1.0, abs=1e-12)


# ---------------------------------------------------------------------------
# delta curves


def test_pure_quadratic_p2_is_constant():
    pr = probe(np.array([[1.0, 0.2], [0.2, -0.5]]), [1.0, 0.5])
    from pmeanlab.plaplace import probe_field
    x = np.array([0.1, 0.2])
    d = delta_curve(probe_field(pr, x), x, 2, "Ball", unit_ball_rule(2, 4))
    assert np.allclose(d, 0.5 / 8, atol=1e-12, rtol=0)


@pytest.mark.parametrize("geometry", ["Ball", "Sphere"])
@pytest.mark.parametrize("p", [1, 1.5, 2, 3, math.inf])
def test_linear_field_has_zero_delta(geometry, p):
    f = fields.linear(2, [1.0, -2.0])
    d = delta_curve(f, np.array([0.3, 0.1]), p, geometry)
    assert np.max(np.abs(d)) <= 1e-8


def test_quartic_norm_extrapolates_to_laplacian():
    f = fields.norm_power(2, 4.0)
    rep = verify_elliptic(f, np.array([1.0, 0.0]), 2)
    assert rep.theoretical == pytest.approx(2.0)
    assert rep.rel_error <= 1e-8
    assert len(set(np.round(rep.deltas, 12))) > 1


def test_domain_and_gradient_errors():
    with pytest.raises(StencilDomainError):
        delta_curve(fields.radial_p_harmonic(2, 4), np.array([0.1, 0.0]), 4)
    with pytest.raises(ZeroGradientError):
        delta_curve(fields.norm_power(2), np.zeros(2), 2)
    with pytest.raises(ValueError):
        delta_curve(fields.linear(2), np.zeros(2), 2, epsilons=(0.1, 0.2, 0.05))
    with pytest.raises(ValueError):
        default_rule("Cube", 2, 2)


# ---------------------------------------------------------------------------
# verification


def test_elliptic_examples():
    rep = verify_elliptic(probe(np.eye(2), [1, 0]), np.zeros(2), 4)
    assert rep.theoretical == pytest.approx(1 / 3) and rep.rel_error <= 1e-3
    rep = verify_elliptic(probe(np.diag([0.0, 2.0]), [1, 0]), np.zeros(2), 1)
    assert rep.theoretical == pytest.approx(1 / 3) and rep.rel_error <= 1e-3
    rep = verify_elliptic(probe(np.eye(2), [1, 0]), np.zeros(2), math.inf)
    assert rep.theoretical == pytest.approx(0.5) and rep.rel_error <= 1e-3


def test_sphere_random_probe():
    rng = np.random.default_rng(5)
    pr = random_probe(rng, 2)
    rep = verify_elliptic(pr, rng.standard_normal(2), 3, "Sphere")
    assert rep.rel_error <= 1e-3


def test_parabolic_examples():
    rep = verify_parabolic(fields.caloric(2), np.array([0.5, 0.3]), 1.0, 2)
    assert rep.theoretical == 0.0 and abs(rep.fitted_limit) <= 1e-3
    rep = verify_parabolic(probe(np.eye(2), [1, 0], 1.0), np.zeros(2), 0.0, 2)
    assert rep.theoretical == pytest.approx(1 / (32 * math.pi)) and rep.rel_error <= 1e-2
    rep = verify_parabolic(probe(np.eye(2), [1, 0]), np.zeros(2), 0.0, math.inf)
    assert rep.theoretical == pytest.approx(1 / (2 * math.pi * math.e)) and rep.rel_error <= 1e-2


def test_amvp_examples():
    rep = amvp_residual_sweep(fields.harmonic_polynomial(2), np.array([0.4, 0.3]), 2)
    assert np.max(np.abs(rep.deltas)) <= 1e-10
    rep = amvp_residual_sweep(fields.radial_p_harmonic(2, 4), np.array([1.0, 0.0]), 4)
    assert abs(rep.fitted_limit) <= 1e-3 and rep.monotone
    rep = amvp_residual_sweep(fields.aronsson(), np.array([0.7, 0.5]), math.inf)
    assert abs(rep.fitted_limit) <= 1e-2


def test_report_serialization():
    rep = verify_elliptic(probe(np.eye(2), [1, 0]), np.zeros(2), 2)
    data = json.loads(rep.to_json())
    assert data["epsilons"] == list(DEFAULT_EPSILONS)
    assert data["rel_error"] == rep.rel_error
    rows = rep.to_csv().strip().splitlines()
    assert len(rows) == 1 + len(DEFAULT_EPSILONS) + 1
    assert rows[-1].startswith("summary")
