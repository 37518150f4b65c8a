import math

import numpy as np
import pytest

from pmeanlab import fields
from pmeanlab.plaplace import normalized_p_laplacian


@pytest.mark.parametrize("name", ["const:7", "linear", "quadratic", "normsq", "normpow:4",
                                  "radial:4", "aronsson", "harmonic"])
def test_catalog_builds_and_evaluates(name):
    f = fields.make_field(name, 2)
    x = np.array([0.7, 0.5])
    assert np.isfinite(f.value(x))
    assert f.gradient(x).shape == (2,)
    assert f.hessian(x).shape == (2, 2)


def test_catalog_errors():
    with pytest.raises(ValueError, match="unknown field"):
        fields.make_field("nope", 2)
    with pytest.raises(ValueError):
        fields.make_field("radial", 2)
    with pytest.raises(ValueError):
        fields.aronsson(3)


def test_exact_p_harmonic_fields():
    x = np.array([1.0, 0.0])
    f = fields.radial_p_harmonic(2, 4.0)
    assert f.value(np.array([8.0, 0.0])) == pytest.approx(4.0)  # |x|^(2/3)
    assert abs(normalized_p_laplacian(f.hessian(x), f.gradient(x), 4.0)) < 1e-14
    a = fields.aronsson()
    y = np.array([0.7, 0.5])
    assert abs(normalized_p_laplacian(a.hessian(y), a.gradient(y), math.inf)) < 1e-14
    h = fields.harmonic_polynomial(3)
    assert np.trace(h.hessian(np.ones(3))) == 0.0


def test_log_radial_field_for_p_equal_n():
    f = fields.radial_p_harmonic(3, 3.0)
    x = np.array([0.5, 0.2, 0.1])
    assert abs(normalized_p_laplacian(f.hessian(x), f.gradient(x), 3.0)) < 1e-12


def test_caloric_field():
    f = fields.caloric(2)
    x, t = np.array([0.3, 0.4]), 0.2
    assert -f.time_derivative(x, t) + np.trace(f.hessian(x, t)) == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(ValueError):
        f(np.zeros((1, 2)))


def test_domain_masks():
    f = fields.radial_p_harmonic(2, 4.0)
    assert list(f.contains(np.array([[0.0, 0.0], [1.0, 0.0]]))) == [False, True]


def test_singular_set_clearance():
    f = fields.radial_p_harmonic(2, 4.0)
    assert f.reaches_singularity(np.array([0.1, 0.0]), 0.2)
    assert not f.reaches_singularity(np.array([1.0, 0.0]), 0.2)
    a = fields.aronsson()
    assert a.reaches_singularity(np.array([0.7, 0.1]), 0.2)
    assert not fields.linear(2).reaches_singularity(np.zeros(2), 10.0)
