import numpy as np
import pytest

from structcov.errors import ConditionViolatedError, InvalidArgumentError
from structcov.weights import (
    biweight,
    gaussian_ml,
    m_estimator,
    radial_companions,
    s_rho,
)


def test_biweight_plateau_and_kink():
    rho = biweight(2.0)
    assert rho.sup_rho == pytest.approx(4.0 / 6.0)
    assert float(rho.rho(np.asarray(5.0))) == pytest.approx(4.0 / 6.0)
    assert float(rho.drho(np.asarray(5.0))) == 0.0
    assert float(rho.rho(np.asarray(0.0))) == 0.0


def test_biweight_derivative_matches_finite_difference():
    rho = biweight(3.0)
    s = np.linspace(0.05, 2.9, 40)
    h = 1e-6
    fd = (rho.rho(s + h) - rho.rho(s - h)) / (2 * h)
    np.testing.assert_allclose(rho.drho(s), fd, atol=1e-8)
    fd2 = (rho.drho(s + h) - rho.drho(s - h)) / (2 * h)
    np.testing.assert_allclose(rho.ddrho(s), fd2, atol=1e-6)


def test_biweight_critical_points():
    c = 2.5
    rho = biweight(c)
    grid = np.linspace(0, 3 * c, 100_001)
    assert np.abs(rho.drho(grid)).max() == pytest.approx(16 * c / (25 * np.sqrt(5)), rel=1e-8)
    assert np.abs(rho.drho(grid) * grid).max() == pytest.approx(4 * c**2 / 27, rel=1e-8)


def test_biweight_rejects_bad_cutoff():
    with pytest.raises(InvalidArgumentError):
        biweight(0.0)
    with pytest.raises(InvalidArgumentError):
        biweight(float("nan"))


def test_gaussian_ml_weights_are_constant():
    tri = gaussian_ml(3)
    s = np.linspace(0, 10, 7)
    np.testing.assert_array_equal(tri.w1(s), np.ones(7))
    np.testing.assert_array_equal(tri.w2(s), np.ones(7))
    np.testing.assert_array_equal(tri.w3(s), np.ones(7))
    np.testing.assert_array_equal(tri.dw2(s), np.zeros(7))
    np.testing.assert_array_equal(tri.dw3(s), np.zeros(7))


def test_s_rho_requires_b0():
    with pytest.raises(InvalidArgumentError):
        s_rho(biweight(2.0), 3)


def test_s_rho_limits_at_zero():
    k = 3
    rho = biweight(2.0).with_b0(0.4)
    tri = s_rho(rho, k)
    # rho'(s)/s -> rho''(0) = 1 as s -> 0
    assert float(tri.w1(np.asarray(0.0))) == pytest.approx(1.0)
    assert float(tri.w2(np.asarray(0.0))) == pytest.approx(float(k))
    assert float(tri.dw2(np.asarray(0.0))) == 0.0
    assert float(tri.w3(np.asarray(0.0))) == pytest.approx(0.4)
    # scalar and array calls agree near zero
    s = np.array([0.0, 1e-8, 0.5])
    np.testing.assert_allclose(tri.w1(s)[1], float(tri.w1(np.asarray(1e-8))))


def test_s_rho_matches_displayed_formulas():
    k = 2
    rho = biweight(2.5).with_b0(0.3)
    tri = s_rho(rho, k)
    s = np.linspace(0.1, 3.0, 20)
    np.testing.assert_allclose(tri.w1(s), rho.drho(s) / s)
    np.testing.assert_allclose(tri.w2(s), k * rho.drho(s) / s)
    np.testing.assert_allclose(tri.w3(s), rho.drho(s) * s - rho.rho(s) + 0.3)
    h = 1e-6
    np.testing.assert_allclose(tri.dw2(s), (tri.w2(s + h) - tri.w2(s - h)) / (2 * h), atol=1e-6)
    np.testing.assert_allclose(tri.dw3(s), (tri.w3(s + h) - tri.w3(s - h)) / (2 * h), atol=1e-6)


def test_m_estimator_passthrough():
    one = lambda s: np.ones_like(np.asarray(s, dtype=float))
    tri = m_estimator(2, one, one, one, one, one)
    assert tri.family == "m-estimator"
    assert float(tri.w2(np.asarray(3.0))) == 1.0


def test_radial_companions_values():
    tri = gaussian_ml(2)
    comp = radial_companions(tri, 1.0, 0.0, 2)
    s = np.asarray(1.5)
    assert float(comp.v1(s)) == pytest.approx(1.0)
    assert float(comp.v2(s)) == pytest.approx(1.0)


def test_radial_companions_degenerate():
    tri = gaussian_ml(2)
    with pytest.raises(ConditionViolatedError):
        radial_companions(tri, 0.0, 0.0, 2)
    with pytest.raises(ConditionViolatedError):
        radial_companions(tri, 1.0, 0.5, 2)
