import numpy as np
import pytest

from structcov.asymptotics import (
    biweight_scalars,
    breakdown_for_cutoff,
    consistency_constant,
    cutoff_for_breakdown,
    delta_method_variance,
    deltas,
    direction_jacobian,
    gammas,
    gaussian_ml_scalars,
    limit_covariances,
    regression_scalars,
    scale_jacobian,
    scale_scalar,
    shape_jacobian,
    sigma12,
)
from structcov.errors import ConditionViolatedError, InvalidArgumentError
from structcov.linalg import vec
from structcov.structure import compound_symmetry, unstructured
from structcov.weights import RhoFunction, biweight, gaussian_ml, s_rho

from conftest import random_pds


@pytest.mark.parametrize("k", [1, 2, 5, 10])
def test_gaussian_ml_limit_scalars(k):
    s1, s2 = sigma12(gaussian_ml(k), k)
    assert s1 == pytest.approx(1.0, abs=1e-8)
    assert s2 == pytest.approx(0.0, abs=1e-8)


def test_gaussian_ml_gammas():
    # constant weights give gamma1 = 1 and gamma2 = 0
    g1, g2 = gammas(gaussian_ml(3), 3)
    assert g1 == pytest.approx(1.0, abs=1e-10)
    assert g2 == pytest.approx(0.0, abs=1e-10)


def test_unbounded_quadratic_rho_recovers_least_squares():
    # rho(s) = s^2/2 makes the S-weights collapse to the Gaussian-ML case
    k = 3
    quad = RhoFunction(
        cutoff=np.inf,
        rho=lambda s: np.asarray(s, dtype=float) ** 2 / 2,
        drho=lambda s: np.asarray(s, dtype=float),
        ddrho=lambda s: np.ones_like(np.asarray(s, dtype=float)),
        name="quadratic",
    )
    d1, d2 = deltas(quad, k)
    assert d1 == pytest.approx(k, rel=1e-10)
    assert d2 == pytest.approx(k, rel=1e-10)
    alpha, lam = regression_scalars(quad, k)
    assert alpha == pytest.approx(1.0, rel=1e-10)
    assert lam == pytest.approx(1.0, rel=1e-10)
    b0 = consistency_constant(quad, k)
    assert b0 == pytest.approx(k / 2, rel=1e-10)
    assert scale_scalar(quad, k, b0) == pytest.approx(1.0 / (2 * k), rel=1e-10)


@pytest.mark.parametrize(
    "k,eps,expected",
    [(1, 0.5, 1.548), (2, 0.5, 2.661), (2, 0.1, 7.474), (5, 0.25, 7.242), (10, 0.05, 24.246)],
)
def test_cutoff_table_spot_checks(k, eps, expected):
    assert cutoff_for_breakdown(k, eps) == pytest.approx(expected, abs=5e-4)


def test_breakdown_cutoff_roundtrip():
    for k, eps in [(2, 0.3), (5, 0.12), (10, 0.47)]:
        c = cutoff_for_breakdown(k, eps)
        assert breakdown_for_cutoff(k, c) == pytest.approx(eps, abs=1e-10)


def test_breakdown_is_decreasing_in_cutoff():
    eps = [breakdown_for_cutoff(3, c) for c in (1.0, 2.0, 4.0, 8.0)]
    assert all(a > b for a, b in zip(eps, eps[1:]))


def test_cutoff_for_breakdown_rejects_bad_targets():
    with pytest.raises(InvalidArgumentError):
        cutoff_for_breakdown(2, 0.6)
    with pytest.raises(InvalidArgumentError):
        cutoff_for_breakdown(2, 0.0)


def test_biweight_scalars_50_percent_anchor():
    s = biweight_scalars(2, breakdown=0.5)
    assert s.cutoff == pytest.approx(2.661, abs=5e-4)
    assert s.are_regression == pytest.approx(0.580, abs=0.002)
    assert s.are_shape == pytest.approx(0.376, abs=0.002)
    assert s.are_scale == pytest.approx(0.755, abs=0.002)
    assert s.breakdown == pytest.approx(0.5, abs=1e-10)


def test_scale_identity_links_sigma_scalars():
    for k, c in [(2, 2.661), (3, 4.0), (5, 4.652)]:
        s = biweight_scalars(k, cutoff=c)
        assert s.sigma3 == pytest.approx((2 * s.sigma1 / k + s.sigma2) / 4, abs=1e-8)


def test_sigma12_degenerate_family_rejected():
    # rho with gamma1 == 0 is excluded by the nondegeneracy condition
    from structcov.weights import m_estimator

    zero = lambda s: np.zeros_like(np.asarray(s, dtype=float))
    tri = m_estimator(2, zero, zero, zero, zero, zero)
    with pytest.raises(ConditionViolatedError):
        sigma12(tri, 2)


def test_limit_covariance_block_structure(rng):
    st = compound_symmetry(3)
    theta = np.array([1.0, 0.4])
    s1, s2 = 1.3, -0.2
    cov = limit_covariances(st, theta, s1, s2)
    g = st.gram(st.evaluate_pds(theta))
    expected = 2 * s1 * np.linalg.inv(g) + s2 * np.outer(theta, theta)
    np.testing.assert_allclose(cov.cov_theta, expected, atol=1e-12)
    el = st.stacked
    np.testing.assert_allclose(
        cov.cov_vecV,
        el @ (2 * s1 * np.linalg.inv(g)) @ el.T
        + s2 * np.outer(vec(st.evaluate(theta)), vec(st.evaluate(theta))),
        atol=1e-12,
    )


def test_shape_covariance_annihilates_inverse_direction():
    # the shape component is blind to the scale direction: its covariance
    # kills vec(Sigma^-1), and its jacobian kills vec(Sigma)
    st = compound_symmetry(3)
    theta = np.array([1.0, 0.4])
    cov = limit_covariances(st, theta, 1.0, 0.0)
    sigma = st.evaluate_pds(theta)
    resid = cov.cov_shape @ vec(sigma.inverse())
    assert np.abs(resid).max() < 1e-10


def test_scale_variance_matches_delta_method():
    st = compound_symmetry(3)
    theta = np.array([1.2, 0.3])
    s1, s2 = 0.9, 0.1
    cov = limit_covariances(st, theta, s1, s2)
    sigma = st.evaluate_pds(theta)
    j = scale_jacobian(sigma)
    via_delta = delta_method_variance(j, cov.cov_vecV)
    assert cov.var_scale == pytest.approx(float(via_delta[0, 0]), rel=1e-10)


def test_invalid_sigma_pair_rejected():
    st = compound_symmetry(3)
    with pytest.raises(InvalidArgumentError):
        limit_covariances(st, [1.0, 0.0], 1.0, -1.0)


def test_shape_jacobian_matches_numerical_derivative(rng):
    k = 3
    sigma = random_pds(k, rng)
    j = shape_jacobian(sigma)
    h = 1e-6

    def shape(c):
        return vec(c) / np.linalg.det(c) ** (1.0 / k)

    num = np.empty((k * k, k * k))
    for col in range(k * k):
        e = np.zeros(k * k)
        e[col] = h
        de = e.reshape(k, k, order="F")
        num[:, col] = (shape(sigma + de) - shape(sigma - de)) / (2 * h)
    np.testing.assert_allclose(j, num, atol=1e-6)
    # order-zero homogeneity: the jacobian kills the base point
    assert np.abs(j @ vec(sigma)).max() < 1e-10


def test_direction_jacobian_properties():
    theta = np.array([3.0, 4.0])
    j = direction_jacobian(theta)
    np.testing.assert_allclose(j @ theta, 0.0, atol=1e-12)
    h = 1e-7
    f = lambda t: t / np.linalg.norm(t)
    num = np.column_stack(
        [(f(theta + h * e) - f(theta - h * e)) / (2 * h) for e in np.eye(2)]
    )
    np.testing.assert_allclose(j, num, atol=1e-7)
    with pytest.raises(InvalidArgumentError):
        direction_jacobian(np.zeros(2))


def test_scale_jacobian_matches_numerical_derivative(rng):
    k = 2
    sigma = random_pds(k, rng)
    j = scale_jacobian(sigma)
    h = 1e-6
    f = lambda c: np.linalg.det(c) ** (1.0 / (2 * k))
    num = np.empty(k * k)
    for col in range(k * k):
        e = np.zeros(k * k)
        e[col] = h
        de = e.reshape(k, k, order="F")
        num[col] = (f(sigma + de) - f(sigma - de)) / (2 * h)
    np.testing.assert_allclose(j.ravel(), num, atol=1e-6)


def test_delta_method_base_point_guard():
    j = np.array([[1.0, 0.0]])
    cov = np.eye(2)
    with pytest.raises(InvalidArgumentError):
        delta_method_variance(j, cov, base_point=np.array([1.0, 0.0]))
    out = delta_method_variance(j, cov, base_point=np.array([0.0, 1.0]))
    assert out[0, 0] == pytest.approx(1.0)


def test_gaussian_ml_scalars_summary():
    s = gaussian_ml_scalars(4)
    assert s.sigma1 == pytest.approx(1.0, abs=1e-8)
    assert s.sigma2 == pytest.approx(0.0, abs=1e-8)
    assert s.are_regression == 1.0
    assert s.are_shape == pytest.approx(1.0, abs=1e-8)
    assert s.are_scale == pytest.approx(1.0, abs=1e-8)


def test_consistency_constant_of_biweight_is_positive_and_bounded():
    for k, c in [(1, 1.548), (2, 2.661), (10, 6.776)]:
        b0 = consistency_constant(biweight(c), k)
        assert 0.0 < b0 < c**2 / 6
