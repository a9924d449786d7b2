"""Limiting-variance scalars and covariance assemblies.

Everything here is an expectation of radial functions under the standard
Gaussian law, evaluated by quadrature:

* (gamma1, gamma2) -- the derivative constants of the estimating equations;
* (sigma1, sigma2) -- the scalars of the limiting covariance of the variance
  components;
* sigma3 -- the scale scalar, with the identity sigma3 = (2 sigma1/k + sigma2)/4;
* (delta1, delta2) -- the influence normalizers;
* (alpha, lambda) -- the regression efficiency scalars;
* breakdown <-> cutoff tuning for the biweight S-estimator, and the assembled
  limiting covariance matrices for a given structure.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.typing import NDArray
from scipy import optimize

from .errors import (
    ConditionViolatedError,
    DegenerateScaleError,
    InvalidArgumentError,
)
from .linalg import PdsMatrix, SymMatrix, vec
from .spherical import SphericalLaw, gaussian_law
from .structure import LinearStructure
from .weights import RhoFunction, WeightTriple, biweight, s_rho

__all__ = [
    "AsymptoticScalars",
    "LimitCovariances",
    "consistency_constant",
    "gammas",
    "sigma12",
    "regression_scalars",
    "scale_scalar",
    "deltas",
    "breakdown_for_cutoff",
    "cutoff_for_breakdown",
    "biweight_scalars",
    "limit_covariances",
    "delta_method_variance",
]

DEGENERACY_TOL = 1e-10

#: residual tolerance for the breakdown <-> cutoff root find
BREAKDOWN_ROOT_TOL = 1e-10


@dataclass(frozen=True)
class AsymptoticScalars:
    """All scalar indices for one (family, dimension, cutoff) combination.

    ``are_regression`` = 1/lambda_, ``are_shape`` = 1/sigma1 and
    ``are_scale`` = 1/(2 k sigma3) are the efficiencies relative to least
    squares; the scale normalization uses that least squares attains
    sigma3 = 1/(2k).
    """

    family: str
    k: int
    cutoff: float | None
    sigma1: float
    sigma2: float
    sigma3: float
    lambda_: float
    alpha: float
    gamma1: float
    gamma2: float
    delta1: float
    delta2: float
    b0: float | None
    breakdown: float | None = None

    @property
    def are_regression(self) -> float:
        return 1.0 / self.lambda_

    @property
    def are_shape(self) -> float:
        return 1.0 / self.sigma1

    @property
    def are_scale(self) -> float:
        return 1.0 / (2.0 * self.k * self.sigma3)


def _kinks(rho: RhoFunction | None) -> tuple[float, ...]:
    return (rho.cutoff,) if rho is not None else ()


def consistency_constant(rho: RhoFunction, k: int, law: SphericalLaw | None = None) -> float:
    """b0 = E[rho(||z||)] under the spherical reference law (Gaussian default)."""
    law = law or gaussian_law(k)
    return law.radial_expectation(lambda r: rho.rho(r), kinks=_kinks(rho))


def gammas(triple: WeightTriple, k: int, law: SphericalLaw | None = None) -> tuple[float, float]:
    """The derivative constants

    gamma1 = E[w2'(r) r^3 + k(k+2) w3(r)] / (k(k+2))
    gamma2 = E[(k+2) w3'(r) r - w2'(r) r^3] / (2k(k+2)).
    """
    law = law or gaussian_law(k)
    kk = _kinks(triple.rho)
    g1 = law.radial_expectation(
        lambda r: triple.dw2(r) * r**3 + k * (k + 2) * triple.w3(r), kinks=kk
    ) / (k * (k + 2))
    g2 = law.radial_expectation(
        lambda r: (k + 2) * triple.dw3(r) * r - triple.dw2(r) * r**3, kinks=kk
    ) / (2 * k * (k + 2))
    return g1, g2


def _check_nondegenerate(g1: float, g2: float, k: int) -> None:
    scale = 1.0 + abs(g1)
    if abs(g1) < DEGENERACY_TOL * scale or abs(g1 - k * g2) < DEGENERACY_TOL * scale:
        raise ConditionViolatedError(
            f"degenerate weight family: gamma1={g1:.3e}, gamma1-k*gamma2={g1 - k * g2:.3e}"
        )


def sigma12(triple: WeightTriple, k: int, law: SphericalLaw | None = None) -> tuple[float, float]:
    """The limiting-variance scalars (sigma1, sigma2) of the variance components."""
    law = law or gaussian_law(k)
    kk = _kinks(triple.rho)
    num1 = k * (k + 2) * law.radial_expectation(lambda r: triple.w2(r) ** 2 * r**4, kinks=kk)
    den1 = law.radial_expectation(
        lambda r: triple.dw2(r) * r**3 + k * (k + 2) * triple.w3(r), kinks=kk
    )
    den2 = law.radial_expectation(
        lambda r: triple.dw2(r) * r**3 + 2 * k * triple.w3(r) - k * triple.dw3(r) * r, kinks=kk
    )
    # den1 = k(k+2) gamma1 and den2 = 2k (gamma1 - k gamma2)
    _check_nondegenerate(den1 / (k * (k + 2)), (den1 / (k * (k + 2)) - den2 / (2 * k)) / k, k)
    sigma1 = num1 / den1**2
    num2 = 4.0 * law.radial_expectation(
        lambda r: (triple.w2(r) * r**2 - k * triple.w3(r)) ** 2, kinks=kk
    )
    sigma2 = -2.0 / k * sigma1 + num2 / den2**2
    return sigma1, sigma2


def regression_scalars(rho: RhoFunction, k: int, law: SphericalLaw | None = None) -> tuple[float, float]:
    """(alpha, lambda): the regression estimating-equation derivative constant and
    the inverse efficiency lambda = E[rho'(r)^2] / (k alpha^2)."""
    law = law or gaussian_law(k)
    kk = _kinks(rho)
    ddrho0 = float(rho.ddrho(np.asarray(0.0)))

    def integrand(r):
        safe = np.where(r == 0.0, 1.0, r)
        ratio = np.where(r == 0.0, ddrho0, rho.drho(r) / safe)
        return (1.0 - 1.0 / k) * ratio + rho.ddrho(r) / k

    alpha = law.radial_expectation(integrand, kinks=kk)
    lam = law.radial_expectation(lambda r: rho.drho(r) ** 2, kinks=kk) / (k * alpha**2)
    return alpha, lam


def deltas(rho: RhoFunction, k: int, law: SphericalLaw | None = None) -> tuple[float, float]:
    """delta1 = E[rho''(r) r^2 + (k+1) rho'(r) r] / (k+2) and delta2 = E[rho'(r) r]."""
    law = law or gaussian_law(k)
    kk = _kinks(rho)
    d1 = law.radial_expectation(
        lambda r: rho.ddrho(r) * r**2 + (k + 1) * rho.drho(r) * r, kinks=kk
    ) / (k + 2)
    d2 = law.radial_expectation(lambda r: rho.drho(r) * r, kinks=kk)
    return d1, d2


def scale_scalar(rho: RhoFunction, k: int, b0: float | None = None, law: SphericalLaw | None = None) -> float:
    """sigma3 = E[(rho(r) - b0)^2] / delta2^2."""
    law = law or gaussian_law(k)
    if b0 is None:
        b0 = rho.b0
    if b0 is None:
        b0 = consistency_constant(rho, k, law)
    _, d2 = deltas(rho, k, law)
    if abs(d2) < DEGENERACY_TOL:
        raise DegenerateScaleError(f"delta2 = {d2:.3e} is numerically zero")
    num = law.radial_expectation(lambda r: (rho.rho(r) - b0) ** 2, kinks=_kinks(rho))
    return num / d2**2


# -- breakdown <-> cutoff tuning -------------------------------------------


@lru_cache(maxsize=4096)
def _biweight_b0(k: int, c: float) -> float:
    return consistency_constant(biweight(c), k)


def breakdown_for_cutoff(k: int, c: float) -> float:
    """The asymptotic breakdown bound b0/(c^2/6) of the biweight S-estimator."""
    if c <= 0:
        raise InvalidArgumentError("cutoff must be positive")
    return _biweight_b0(int(k), float(c)) / (c**2 / 6.0)


def cutoff_for_breakdown(k: int, eps_star: float) -> float:
    """Solve eps_star = E[rho_B(||z||; c)] / (c^2/6) for the cutoff c.

    The map is monotone decreasing in c; bisection brackets on [0.05, 200].
    """
    if not 0.0 < eps_star <= 0.5:
        raise InvalidArgumentError(f"breakdown point {eps_star!r} outside (0, 0.5]")
    lo, hi = 0.05, 200.0
    f = lambda c: breakdown_for_cutoff(k, c) - eps_star
    if f(lo) < 0 or f(hi) > 0:
        raise InvalidArgumentError(f"no biweight cutoff in [{lo}, {hi}] for eps*={eps_star}")
    c = optimize.brentq(f, lo, hi, xtol=1e-12, rtol=8.9e-16)
    if abs(f(c)) > BREAKDOWN_ROOT_TOL * 100:
        raise InvalidArgumentError(f"cutoff root residual {f(c):.3e} too large")
    return float(c)


def biweight_scalars(k: int, cutoff: float | None = None, breakdown: float | None = None) -> AsymptoticScalars:
    """All scalar indices for the biweight S-family at (k, cutoff).

    Exactly one of ``cutoff`` / ``breakdown`` must be given.
    """
    if (cutoff is None) == (breakdown is None):
        raise InvalidArgumentError("provide exactly one of cutoff or breakdown")
    if cutoff is None:
        cutoff = cutoff_for_breakdown(k, breakdown)
    else:
        breakdown = breakdown_for_cutoff(k, cutoff)
    law = gaussian_law(k)
    b0 = _biweight_b0(int(k), float(cutoff))
    rho = biweight(cutoff).with_b0(b0)
    triple = s_rho(rho, k)
    g1, g2 = gammas(triple, k, law)
    s1, s2 = sigma12(triple, k, law)
    alpha, lam = regression_scalars(rho, k, law)
    d1, d2 = deltas(rho, k, law)
    s3 = scale_scalar(rho, k, b0, law)
    return AsymptoticScalars(
        family="s-rho",
        k=int(k),
        cutoff=float(cutoff),
        sigma1=s1,
        sigma2=s2,
        sigma3=s3,
        lambda_=lam,
        alpha=alpha,
        gamma1=g1,
        gamma2=g2,
        delta1=d1,
        delta2=d2,
        b0=b0,
        breakdown=float(breakdown),
    )


def gaussian_ml_scalars(k: int) -> AsymptoticScalars:
    """The least-squares reference point: sigma1 = 1, sigma2 = 0, unit efficiencies."""
    from .weights import gaussian_ml

    law = gaussian_law(k)
    triple = gaussian_ml(k)
    g1, g2 = gammas(triple, k, law)
    s1, s2 = sigma12(triple, k, law)
    # unbounded-rho limit rho(s) = s^2/2: alpha = 1, lambda = 1, sigma3 = 1/(2k)
    return AsymptoticScalars(
        family="gaussian-ml",
        k=int(k),
        cutoff=None,
        sigma1=s1,
        sigma2=s2,
        sigma3=(2 * s1 / k + s2) / 4.0,
        lambda_=1.0,
        alpha=1.0,
        gamma1=g1,
        gamma2=g2,
        delta1=float(k),  # rho(s) = s^2/2 limit: E[r^2 + (k+1) r^2]/(k+2) = k
        delta2=float(k),
        b0=None,
    )


# -- covariance assemblies ---------------------------------------------------


@dataclass(frozen=True)
class LimitCovariances:
    """Assembled limiting covariance matrices for one structure and (sigma1, sigma2)."""

    cov_theta: NDArray[np.float64]
    cov_vecV: NDArray[np.float64]
    cov_shape: NDArray[np.float64]
    cov_direction: NDArray[np.float64]
    var_scale: float


def limit_covariances(
    struct: LinearStructure,
    theta0: NDArray,
    sigma1: float,
    sigma2: float,
) -> LimitCovariances:
    """Assemble the limiting covariances of theta-hat, vec(V-hat), the shape
    component vec(V)/|V|^(1/k), the direction theta/||theta||, and the scale
    |V|^(1/(2k)).
    """
    theta0 = np.asarray(theta0, dtype=float).ravel()
    k = struct.dim
    if sigma1 < 0 or sigma2 < -2.0 * sigma1 / k - 1e-12:
        raise InvalidArgumentError(
            f"(sigma1, sigma2) = ({sigma1}, {sigma2}) violates sigma1 >= 0, sigma2 >= -2 sigma1/k"
        )
    sigma = struct.evaluate_pds(theta0)
    g = struct.gram(sigma)
    g_inv = np.linalg.inv(g)
    g_inv = 0.5 * (g_inv + g_inv.T)
    el = struct.stacked
    v_sigma = vec(sigma.entries)

    cov_theta = 2.0 * sigma1 * g_inv + sigma2 * np.outer(theta0, theta0)
    cov_vecv = 2.0 * sigma1 * el @ g_inv @ el.T + sigma2 * np.outer(v_sigma, v_sigma)
    det = float(np.prod(sigma.eigenvalues))
    cov_shape = (
        2.0
        * sigma1
        / det ** (2.0 / k)
        * (el @ g_inv @ el.T - np.outer(v_sigma, v_sigma) / k)
    )
    norm2 = float(theta0 @ theta0)
    proj = np.eye(struct.nparams) - np.outer(theta0, theta0) / norm2
    cov_direction = (2.0 * sigma1 / norm2) * proj @ g_inv @ proj
    var_scale = 0.25 * (2.0 * sigma1 / k + sigma2) * det ** (1.0 / k)
    sym = lambda a: 0.5 * (a + a.T)
    return LimitCovariances(
        cov_theta=sym(cov_theta),
        cov_vecV=sym(cov_vecv),
        cov_shape=sym(cov_shape),
        cov_direction=sym(cov_direction),
        var_scale=var_scale,
    )


def delta_method_variance(
    jacobian: NDArray,
    cov: NDArray,
    base_point: NDArray | None = None,
) -> NDArray[np.float64]:
    """J cov J^T, symmetrized.

    When ``base_point`` is given the jacobian of an order-zero homogeneous
    mapping must annihilate it; this is asserted to relative tolerance 1e-8.
    """
    j = np.atleast_2d(np.asarray(jacobian, dtype=float))
    c = np.asarray(cov, dtype=float)
    if j.shape[1] != c.shape[0] or c.shape[0] != c.shape[1]:
        raise InvalidArgumentError(
            f"jacobian {j.shape} does not match covariance {c.shape}"
        )
    if base_point is not None:
        x = np.asarray(base_point, dtype=float).ravel()
        resid = np.linalg.norm(j @ x)
        bound = 1e-8 * np.linalg.norm(j) * np.linalg.norm(x)
        if resid > bound:
            raise InvalidArgumentError(
                f"jacobian does not annihilate its base point: |J x| = {resid:.3e} > {bound:.3e}"
            )
    out = j @ c @ j.T
    return 0.5 * (out + out.T)


def shape_jacobian(sigma: PdsMatrix | NDArray) -> NDArray[np.float64]:
    """Derivative of C -> vec(C)/|C|^(1/k) at a positive definite point:

    H'(C) = |C|^(-1/k) ( I - vec(C) vec(C^-1)^T / k ).
    """
    sigma = sigma if isinstance(sigma, PdsMatrix) else PdsMatrix(SymMatrix(np.asarray(sigma)))
    k = sigma.dim
    det = float(np.prod(sigma.eigenvalues))
    v = vec(sigma.entries)
    vi = vec(sigma.inverse())
    return det ** (-1.0 / k) * (np.eye(k * k) - np.outer(v, vi) / k)


def direction_jacobian(theta: NDArray) -> NDArray[np.float64]:
    """Derivative of theta -> theta/||theta||."""
    theta = np.asarray(theta, dtype=float).ravel()
    n = float(np.linalg.norm(theta))
    if n == 0.0:
        raise InvalidArgumentError("direction jacobian undefined at theta = 0")
    l = theta.size
    return (np.eye(l) - np.outer(theta, theta) / n**2) / n


def scale_jacobian(sigma: PdsMatrix | NDArray) -> NDArray[np.float64]:
    """Derivative of C -> |C|^(1/(2k)) as a 1 x k^2 row."""
    sigma = sigma if isinstance(sigma, PdsMatrix) else PdsMatrix(SymMatrix(np.asarray(sigma)))
    k = sigma.dim
    det = float(np.prod(sigma.eigenvalues))
    return det ** (1.0 / (2 * k)) / (2 * k) * vec(sigma.inverse())[None, :]
