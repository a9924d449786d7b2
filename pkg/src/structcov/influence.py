"""Influence functions of structured covariance functionals and the
gross-error-sensitivity (GES) indices of the biweight S-family.

The influence function of the structured covariance functional at an
elliptical model is characterized by two radial weights (alpha_C, beta_C);
for the scale component the single combination
gamma_C(s) = alpha_C(s) s^2/k - beta_C(s) remains.  For the S-functional
generated by rho with consistency constant b0,

    alpha_C(s) = k rho'(s) / (s delta1)
    beta_C(s)  = rho'(s) s / delta1 - 2 (rho(s) - b0) / delta2,

so gamma_C(s) collapses to 2 (rho(s) - b0) / delta2 exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.typing import NDArray

from .errors import DegenerateScaleError, InvalidArgumentError
from .asymptotics import deltas, consistency_constant, cutoff_for_breakdown
from .linalg import PdsMatrix, SymMatrix, unvec, vec
from .structure import LinearStructure
from .weights import RhoFunction, biweight

__all__ = [
    "InfluenceWeights",
    "influence_weights",
    "ml_influence_weights",
    "if_structured",
    "if_homogeneous",
    "GesIndices",
    "ges_indices",
]

DEGENERACY_TOL = 1e-10


@dataclass(frozen=True)
class InfluenceWeights:
    """The radial influence weights (alpha_C, beta_C, gamma_C) with their
    normalizers delta1 and delta2."""

    alphaC: Callable[[np.ndarray], np.ndarray]
    betaC: Callable[[np.ndarray], np.ndarray]
    gammaC: Callable[[np.ndarray], np.ndarray]
    delta1: float
    delta2: float


def influence_weights(rho: RhoFunction, k: int, b0: float | None = None) -> InfluenceWeights:
    """Influence weights of the S-functional generated by ``rho``."""
    if b0 is None:
        b0 = rho.b0
    if b0 is None:
        b0 = consistency_constant(rho, k)
    d1, d2 = deltas(rho, k)
    if abs(d1) < DEGENERACY_TOL or abs(d2) < DEGENERACY_TOL:
        raise DegenerateScaleError(f"degenerate normalizers delta1={d1:.3e}, delta2={d2:.3e}")
    ddrho0 = float(rho.ddrho(np.asarray(0.0)))

    def alpha_c(s):
        s = np.asarray(s, dtype=float)
        safe = np.where(s == 0.0, 1.0, s)
        ratio = np.where(s == 0.0, ddrho0, rho.drho(s) / safe)
        return k * ratio / d1

    def beta_c(s):
        s = np.asarray(s, dtype=float)
        return rho.drho(s) * s / d1 - 2.0 * (rho.rho(s) - b0) / d2

    def gamma_c(s):
        s = np.asarray(s, dtype=float)
        return alpha_c(s) * s**2 / k - beta_c(s)

    return InfluenceWeights(alpha_c, beta_c, gamma_c, d1, d2)


def ml_influence_weights(k: int) -> InfluenceWeights:
    """Influence weights of the Gaussian-ML (sample covariance) functional:
    alpha_C = beta_C = 1."""
    one = lambda s: np.ones_like(np.asarray(s, dtype=float))

    def gamma_c(s):
        s = np.asarray(s, dtype=float)
        return s**2 / k - 1.0

    return InfluenceWeights(one, one, gamma_c, float(k), float(k))


def _distance(y: NDArray, mu: NDArray, sigma_inv: NDArray) -> float:
    r = np.asarray(y, dtype=float).ravel() - np.asarray(mu, dtype=float).ravel()
    return float(np.sqrt(r @ sigma_inv @ r))


def if_structured(
    y: NDArray,
    mu: NDArray,
    struct: LinearStructure,
    theta0: NDArray,
    weights: InfluenceWeights,
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Influence function of the structured covariance functional and of the
    variance-components functional at the point y.

    Returns (if_vecM, if_theta) with if_vecM = L if_theta.
    """
    theta0 = np.asarray(theta0, dtype=float).ravel()
    sigma = struct.evaluate_pds(theta0)
    si = sigma.inverse()
    r = np.asarray(y, dtype=float).ravel() - np.asarray(mu, dtype=float).ravel()
    if r.size != struct.dim:
        raise InvalidArgumentError(f"point of dimension {r.size} does not match k={struct.dim}")
    d = _distance(y, mu, si)
    g = struct.gram(sigma)
    scatter = si @ np.outer(r, r) @ si
    core = np.linalg.solve(g, struct.stacked.T @ vec(scatter))
    a = float(weights.alphaC(np.asarray(d)))
    b = float(weights.betaC(np.asarray(d)))
    if_theta = a * core - b * theta0
    if_vecm = struct.stacked @ if_theta
    return if_vecm, if_theta


def if_homogeneous(
    y: NDArray,
    mu: NDArray,
    struct: LinearStructure,
    theta0: NDArray,
    weights: InfluenceWeights,
    target: str,
) -> NDArray[np.float64]:
    """Influence function of a scale-invariant component of the functional.

    Targets: ``shape`` (vec V / |V|^(1/k)), ``direction`` (theta/||theta||),
    ``scale`` (|V|^(1/(2k)), returns a length-1 vector), and
    ``direction-normalized-by-det`` (theta / |V(theta)|^(1/k)).
    """
    theta0 = np.asarray(theta0, dtype=float).ravel()
    sigma = struct.evaluate_pds(theta0)
    si = sigma.inverse()
    k = struct.dim
    d = _distance(y, mu, si)
    det = float(np.prod(sigma.eigenvalues))
    r = np.asarray(y, dtype=float).ravel() - np.asarray(mu, dtype=float).ravel()
    g = struct.gram(sigma)
    scatter = si @ np.outer(r, r) @ si
    core_theta = np.linalg.solve(g, struct.stacked.T @ vec(scatter))
    a = float(weights.alphaC(np.asarray(d)))

    if target == "shape":
        out = struct.stacked @ core_theta - d**2 / k * vec(sigma.entries)
        return a / det ** (1.0 / k) * out
    if target == "direction":
        norm = float(np.linalg.norm(theta0))
        proj = np.eye(struct.nparams) / norm - np.outer(theta0, theta0) / norm**3
        return a * proj @ core_theta
    if target == "direction-normalized-by-det":
        return a / det ** (1.0 / k) * (core_theta - d**2 / k * theta0)
    if target == "scale":
        gc = float(weights.gammaC(np.asarray(d)))
        return np.array([0.5 * det ** (-1.0 / (2 * k)) * gc])
    raise InvalidArgumentError(f"unknown influence target '{target}'")


@dataclass(frozen=True)
class GesIndices:
    """Gross-error-sensitivity indices of the biweight S-functionals.

    g1: regression; g2: shape/direction; g3: scale.  The scale index is the
    supremum of |gamma_C| = 2 |rho_B - b0| / delta2, which the closed form
    max(b0, c^2/6 - b0) attains at s = 0 or on the plateau.
    """

    g1: float
    g2: float
    g3: float
    k: int
    cutoff: float
    breakdown: float


def ges_indices(k: int, cutoff: float | None = None, breakdown: float | None = None) -> GesIndices:
    """GES indices for the biweight S-family at (k, cutoff).

    The suprema come from the biweight critical points:
    sup |rho'| = 16 c / (25 sqrt(5)) at s = c/sqrt(5), and
    sup |rho' s| = 4 c^2 / 27 at s = c/sqrt(3).
    """
    from .asymptotics import breakdown_for_cutoff, regression_scalars

    if (cutoff is None) == (breakdown is None):
        raise InvalidArgumentError("provide exactly one of cutoff or breakdown")
    if cutoff is None:
        cutoff = cutoff_for_breakdown(k, breakdown)
    else:
        breakdown = breakdown_for_cutoff(k, cutoff)
    c = float(cutoff)
    rho = biweight(c)
    b0 = consistency_constant(rho, k)
    d1, d2 = deltas(rho, k)
    alpha, _ = regression_scalars(rho, k)
    sup_drho = 16.0 * c / (25.0 * np.sqrt(5.0))
    sup_drho_s = 4.0 * c**2 / 27.0
    sup_rho_b0 = max(b0, c**2 / 6.0 - b0)
    g1 = sup_drho / alpha
    g2 = k * sup_drho_s / ((k + 2) * d1)
    g3 = 2.0 * sup_rho_b0 / d2
    return GesIndices(g1=g1, g2=g2, g3=g3, k=int(k), cutoff=c, breakdown=float(breakdown))


def perturbation_influence_ml(
    y: NDArray,
    mu: NDArray,
    sigma: NDArray,
    steps: tuple[float, float] = (1e-3, 1e-4),
) -> NDArray[np.float64]:
    """Finite-contamination estimate of the influence function of the sample
    covariance functional, Richardson-extrapolated over the two step sizes.

    The Gaussian-ML covariance functional at the contaminated law
    (1-h) P + h delta_y has the closed form
    C_h = (1-h) Sigma + h (y - m_h)(y - m_h)^T + (1-h)(mu - m_h)(mu - m_h)^T
    with contaminated mean m_h = (1-h) mu + h y.
    """
    y = np.asarray(y, dtype=float).ravel()
    mu = np.asarray(mu, dtype=float).ravel()
    sigma = np.asarray(sigma, dtype=float)

    def quotient(h: float) -> NDArray[np.float64]:
        m_h = (1.0 - h) * mu + h * y
        c_h = (
            (1.0 - h) * sigma
            + h * np.outer(y - m_h, y - m_h)
            + (1.0 - h) * np.outer(mu - m_h, mu - m_h)
        )
        return (c_h - sigma) / h

    h1, h2 = steps
    f1, f2 = quotient(h1), quotient(h2)
    return (h1 * f2 - h2 * f1) / (h1 - h2)
