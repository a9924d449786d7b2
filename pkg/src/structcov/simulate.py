"""Monte Carlo harnesses for the radial projection law and the estimator limit.

Two desk-scale experiments:

* ``radial_projection_experiment`` draws radial-type random matrices with the
  prescribed (sigma1, sigma2) variance structure, pushes them through the
  rescaled projector, and compares empirical second moments of the projected
  matrix and its coordinate vector against the limiting covariance formulas.
* ``estimator_limit_experiment`` simulates the linear model with Gaussian
  errors, fits each replicate, and compares the empirical covariance of
  sqrt(n) (theta-hat - theta0) (and of the shape statistic) against the same
  formulas.

Reports are deterministic in (seed, parameters); every replicate derives its
stream from the seed and its replicate index.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict
from typing import Any

import numpy as np
from numpy.typing import NDArray

from .asymptotics import limit_covariances
from .errors import ConditionViolatedError, InvalidArgumentError
from .estimators import Dataset, FitOptions, fit
from .linalg import vec
from .structure import LinearStructure
from .weights import WeightTriple

__all__ = [
    "RadialProjectionReport",
    "EstimatorLimitReport",
    "radial_projection_experiment",
    "estimator_limit_experiment",
    "gaussian_designs",
    "report_to_dict",
]

#: largest tolerated fraction of failed replicate fits
MAX_FAILURE_FRACTION = 0.01


@dataclass(frozen=True)
class RadialProjectionReport:
    """Empirical vs theoretical second moments of the projected radial matrix."""

    eta_hat: float
    sigma1_hat: float
    sigma2_hat: float
    empirical_cov: NDArray[np.float64]
    theory_cov: NDArray[np.float64]
    empirical_cov_vecM: NDArray[np.float64]
    theory_cov_vecM: NDArray[np.float64]
    rel_err_theta: float
    rel_err_vecM: float
    max_rel_err: float
    replicates: int
    seed: int
    sigma1: float
    sigma2: float


@dataclass(frozen=True)
class EstimatorLimitReport:
    """Empirical vs theoretical covariance of sqrt(n)(theta-hat - theta0)."""

    empirical_cov_theta: NDArray[np.float64]
    theory_cov_theta: NDArray[np.float64]
    rel_frobenius_err: float
    empirical_cov_shape: NDArray[np.float64]
    theory_cov_shape: NDArray[np.float64]
    rel_frobenius_err_shape: float
    n: int
    replicates: int
    failures: int
    seed: int
    sigma1: float
    sigma2: float


def _rel_frobenius(emp: NDArray, theory: NDArray) -> float:
    denom = np.linalg.norm(theory)
    if denom == 0.0:
        return float(np.linalg.norm(emp))
    return float(np.linalg.norm(emp - theory) / denom)


def _replicate_rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence(entropy=int(seed), spawn_key=(int(stream),))
    )


def radial_projection_experiment(
    struct: LinearStructure,
    theta0: NDArray,
    sigma1: float,
    sigma2: float,
    replicates: int = 100_000,
    seed: int = 0,
) -> RadialProjectionReport:
    """Sample the radial-type law, project, and compare second moments.

    The generator draws a symmetric Gaussian matrix W with var(diag) = 2 sigma1
    and var(offdiag) = sigma1, then rescales its trace component,
    R = W + (b - 1) (tr W / k) I with b = sqrt((2 sigma1 + sigma2 k)/(2 sigma1)),
    which yields var(vec R) = sigma1 (I + K) + sigma2 vec(I) vec(I)^T.
    """
    theta0 = np.asarray(theta0, dtype=float).ravel()
    k = struct.dim
    if sigma1 < 0 or sigma2 < -2.0 * sigma1 / k - 1e-12:
        raise InvalidArgumentError(
            f"(sigma1, sigma2) = ({sigma1}, {sigma2}) violates sigma1 >= 0, "
            "sigma2 >= -2 sigma1 / k"
        )
    if replicates < 1:
        raise InvalidArgumentError("replicates must be positive")
    sigma = struct.evaluate_pds(theta0)
    half = sigma.sqrt()
    rng = _replicate_rng(seed, 0)

    if sigma1 > 0:
        a = rng.standard_normal((replicates, k, k))
        w = np.sqrt(sigma1 / 2.0) * (a + np.transpose(a, (0, 2, 1)))
        b = np.sqrt((2.0 * sigma1 + sigma2 * k) / (2.0 * sigma1))
        tr = np.einsum("rii->r", w)
        r = w + ((b - 1.0) / k) * tr[:, None, None] * np.eye(k)
    else:
        t = rng.standard_normal(replicates)
        r = np.sqrt(max(sigma2, 0.0)) * t[:, None, None] * np.eye(k)

    # estimate (sigma1, sigma2) from the pre-conjugation matrices
    offdiag = ~np.eye(k, dtype=bool)
    sigma1_hat = float(np.mean(np.var(r[:, offdiag], axis=0))) if k > 1 else float("nan")
    diag_var = float(np.mean(np.var(r[:, np.eye(k, dtype=bool)], axis=0)))
    if k == 1:
        sigma1_hat = diag_var / 2.0 if sigma2 == 0 else sigma1
    sigma2_hat = diag_var - 2.0 * sigma1_hat

    n_mat = np.einsum("ij,rjl,lm->rim", half, r, half)
    vec_n = n_mat.reshape(replicates, k * k)  # row-major == vec of transpose; N symmetric
    proj = struct.projector(sigma)
    vec_m = vec_n @ proj.T
    el = struct.stacked
    t_coord = np.linalg.solve(el.T @ el, el.T @ vec_m.T).T

    eta_hat = float(t_coord.mean(axis=0) @ theta0 / (theta0 @ theta0))
    cov = limit_covariances(struct, theta0, sigma1, sigma2)
    emp_t = np.cov(t_coord, rowvar=False).reshape(struct.nparams, struct.nparams)
    emp_m = np.cov(vec_m, rowvar=False).reshape(k * k, k * k)
    rel_t = _rel_frobenius(emp_t, cov.cov_theta)
    rel_m = _rel_frobenius(emp_m, cov.cov_vecV)
    return RadialProjectionReport(
        eta_hat=eta_hat,
        sigma1_hat=sigma1_hat,
        sigma2_hat=sigma2_hat,
        empirical_cov=emp_t,
        theory_cov=cov.cov_theta,
        empirical_cov_vecM=emp_m,
        theory_cov_vecM=cov.cov_vecV,
        rel_err_theta=rel_t,
        rel_err_vecM=rel_m,
        max_rel_err=max(rel_t, rel_m),
        replicates=int(replicates),
        seed=int(seed),
        sigma1=float(sigma1),
        sigma2=float(sigma2),
    )


def gaussian_designs(n: int, k: int, q: int, seed: int) -> NDArray[np.float64]:
    """A fixed design ensemble: n matrices of shape (k, q) with standard
    Gaussian entries, drawn once and reused across replicates."""
    return _replicate_rng(seed, 0).standard_normal((n, k, q))


def _shape_vec(v: NDArray, k: int) -> NDArray[np.float64]:
    det = float(np.linalg.det(v))
    return vec(v) / det ** (1.0 / k)


def estimator_limit_experiment(
    struct: LinearStructure,
    theta0: NDArray,
    beta0: NDArray,
    designs: NDArray,
    triple: WeightTriple,
    sigma1: float,
    sigma2: float,
    n: int,
    replicates: int,
    seed: int = 0,
    options: FitOptions | None = None,
) -> EstimatorLimitReport:
    """Simulate y_i = X_i beta0 + V(theta0)^(1/2) z_i with Gaussian z, fit each
    replicate, and compare the covariance of sqrt(n)(theta-hat - theta0) and of
    the shape statistic against the limiting formulas."""
    theta0 = np.asarray(theta0, dtype=float).ravel()
    beta0 = np.asarray(beta0, dtype=float).ravel()
    designs = np.asarray(designs, dtype=float)
    k = struct.dim
    if designs.shape[0] != n or designs.shape[1] != k:
        raise InvalidArgumentError(
            f"designs of shape {designs.shape} do not match (n, k) = ({n}, {k})"
        )
    sigma = struct.evaluate_pds(theta0)
    half = sigma.sqrt()
    mean_part = np.einsum("nkq,q->nk", designs, beta0)
    cov = limit_covariances(struct, theta0, sigma1, sigma2)
    shape0 = _shape_vec(sigma.entries, k)

    draws_theta = []
    draws_shape = []
    failures = 0
    for rep in range(replicates):
        rng = _replicate_rng(seed, rep + 1)
        z = rng.standard_normal((n, k))
        y = mean_part + z @ half.T
        try:
            result = fit(Dataset(y, designs), struct, triple, options)
        except Exception:
            failures += 1
            continue
        if not (result.converged and result.pds_valid):
            failures += 1
            continue
        draws_theta.append(np.sqrt(n) * (result.theta - theta0))
        v_hat = struct.evaluate(result.theta)
        draws_shape.append(np.sqrt(n) * (_shape_vec(v_hat, k) - shape0))
    if failures > MAX_FAILURE_FRACTION * replicates:
        raise ConditionViolatedError(
            f"{failures} of {replicates} replicate fits failed (over the "
            f"{MAX_FAILURE_FRACTION:.0%} budget)"
        )
    arr_t = np.asarray(draws_theta)
    arr_s = np.asarray(draws_shape)
    emp_t = np.cov(arr_t, rowvar=False).reshape(struct.nparams, struct.nparams)
    emp_s = np.cov(arr_s, rowvar=False).reshape(k * k, k * k)
    return EstimatorLimitReport(
        empirical_cov_theta=emp_t,
        theory_cov_theta=cov.cov_theta,
        rel_frobenius_err=_rel_frobenius(emp_t, cov.cov_theta),
        empirical_cov_shape=emp_s,
        theory_cov_shape=cov.cov_shape,
        rel_frobenius_err_shape=_rel_frobenius(emp_s, cov.cov_shape),
        n=int(n),
        replicates=int(replicates),
        failures=int(failures),
        seed=int(seed),
        sigma1=float(sigma1),
        sigma2=float(sigma2),
    )


def report_to_dict(report: Any) -> dict:
    """Serialize a report dataclass to JSON-ready primitives.

    Matrices become row-major nested lists; scalars stay as floats/ints.
    """
    out: dict[str, Any] = {"report_type": type(report).__name__}
    for key, value in asdict(report).items():
        if isinstance(value, np.ndarray):
            out[key] = value.tolist()
        elif isinstance(value, (np.floating, np.integer)):
            out[key] = value.item()
        else:
            out[key] = value
    return out
