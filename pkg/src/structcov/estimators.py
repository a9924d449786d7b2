"""Iteratively reweighted solver for the (beta, theta) estimating equations.

The score functions are

    Psi_beta  = w1(d) X^T V^-1 (y - X beta)
    Psi_theta = L^T (V^-1 (x) V^-1) vec{ w2(d) r r^T - w3(d) V },

with d^2 = r^T V^-1 r and r = y - X beta.  The solver alternates a weighted
generalized least-squares beta-step with weights w1(d_i) and a theta-step
solving the weighted projection normal equations

    L^T (V^-1 (x) V^-1) L theta = L^T (V^-1 (x) V^-1) vec( sum w2 r r^T / sum w3 ).

This targets a fixed point of the estimating equations from a given start; it
does not perform a global S-minimization search.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from numpy.typing import NDArray

from .errors import InvalidArgumentError, NotPositiveDefiniteError
from .linalg import symmetrize, vec
from .structure import LinearStructure
from .weights import WeightTriple

__all__ = [
    "Dataset",
    "FitOptions",
    "FitResult",
    "load_dataset",
    "dataset_from_csv",
    "dataset_from_json",
    "psi_residual",
    "fit",
]

#: converged fits must satisfy ||psi|| <= PSI_TOL * (1 + ||theta||)
PSI_TOL = 1e-6

MAX_HALVINGS = 30


@dataclass(frozen=True)
class Dataset:
    """n observations (y_i, X_i) of the linear model y_i = X_i beta + u_i.

    y has shape (n, k); x has shape (n, k, q).  The stacked design must have
    full column rank q.
    """

    y: NDArray[np.float64]
    x: NDArray[np.float64]

    def __post_init__(self) -> None:
        y = np.asarray(self.y, dtype=float)
        x = np.asarray(self.x, dtype=float)
        if y.ndim != 2:
            raise InvalidArgumentError(f"y must be (n, k), got shape {y.shape}")
        if x.ndim != 3 or x.shape[:2] != y.shape:
            raise InvalidArgumentError(
                f"x must be (n, k, q) matching y {y.shape}, got shape {x.shape}"
            )
        n, k, q = x.shape
        stacked = x.reshape(n * k, q)
        if np.linalg.matrix_rank(stacked) < q:
            raise InvalidArgumentError("stacked design matrix is column rank deficient")
        y = y.copy()
        x = x.copy()
        y.flags.writeable = False
        x.flags.writeable = False
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "x", x)

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def dim(self) -> int:
        return self.y.shape[1]

    @property
    def ncovariates(self) -> int:
        return self.x.shape[2]


def _expected_header(k: int, q: int) -> list[str]:
    cols = [f"y_{j + 1}" for j in range(k)]
    cols += [f"x_{r + 1}_{c + 1}" for r in range(k) for c in range(q)]
    return cols


def dataset_from_csv(path: str | Path) -> Dataset:
    """Read a dataset from CSV with header y_1..y_k, x_1_1..x_k_q (row-major X)."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InvalidArgumentError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        ys = [h for h in header if h.startswith("y_")]
        k = len(ys)
        if k == 0:
            raise InvalidArgumentError(f"{path}: header has no y_* columns")
        q = (len(header) - k) // max(k, 1)
        if header != _expected_header(k, q):
            raise InvalidArgumentError(
                f"{path}: header {header} does not match the y_1..y_{k}, "
                f"x_1_1..x_{k}_{q} layout"
            )
        rows_y, rows_x = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != k + k * q:
                raise InvalidArgumentError(
                    f"{path}, line {lineno}: expected {k + k * q} fields, got {len(row)}"
                )
            try:
                vals = [float(c) for c in row]
            except ValueError as exc:
                raise InvalidArgumentError(f"{path}, line {lineno}: {exc}") from None
            rows_y.append(vals[:k])
            rows_x.append(np.reshape(vals[k:], (k, q)))
    if not rows_y:
        raise InvalidArgumentError(f"{path}: no data rows")
    return Dataset(np.asarray(rows_y), np.asarray(rows_x))


def dataset_from_json(path: str | Path) -> Dataset:
    """Read a dataset from JSON: {"y": n x k, "x": n x k x q} nested lists."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidArgumentError(f"invalid dataset JSON in {path}: {exc}") from exc
    if not isinstance(doc, dict) or "y" not in doc or "x" not in doc:
        raise InvalidArgumentError(f"{path}: dataset JSON needs 'y' and 'x' fields")
    return Dataset(np.asarray(doc["y"], dtype=float), np.asarray(doc["x"], dtype=float))


def load_dataset(path: str | Path) -> Dataset:
    """Dispatch on file suffix: .json uses the JSON schema, anything else CSV."""
    if str(path).lower().endswith(".json"):
        return dataset_from_json(path)
    return dataset_from_csv(path)


def write_dataset_csv(data: Dataset, path: str | Path) -> None:
    """Write a dataset in the CSV schema accepted by :func:`dataset_from_csv`."""
    n, k, q = data.x.shape
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_expected_header(k, q))
        for i in range(n):
            writer.writerow([repr(float(v)) for v in (*data.y[i], *data.x[i].ravel())])


@dataclass(frozen=True)
class FitOptions:
    max_iterations: int = 500
    tol: float = 1e-9
    beta0: NDArray | None = None
    theta0: NDArray | None = None


@dataclass(frozen=True)
class FitResult:
    beta: NDArray[np.float64]
    theta: NDArray[np.float64]
    distances: NDArray[np.float64]
    iterations: int
    converged: bool
    pds_valid: bool
    psi_norm: float
    message: str = ""


def _residuals(data: Dataset, beta: NDArray) -> NDArray[np.float64]:
    return data.y - np.einsum("nkq,q->nk", data.x, beta)


def _distances(resid: NDArray, v_inv: NDArray) -> NDArray[np.float64]:
    return np.sqrt(np.maximum(np.einsum("nk,kl,nl->n", resid, v_inv, resid), 0.0))


def psi_residual(
    data: Dataset,
    beta: NDArray,
    theta: NDArray,
    struct: LinearStructure,
    triple: WeightTriple,
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Empirical averages of (Psi_beta, Psi_theta) over the dataset."""
    beta = np.asarray(beta, dtype=float).ravel()
    theta = np.asarray(theta, dtype=float).ravel()
    v = struct.evaluate_pds(theta)
    vi = v.inverse()
    resid = _residuals(data, beta)
    d = _distances(resid, vi)
    w1 = triple.w1(d)
    w2 = triple.w2(d)
    w3 = triple.w3(d)
    n = data.n
    psi_beta = np.einsum("n,nkq,kl,nl->q", w1, data.x, vi, resid) / n
    scatter = np.einsum("n,nk,nl->kl", w2, resid, resid) / n
    inner = vi @ (scatter - float(np.mean(w3)) * v.entries) @ vi
    psi_theta = struct.stacked.T @ vec(symmetrize(inner))
    return psi_beta, psi_theta


def _initial_values(data: Dataset, struct: LinearStructure) -> tuple[NDArray, NDArray]:
    n, k, q = data.x.shape
    stacked_x = data.x.reshape(n * k, q)
    beta0, *_ = np.linalg.lstsq(stacked_x, data.y.ravel(), rcond=None)
    resid = _residuals(data, beta0)
    scatter = resid.T @ resid / n
    theta0 = struct.coordinates(scatter)
    if struct.is_valid_theta(theta0):
        return beta0, theta0
    # fall back toward the isotropic projection until V(theta) is PDS
    theta_iso = struct.coordinates(np.trace(scatter) / k * np.eye(k))
    for a in np.linspace(0.1, 1.0, 10):
        cand = (1.0 - a) * theta0 + a * theta_iso
        if struct.is_valid_theta(cand):
            return beta0, cand
    raise NotPositiveDefiniteError("no positive definite starting value found")


def fit(
    data: Dataset,
    struct: LinearStructure,
    triple: WeightTriple,
    options: FitOptions | None = None,
) -> FitResult:
    """Alternate weighted GLS beta-steps and projected-scatter theta-steps.

    Returns a result with ``converged`` False (and a diagnostic message)
    rather than raising on non-convergence; steps leaving the positive
    definite cone are halved, with an error after 30 halvings.
    """
    options = options or FitOptions()
    n, k, q = data.x.shape
    if n <= q:
        raise InvalidArgumentError(f"need n > q, got n={n}, q={q}")
    if n * k <= struct.nparams:
        raise InvalidArgumentError(
            f"need n*k > {struct.nparams} variance components, got n*k={n * k}"
        )
    if struct.dim != k:
        raise InvalidArgumentError(f"structure dimension {struct.dim} does not match data k={k}")

    if options.beta0 is not None and options.theta0 is not None:
        beta = np.asarray(options.beta0, dtype=float).ravel().copy()
        theta = np.asarray(options.theta0, dtype=float).ravel().copy()
        if not struct.is_valid_theta(theta):
            raise NotPositiveDefiniteError("supplied theta0 is not positive definite")
    else:
        beta, theta = _initial_values(data, struct)
        if options.beta0 is not None:
            beta = np.asarray(options.beta0, dtype=float).ravel().copy()
        if options.theta0 is not None:
            theta = np.asarray(options.theta0, dtype=float).ravel().copy()

    message = ""
    converged = False
    iterations = 0
    for iterations in range(1, options.max_iterations + 1):
        v = struct.evaluate_pds(theta)
        vi = v.inverse()
        resid = _residuals(data, beta)
        d = _distances(resid, vi)
        w1 = triple.w1(d)

        lhs = np.einsum("n,nkq,kl,nlp->qp", w1, data.x, vi, data.x)
        rhs = np.einsum("n,nkq,kl,nl->q", w1, data.x, vi, data.y)
        try:
            beta_new = np.linalg.solve(lhs, rhs)
        except np.linalg.LinAlgError:
            message = "singular weighted least-squares system (all weights near zero?)"
            break

        resid = _residuals(data, beta_new)
        d = _distances(resid, vi)
        w2 = triple.w2(d)
        w3 = triple.w3(d)
        w3_sum = float(np.sum(w3))
        if abs(w3_sum) < 1e-12 * n:
            message = "degenerate theta-step: sum of w3 weights is numerically zero"
            break
        scatter = np.einsum("n,nk,nl->kl", w2, resid, resid) / w3_sum
        g = struct.gram(v)
        target = struct.stacked.T @ vec(vi @ symmetrize(scatter) @ vi)
        theta_new = np.linalg.solve(g, target)

        halvings = 0
        while not struct.is_valid_theta(theta_new):
            theta_new = 0.5 * (theta_new + theta)
            halvings += 1
            if halvings > MAX_HALVINGS:
                raise NotPositiveDefiniteError(
                    f"theta-step left the positive definite cone and {MAX_HALVINGS} "
                    "halvings did not recover"
                )

        db = np.linalg.norm(beta_new - beta) / (1.0 + np.linalg.norm(beta))
        dt = np.linalg.norm(theta_new - theta) / (1.0 + np.linalg.norm(theta))
        beta, theta = beta_new, theta_new
        if max(db, dt) < options.tol:
            converged = True
            break
    else:
        message = f"no convergence in {options.max_iterations} iterations"

    psi_b, psi_t = psi_residual(data, beta, theta, struct, triple)
    psi_norm = float(np.sqrt(np.sum(psi_b**2) + np.sum(psi_t**2)))
    if converged and psi_norm > PSI_TOL * (1.0 + np.linalg.norm(theta)):
        converged = False
        message = f"parameter change converged but ||psi|| = {psi_norm:.3e} is too large"
    pds_valid = struct.is_valid_theta(theta)
    v_final = struct.evaluate_pds(theta) if pds_valid else None
    if v_final is not None:
        distances = _distances(_residuals(data, beta), v_final.inverse())
    else:
        distances = np.full(n, np.nan)
    return FitResult(
        beta=beta,
        theta=theta,
        distances=distances,
        iterations=iterations,
        converged=converged,
        pds_valid=pds_valid,
        psi_norm=psi_norm,
        message=message,
    )
