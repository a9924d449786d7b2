"""Linear covariance structures V(theta) = theta_1 B_1 + ... + theta_l B_l.

A structure is described by its symmetric basis matrices.  The stacked
k^2 x l design matrix has columns vec(B_j); the rescaled projector onto its
column space (in the Sigma^-1 (x) Sigma^-1 inner product) is the central
object used by the asymptotic-variance and influence modules.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.typing import NDArray

from .errors import (
    IllConditionedError,
    InvalidArgumentError,
    StructuralRankError,
)
from .linalg import PdsMatrix, SymMatrix, is_pds, symmetrize, vec

__all__ = [
    "LinearStructure",
    "unstructured",
    "compound_symmetry",
    "diagonal",
    "variance_components",
    "custom",
    "make_structure",
    "load_structure",
]

#: relative smallest-singular-value threshold for full column rank
RANK_RTOL = 1e-10

#: condition-number ceiling for the rescaled Gram matrix
GRAM_CONDITION_LIMIT = 1e12


@dataclass(frozen=True)
class LinearStructure:
    """A linear covariance structure with a full-column-rank design matrix."""

    basis: tuple[SymMatrix, ...]
    kind: str = "custom"
    stacked: NDArray[np.float64] = field(init=False)

    def __post_init__(self) -> None:
        if not self.basis:
            raise InvalidArgumentError("a structure needs at least one basis matrix")
        basis = tuple(
            b if isinstance(b, SymMatrix) else SymMatrix(np.asarray(b)) for b in self.basis
        )
        k = basis[0].dim
        for b in basis:
            if b.dim != k:
                raise InvalidArgumentError("basis matrices must share one dimension")
        raw = [np.asarray(b) for b in self.basis]
        for r, b in zip(raw, basis):
            if not np.allclose(r, r.T, rtol=0.0, atol=1e-10 * max(1.0, np.abs(r).max())):
                raise InvalidArgumentError("basis matrices must be symmetric")
        if len(basis) > k * (k + 1) // 2:
            raise StructuralRankError(
                f"{len(basis)} basis matrices exceed the symmetric dimension {k * (k + 1) // 2}"
            )
        stacked = np.column_stack([vec(b.entries) for b in basis])
        sv = np.linalg.svd(stacked, compute_uv=False)
        if sv[-1] <= RANK_RTOL * sv[0]:
            raise StructuralRankError(
                "basis matrices are linearly dependent (design matrix rank deficient)"
            )
        stacked.flags.writeable = False
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "stacked", stacked)

    @property
    def dim(self) -> int:
        """Matrix dimension k."""
        return self.basis[0].dim

    @property
    def nparams(self) -> int:
        """Number of variance components l."""
        return len(self.basis)

    # -- evaluation ---------------------------------------------------------

    def evaluate(self, theta: NDArray) -> NDArray[np.float64]:
        """Return V(theta) = sum_j theta_j B_j as a symmetric array."""
        theta = np.asarray(theta, dtype=float).ravel()
        if theta.size != self.nparams:
            raise InvalidArgumentError(
                f"theta has length {theta.size}, structure expects {self.nparams}"
            )
        v = self.stacked @ theta
        return v.reshape((self.dim, self.dim), order="F")

    def evaluate_pds(self, theta: NDArray) -> PdsMatrix:
        """Like :meth:`evaluate` but wrapped in a verified PDS matrix."""
        return PdsMatrix(SymMatrix(self.evaluate(theta)))

    def is_valid_theta(self, theta: NDArray) -> bool:
        """True when V(theta) is positive definite."""
        return is_pds(self.evaluate(theta))

    def coordinates(self, v: NDArray) -> NDArray[np.float64]:
        """Least-squares coordinates (L^T L)^-1 L^T vec(V) of a symmetric matrix."""
        arr = symmetrize(np.asarray(v, dtype=float))
        if arr.shape != (self.dim, self.dim):
            raise InvalidArgumentError(
                f"matrix of shape {arr.shape} does not match structure dimension {self.dim}"
            )
        theta, *_ = np.linalg.lstsq(self.stacked, vec(arr), rcond=None)
        return theta

    # -- projection ---------------------------------------------------------

    def gram(self, sigma: PdsMatrix | NDArray) -> NDArray[np.float64]:
        """The rescaled Gram matrix L^T (Sigma^-1 (x) Sigma^-1) L."""
        sigma = sigma if isinstance(sigma, PdsMatrix) else PdsMatrix(SymMatrix(np.asarray(sigma)))
        si = sigma.inverse()
        # L^T (S^-1 (x) S^-1) L without forming the k^2 x k^2 Kronecker product
        cols = [si @ np.asarray(b) @ si for b in self.basis]
        g = np.empty((self.nparams, self.nparams))
        for i, bi in enumerate(self.basis):
            for j in range(i, self.nparams):
                g[i, j] = g[j, i] = float(np.tensordot(np.asarray(bi), cols[j]))
        cond = np.linalg.cond(g)
        if not np.isfinite(cond) or cond > GRAM_CONDITION_LIMIT:
            raise IllConditionedError(
                f"rescaled Gram matrix has condition number {cond:.3e}"
            )
        return g

    def projector(self, sigma: PdsMatrix | NDArray) -> NDArray[np.float64]:
        """The k^2 x k^2 projector L (L^T W L)^-1 L^T W with W = Sigma^-1 (x) Sigma^-1."""
        sigma = sigma if isinstance(sigma, PdsMatrix) else PdsMatrix(SymMatrix(np.asarray(sigma)))
        g = self.gram(sigma)
        si = sigma.inverse()
        w = np.kron(si, si)
        return self.stacked @ np.linalg.solve(g, self.stacked.T @ w)


# -- canonical factories ----------------------------------------------------


def unstructured(k: int) -> LinearStructure:
    """All symmetric k x k matrices; the design matrix equals the duplication matrix."""
    if k < 1:
        raise InvalidArgumentError("k must be a positive integer")
    basis = []
    for j in range(k):
        for i in range(j, k):
            b = np.zeros((k, k))
            b[i, j] = b[j, i] = 1.0
            basis.append(b)
    return LinearStructure(tuple(SymMatrix(b) for b in basis), kind="unstructured")


def compound_symmetry(k: int) -> LinearStructure:
    """Exchangeable structure with basis (I, J - I)."""
    if k < 1:
        raise InvalidArgumentError("k must be a positive integer")
    i_k = np.eye(k)
    return LinearStructure(
        (SymMatrix(i_k), SymMatrix(np.ones((k, k)) - i_k)), kind="compound-symmetry"
    )


def diagonal(k: int) -> LinearStructure:
    """Independent heteroscedastic components, basis e_j e_j^T."""
    if k < 1:
        raise InvalidArgumentError("k must be a positive integer")
    basis = tuple(SymMatrix(np.diag(np.eye(k)[j])) for j in range(k))
    return LinearStructure(basis, kind="diagonal")


def variance_components(k: int, factors: list[NDArray]) -> LinearStructure:
    """Mixed-effects structure with basis (Z_1 Z_1^T, ..., Z_m Z_m^T, I_k)."""
    basis = []
    for z in factors:
        z = np.atleast_2d(np.asarray(z, dtype=float))
        if z.shape[0] != k:
            raise InvalidArgumentError(f"factor with {z.shape[0]} rows does not match k={k}")
        basis.append(SymMatrix(z @ z.T))
    basis.append(SymMatrix(np.eye(k)))
    return LinearStructure(tuple(basis), kind="variance-components")


def custom(basis: list[NDArray]) -> LinearStructure:
    """A structure from explicit symmetric basis matrices."""
    arrs = [np.asarray(b, dtype=float) for b in basis]
    for a in arrs:
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise InvalidArgumentError(f"basis matrix of shape {a.shape} is not square")
        if not np.allclose(a, a.T, rtol=0.0, atol=1e-10 * max(1.0, np.abs(a).max())):
            raise InvalidArgumentError("basis matrices must be symmetric")
    return LinearStructure(tuple(SymMatrix(a) for a in arrs), kind="custom")


def make_structure(descriptor: dict) -> LinearStructure:
    """Build a structure from a descriptor mapping.

    Recognized kinds: ``unstructured``, ``compound-symmetry``, ``diagonal``,
    ``variance-components`` (with ``factors``), ``custom`` (with ``basis`` as
    row-major nested lists).
    """
    try:
        kind = descriptor["kind"]
    except (TypeError, KeyError) as exc:
        raise InvalidArgumentError("structure descriptor needs a 'kind' field") from exc
    if kind == "custom":
        basis = descriptor.get("basis")
        if not basis:
            raise InvalidArgumentError("custom structure needs a nonempty 'basis' list")
        return custom([np.asarray(b, dtype=float) for b in basis])
    try:
        k = int(descriptor["dim"])
    except (TypeError, KeyError, ValueError) as exc:
        raise InvalidArgumentError(f"structure kind '{kind}' needs an integer 'dim'") from exc
    if kind == "unstructured":
        return unstructured(k)
    if kind == "compound-symmetry":
        return compound_symmetry(k)
    if kind == "diagonal":
        return diagonal(k)
    if kind == "variance-components":
        factors = descriptor.get("factors")
        if not factors:
            raise InvalidArgumentError("variance-components structure needs 'factors'")
        return variance_components(k, [np.asarray(z, dtype=float) for z in factors])
    raise InvalidArgumentError(f"unknown structure kind '{kind}'")


def load_structure(path: str | Path) -> LinearStructure:
    """Read a JSON structure descriptor from disk."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            descriptor = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidArgumentError(f"invalid structure JSON in {path}: {exc}") from exc
    return make_structure(descriptor)
