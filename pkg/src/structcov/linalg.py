"""Matrix-calculus primitives: vec/vech, duplication and commutation matrices,
symmetry and positive-definiteness checks.

Conventions: vec() stacks matrix columns (column-major); vech() stacks the
columns of the lower triangle.  Both duplication and commutation matrices are
dense 0/1 arrays, which is fine for the dimensions this package targets
(k up to a few dozen).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from .errors import InvalidArgumentError, NotPositiveDefiniteError

__all__ = [
    "SymMatrix",
    "PdsMatrix",
    "vec",
    "unvec",
    "vech",
    "unvech",
    "duplication_matrix",
    "commutation_matrix",
    "symmetrize",
    "is_pds",
]

#: relative eigenvalue tolerance used by the PDS check
PDS_RTOL = 1e-12


def symmetrize(a: NDArray) -> NDArray[np.float64]:
    """Return (A + A^T)/2 as a float array."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidArgumentError(f"expected a square matrix, got shape {a.shape}")
    return 0.5 * (a + a.T)


@dataclass(frozen=True)
class SymMatrix:
    """A k x k real symmetric matrix; symmetrized exactly at construction."""

    entries: NDArray[np.float64]

    def __post_init__(self) -> None:
        a = np.asarray(self.entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise InvalidArgumentError(f"expected a square matrix, got shape {a.shape}")
        a = 0.5 * (a + a.T)
        a.flags.writeable = False
        object.__setattr__(self, "entries", a)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)


@dataclass(frozen=True)
class PdsMatrix:
    """A symmetric matrix verified positive definite at construction.

    The check is eigenvalue based: smallest eigenvalue must exceed
    ``PDS_RTOL`` times the largest.
    """

    base: SymMatrix
    eigenvalues: NDArray[np.float64] = field(init=False)
    eigenvectors: NDArray[np.float64] = field(init=False)

    def __post_init__(self) -> None:
        if not isinstance(self.base, SymMatrix):
            object.__setattr__(self, "base", SymMatrix(np.asarray(self.base)))
        w, v = np.linalg.eigh(self.base.entries)
        if w[0] <= PDS_RTOL * max(w[-1], 0.0) or w[-1] <= 0.0:
            raise NotPositiveDefiniteError(
                f"matrix is not positive definite (eigenvalues in [{w[0]:.3e}, {w[-1]:.3e}])"
            )
        w.flags.writeable = False
        v.flags.writeable = False
        object.__setattr__(self, "eigenvalues", w)
        object.__setattr__(self, "eigenvectors", v)

    @property
    def dim(self) -> int:
        return self.base.dim

    @property
    def entries(self) -> NDArray[np.float64]:
        return self.base.entries

    def inverse(self) -> NDArray[np.float64]:
        v, w = self.eigenvectors, self.eigenvalues
        return (v / w) @ v.T

    def sqrt(self) -> NDArray[np.float64]:
        v, w = self.eigenvectors, self.eigenvalues
        return (v * np.sqrt(w)) @ v.T

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)


def is_pds(a: NDArray, rtol: float = PDS_RTOL) -> bool:
    """True when the symmetrized input is positive definite within tolerance."""
    a = symmetrize(a)
    w = np.linalg.eigvalsh(a)
    return bool(w[-1] > 0.0 and w[0] > rtol * w[-1])


def vec(a: NDArray) -> NDArray[np.float64]:
    """Stack the columns of a matrix into a vector."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2:
        raise InvalidArgumentError(f"expected a matrix, got shape {a.shape}")
    return a.reshape(-1, order="F")


def unvec(v: NDArray, k: int, m: int | None = None) -> NDArray[np.float64]:
    """Inverse of :func:`vec` for a k x m matrix (m defaults to k)."""
    v = np.asarray(v, dtype=float).ravel()
    m = k if m is None else m
    if v.size != k * m:
        raise InvalidArgumentError(f"vector of length {v.size} is not vec of a {k}x{m} matrix")
    return v.reshape((k, m), order="F")


def vech(a: NDArray | SymMatrix) -> NDArray[np.float64]:
    """Column-wise lower-triangle stack (a11,...,ak1, a22,...,akk) of a symmetric matrix."""
    arr = np.asarray(a, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise InvalidArgumentError(f"expected a square matrix, got shape {arr.shape}")
    if not np.array_equal(arr, arr.T):
        if not np.allclose(arr, arr.T, rtol=0.0, atol=1e-12 * max(1.0, np.abs(arr).max())):
            raise InvalidArgumentError("vech requires a symmetric matrix")
    k = arr.shape[0]
    rows, cols = np.tril_indices(k)
    order = np.lexsort((rows, cols))  # column-major over the lower triangle
    return arr[rows[order], cols[order]]


def unvech(v: NDArray, k: int) -> NDArray[np.float64]:
    """Rebuild the symmetric k x k matrix whose vech is ``v``."""
    v = np.asarray(v, dtype=float).ravel()
    if v.size != k * (k + 1) // 2:
        raise InvalidArgumentError(
            f"vector of length {v.size} is not vech of a {k}x{k} matrix"
        )
    out = np.zeros((k, k))
    rows, cols = np.tril_indices(k)
    order = np.lexsort((rows, cols))
    out[rows[order], cols[order]] = v
    out = out + np.tril(out, -1).T
    return out


def duplication_matrix(k: int) -> NDArray[np.float64]:
    """The k^2 x k(k+1)/2 matrix D_k with D_k vech(A) = vec(A) for symmetric A."""
    if k < 1:
        raise InvalidArgumentError("k must be a positive integer")
    n = k * (k + 1) // 2
    d = np.zeros((k * k, n))
    rows, cols = np.tril_indices(k)
    order = np.lexsort((rows, cols))
    for pos, idx in enumerate(order):
        i, j = int(rows[idx]), int(cols[idx])
        d[j * k + i, pos] = 1.0
        d[i * k + j, pos] = 1.0
    return d


def commutation_matrix(k: int) -> NDArray[np.float64]:
    """The k^2 x k^2 permutation K with K vec(A) = vec(A^T)."""
    if k < 1:
        raise InvalidArgumentError("k must be a positive integer")
    kk = np.zeros((k * k, k * k))
    for i in range(k):
        for j in range(k):
            kk[i * k + j, j * k + i] = 1.0
    return kk
