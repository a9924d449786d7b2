"""Rho functions and the (w1, w2, w3) weight families of the estimating equations.

Three families are shipped:

* ``gaussian-ml`` -- constant weights, the Gaussian maximum-likelihood case;
* ``m-estimator`` -- user supplied weights and derivatives;
* ``s-rho`` -- the S-estimator family generated by a rho function, for which
  w1(s) = rho'(s)/s, w2(s) = k rho'(s)/s and w3(s) = rho'(s) s - rho(s) + b0.

All callables accept scalars or arrays and use the analytic s -> 0 limits at
zero, so there are no removable singularities left for callers to guard.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConditionViolatedError, InvalidArgumentError

__all__ = [
    "RhoFunction",
    "biweight",
    "WeightTriple",
    "gaussian_ml",
    "m_estimator",
    "s_rho",
    "RadialCompanions",
    "radial_companions",
]

ScalarFn = Callable[[np.ndarray], np.ndarray]

#: numerical threshold for the nondegeneracy constants gamma1 and gamma1 - k*gamma2
DEGENERACY_TOL = 1e-10


@dataclass(frozen=True)
class RhoFunction:
    """A bounded rho function with first and second derivatives and cutoff c.

    ``b0`` is the consistency constant E[rho(||z||)] at the reference law; it
    is filled in by the caller (see :func:`structcov.asymptotics.consistency_constant`)
    and defaults to ``None`` until then.
    """

    cutoff: float
    rho: ScalarFn
    drho: ScalarFn
    ddrho: ScalarFn
    b0: float | None = None
    name: str = "rho"

    @property
    def sup_rho(self) -> float:
        """The plateau value rho(c)."""
        return float(self.rho(np.asarray(self.cutoff)))

    def with_b0(self, b0: float) -> "RhoFunction":
        return RhoFunction(self.cutoff, self.rho, self.drho, self.ddrho, b0=b0, name=self.name)


def biweight(c: float) -> RhoFunction:
    """Tukey's biweight rho with cutoff ``c``.

    rho(s) = s^2/2 - s^4/(2 c^2) + s^6/(6 c^4) for |s| <= c, constant c^2/6 beyond.
    The second derivative has a kink at s = c; the left limit is returned there.
    """
    if not np.isfinite(c) or c <= 0:
        raise InvalidArgumentError("biweight cutoff must be a positive real")
    c = float(c)

    def rho(s):
        s = np.minimum(np.abs(np.asarray(s, dtype=float)), c)
        return s**2 / 2 - s**4 / (2 * c**2) + s**6 / (6 * c**4)

    def drho(s):
        s = np.asarray(s, dtype=float)
        inside = np.abs(s) <= c
        return np.where(inside, s * (1.0 - (s / c) ** 2) ** 2, 0.0)

    def ddrho(s):
        s = np.asarray(s, dtype=float)
        t = (s / c) ** 2
        return np.where(np.abs(s) <= c, (1.0 - t) * (1.0 - 5.0 * t), 0.0)

    return RhoFunction(c, rho, drho, ddrho, name="biweight")


@dataclass(frozen=True)
class WeightTriple:
    """Weight functions (w1, w2, w3) with the derivatives of w2 and w3.

    ``dim`` is the data dimension k; the s-rho family needs it because
    w2(s) = k rho'(s)/s.
    """

    family: str
    dim: int
    w1: ScalarFn
    w2: ScalarFn
    w3: ScalarFn
    dw2: ScalarFn
    dw3: ScalarFn
    rho: RhoFunction | None = None


def gaussian_ml(k: int) -> WeightTriple:
    """Constant weights w1 = w2 = w3 = 1 (Gaussian maximum likelihood)."""
    one = lambda s: np.ones_like(np.asarray(s, dtype=float))
    zero = lambda s: np.zeros_like(np.asarray(s, dtype=float))
    return WeightTriple("gaussian-ml", int(k), one, one, one, zero, zero)


def m_estimator(
    k: int,
    w1: ScalarFn,
    w2: ScalarFn,
    w3: ScalarFn,
    dw2: ScalarFn,
    dw3: ScalarFn,
) -> WeightTriple:
    """Arbitrary user weights; derivative correctness is the caller's contract."""
    return WeightTriple("m-estimator", int(k), w1, w2, w3, dw2, dw3)


def s_rho(rho: RhoFunction, k: int) -> WeightTriple:
    """The S-estimator weight triple generated by ``rho`` (b0 must be set)."""
    if rho.b0 is None:
        raise InvalidArgumentError(
            "s-rho triple needs the consistency constant b0 on the rho function"
        )
    k = int(k)
    b0 = float(rho.b0)

    at_zero = float(rho.ddrho(np.asarray(0.0)))

    def ratio(s):
        # rho'(s)/s with its analytic limit rho''(0) at s = 0
        s = np.asarray(s, dtype=float)
        safe = np.where(s == 0.0, 1.0, s)
        return np.where(s == 0.0, at_zero, rho.drho(s) / safe)

    def w1(s):
        return ratio(s)

    def w2(s):
        return k * ratio(s)

    def dw2(s):
        # d/ds [k rho'(s)/s] = k (rho''(s) s - rho'(s)) / s^2, limit 0 at s = 0
        s = np.asarray(s, dtype=float)
        safe = np.where(s == 0.0, 1.0, s)
        return np.where(s == 0.0, 0.0, k * (rho.ddrho(s) * s - rho.drho(s)) / safe**2)

    def w3(s):
        s = np.asarray(s, dtype=float)
        return rho.drho(s) * s - rho.rho(s) + b0

    def dw3(s):
        s = np.asarray(s, dtype=float)
        return rho.ddrho(s) * s

    return WeightTriple("s-rho", k, w1, w2, w3, dw2, dw3, rho=rho)


@dataclass(frozen=True)
class RadialCompanions:
    """The scalar functions (v1, v2) of the radial companion representation."""

    v1: ScalarFn
    v2: ScalarFn
    gamma1: float
    gamma2: float


def radial_companions(triple: WeightTriple, gamma1: float, gamma2: float, k: int) -> RadialCompanions:
    """Build v1(s) = w2(s)/gamma1 and
    v2(s) = (-gamma2 w2(s) s^2 + gamma1 w3(s)) / (gamma1 (gamma1 - k gamma2)).

    Raises when gamma1 or gamma1 - k*gamma2 is numerically zero, since both
    appear in denominators.
    """
    g1, g2 = float(gamma1), float(gamma2)
    scale = 1.0 + abs(g1)
    if abs(g1) < DEGENERACY_TOL * scale or abs(g1 - k * g2) < DEGENERACY_TOL * scale:
        raise ConditionViolatedError(
            f"degenerate weight family: gamma1={g1:.3e}, gamma1-k*gamma2={g1 - k * g2:.3e}"
        )

    def v1(s):
        return triple.w2(s) / g1

    def v2(s):
        s = np.asarray(s, dtype=float)
        return (-g2 * triple.w2(s) * s**2 + g1 * triple.w3(s)) / (g1 * (g1 - k * g2))

    return RadialCompanions(v1, v2, g1, g2)
