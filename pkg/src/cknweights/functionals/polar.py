"""Functionals of product test functions ``U(r, theta) = A(r) B(theta)``.

Both sides of the polar inequality integrate over ``dS dr``:
``lhs = int dS int ((d_r U)**2 + (Lambda U)**2 / r**2)**(1/2) w(r) dr`` and
``rhs = (int dS int |U|**q V^q(r) dr)**(1/q)``.  Radial functions reduce to
``omega_n`` times the one-dimensional integrals; a genuine angular part is
supported on S^1 only.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import weights
from ..envelope import EnvelopeResult
from ..errors import DomainError, UnsupportedDimensionError
from .angular import AngularProfile, Constant
from .onedim import _breaks_in, _check_support, lhs_1d, rhs_1d
from .quadrature import DEFAULT_ORDER, QuadratureResult, composite_nodes, refine_breaks
from .testfunctions import TestFunction1D

# geometric fill ratio for the radial nodes of the tensor rule
POLAR_FILL_RATIO = 1.25


def sphere_area(n: int) -> float:
    """Surface area of the unit sphere S^{n-1} in R^n."""
    if n < 1:
        raise DomainError("dimension must be >= 1")
    return 2 * math.pi ** (n / 2) / math.gamma(n / 2)


@dataclass(frozen=True, eq=False)
class PolarTestFunction:
    """``U = A(r) B(theta)``; ``angular`` defaults to the constant 1 (radial)."""

    __test__ = False

    radial: TestFunction1D
    angular: AngularProfile = Constant(1.0)
    n: int = 2

    def __post_init__(self):
        if self.n < 2:
            raise DomainError("polar test functions need n >= 2")
        if not self.angular.is_constant and self.n != 2:
            raise UnsupportedDimensionError(
                f"a non-constant angular part is only supported for n = 2, got n = {self.n}")

    @property
    def is_radial(self) -> bool:
        return self.angular.is_constant

    @property
    def is_zero(self) -> bool:
        return self.radial.is_zero or (self.is_radial and self.angular.c == 0)

    def params(self) -> dict:
        return {"radial": dict(self.radial.params), "angular": self.angular.params(), "n": self.n}


def _scaled(res: QuadratureResult, factor: float) -> QuadratureResult:
    return QuadratureResult(res.value * factor, res.est_error * factor, res.n_evals)


def _tensor_lhs(U: PolarTestFunction, spec, split: int):
    A, B = U.radial, U.angular
    breaks = refine_breaks(_breaks_in(A), POLAR_FILL_RATIO)
    r, wr, _ = composite_nodes(breaks, DEFAULT_ORDER, split)
    # the coarse pass also coarsens theta, so est_error sees both directions
    th, wt = B.quadrature() if split > 1 else B.coarse_quadrature()
    a, da = A.value(r), A.derivative(r)
    with np.errstate(over="ignore"):
        w = np.exp(weights.log_value(spec, r))
    b, db = B.value(th), B.derivative(th)
    # rows: r nodes, columns: theta nodes
    dens = np.hypot(da[:, None] * b[None, :], (a / r)[:, None] * db[None, :])
    return float(wr @ (dens * w[:, None]) @ wt), r.size * th.size


def lhs_polar(U: PolarTestFunction, spec: weights.WeightSpec) -> QuadratureResult:
    """Left side of the polar inequality for ``U`` and weight ``spec``."""
    if U.is_zero:
        return QuadratureResult(0.0, 0.0, 0)
    if U.is_radial:
        return _scaled(lhs_1d(U.radial, spec), sphere_area(U.n) * abs(U.angular.c))
    lo, hi = spec.domain()
    _check_support(U.radial, lo * (1 - 1e-15), min(spec.eta, hi), "interval")
    coarse, n1 = _tensor_lhs(U, spec, 1)
    fine, n2 = _tensor_lhs(U, spec, 2)
    return QuadratureResult(fine, abs(fine - coarse), n1 + n2)


def angular_lq(U: PolarTestFunction, q: float) -> float:
    """``int_{S^{n-1}} |B|**q dS``."""
    if U.is_radial:
        return sphere_area(U.n) * abs(U.angular.c) ** q
    return U.angular.lq_power(q)


def rhs_polar(U: PolarTestFunction, env: EnvelopeResult, q: float, n: int | None = None) -> QuadratureResult:
    """Right side; ``|U|**q`` factorizes, so this is ``(int |B|**q)**(1/q) rhs_1d(A)``."""
    if n is not None and n != U.n:
        raise DomainError(f"dimension mismatch: test function has n = {U.n}, got n = {n}")
    if U.is_zero:
        return QuadratureResult(0.0, 0.0, 0)
    factor = angular_lq(U, q) ** (1.0 / q)
    return _scaled(rhs_1d(U.radial, env, q), factor)
