"""Angular profiles ``B(theta)`` on the circle and their derivatives ``Lambda B``.

All profiles here are even in ``theta``.  Each one supplies a quadrature rule
over the whole circle adapted to where it varies fastest.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np
from scipy.integrate import quad

from ..errors import DomainError
from .quadrature import gauss_legendre

UNIFORM_NODES = 1024
# periodic rule for trigonometric profiles; |grad U| has conical points where both
# components vanish, so the rule converges like 1/N**2 rather than spectrally
TRIG_NODES = 512
# graded rule for mollified profiles: panels on [0, width], then geometric growth
GRADE_RATIO = 1.5
PANEL_ORDER = 24
# nodes per piece of the convolution integral
CONV_ORDER = 64


def wrap(theta):
    """Map angles to ``(-pi, pi]``."""
    theta = np.asarray(theta, dtype=float)
    t = np.mod(theta + np.pi, 2 * np.pi) - np.pi
    t = np.where(t == -np.pi, np.pi, t)
    # leave in-range angles untouched: the shift above costs relative accuracy near 0
    return np.where((theta > -np.pi) & (theta <= np.pi), theta, t)


@lru_cache(maxsize=None)
def kernel_mass() -> float:
    """``int_{-1}^{1} exp(-1/(1-x**2)) dx``."""
    return quad(lambda x: math.exp(-1.0 / (1.0 - x * x)), -1, 1, epsabs=0, epsrel=1e-13)[0]


def mollifier(x):
    """Normalised smooth kernel supported on ``[-1, 1]``."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    m = np.abs(x) < 1
    out[m] = np.exp(-1.0 / (1.0 - x[m] ** 2))
    return out / kernel_mass()


def mollifier_deriv(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    m = np.abs(x) < 1
    xm = x[m]
    out[m] = np.exp(-1.0 / (1.0 - xm ** 2)) * (-2.0 * xm / (1.0 - xm ** 2) ** 2)
    return out / kernel_mass()


class AngularProfile:
    """Even profile on S^1."""

    kind: str = "abstract"

    def value(self, theta):
        raise NotImplementedError

    def derivative(self, theta):
        """``Lambda B = dB/dtheta``."""
        raise NotImplementedError

    def quadrature(self):
        """Nodes in ``(-pi, pi]`` and weights for integrals over the circle."""
        raise NotImplementedError

    def coarse_quadrature(self):
        """A lower-resolution rule for error estimates; the main rule by default."""
        return self.quadrature()

    @property
    def is_constant(self) -> bool:
        return False

    def integrate(self, func) -> float:
        """``int_{S^1} func(B, Lambda B) dtheta``."""
        th, wt = self.quadrature()
        return float(np.dot(wt, func(self.value(th), self.derivative(th))))

    def lq_power(self, q: float) -> float:
        """``int |B|**q``."""
        return self.integrate(lambda b, _db: np.abs(b) ** q)

    def total_variation(self) -> float:
        """``int |Lambda B|``."""
        return self.integrate(lambda _b, db: np.abs(db))

    def params(self) -> dict:
        return {"kind": self.kind}


def _uniform_rule(n: int = UNIFORM_NODES):
    th = -np.pi + 2 * np.pi * (np.arange(n) + 1) / n
    return th, np.full(n, 2 * np.pi / n)


@dataclass(frozen=True)
class Constant(AngularProfile):
    c: float = 1.0
    kind = "constant"

    def value(self, theta):
        return np.full(np.shape(theta), self.c, dtype=float)

    def derivative(self, theta):
        return np.zeros(np.shape(theta))

    def quadrature(self):
        return _uniform_rule()

    @property
    def is_constant(self) -> bool:
        return True

    def lq_power(self, q: float) -> float:
        return 2 * np.pi * abs(self.c) ** q

    def total_variation(self) -> float:
        return 0.0

    def params(self):
        return {"kind": self.kind, "c": self.c}


@dataclass(frozen=True)
class Trig(AngularProfile):
    """``c0 + a cos(k theta)``."""

    c0: float = 1.0
    a: float = 0.5
    k: int = 1
    kind = "trig"

    def value(self, theta):
        return self.c0 + self.a * np.cos(self.k * np.asarray(theta, dtype=float))

    def derivative(self, theta):
        return -self.a * self.k * np.sin(self.k * np.asarray(theta, dtype=float))

    def quadrature(self):
        return _uniform_rule(max(TRIG_NODES, 32 * self.k))

    def coarse_quadrature(self):
        return _uniform_rule(max(TRIG_NODES, 32 * self.k) // 2)

    def total_variation(self) -> float:
        return 4.0 * abs(self.a) * self.k

    def params(self):
        return {"kind": self.kind, "c0": self.c0, "a": self.a, "k": self.k}


@dataclass(frozen=True)
class SingularPower(AngularProfile):
    """``|theta|**-s`` on ``(-pi, pi]``: in L^1 for s < 1, not in L^q once s q >= 1."""

    s: float
    kind = "singular_power"

    def __post_init__(self):
        if not 0 < self.s < 1:
            raise DomainError(f"singular exponent must lie in (0, 1), got {self.s}")

    def value(self, theta):
        with np.errstate(divide="ignore"):
            return np.abs(wrap(theta)) ** -self.s

    def derivative(self, theta):
        t = wrap(theta)
        with np.errstate(divide="ignore"):
            return -self.s * np.sign(t) * np.abs(t) ** (-self.s - 1)

    def quadrature(self, n: int = 64):
        # theta = pi y**m with m = 1/(1-s) makes |B| d(theta) regular in y
        m = 1.0 / (1.0 - self.s)
        x, w = gauss_legendre(n)
        y = 0.5 * (x + 1)
        th = np.pi * y ** m
        wt = 0.5 * w * np.pi * m * y ** (m - 1)
        return np.concatenate([-th[::-1], th]), np.concatenate([wt[::-1], wt])

    def lq_power(self, q: float) -> float:
        p = self.s * q
        return math.inf if p >= 1 else 2 * math.pi ** (1 - p) / (1 - p)

    def params(self):
        return {"kind": self.kind, "s": self.s}


def _conv_piece(lo, hi, theta, width, kern, s, mode):
    """``int_lo^hi kern((theta - phi)/width) g(phi) dphi`` per row.

    ``mode`` "pos": g = phi**-s on [0, pi] via the substitution
    ``y = phi**(1-s)``; "neg": g = |phi|**-s for phi <= 0; "far": g =
    (2 pi - phi)**-s for phi >= pi with plain Gauss-Legendre.
    """
    x, w = gauss_legendre(CONV_ORDER)
    lo = np.asarray(lo, dtype=float)[:, None]
    hi = np.asarray(hi, dtype=float)[:, None]
    th = np.asarray(theta, dtype=float)[:, None]
    if mode == "far":
        phi = 0.5 * (lo + hi) + 0.5 * (hi - lo) * x
        g = (2 * np.pi - phi) ** -s
        return np.sum(0.5 * (hi - lo) * w * kern((th - phi) / width) * g, axis=1)
    e = 1.0 - s
    ylo, yhi = lo ** e, hi ** e
    y = 0.5 * (ylo + yhi) + 0.5 * (yhi - ylo) * x
    mag = y ** (1.0 / e)
    phi = mag if mode == "pos" else -mag
    # phi**-s dphi = dy / (1 - s)
    return np.sum(0.5 * (yhi - ylo) * w * kern((th - phi) / width), axis=1) / e


@dataclass(frozen=True)
class Mollified(AngularProfile):
    """Convolution of ``|theta|**-s`` with the smooth kernel of half-width ``width``.

    ``B_j(theta) = int kappa(x) B(theta - width x) dx``; ``Lambda B_j`` is the
    same integral with ``kappa'`` divided by ``width``.
    """

    base: SingularPower
    width: float
    j: int | None = None
    kind = "mollified"

    def __post_init__(self):
        if not 0 < self.width <= np.pi / 2:
            raise DomainError(f"mollifier half-width must lie in (0, pi/2], got {self.width}")

    def _conv(self, theta, kern):
        t = np.abs(wrap(np.atleast_1d(theta)))
        d, s = self.width, self.base.s
        a, b = t - d, t + d
        out = _conv_piece(np.clip(a, 0, np.pi), np.clip(b, 0, np.pi), t, d, kern, s, "pos")
        neg = a < 0
        if neg.any():
            out[neg] += _conv_piece(np.zeros(neg.sum()), -a[neg], t[neg], d, kern, s, "neg")
        far = b > np.pi
        if far.any():
            out[far] += _conv_piece(np.full(far.sum(), np.pi), b[far], t[far], d, kern, s, "far")
        return out / d

    def value(self, theta):
        out = self._conv(theta, mollifier)
        return out if np.ndim(theta) else float(out[0])

    def derivative(self, theta):
        th = np.atleast_1d(np.asarray(theta, dtype=float))
        out = self._conv(th, mollifier_deriv) / self.width
        # the convolution was taken at |theta|; the derivative is odd
        out = out * np.sign(wrap(th))
        return out if np.ndim(theta) else float(out[0])

    @cached_property
    def _rule(self):
        d = self.width
        edges = [0.0, 0.25 * d, 0.5 * d, d]
        while edges[-1] * GRADE_RATIO < np.pi:
            edges.append(edges[-1] * GRADE_RATIO)
        edges.append(np.pi)
        edges = np.asarray(edges)
        x, w = gauss_legendre(PANEL_ORDER)
        lo, hi = edges[:-1, None], edges[1:, None]
        th = (0.5 * (lo + hi) + 0.5 * (hi - lo) * x).ravel()
        wt = (0.5 * (hi - lo) * w).ravel()
        th_all = np.concatenate([-th[::-1], th])
        wt_all = np.concatenate([wt[::-1], wt])
        th_all.setflags(write=False)
        wt_all.setflags(write=False)
        return th_all, wt_all

    def quadrature(self):
        return self._rule

    @cached_property
    def _values(self):
        th, _ = self._rule
        return self.value(th), self.derivative(th)

    def integrate(self, func) -> float:
        _, wt = self._rule
        b, db = self._values
        return float(np.dot(wt, func(b, db)))

    def total_variation(self) -> float:
        """Exact for an even profile decreasing on ``[0, pi]``: ``2 (B(0) - B(pi))``."""
        return 2.0 * (self.value(0.0) - self.value(np.pi))

    def params(self):
        return {"kind": self.kind, "s": self.base.s, "width": self.width, "j": self.j}


# half-width of the j-th mollifier: WIDTH0 * WIDTH_RATIO**-(j-1)
WIDTH0 = np.pi / 4
WIDTH_RATIO = 4.0


def mollifier_width(j: int) -> float:
    if j < 1:
        raise DomainError("mollification index starts at 1")
    return WIDTH0 * WIDTH_RATIO ** -(j - 1)


def mollified(base: SingularPower, j: int, width: float | None = None) -> Mollified:
    """The j-th member of the mollified sequence of ``base``."""
    return Mollified(base, mollifier_width(j) if width is None else width, j)


def singular_mass(s: float) -> float:
    """``int_{S^1} |theta|**-s`` (also the mass of every mollification)."""
    return 2 * math.pi ** (1 - s) / (1 - s)
