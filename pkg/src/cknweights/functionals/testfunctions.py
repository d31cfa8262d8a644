"""One-dimensional test functions ``u`` with compact support in ``(0, eta)``."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from ..envelope import EnvelopeResult
from ..errors import DomainError, SupportError
from .quadrature import composite_nodes

# number of knots used to realize the optimality profile on its window
WINDOW_KNOTS = 257


class TestFunction1D:
    """Base class: a profile with value, a.e. derivative, support and breakpoints."""

    __test__ = False  # keep pytest from collecting this as a test class

    params: dict

    @property
    def support(self) -> tuple[float, float] | None:
        raise NotImplementedError

    @property
    def breaks(self) -> np.ndarray:
        """Points where the derivative may jump, including the support ends."""
        raise NotImplementedError

    def value(self, t):
        raise NotImplementedError

    def derivative(self, t):
        raise NotImplementedError

    @property
    def is_zero(self) -> bool:
        return self.support is None

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["t", "u"])
        for t in self.breaks:
            writer.writerow([repr(float(t)), repr(float(self.value(t)))])
        return buf.getvalue()


@dataclass(frozen=True, eq=False)
class PiecewiseLinear(TestFunction1D):
    """Linear interpolation of ``values`` at ``knots``, zero outside the knot range.

    The first and last values must vanish so that ``u`` is continuous with
    compact support.
    """

    knots: np.ndarray
    values: np.ndarray
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        k = np.asarray(self.knots, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if k.ndim != 1 or k.shape != v.shape or k.size < 2:
            raise DomainError("knots and values must be 1-D arrays of the same length >= 2")
        if np.any(np.diff(k) <= 0):
            raise DomainError("knots must be strictly increasing")
        if v[0] != 0 or v[-1] != 0:
            raise SupportError("a piecewise-linear test function must vanish at its end knots")
        k.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "knots", k)
        object.__setattr__(self, "values", v)

    @classmethod
    def tent(cls, a: float, peak: float, b: float, height: float = 1.0) -> "PiecewiseLinear":
        return cls(np.array([a, peak, b]), np.array([0.0, height, 0.0]),
                   {"family": "tent", "a": a, "peak": peak, "b": b, "height": height})

    @classmethod
    def zero(cls, a: float = 0.25, b: float = 0.75) -> "PiecewiseLinear":
        return cls(np.array([a, b]), np.zeros(2), {"family": "zero"})

    @classmethod
    def random(cls, rng: np.random.Generator, lo: float, hi: float, n_knots: int = 8,
               signed: bool = True) -> "PiecewiseLinear":
        """Random profile with knots log-uniform in ``[lo, hi]``."""
        while True:
            k = np.sort(np.exp(rng.uniform(math.log(lo), math.log(hi), n_knots)))
            if np.all(np.diff(k) > 1e-9 * k[1:]):
                break
        v = rng.normal(size=n_knots) if signed else rng.uniform(0.1, 1.0, n_knots)
        v[0] = v[-1] = 0.0
        return cls(k, v, {"family": "random", "n_knots": n_knots})

    @property
    def support(self):
        if not np.any(self.values):
            return None
        nz = np.flatnonzero(self.values)
        return float(self.knots[nz[0] - 1]), float(self.knots[nz[-1] + 1])

    @property
    def breaks(self):
        # sign changes put a kink in |u| inside a segment
        k, v = self.knots, self.values
        flip = np.flatnonzero(v[:-1] * v[1:] < 0)
        if flip.size == 0:
            return k
        roots = k[flip] - v[flip] * (k[flip + 1] - k[flip]) / (v[flip + 1] - v[flip])
        return np.union1d(k, roots)

    @property
    def slopes(self):
        return np.diff(self.values) / np.diff(self.knots)

    def value(self, t):
        return np.interp(t, self.knots, self.values, left=0.0, right=0.0)

    def derivative(self, t):
        # right-hand slope at knots, zero outside
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(self.knots, t, side="right") - 1
        inside = (idx >= 0) & (idx < self.knots.size - 1)
        out = np.where(inside, self.slopes[np.clip(idx, 0, self.knots.size - 2)], 0.0)
        return float(out) if out.ndim == 0 else out


def _kernel(s):
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    m = np.abs(s) < 1
    out[m] = np.exp(-1.0 / (1.0 - s[m] ** 2))
    return out


def _kernel_deriv(s):
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    m = np.abs(s) < 1
    sm = s[m]
    out[m] = np.exp(-1.0 / (1.0 - sm ** 2)) * (-2.0 * sm / (1.0 - sm ** 2) ** 2)
    return out


@dataclass(frozen=True, eq=False)
class Bump(TestFunction1D):
    """``height * exp(1 - 1/(1 - s**2))`` with ``s = (t - center) / half_width``."""

    center: float
    half_width: float
    height: float = 1.0
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.half_width > 0:
            raise DomainError("bump half-width must be positive")
        if not self.params:
            object.__setattr__(self, "params", {"family": "bump", "center": self.center,
                                                "half_width": self.half_width,
                                                "height": self.height})

    @property
    def support(self):
        if self.height == 0:
            return None
        return self.center - self.half_width, self.center + self.half_width

    @property
    def breaks(self):
        return np.linspace(self.center - self.half_width, self.center + self.half_width, 33)

    def value(self, t):
        s = (np.asarray(t, dtype=float) - self.center) / self.half_width
        return self.height * math.e * _kernel(s)

    def derivative(self, t):
        s = (np.asarray(t, dtype=float) - self.center) / self.half_width
        return self.height * math.e * _kernel_deriv(s) / self.half_width

    def scaled(self, factor: float, height: float | None = None) -> "Bump":
        """The bump ``t -> height * A(t / factor)`` (default height unchanged)."""
        return Bump(self.center * factor, self.half_width * factor,
                    self.height if height is None else height)


# -- the localized optimality family ------------------------------------------

def _window_integral(env: EnvelopeResult, lo: float, hi: float, n: int = WINDOW_KNOTS):
    """Knots on ``[lo, hi]`` and cumulative integrals of ``1/v`` from ``lo``."""
    knots = np.linspace(lo, hi, n)
    nodes, wts, owner = composite_nodes(knots, order=8)
    f = np.exp(-np.asarray(env.log_value_at(nodes)))
    per_cell = np.bincount(owner, weights=wts * f, minlength=n - 1)
    return knots, np.concatenate([[0.0], np.cumsum(per_cell)])


def _overlaps_plateau(env: EnvelopeResult, lo: float, hi: float) -> bool:
    cells = np.arange(env.grid.cell_of(lo), env.grid.cell_of(hi) + 1)
    return bool(env.plateau_mask[cells].any())


def make_localized_family(env: EnvelopeResult, x: float, h: float,
                          ramp: float | None = None) -> PiecewiseLinear:
    """The optimality profile built from ``f = 1/v`` on a window of length ``h``.

    For an increasing envelope the window is ``(x, x+h)`` and
    ``u(t) = int_t^{x+h} f``: constant on ``(0, x]`` (entered through a short
    ramp on ``[ramp, 2 ramp]``) and decaying to 0 across the window.  For a
    decreasing envelope the window is ``(x-h, x)`` and ``u(t) = int_{x-h}^t f``,
    held constant beyond ``x`` and brought back to 0 on
    ``[(x+eta)/2, x + 0.99 (eta-x)]``.  ``params["plateau"]`` records whether
    the window meets a plateau of the envelope.
    """
    pts = env.points
    r_min, eta = float(pts[0]), float(pts[-1])
    if not h > 0:
        raise DomainError("window length h must be positive")
    if env.kind == "phi":
        lo, hi = x, x + h
        if not (r_min < lo and hi < eta):
            raise SupportError(f"window ({lo:g}, {hi:g}) must lie inside ({r_min:g}, {eta:g})")
        delta = ramp if ramp is not None else max(1e-6 * x, 2 * r_min)
        if not (r_min <= delta and 2 * delta < x):
            raise SupportError("ramp does not fit between the grid floor and the window")
        wk, cum = _window_integral(env, lo, hi)
        U = cum[-1] - cum
        knots = np.concatenate([[delta, 2 * delta], wk])
        values = np.concatenate([[0.0, U[0]], U])
        values[-1] = 0.0
    else:
        lo, hi = x - h, x
        if not (r_min < lo and hi < eta):
            raise SupportError(f"window ({lo:g}, {hi:g}) must lie inside ({r_min:g}, {eta:g})")
        a, b = 0.5 * (x + eta), x + 0.99 * (eta - x)
        wk, U = _window_integral(env, lo, hi)
        knots = np.concatenate([wk, [a, b]])
        values = np.concatenate([U, [U[-1], 0.0]])
        values[0] = 0.0
    params = {"family": "localized", "branch": env.kind, "x": x, "h": h,
              "U0": float(values.max()), "plateau": _overlaps_plateau(env, lo, hi)}
    return PiecewiseLinear(knots, values, params)
