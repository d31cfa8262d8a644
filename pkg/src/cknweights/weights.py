"""Weight functions w on (0, eta]: construction, evaluation and classification.

A weight is described by an immutable :class:`WeightSpec` tree built from a
small algebra (powers, exponentials of inverse powers, positive scalings,
products and tabulated piecewise-linear data).  Every operation is a pure
function of the spec, vectorised over ``t``.

Besides ``w`` and ``w'`` the module exposes ``log w`` and ``(log w)'``.  The
non-doubling weights ``exp(+-t**-alpha)`` leave the float64 range long before
``t`` reaches the bottom of a typical grid, so everything downstream works in
the log domain.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, SpecError

FAMILIES = ("power", "exp_inv_power", "scale", "product", "table")

# classification probe for tables
PROBE_RATIO = 0.5
PROBE_SPREAD_TOL = 0.05
PROBE_LENGTH = 6


@dataclass(frozen=True)
class WeightSpec:
    """Declarative description of a weight ``w`` on ``(0, eta]``.

    Use the constructor helpers (:func:`power`, :func:`exp_inv_power`,
    :func:`scale`, :func:`product`, :func:`table`) rather than building the
    dataclass by hand.  ``eta`` may be ``inf``; only 1D operations accept that
    and they need a truncation radius.
    """

    family: str
    params: tuple = ()
    children: tuple = ()
    eta: float = 1.0
    source: str | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise SpecError(f"unknown weight family {self.family!r}")
        if not (self.eta > 0):
            raise SpecError(f"eta must be positive, got {self.eta}")

    @property
    def is_table(self) -> bool:
        return self.family == "table"

    def contains_table(self) -> bool:
        return self.is_table or any(c.contains_table() for c in self.children)

    def domain(self):
        """Closed interval ``(lo, hi)`` on which the spec can be evaluated."""
        lo, hi = 0.0, self.eta
        if self.is_table:
            knots = self.params[0]
            lo, hi = knots[0], min(hi, knots[-1])
        for child in self.children:
            clo, chi = child.domain()
            lo, hi = max(lo, clo), min(hi, chi)
        return lo, hi

    def with_eta(self, eta: float) -> "WeightSpec":
        return WeightSpec(self.family, self.params, self.children, float(eta), self.source)

    def __str__(self):
        return to_string(self)


@dataclass(frozen=True)
class WeightClass:
    """Membership of w in W_a, decided by the limit of w at +0."""

    tag: str
    a: float | None = None

    def __post_init__(self):
        if self.tag not in ("W0", "Winf", "Wa", "unknown"):
            raise SpecError(f"unknown weight class {self.tag!r}")

    @property
    def in_v(self) -> bool:
        """True for the classes on which the rearrangements are defined."""
        return self.tag in ("W0", "Winf")

    def __str__(self):
        return f"Wa({self.a:g})" if self.tag == "Wa" else self.tag


W0 = WeightClass("W0")
WINF = WeightClass("Winf")
UNKNOWN = WeightClass("unknown")


# -- constructors -------------------------------------------------------------

def power(gamma: float, eta: float = 1.0) -> WeightSpec:
    """``w(t) = t**gamma``."""
    gamma = float(gamma)
    if gamma == 0 or not math.isfinite(gamma):
        raise SpecError("power weight needs a finite gamma != 0")
    return WeightSpec("power", (gamma,), (), float(eta))


def exp_inv_power(sign: int, alpha: float, eta: float = 1.0) -> WeightSpec:
    """``w(t) = exp(sign * t**-alpha)``; sign -1 vanishes at 0, +1 blows up."""
    if sign not in (1, -1):
        raise SpecError("sign must be +1 or -1")
    alpha = float(alpha)
    if not (alpha > 0) or not math.isfinite(alpha):
        raise SpecError("alpha must be a finite positive number")
    return WeightSpec("exp_inv_power", (int(sign), alpha), (), float(eta))


def scale(c: float, inner: WeightSpec, eta: float | None = None) -> WeightSpec:
    c = float(c)
    if not (c > 0) or not math.isfinite(c):
        raise SpecError("scale factor must be a finite positive number")
    return WeightSpec("scale", (c,), (inner,), float(inner.eta if eta is None else eta))


def product(left: WeightSpec, right: WeightSpec, eta: float | None = None) -> WeightSpec:
    if eta is None:
        eta = min(left.eta, right.eta)
    return WeightSpec("product", (), (left, right), float(eta))


def table(knots, values, eta: float | None = None, source: str | None = None) -> WeightSpec:
    """Piecewise-linear weight through ``(knots[i], values[i])``."""
    knots = np.asarray(knots, dtype=float)
    values = np.asarray(values, dtype=float)
    if knots.ndim != 1 or knots.shape != values.shape or knots.size < 2:
        raise SpecError("table needs two equally long 1-D arrays with at least 2 entries")
    if not np.all(np.isfinite(knots)) or not np.all(np.isfinite(values)):
        raise SpecError("table entries must be finite")
    if knots[0] <= 0:
        raise SpecError("table knots must be positive")
    if np.any(np.diff(knots) <= 0):
        raise SpecError("table knots must be strictly increasing")
    if np.any(values <= 0):
        raise SpecError("table values must be strictly positive")
    if eta is None:
        eta = knots[-1]
    if eta > knots[-1]:
        raise SpecError(f"eta={eta} lies beyond the last table knot {knots[-1]}")
    return WeightSpec("table", (tuple(knots.tolist()), tuple(values.tolist())), (), float(eta), source)


def to_string(spec: WeightSpec) -> str:
    """Render a spec in the CLI mini-language."""
    f, p = spec.family, spec.params
    if f == "power":
        return f"pow({p[0]:g})"
    if f == "exp_inv_power":
        return f"expinv({p[1]:g},{'+' if p[0] > 0 else '-'})"
    if f == "scale":
        return f"scale({p[0]:g},{to_string(spec.children[0])})"
    if f == "product":
        return f"prod({to_string(spec.children[0])},{to_string(spec.children[1])})"
    return f"table({spec.source})" if spec.source else f"table[{len(p[0])} knots]"


# -- evaluation ---------------------------------------------------------------

def _check_domain(spec: WeightSpec, t):
    t = np.asarray(t, dtype=float)
    lo, hi = spec.domain()
    bad = ~((t > 0) & (t >= lo) & (t <= hi))
    if np.any(bad):
        first = t[bad].flat[0]
        raise DomainError(f"t={first!r} outside the weight domain ({lo:g}, {hi:g}]")
    return t


def _table_slopes(spec):
    knots = np.asarray(spec.params[0])
    values = np.asarray(spec.params[1])
    return knots, values, np.diff(values) / np.diff(knots)


def _table_cell(knots, t):
    # right-hand cell; the last knot uses the last cell
    return np.clip(np.searchsorted(knots, t, side="right") - 1, 0, knots.size - 2)


def _raw_value(spec, t):
    f, p = spec.family, spec.params
    if f == "power":
        return t ** p[0]
    if f == "exp_inv_power":
        with np.errstate(over="ignore", under="ignore"):
            return np.exp(p[0] * t ** -p[1])
    if f == "scale":
        return p[0] * _raw_value(spec.children[0], t)
    if f == "product":
        with np.errstate(over="ignore", under="ignore", invalid="ignore"):
            return _raw_value(spec.children[0], t) * _raw_value(spec.children[1], t)
    return np.interp(t, spec.params[0], spec.params[1])


def _raw_log(spec, t):
    f, p = spec.family, spec.params
    if f == "power":
        return p[0] * np.log(t)
    if f == "exp_inv_power":
        return p[0] * t ** -p[1]
    if f == "scale":
        return math.log(p[0]) + _raw_log(spec.children[0], t)
    if f == "product":
        return _raw_log(spec.children[0], t) + _raw_log(spec.children[1], t)
    return np.log(np.interp(t, spec.params[0], spec.params[1]))


def _raw_dlog(spec, t):
    f, p = spec.family, spec.params
    if f == "power":
        return p[0] / t
    if f == "exp_inv_power":
        return -p[0] * p[1] * t ** (-p[1] - 1.0)
    if f == "scale":
        return _raw_dlog(spec.children[0], t)
    if f == "product":
        return _raw_dlog(spec.children[0], t) + _raw_dlog(spec.children[1], t)
    knots, values, slopes = _table_slopes(spec)
    return slopes[_table_cell(knots, t)] / np.interp(t, knots, values)


def _raw_derivative(spec, t):
    f, p = spec.family, spec.params
    if f == "power":
        return p[0] * t ** (p[0] - 1.0)
    if f == "exp_inv_power":
        with np.errstate(over="ignore", under="ignore", invalid="ignore"):
            return _raw_value(spec, t) * _raw_dlog(spec, t)
    if f == "scale":
        return p[0] * _raw_derivative(spec.children[0], t)
    if f == "product":
        left, right = spec.children
        with np.errstate(over="ignore", under="ignore", invalid="ignore"):
            return (_raw_derivative(left, t) * _raw_value(right, t)
                    + _raw_value(left, t) * _raw_derivative(right, t))
    knots, _, slopes = _table_slopes(spec)
    return slopes[_table_cell(knots, t)]


def _scalar_or_array(x, like):
    return float(x) if np.ndim(like) == 0 else x


def evaluate(spec: WeightSpec, t):
    """w(t) for t in (0, eta]. May overflow to inf for blow-up weights."""
    t = _check_domain(spec, t)
    return _scalar_or_array(_raw_value(spec, t), t)


def derivative(spec: WeightSpec, t):
    """w'(t); right-hand slope at table knots."""
    t = _check_domain(spec, t)
    return _scalar_or_array(_raw_derivative(spec, t), t)


def log_value(spec: WeightSpec, t):
    """log w(t), finite wherever t is in the domain."""
    t = _check_domain(spec, t)
    return _scalar_or_array(_raw_log(spec, t), t)


def log_derivative(spec: WeightSpec, t):
    """(log w)'(t) = w'(t) / w(t)."""
    t = _check_domain(spec, t)
    return _scalar_or_array(_raw_dlog(spec, t), t)


# -- classification -----------------------------------------------------------

def _asymptote(spec):
    """Leading behaviour of log w at +0 as (exp_terms, gamma, log_c).

    ``log w(t) ~ sum(c * t**-alpha) + gamma * log t + log_c``; exp_terms maps
    alpha -> c.  Returns None when a table is involved.
    """
    f, p = spec.family, spec.params
    if f == "power":
        return {}, p[0], 0.0
    if f == "exp_inv_power":
        return {p[1]: float(p[0])}, 0.0, 0.0
    if f == "scale":
        inner = _asymptote(spec.children[0])
        if inner is None:
            return None
        return inner[0], inner[1], inner[2] + math.log(p[0])
    if f == "product":
        a, b = _asymptote(spec.children[0]), _asymptote(spec.children[1])
        if a is None or b is None:
            return None
        terms = dict(a[0])
        for alpha, c in b[0].items():
            terms[alpha] = terms.get(alpha, 0.0) + c
        return terms, a[1] + b[1], a[2] + b[2]
    return None


def _probe(spec, ratio=PROBE_RATIO, tol=PROBE_SPREAD_TOL, length=PROBE_LENGTH):
    lo, hi = spec.domain()
    ts = []
    t = hi
    while t >= lo and len(ts) < 200:
        ts.append(t)
        t *= ratio
    if len(ts) < 3:
        return UNKNOWN
    values = np.asarray(evaluate(spec, np.asarray(ts)))[-length:]
    if (values.max() - values.min()) / values.mean() <= tol:
        return WeightClass("Wa", float(values[-1]))
    steps = np.diff(np.log(values))
    # a geometric trend that is not dying out points to 0 or infinity
    persistent = abs(steps[-1]) >= 0.5 * abs(steps[0])
    if np.all(steps < 0) and persistent:
        return W0
    if np.all(steps > 0) and persistent:
        return WINF
    return UNKNOWN


def classify(spec: WeightSpec, tol: float = PROBE_SPREAD_TOL) -> WeightClass:
    """Decide which W_a contains the weight.

    Built-in specs are classified exactly from their asymptotic expansion;
    anything containing a table falls back to a numeric probe along
    ``eta * 0.5**k`` that reports ``unknown`` when the samples neither settle
    nor trend.
    """
    asym = _asymptote(spec)
    if asym is None:
        return _probe(spec, tol=tol)
    terms, gamma, log_c = asym
    live = {alpha: c for alpha, c in terms.items() if c != 0}
    if live:
        return W0 if live[max(live)] < 0 else WINF
    if gamma > 0:
        return W0
    if gamma < 0:
        return WINF
    return WeightClass("Wa", math.exp(log_c))


def k_function(spec: WeightSpec, r):
    """K(r) = |w(r) / (r w'(r))|, computed as 1 / |r (log w)'(r)|.

    Returns inf where w' vanishes.
    """
    dlog = np.asarray(log_derivative(spec, r), dtype=float)
    with np.errstate(divide="ignore"):
        k = 1.0 / np.abs(np.asarray(r, dtype=float) * dlog)
    return _scalar_or_array(k, r)
