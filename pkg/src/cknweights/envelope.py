"""Monotone rearrangements of a weight on a log-uniform grid.

For ``w`` in W0 the envelope is ``phi(t) = inf_{t<=s<=eta} w(s)`` (a suffix
minimum over the grid); for ``w`` in Winf it is ``psi(t) = inf_{s<=t} w(s)``
(a prefix minimum).  Both are carried in the log domain.  The density
``V^q = |d(v^q)/dt|`` is stored per grid cell, so that summing ``Vq * width``
telescopes exactly to the change of ``v^q``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.optimize import brentq
from scipy.special import logsumexp

from . import weights
from .errors import DomainError, PlateauImageError, SupportError, UnsupportedClassError

DEFAULT_POINTS = 4096
DEFAULT_R_MIN_RATIO = 1e-8
DEFAULT_TRUNCATION = 1e3
# grid floor for blow-up weights: keeps v**q finite for q up to 2
LOG_CAP = 300.0
PLATEAU_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class Grid:
    """Strictly increasing sample points ``r_min = points[0] < ... < points[-1] = eta``."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 1 or pts.size < 2:
            raise DomainError("a grid needs at least two points")
        if pts[0] <= 0 or np.any(np.diff(pts) <= 0):
            raise DomainError("grid points must be positive and strictly increasing")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @classmethod
    def log_uniform(cls, r_min: float, eta: float, count: int = DEFAULT_POINTS) -> "Grid":
        if not (0 < r_min < eta) or count < 2:
            raise DomainError(f"bad grid request r_min={r_min}, eta={eta}, count={count}")
        pts = np.geomspace(r_min, eta, int(count))
        pts[0], pts[-1] = r_min, eta
        return cls(pts)

    @property
    def count(self) -> int:
        return self.points.size

    @property
    def r_min(self) -> float:
        return float(self.points[0])

    @property
    def eta(self) -> float:
        return float(self.points[-1])

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.points)

    @property
    def centers(self) -> np.ndarray:
        """Geometric cell midpoints."""
        return np.sqrt(self.points[:-1] * self.points[1:])

    def cell_of(self, t):
        """Index of the cell containing ``t`` (right-closed at the top)."""
        return np.clip(np.searchsorted(self.points, t, side="right") - 1, 0, self.count - 2)


def make_grid(spec: weights.WeightSpec, count: int = DEFAULT_POINTS,
              r_min_ratio: float = DEFAULT_R_MIN_RATIO, truncation: float | None = None,
              log_cap: float = LOG_CAP) -> Grid:
    """Log-uniform grid on ``(r_min_ratio * eta, eta]`` adapted to ``spec``.

    ``eta = inf`` needs an explicit ``truncation``.  Table weights clip the grid
    to their knot range.  If ``log w`` exceeds ``log_cap`` at the bottom of the
    grid, ``r_min`` is raised to the point where it drops to ``log_cap`` so that
    ``v**q`` stays representable.
    """
    eta = spec.eta
    if math.isinf(eta):
        if truncation is None:
            raise DomainError("eta = inf needs a truncation radius")
        eta = float(truncation)
    lo, hi = spec.domain()
    eta = min(eta, hi)
    r_min = max(r_min_ratio * eta, lo)
    if weights.log_value(spec, r_min) > log_cap:
        if weights.log_value(spec, eta) > log_cap:
            raise DomainError("log w exceeds the representable range on the whole interval")
        s = brentq(lambda s: weights.log_value(spec, math.exp(s)) - log_cap,
                   math.log(r_min), math.log(eta), xtol=1e-12)
        r_min = math.exp(s) * (1 + 1e-9)
    return Grid.log_uniform(r_min, eta, count)


@dataclass(frozen=True, eq=False)
class EnvelopeResult:
    """Envelope samples on a grid.

    ``kind`` is ``"phi"`` (increasing, W0) or ``"psi"`` (decreasing, Winf).
    ``log_v`` and ``log_w`` live on grid points; ``plateau_mask`` and ``Vq``
    live on the cells between consecutive points.
    """

    kind: str
    grid: Grid
    log_w: np.ndarray
    log_v: np.ndarray
    plateau_mask: np.ndarray
    Vq: np.ndarray
    q: float
    spec: weights.WeightSpec | None = None
    weight_class: weights.WeightClass | None = None

    @property
    def points(self):
        return self.grid.points

    @property
    def v(self):
        with np.errstate(over="ignore", under="ignore"):
            return np.exp(self.log_v)

    @property
    def w(self):
        with np.errstate(over="ignore", under="ignore"):
            return np.exp(self.log_w)

    @property
    def eta_tilde(self) -> float:
        """v(eta)."""
        return float(np.exp(self.log_v[-1]))

    @property
    def log_rho(self):
        """Log of the transformed radius: ``v`` for phi, ``1/v`` for psi.

        Increasing in r for both kinds.
        """
        return self.log_v if self.kind == "phi" else -self.log_v

    @property
    def log_rho_max(self) -> float:
        """log of the transformed cutoff (v(eta) or 1/v(eta))."""
        return float(self.log_rho[-1])

    def log_value_at(self, r):
        """log v at arbitrary ``r`` in ``[r_min, eta]``.

        On a moving cell the envelope equals ``w`` clipped to the cell's
        endpoint values; without a spec it falls back to linear interpolation
        of ``log v`` against ``log r``.
        """
        r = np.asarray(r, dtype=float)
        pts = self.points
        if np.any((r < pts[0] * (1 - 1e-14)) | (r > pts[-1] * (1 + 1e-14))):
            raise DomainError(f"r outside the grid range [{pts[0]:g}, {pts[-1]:g}]")
        r = np.clip(r, pts[0], pts[-1])
        cell = self.grid.cell_of(r)
        lo = np.minimum(self.log_v[cell], self.log_v[cell + 1])
        hi = np.maximum(self.log_v[cell], self.log_v[cell + 1])
        if self.spec is not None:
            out = np.clip(weights.log_value(self.spec, r), lo, hi)
        else:
            x0, x1 = np.log(pts[cell]), np.log(pts[cell + 1])
            frac = (np.log(r) - x0) / (x1 - x0)
            out = self.log_v[cell] + frac * (self.log_v[cell + 1] - self.log_v[cell])
        out = np.where(self.plateau_mask[cell], self.log_v[cell], out)
        return float(out) if out.ndim == 0 else out

    def value(self, r):
        with np.errstate(over="ignore", under="ignore"):
            return np.exp(self.log_value_at(r))

    def vq_at(self, t):
        """Cell density ``Vq`` at points ``t`` inside the grid range."""
        t = np.asarray(t, dtype=float)
        if np.any((t < self.points[0]) | (t > self.points[-1])):
            raise SupportError("point outside the envelope grid")
        return self.Vq[self.grid.cell_of(t)]

    def _log_shape(self, t, cells):
        # log |d(v**q)/dt| inside moving cells, -inf where the envelope is clipped
        L = np.asarray(weights.log_value(self.spec, t), dtype=float)
        lo = np.minimum(self.log_v[cells], self.log_v[cells + 1])
        hi = np.maximum(self.log_v[cells], self.log_v[cells + 1])
        dlog = np.abs(np.asarray(weights.log_derivative(self.spec, t), dtype=float))
        with np.errstate(divide="ignore"):
            out = math.log(self.q) + self.q * L + np.log(dlog)
        return np.where((L >= lo) & (L <= hi), out, -np.inf)

    @cached_property
    def _log_shape_mass(self):
        x, w = np.polynomial.legendre.leggauss(8)
        pts = self.points
        cells = np.arange(self.grid.count - 1)
        half = 0.5 * np.diff(pts)
        t = (0.5 * (pts[:-1] + pts[1:]))[:, None] + half[:, None] * x[None, :]
        ls = self._log_shape(t.ravel(), np.repeat(cells, x.size)).reshape(t.shape)
        with np.errstate(divide="ignore"):
            return logsumexp(ls + np.log(half[:, None] * w[None, :]), axis=1)

    @cached_property
    def cell_rules(self):
        """Per-cell nodes, weights and ``V^q`` values of the composite rule.

        Index 0 is the unsplit rule, index 1 the bisected one; shapes are
        ``(n_cells, nodes_per_cell)``.
        """
        return _cell_rule(self, 1), _cell_rule(self, 2)

    def vq_density(self, t, cells=None):
        """``V^q`` at ``t`` with the exact shape of ``d(v**q)/dt`` inside moving cells.

        Each cell still integrates to its telescoped increment ``Vq * width``,
        so the discrete FTC identity is unchanged; only the distribution inside
        a cell follows the weight.  Without a spec this is :meth:`vq_at`.
        """
        t = np.asarray(t, dtype=float)
        if cells is None:
            if np.any((t < self.points[0]) | (t > self.points[-1])):
                raise SupportError("point outside the envelope grid")
            cells = self.grid.cell_of(t)
        flat = self.Vq[cells]
        if self.spec is None:
            return flat
        mass = self._log_shape_mass[cells]
        usable = np.isfinite(mass) & ~self.plateau_mask[cells] & (flat > 0)
        out = flat.copy()
        if usable.any():
            c = cells[usable]
            inc = flat[usable] * self.grid.widths[c]
            out[usable] = inc * np.exp(self._log_shape(t[usable], c) - mass[usable])
        return out


def _cell_rule(env: "EnvelopeResult", split: int):
    # deferred: the functionals package imports this module
    from .functionals.quadrature import DEFAULT_ORDER, composite_nodes
    nodes, wts, owner = composite_nodes(env.points, DEFAULT_ORDER, split)
    dens = env.vq_density(nodes, owner)
    shape = (env.grid.count - 1, -1)
    out = tuple(a.reshape(shape) for a in (nodes, wts, dens))
    for a in out:
        a.setflags(write=False)
    return out


def _carry_plateau_increments(inc, plateau):
    # move what is left on flat cells to the next moving cell (previous one at the top)
    carry = np.where(plateau, inc, 0.0)
    inc = np.where(plateau, 0.0, inc)
    moving = np.flatnonzero(~plateau)
    flat = np.flatnonzero(plateau & (carry != 0))
    if moving.size and flat.size:
        target = np.minimum(np.searchsorted(moving, flat), moving.size - 1)
        np.add.at(inc, moving[target], carry[flat])
    return inc


def envelope_from_log_samples(points, log_w, kind: str, q: float = 1.0, spec=None,
                              weight_class=None) -> EnvelopeResult:
    """Envelope of sampled ``log w`` values on ``points``."""
    if kind not in ("phi", "psi"):
        raise ValueError(f"kind must be 'phi' or 'psi', got {kind!r}")
    if not q >= 1:
        raise DomainError(f"q must be >= 1, got {q}")
    grid = points if isinstance(points, Grid) else Grid(points)
    log_w = np.asarray(log_w, dtype=float)
    if log_w.shape != grid.points.shape or not np.all(np.isfinite(log_w)):
        raise DomainError("log w samples must be finite and match the grid")

    if kind == "phi":
        log_v = np.minimum.accumulate(log_w[::-1])[::-1]
    else:
        log_v = np.minimum.accumulate(log_w)

    step = np.diff(log_v)
    flat = np.abs(step) <= PLATEAU_RTOL
    above = np.maximum(log_w[:-1] - log_v[:-1], log_w[1:] - log_v[1:]) > PLATEAU_RTOL
    plateau = flat & above

    top = np.maximum(log_v[:-1], log_v[1:])
    with np.errstate(over="ignore", under="ignore"):
        inc = np.exp(q * top) * -np.expm1(-q * np.abs(step))
    if not np.all(np.isfinite(inc)):
        raise DomainError("v**q overflows on this grid; raise r_min or lower q")
    inc = _carry_plateau_increments(inc, plateau)
    Vq = inc / grid.widths

    for arr in (log_v, plateau, Vq):
        arr.setflags(write=False)
    return EnvelopeResult(kind, grid, log_w, log_v, plateau, Vq, float(q), spec, weight_class)


def envelope_from_samples(points, w, kind: str, q: float = 1.0) -> EnvelopeResult:
    w = np.asarray(w, dtype=float)
    if np.any(w <= 0):
        raise DomainError("weight samples must be positive")
    return envelope_from_log_samples(points, np.log(w), kind, q)


def compute_envelope(spec: weights.WeightSpec, weight_class: weights.WeightClass | None = None,
                     grid: Grid | None = None, q: float = 1.0) -> EnvelopeResult:
    """phi_w (W0) or psi_w (Winf) of ``spec`` sampled on ``grid``.

    Raises :class:`UnsupportedClassError` for W_a with finite positive a and
    for weights whose class could not be determined.
    """
    if weight_class is None:
        weight_class = weights.classify(spec)
    if not weight_class.in_v:
        raise UnsupportedClassError(
            f"monotone rearrangement needs a weight in W0 or Winf, got {weight_class}")
    if grid is None:
        grid = make_grid(spec)
    kind = "phi" if weight_class.tag == "W0" else "psi"
    log_w = weights.log_value(spec, grid.points)
    return envelope_from_log_samples(grid, log_w, kind, q, spec, weight_class)


# -- inverse map and H --------------------------------------------------------

def _invert_one(env: EnvelopeResult, L: float, x, r, plateau):
    if not (x[0] - PLATEAU_RTOL <= L <= x[-1] + PLATEAU_RTOL):
        raise DomainError(f"level exp({L:g}) outside the envelope range")
    if plateau.any() and np.any(np.abs(x[:-1][plateau] - L) <= PLATEAU_RTOL):
        raise PlateauImageError(f"level exp({L:g}) is the value of the envelope on a plateau")
    k = int(np.clip(np.searchsorted(x, L, side="right") - 1, 0, x.size - 2))
    if abs(L - x[k]) <= PLATEAU_RTOL * 1e-3:
        return float(r[k])
    if abs(L - x[k + 1]) <= PLATEAU_RTOL * 1e-3:
        return float(r[k + 1])
    a, b = sorted((float(r[k]), float(r[k + 1])))
    if env.spec is not None:
        fa = weights.log_value(env.spec, a) - L
        fb = weights.log_value(env.spec, b) - L
        if fa * fb < 0:
            return brentq(lambda t: weights.log_value(env.spec, t) - L, a, b,
                          xtol=1e-15 * b, rtol=4 * np.finfo(float).eps)
    frac = (L - x[k]) / (x[k + 1] - x[k])
    return float(np.exp(np.log(r[k]) + frac * (np.log(r[k + 1]) - np.log(r[k]))))


def _monotone_view(env):
    if env.kind == "phi":
        return env.log_v, env.points, env.plateau_mask
    return env.log_v[::-1], env.points[::-1], env.plateau_mask[::-1]


def inverse_map(env: EnvelopeResult, level: float | None = None, *, log_level: float | None = None) -> float:
    """Return ``r`` with ``v(r) = level``.

    Pass ``log_level`` instead of ``level`` when the level under- or
    overflows.  Levels attained on a plateau raise
    :class:`PlateauImageError`; levels outside the grid's range raise
    :class:`DomainError`.
    """
    if (level is None) == (log_level is None):
        raise TypeError("pass exactly one of level, log_level")
    if log_level is None:
        if not level > 0:
            raise DomainError("level must be positive")
        log_level = math.log(level)
    x, r, plateau = _monotone_view(env)
    return _invert_one(env, float(log_level), x, r, plateau)


def inverse_map_many(env: EnvelopeResult, log_levels):
    """Vectorised :func:`inverse_map` on log levels.

    Returns ``(r, skipped)``; plateau images give ``nan`` with ``skipped`` set.
    Out-of-range levels still raise.
    """
    log_levels = np.atleast_1d(np.asarray(log_levels, dtype=float))
    x, r, plateau = _monotone_view(env)
    out = np.empty_like(log_levels)
    skipped = np.zeros(log_levels.shape, dtype=bool)
    for i, L in enumerate(log_levels):
        try:
            out[i] = _invert_one(env, L, x, r, plateau)
        except PlateauImageError:
            out[i] = np.nan
            skipped[i] = True
    return out, skipped


@dataclass(frozen=True, eq=False)
class HProfile:
    rho: np.ndarray
    H: np.ndarray
    skipped: np.ndarray

    @property
    def n_skipped(self) -> int:
        return int(self.skipped.sum())


def h_at_log_rho(env: EnvelopeResult, spec: weights.WeightSpec, log_rho):
    """H at transformed radii given by ``log rho``; returns ``(H, skipped)``.

    W0 uses ``rho = v(r)``, Winf uses ``rho = 1/v(r)``.
    """
    log_rho = np.atleast_1d(np.asarray(log_rho, dtype=float))
    levels = log_rho if env.kind == "phi" else -log_rho
    r, skipped = inverse_map_many(env, levels)
    H = np.full_like(r, np.nan)
    ok = ~skipped
    if ok.any():
        H[ok] = weights.k_function(spec, r[ok])
    return H, skipped


def h_profile(env: EnvelopeResult, spec: weights.WeightSpec, rho_grid=None, *, log_rho=None) -> HProfile:
    """H(rho) = K(r(rho)) on the given transformed radii.

    ``rho_grid`` may be a :class:`Grid` or an array.  Radii whose preimage is
    a plateau are skipped and flagged.
    """
    if log_rho is None:
        rho = rho_grid.points if isinstance(rho_grid, Grid) else np.asarray(rho_grid, dtype=float)
        log_rho = np.log(rho)
    else:
        log_rho = np.asarray(log_rho, dtype=float)
        with np.errstate(under="ignore"):
            rho = np.exp(log_rho)
    H, skipped = h_at_log_rho(env, spec, log_rho)
    return HProfile(np.atleast_1d(rho), H, skipped)
