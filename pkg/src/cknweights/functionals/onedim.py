"""Both sides of the one-dimensional inequality.

``lhs = int |u'| w dt`` and ``rhs = (int |u|**q V^q dt)**(1/q)``, with
``V^q`` taken from an :class:`EnvelopeResult`: each grid cell carries its
telescoped increment of ``v**q``, spread inside the cell like ``d(v**q)/dt``.
"""
from __future__ import annotations

import math

import numpy as np

from .. import weights
from ..envelope import EnvelopeResult
from ..errors import DomainError, SupportError
from .quadrature import DEFAULT_ORDER, QuadratureResult, integrate, interval_nodes, refine_breaks
from .testfunctions import TestFunction1D


def _check_support(u: TestFunction1D, lo: float, hi: float, what: str):
    a, b = u.support
    if not (a > lo and b < hi):
        if a <= 0:
            raise SupportError(f"support of u touches 0 (starts at {a:g})")
        raise SupportError(f"support [{a:g}, {b:g}] of u is not inside the open {what} ({lo:g}, {hi:g})")


def _breaks_in(u: TestFunction1D, extra=None):
    a, b = u.support
    pts = np.asarray(u.breaks, dtype=float)
    if extra is not None:
        pts = np.concatenate([pts, extra])
    pts = pts[(pts >= a) & (pts <= b)]
    return np.unique(np.concatenate([[a, b], pts]))


def lhs_1d(u: TestFunction1D, spec: weights.WeightSpec) -> QuadratureResult:
    """``int_0^eta |u'(t)| w(t) dt``."""
    if u.is_zero:
        return QuadratureResult(0.0, 0.0, 0)
    lo, hi = spec.domain()
    # a table is evaluable down to its first knot, so the support may start there
    if lo > 0:
        lo *= 1 - 1e-15
    _check_support(u, lo, min(spec.eta, hi), "interval")
    breaks = refine_breaks(_breaks_in(u))

    def f(t, _owner):
        with np.errstate(over="ignore"):
            return np.abs(u.derivative(t)) * np.exp(weights.log_value(spec, t))

    return integrate(f, breaks)


def integrate_vq(u: TestFunction1D, env: EnvelopeResult, power: float) -> QuadratureResult:
    """``int |u|**power V^q dt`` with ``V^q`` from ``env.vq_density``.

    Whole grid cells reuse the envelope's cached nodes and densities; only
    cells cut by a breakpoint of ``u`` are evaluated afresh.
    """
    if u.is_zero:
        return QuadratureResult(0.0, 0.0, 0)
    pts = env.points
    a, b = u.support
    if a < pts[0] * (1 - 1e-14) or b > pts[-1] * (1 + 1e-14):
        raise SupportError(f"support [{a:g}, {b:g}] of u leaves the envelope grid "
                           f"[{pts[0]:g}, {pts[-1]:g}]")
    breaks = _breaks_in(u, pts)
    lo, hi = breaks[:-1], breaks[1:]
    cells = env.grid.cell_of(0.5 * (lo + hi))
    whole = (lo == pts[cells]) & (hi == pts[cells + 1])
    cut = np.flatnonzero(~whole)

    vals, n = [], 0
    for level, (nodes, wts, dens) in enumerate(env.cell_rules):
        keep = cells[whole]
        nodes, wts, dens = nodes[keep], wts[keep], dens[keep]
        total = float(np.sum(wts * np.abs(u.value(nodes)) ** power * dens))
        n += nodes.size
        if cut.size:
            t, w, owner = interval_nodes(lo[cut], hi[cut], DEFAULT_ORDER, level + 1)
            total += float(np.dot(w, np.abs(u.value(t)) ** power
                                  * env.vq_density(t, cells[cut][owner])))
            n += t.size
        vals.append(total)
    return QuadratureResult(vals[1], abs(vals[1] - vals[0]), n)


def rhs_1d(u: TestFunction1D, env: EnvelopeResult, q: float) -> QuadratureResult:
    """``(int_0^eta |u|**q V^q_w dt)**(1/q)``; ``env`` must carry the same ``q``."""
    if not math.isclose(env.q, q, rel_tol=0, abs_tol=1e-15):
        raise DomainError(f"envelope was computed for q={env.q}, not q={q}")
    res = integrate_vq(u, env, q)
    return root_q(res, q)


def root_q(res: QuadratureResult, q: float) -> QuadratureResult:
    """q-th root with first-order error propagation."""
    if res.value <= 0:
        return QuadratureResult(0.0, res.est_error ** (1.0 / q), res.n_evals)
    val = res.value ** (1.0 / q)
    return QuadratureResult(val, val * (res.est_error / res.value) / q, res.n_evals)
