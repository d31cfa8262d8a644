"""The gauge K(r), the non-degenerate condition and infinite-order detection."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import weights
from .envelope import EnvelopeResult, Grid, compute_envelope, make_grid
from .errors import DomainError, UnsupportedClassError
from .weights import k_function

SATISFIED = "satisfied"
VIOLATED = "violated_limsup_zero"
INCONCLUSIVE = "inconclusive"

DEFAULT_THRESHOLD = 1e-6
# windowed sups must shrink by at least this relative amount to count as decreasing
DECAY_MARGIN = 1e-4
# a fitted power-law exponent above this means K -> 0 along the grid tail
MIN_DECAY_SLOPE = 0.05
FIT_DECADES = 2.0
N_WINDOWS = 4

__all__ = ["KProfile", "NdcReport", "InfiniteOrderResult", "k_function", "k_profile",
           "ndc_check", "fit_power_law", "infinite_order_detect", "analyze",
           "integrated_floor", "SATISFIED", "VIOLATED", "INCONCLUSIVE"]


@dataclass(frozen=True, eq=False)
class KProfile:
    """K at the geometric midpoints of the moving (non-plateau) cells."""

    r: np.ndarray
    K: np.ndarray
    n_flagged: int = 0

    def __post_init__(self):
        if self.r.shape != self.K.shape:
            raise ValueError("r and K must have the same shape")

    @property
    def n_samples(self) -> int:
        return int(self.r.size)


def k_profile(spec: weights.WeightSpec, env: EnvelopeResult) -> KProfile:
    """Sample K on every non-plateau cell of ``env``.

    Cells where ``w'`` vanishes (K infinite) are dropped and counted in
    ``n_flagged``.
    """
    moving = ~env.plateau_mask
    if not moving.any():
        raise DomainError("the envelope has no non-plateau cells")
    r = env.grid.centers[moving]
    K = np.asarray(k_function(spec, r), dtype=float)
    good = np.isfinite(K)
    return KProfile(r[good], K[good], int((~good).sum()))


def fit_power_law(profile: KProfile, decades: float = FIT_DECADES) -> float:
    """Least-squares slope of log K against log r over the lowest ``decades``."""
    r, K = profile.r, profile.K
    if r.size == 0:
        return float("nan")
    lo = r.min()
    sel = (r <= lo * 10 ** decades) & (K > 0)
    if sel.sum() < 2:
        return float("nan")
    slope, _ = np.polyfit(np.log(r[sel]), np.log(K[sel]), 1)
    return float(slope)


def _window_sups(profile: KProfile, n_windows: int):
    # sup of K over (0, eps_k] for eps_k = r_lo * 2**k, k = 1..n_windows + 1
    order = np.argsort(profile.r)
    r, K = profile.r[order], profile.K[order]
    running = np.maximum.accumulate(K)
    eps = r[0] * 2.0 ** np.arange(1, n_windows + 2)
    idx = np.searchsorted(r, eps, side="right") - 1
    return running[idx]


def ndc_check(profile: KProfile, eta: float | None = None, threshold: float = DEFAULT_THRESHOLD):
    """Three-valued NDC verdict from sampled K.

    Returns ``(verdict, C0, fitted_alpha)`` where ``C0`` is the smallest
    sample.  The verdict is ``violated_limsup_zero`` when the sup of K over
    ``(0, eps]`` keeps shrinking across the last dyadic windows and either
    falls below ``threshold`` or follows a power law with positive exponent;
    ``satisfied`` when no such decay is seen and ``C0 >= threshold``;
    ``inconclusive`` otherwise.
    """
    if profile.n_samples == 0:
        raise DomainError("empty K profile")
    r, K = profile.r, profile.K
    if eta is not None:
        keep = r <= eta
        r, K = r[keep], K[keep]
        profile = KProfile(r, K, profile.n_flagged)
    C0 = float(K.min())
    alpha = fit_power_law(profile)
    sups = _window_sups(profile, N_WINDOWS)
    decaying = bool(np.all(sups[:-1] < sups[1:] * (1 - DECAY_MARGIN)))
    if decaying:
        if sups[0] < threshold or (math.isfinite(alpha) and alpha >= MIN_DECAY_SLOPE):
            verdict = VIOLATED
        else:
            verdict = INCONCLUSIVE
    elif C0 >= threshold:
        verdict = SATISFIED
    else:
        verdict = INCONCLUSIVE
    return verdict, C0, alpha


@dataclass(frozen=True)
class InfiniteOrderResult:
    """Outcome of the infinite-order test.

    ``status`` is ``"infinite"``, ``"finite"`` or ``"inconclusive"``;
    ``witness`` lists ``(m, r_m)`` with ``w(r_m) <= r_m**m`` (vanishing) or
    ``w(r_m) >= r_m**-m`` (blow-up), ``r_m`` strictly decreasing.
    """

    status: str
    witness: tuple = ()
    log_ratio_floor: float = float("nan")

    @property
    def flag(self) -> bool:
        return self.status == "infinite"


def infinite_order_detect(spec: weights.WeightSpec, weight_class: weights.WeightClass,
                          grid: Grid, m_max: int = 16) -> InfiniteOrderResult:
    """Look for ``r_m`` witnessing vanishing / blow-up of infinite order.

    The log ratio ``e(r) = log w / log r`` (W0) or ``log w / -log r`` (Winf) is
    scanned along the part of the grid below ``min(eta, 1) / 2``; ``r_m`` is
    the largest tail point below ``r_{m-1}`` with ``e(r_m) >= m``.  A complete
    witness counts only if ``e`` still grows over the lowest two decades of
    the grid, so a large but fixed order such as ``t**20`` reads as finite; an
    incomplete witness with ``e`` still growing is inconclusive.
    """
    if not weight_class.in_v:
        raise UnsupportedClassError(f"infinite order is defined on W0/Winf, got {weight_class}")
    pts = grid.points
    tail = pts[pts <= 0.5 * min(grid.eta, 1.0)]
    if tail.size < 2:
        return InfiniteOrderResult("inconclusive")
    logw = np.asarray(weights.log_value(spec, tail))
    sign = 1.0 if weight_class.tag == "W0" else -1.0
    e = logw / (sign * np.log(tail))
    witness = []
    upper = np.inf
    for m in range(1, m_max + 1):
        hits = np.flatnonzero((e >= m) & (tail < upper))
        if hits.size == 0:
            break
        r_m = float(tail[hits[-1]])
        witness.append((m, r_m))
        upper = r_m
    e_floor = float(e[0])
    e_up = float(e[min(np.searchsorted(tail, tail[0] * 100.0), tail.size - 1)])
    growing = e_floor - e_up > 0.1 * max(abs(e_floor), 1.0)
    if len(witness) == m_max:
        status = "infinite" if growing else "finite"
    else:
        status = "inconclusive" if growing else "finite"
    return InfiniteOrderResult(status, tuple(witness), e_floor)


def integrated_floor(env: EnvelopeResult, C0: float):
    """log of the power-law bound on v implied by ``K >= C0``.

    W0: ``v(r) >= v(eta) (r/eta)**(1/C0)``; Winf: ``v(r) <= v(eta) (r/eta)**(-1/C0)``.
    """
    pts = env.points
    slope = 1.0 / C0 if env.kind == "phi" else -1.0 / C0
    return env.log_v[-1] + slope * np.log(pts / pts[-1])


@dataclass(frozen=True, eq=False)
class NdcReport:
    profile: KProfile
    C0: float
    verdict: str
    fitted_alpha: float
    infinite_order: InfiniteOrderResult
    threshold: float = DEFAULT_THRESHOLD
    weight_class: weights.WeightClass | None = None
    extra: dict = field(default_factory=dict)

    @property
    def witness(self):
        return self.infinite_order.witness

    def to_dict(self):
        alpha = self.fitted_alpha
        return {
            "C0": self.C0,
            "verdict": self.verdict,
            "fitted_alpha": alpha if math.isfinite(alpha) else None,
            "infinite_order": self.infinite_order.flag,
            "infinite_order_status": self.infinite_order.status,
            "witness": [{"m": m, "r_m": r} for m, r in self.witness],
            "n_samples": self.profile.n_samples,
            "n_flagged": self.profile.n_flagged,
            "threshold": self.threshold,
            "class": str(self.weight_class) if self.weight_class else None,
        }


def analyze(spec: weights.WeightSpec, env: EnvelopeResult | None = None, grid: Grid | None = None,
            threshold: float = DEFAULT_THRESHOLD, m_max: int = 16) -> NdcReport:
    """K profile, NDC verdict and infinite-order test in one call."""
    if env is None:
        wclass = weights.classify(spec)
        env = compute_envelope(spec, wclass, grid or make_grid(spec), 1.0)
    wclass = env.weight_class or weights.classify(spec)
    profile = k_profile(spec, env)
    verdict, C0, alpha = ndc_check(profile, env.grid.eta, threshold)
    inf_order = infinite_order_detect(spec, wclass, env.grid, m_max)
    return NdcReport(profile, C0, verdict, alpha, inf_order, threshold, wclass)
