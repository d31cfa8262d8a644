"""Quotients, verdicts and best-constant estimates built on the functionals.

Every evaluation is turned into a :class:`QuotientReport` comparing
``lhs / rhs`` with the constant the theory guarantees.  A report passes when
``quotient >= theory * (1 - rel_tol) - 3 * est_error``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import roots_jacobi

from . import ndc, weights
from .envelope import EnvelopeResult, compute_envelope, make_grid
from .errors import DomainError, HypothesisError
from .functionals.angular import Constant, Trig
from .functionals.counterexample import make_counterexample_sequence, term_lhs, term_rhs
from .functionals.onedim import lhs_1d, rhs_1d
from .functionals.polar import PolarTestFunction, lhs_polar, rhs_polar, sphere_area
from .functionals.quadrature import QuadratureResult
from .functionals.testfunctions import PiecewiseLinear, TestFunction1D, make_localized_family

REL_TOL = 1e-3
ERROR_FACTOR = 3.0
DEFAULT_H_SWEEP = (1e-1, 1e-2, 1e-3, 1e-4)
DEFAULT_EPS_SWEEP = (1e-1, 3e-2, 1e-2, 3e-3, 1e-3)


@dataclass(frozen=True)
class SharpConstants:
    """``omega_n``, ``S_{1,q} = omega_n**(1-1/q) q**(1/q)`` and the radial constant."""

    n: int
    q: float
    gamma: float | None = None

    def __post_init__(self):
        if self.n < 1 or not self.q >= 1:
            raise DomainError(f"need n >= 1 and q >= 1, got n={self.n}, q={self.q}")
        if self.tau_1q > 1.0 / self.n + 1e-15:
            raise DomainError(f"1 - 1/q = {self.tau_1q:g} exceeds 1/n = {1 / self.n:g}")
        if self.gamma is not None and self.gamma == 0:
            raise DomainError("gamma must be nonzero")

    @property
    def omega_n(self) -> float:
        return sphere_area(self.n)

    @property
    def tau_1q(self) -> float:
        return 1.0 - 1.0 / self.q

    @property
    def S_1q(self) -> float:
        return self.omega_n ** self.tau_1q * self.q ** (1.0 / self.q)

    @property
    def S_rad(self) -> float:
        if self.gamma is None:
            raise DomainError("the radial constant needs gamma")
        return self.S_1q * abs(self.gamma) ** (1.0 - self.tau_1q)

    def to_dict(self):
        out = {"n": self.n, "q": self.q, "omega_n": self.omega_n, "S_1q": self.S_1q,
               "tau_1q": self.tau_1q}
        if self.gamma is not None:
            out.update(gamma=self.gamma, S_rad=self.S_rad)
        return out


@dataclass(frozen=True)
class QuotientReport:
    lhs: float
    rhs: float
    quotient: float
    est_error: float
    theory_constant: float
    theory_source: str
    params: dict = field(default_factory=dict)
    passed: bool = True

    def to_dict(self):
        return {"lhs": self.lhs, "rhs": self.rhs,
                "quotient": None if math.isinf(self.quotient) else self.quotient,
                "quotient_infinite": math.isinf(self.quotient),
                "est_error": self.est_error, "theory_constant": self.theory_constant,
                "theory_source": self.theory_source, "params": self.params, "pass": self.passed}


def make_report(lhs: QuadratureResult, rhs: QuadratureResult, theory: float, source: str,
                params: dict, rel_tol: float = REL_TOL) -> QuotientReport:
    """Quotient with first-order error propagation and the pass rule."""
    if rhs.value <= 0:
        q, err = math.inf, 0.0
    else:
        q = lhs.value / rhs.value
        err = q * (lhs.est_error / lhs.value if lhs.value > 0 else 0.0) + q * rhs.est_error / rhs.value
    passed = q >= theory * (1 - rel_tol) - ERROR_FACTOR * err
    return QuotientReport(lhs.value, rhs.value, q, err, theory, source, params, bool(passed))


def theory_constant(n: int, q: float, C0: float | None = None) -> float:
    """1 in one dimension; ``min(C0, 1) omega_n**(1-1/q)`` for n >= 2."""
    if n == 1:
        return 1.0
    if C0 is None:
        raise DomainError("the n >= 2 constant needs C0")
    return min(C0, 1.0) * SharpConstants(n, q).S_1q * q ** (-1.0 / q)


def _ensure_env(spec, env, q, grid=None):
    if env is not None:
        if not math.isclose(env.q, q):
            raise DomainError(f"envelope carries q={env.q}, requested q={q}")
        return env
    return compute_envelope(spec, None, grid or make_grid(spec, truncation=_truncation(spec)), q)


def _truncation(spec):
    return 1e3 if math.isinf(spec.eta) else None


def quotient_1d(u: TestFunction1D, spec, env: EnvelopeResult, q: float, params=None) -> QuotientReport:
    return make_report(lhs_1d(u, spec), rhs_1d(u, env, q), 1.0, "1d-validity",
                       dict(params or u.params))


def quotient_polar(U: PolarTestFunction, spec, env: EnvelopeResult, q: float, theory: float,
                   params=None) -> QuotientReport:
    return make_report(lhs_polar(U, spec), rhs_polar(U, env, q, U.n), theory, "ndc-polar",
                       dict(params or U.params()))


def _localized_members(env: EnvelopeResult):
    pts = env.points
    r_min, eta = float(pts[0]), float(pts[-1])
    x = math.sqrt(r_min * eta) if r_min > 1e-3 * eta else 0.5 * eta
    out = []
    for rel_h in (1e-2, 1e-3):
        h = rel_h * x
        try:
            u = make_localized_family(env, x, h)
        except DomainError:
            continue
        out.append(u)
    return out


def check_polar_preconditions(n: int, q: float, report: ndc.NdcReport | None):
    if n < 2:
        raise DomainError("polar checks need n >= 2")
    if not 1 <= q <= n / (n - 1) + 1e-15:
        raise HypothesisError(f"need 1 <= q <= n/(n-1) = {n / (n - 1):g}, got q = {q}")
    if q > 1 and (report is None or report.verdict != ndc.SATISFIED):
        verdict = report.verdict if report is not None else "unknown"
        raise HypothesisError(f"hypothesis not met: NDC must be satisfied for q > 1 (verdict {verdict})")


def verify_battery(spec: weights.WeightSpec, env: EnvelopeResult | None, q: float, n: int = 1,
                   battery_size: int = 50, seed: int = 0, ndc_report: ndc.NdcReport | None = None,
                   include_localized: bool = True) -> list[QuotientReport]:
    """Quotients on seeded random test functions plus the localized family.

    ``n = 1`` compares against 1.  For ``n >= 2`` the weight must satisfy the
    NDC when ``q > 1`` and ``q <= n/(n-1)``; the reference is
    ``min(C0, 1) omega_n**(1-1/q)``.  For ``n = 2`` every other random
    function carries a trigonometric angular factor.
    """
    if battery_size < 0:
        raise DomainError("battery_size must be >= 0")
    env = _ensure_env(spec, env, q)
    rng = np.random.default_rng(seed)
    pts = env.points
    lo, hi = float(pts[0]) * 1.001, float(pts[-1]) * 0.999
    dlo, dhi = spec.domain()
    lo, hi = max(lo, dlo * 1.001), min(hi, dhi * 0.999)
    radial = [PiecewiseLinear.random(rng, lo, hi, int(rng.integers(3, 12))) for _ in range(battery_size)]
    if include_localized:
        radial += _localized_members(env)

    if n == 1:
        return [quotient_1d(u, spec, env, q) for u in radial]

    if ndc_report is None and q > 1:
        ndc_report = ndc.analyze(spec, grid=env.grid)
    check_polar_preconditions(n, q, ndc_report)
    C0 = ndc_report.C0 if ndc_report is not None else ndc.analyze(spec, grid=env.grid).C0
    theory = theory_constant(n, q, C0)
    reports = []
    for i, u in enumerate(radial):
        if n == 2 and i % 2 == 1 and u.params.get("family") == "random":
            B = Trig(1.0, float(rng.uniform(-0.9, 0.9)), int(rng.integers(1, 5)))
        else:
            B = Constant(1.0)
        U = PolarTestFunction(u, B, n)
        reports.append(quotient_polar(U, spec, env, q, theory))
    return reports


def _no_decay_at_infinity(spec, x, T) -> bool:
    return weights.log_value(spec, T) > weights.log_value(spec, x) - math.log(100.0)


def estimate_best_constant_1d(spec: weights.WeightSpec, env: EnvelopeResult | None, q: float,
                              h_sweep=DEFAULT_H_SWEEP, x: float | None = None,
                              truncation: float = 1e3):
    """Run the localized family over ``h_sweep`` at a fixed ``x``.

    Returns ``(inf_quotient, reports)``.  The decreasing branch needs
    ``eta = inf`` (truncated at ``truncation``) and ``w -> 0`` at infinity.
    Windows meeting a plateau are skipped.
    """
    wclass = weights.classify(spec)
    if wclass.tag == "Winf":
        if math.isfinite(spec.eta):
            raise HypothesisError("the decreasing branch is sharp only for eta = inf")
        x = 1.0 if x is None else x
        if _no_decay_at_infinity(spec, x, truncation):
            raise HypothesisError("the decreasing branch needs w -> 0 at infinity")
    if env is None:
        env = compute_envelope(spec, wclass, make_grid(spec, truncation=truncation), q)
    if x is None:
        x = 0.5 * env.grid.eta
    reports = []
    for h in h_sweep:
        u = make_localized_family(env, x, h)
        if u.params["plateau"]:
            continue
        reports.append(make_report(lhs_1d(u, spec), rhs_1d(u, env, q), 1.0, "1d-sharp",
                                   {"x": x, "h": h}))
    if not reports:
        raise DomainError("every window of the sweep meets a plateau")
    return min(r.quotient for r in reports), reports


# -- radial CKN functional ----------------------------------------------------

def _power_integral(x, y, p):
    """``int_x^y r**(p-1) dr``."""
    return math.log(y / x) if p == 0 else (y ** p - x ** p) / p


def _ramp_integral(a, b, rising: bool, q, p, order):
    """``int_a^b u**q r**(p-1) dr`` for the linear ramp between 0 and 1."""
    x, w = roots_jacobi(order, 0.0, q)  # weight (1 + x)**q on [-1, 1]
    u = 0.5 * (1 + x)
    r = a + (b - a) * u if rising else b - (b - a) * u
    return float((b - a) * 0.5 ** (q + 1) * np.dot(w, r ** (p - 1)))


def radial_quotient(n: int, q: float, gamma: float, eps: float, inner: float = 1e-6,
                    outer: float = 1e6, order: int = 16) -> QuotientReport:
    """``E^{1,q;gamma}`` of a smoothed indicator of the unit ball (or its complement).

    For ``gamma > 0`` the profile is 1 on ``[2 inner, 1 - eps]`` with linear
    ramps on ``[inner, 2 inner]`` and ``[1 - eps, 1]``; for ``gamma < 0`` it is
    1 on ``[1 + eps, outer]`` with ramps on ``[1, 1 + eps]`` and
    ``[outer, 2 outer]``.  Plateau integrals are closed form; ramps use
    Gauss-Jacobi so that ``u**q`` is integrated exactly in ``u``.
    """
    const = SharpConstants(n, q, gamma)
    om = const.omega_n
    g = gamma
    if g > 0:
        ramps = [(inner, 2 * inner, True), (1 - eps, 1.0, False)]
        plateau = (2 * inner, 1 - eps)
    else:
        ramps = [(1.0, 1 + eps, True), (outer, 2 * outer, False)]
        plateau = (1 + eps, outer)
    num = sum(_power_integral(a, b, g + 1) / (b - a) for a, b, _ in ramps)

    def denom(order_):
        body = _power_integral(*plateau, g * q)
        body += sum(_ramp_integral(a, b, up, q, g * q, order_) for a, b, up in ramps)
        return body

    d1, d2 = denom(order), denom(2 * order)
    lhs = QuadratureResult(om * num, 0.0, 0)
    rhs_val = (om * d2) ** (1 / q)
    rhs_err = rhs_val * abs(d2 - d1) / (q * d2)
    return make_report(lhs, QuadratureResult(rhs_val, rhs_err, 3 * order * len(ramps)),
                       const.S_rad, "radial-ckn", {"n": n, "q": q, "gamma": gamma, "eps": eps})


def estimate_best_constant_radial(n: int, q: float, gamma: float, profile_sweep=DEFAULT_EPS_SWEEP):
    """Smallest ``E^{1,q;gamma}`` over smoothed indicators; returns ``(inf, reports)``."""
    if gamma == 0:
        raise DomainError("gamma must be nonzero")
    SharpConstants(n, q, gamma)  # validates the exponent constraint
    reports = [radial_quotient(n, q, gamma, float(e)) for e in profile_sweep]
    return min(r.quotient for r in reports), reports


# -- counterexample -----------------------------------------------------------

@dataclass(frozen=True)
class CounterexampleRow:
    j: int
    log_eps: float
    eps: str
    lhs: float
    lhs_error: float
    rhs: float
    quotient: float
    lam: float

    def to_dict(self):
        return {"j": self.j, "eps_j": self.eps, "log_eps_j": self.log_eps, "lhs": self.lhs,
                "lhs_error": self.lhs_error, "rhs": self.rhs, "quotient": self.quotient,
                "angular_variation": self.lam}


@dataclass(frozen=True)
class CounterexampleTable:
    rows: tuple
    q: float
    s: float
    branch: str

    @property
    def rhs_increasing(self) -> bool:
        r = [row.rhs for row in self.rows]
        return all(b > a for a, b in zip(r, r[1:]))

    @property
    def quotient_decreasing(self) -> bool:
        r = [row.quotient for row in self.rows]
        return all(b < a for a, b in zip(r, r[1:]))

    @property
    def lhs_spread(self) -> float:
        lhs = [row.lhs for row in self.rows]
        return max(lhs) / min(lhs)

    @property
    def rhs_growth(self) -> float:
        return self.rows[-1].rhs / self.rows[0].rhs

    @property
    def diverges(self) -> bool:
        return self.rhs_increasing and self.quotient_decreasing

    def to_dict(self):
        return {"q": self.q, "s": self.s, "branch": self.branch,
                "rows": [r.to_dict() for r in self.rows],
                "rhs_increasing": self.rhs_increasing,
                "quotient_decreasing": self.quotient_decreasing,
                "lhs_spread": self.lhs_spread, "rhs_growth": self.rhs_growth}


def run_counterexample(spec: weights.WeightSpec, env: EnvelopeResult | None, q: float,
                       j_max: int = 8, n: int = 2, ndc_report: ndc.NdcReport | None = None,
                       s: float | None = None) -> CounterexampleTable:
    """Evaluate the transformed functionals along the divergent sequence."""
    if n != 2:
        raise HypothesisError(f"the construction is implemented for n = 2, got n = {n}")
    if not 1 < q <= 2:
        raise HypothesisError(f"need 1 < q <= 2, got q = {q}")
    if j_max < 1:
        raise DomainError("j_max must be >= 1")
    env = _ensure_env(spec, env, q)
    if ndc_report is None:
        ndc_report = ndc.analyze(spec, grid=env.grid)
    if ndc_report.verdict != ndc.VIOLATED:
        label = "NDC satisfied" if ndc_report.verdict == ndc.SATISFIED else f"verdict {ndc_report.verdict}"
        raise HypothesisError(f"hypothesis not met: {label}")
    terms = make_counterexample_sequence(env, spec, q, j_max, s=s)
    rows = []
    for t in terms:
        lhs, rhs = term_lhs(t, env, spec), term_rhs(t, q)
        rows.append(CounterexampleRow(t.j, t.log_eps, t.eps_decimal, lhs.value, lhs.est_error,
                                      rhs.value, lhs.value / rhs.value, t.lam))
    return CounterexampleTable(tuple(rows), q, terms[0].params["s"], env.kind)
