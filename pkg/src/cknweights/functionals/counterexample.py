"""The sequence ``U_j = A_j(rho) B_j(theta)`` along which the polar inequality fails.

After the change of variables ``rho = v(r)`` (W0) or ``rho = 1/v(r)`` (Winf)
both sides only see ``H(rho)``.  With ``rho = eps_j sigma`` the scalings
``A_j = A(rho/eps)/eps`` (W0) and ``A_j = eps A(rho/eps)`` (Winf) remove
``eps_j`` from everything except ``H(eps_j sigma)``.  The functionals are
therefore evaluated in ``sigma`` with ``log eps_j`` carried explicitly: for
non-doubling weights ``eps_j`` is far below the float64 range.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .. import weights
from ..envelope import EnvelopeResult, h_at_log_rho
from ..errors import DomainError, HypothesisError
from .angular import AngularProfile, Mollified, SingularPower, mollified
from .polar import PolarTestFunction
from .quadrature import DEFAULT_ORDER, QuadratureResult, composite_nodes, integrate
from .testfunctions import Bump

# panels across the support of A
A_PANELS = 64


def default_exponent(q: float) -> float:
    """``s = (1/q + 1)/2``: |theta|**-s is integrable but not q-integrable."""
    return 0.5 * (1.0 / q + 1.0)


def _radial_power(kind: str) -> float:
    # sigma**power is the radial measure of the transformed lhs
    return 1.0 if kind == "phi" else -1.0


def normalized_bump(env: EnvelopeResult) -> Bump:
    """Bump on ``(eta~/4, 3 eta~/4)`` with ``int |A'| sigma**(+-1) d sigma = 1``."""
    et = math.exp(env.log_rho_max)
    A = Bump(0.5 * et, 0.25 * et, 1.0)
    p = _radial_power(env.kind)
    mass = integrate(lambda s, _o: np.abs(A.derivative(s)) * s ** p,
                     np.linspace(*A.support, A_PANELS + 1)).value
    return Bump(A.center, A.half_width, 1.0 / mass)


def scale_integrals(A: Bump, kind: str, q: float) -> dict:
    """The two scale-invariant integrals of ``A``.

    W0: ``int |A'| rho d rho`` and ``int |A|**q rho**(q-1) d rho``;
    Winf: ``int |A'| rho**-1 d rho`` and ``int |A|**q rho**(-1-q) d rho``.
    """
    p = _radial_power(kind)
    breaks = np.linspace(*A.support, A_PANELS + 1)
    grad = integrate(lambda s, _o: np.abs(A.derivative(s)) * s ** p, breaks)
    expo = q - 1 if kind == "phi" else -1 - q
    mass = integrate(lambda s, _o: np.abs(A.value(s)) ** q * s ** expo, breaks)
    return {"grad": grad.value, "lq": mass.value}


def scaled_radial(A: Bump, kind: str, log_eps: float) -> Bump:
    """``A_j`` in the rho variable; needs ``eps`` to be representable."""
    eps = math.exp(log_eps)
    if eps == 0.0:
        raise DomainError(f"eps = exp({log_eps:g}) underflows; use the sigma-space functionals")
    height = A.height / eps if kind == "phi" else A.height * eps
    return A.scaled(eps, height)


@dataclass(frozen=True, eq=False)
class CounterexampleTerm:
    """One member ``U_j``: the angular profile, the rescaling and the base bump."""

    j: int
    log_eps: float
    angular: Mollified
    A: Bump
    kind: str
    lam: float  # int |Lambda B_j|
    params: dict = field(default_factory=dict)

    @property
    def eps_decimal(self) -> str:
        """``eps_j`` as a decimal string, exact in the exponent even after underflow."""
        e10 = self.log_eps / math.log(10.0)
        ex = math.floor(e10)
        mant = 10 ** (e10 - ex)
        if mant >= 9.9995:
            mant, ex = 1.0, ex + 1
        return f"{mant:.4f}e{ex:+d}"

    def polar(self) -> PolarTestFunction:
        """``U_j`` in transformed polar coordinates (only when eps is representable)."""
        return PolarTestFunction(scaled_radial(self.A, self.kind, self.log_eps), self.angular, 2)


def _moving_log_rho(env: EnvelopeResult, spec):
    moving = ~env.plateau_mask
    r = env.grid.centers[moving]
    K = np.asarray(weights.k_function(spec, r), dtype=float)
    L = np.asarray(env.log_value_at(r), dtype=float)
    if env.kind == "psi":
        L = -L
    order = np.argsort(L)
    return L[order], K[order]


def select_log_eps(env: EnvelopeResult, spec, lam: float, max_eps: float = 0.5) -> float:
    """Largest ``log eps`` with ``H(rho) * lam <= 1`` for every rho <= eps eta~.

    The sup of H is tracked as a running maximum over the moving cells of the
    grid; the crossing inside the last admissible cell is located with brentq.
    """
    target = 1.0 / lam
    L, K = _moving_log_rho(env, spec)
    if L.size == 0:
        raise HypothesisError("every grid cell is a plateau; H is undefined")
    finite = np.isfinite(K)
    K = np.where(finite, K, 0.0)
    running = np.maximum.accumulate(K)
    ok = running <= target
    if not ok[0]:
        raise HypothesisError(
            f"H does not drop below 1/{lam:.4g} anywhere on the grid; the limsup condition "
            "fails or the grid floor is too high")
    idx = int(np.argmin(ok)) if not ok.all() else L.size
    if idx == L.size:
        log_rho = env.log_rho_max
    else:
        lo, hi = L[idx - 1], L[idx]

        def g(lr):
            H, skipped = h_at_log_rho(env, spec, lr)
            return -target if skipped[0] else float(H[0]) - target

        log_rho = brentq(g, lo, hi, xtol=1e-12 * max(1.0, abs(lo))) if g(lo) * g(hi) < 0 else lo
    return min(log_rho - env.log_rho_max, math.log(max_eps))


def make_counterexample_sequence(env: EnvelopeResult, spec, q: float, j_max: int,
                                 A: Bump | None = None, s: float | None = None):
    """Terms ``j = 1..j_max`` of the divergent sequence.

    Requires a weight whose K tends to 0 near the origin.  ``s`` defaults to
    ``(1/q + 1)/2``.
    """
    if not q > 1:
        raise HypothesisError(f"the construction needs q > 1, got q = {q}")
    s = default_exponent(q) if s is None else s
    if not 1.0 / q < s < 1:
        raise DomainError(f"need 1/q < s < 1 so that B is in L^1 but not L^q, got s = {s}")
    A = normalized_bump(env) if A is None else A
    base = SingularPower(s)
    terms = []
    for j in range(1, j_max + 1):
        B = mollified(base, j)
        lam = B.total_variation()
        log_eps = select_log_eps(env, spec, lam)
        terms.append(CounterexampleTerm(j, log_eps, B, A, env.kind, lam,
                                        {"s": s, "width": B.width}))
    return terms


def _h_of_sigma(env, spec, log_eps, sigma):
    H, skipped = h_at_log_rho(env, spec, log_eps + np.log(sigma))
    return np.where(skipped, 0.0, H), int(skipped.sum())


def transformed_lhs(A, B: AngularProfile, H, kind: str, split: int = 1):
    """``int dS int ((A' B)**2 + H**2 (A Lambda B)**2 / sigma**2)**(1/2) sigma**(+-1) d sigma``.

    ``H`` is an array aligned with the sigma nodes of the composite rule on
    ``A_PANELS`` panels (see :func:`sigma_nodes`).
    """
    sig, ws, _ = sigma_nodes(A, split)
    th, wt = B.quadrature()
    a, da = A.value(sig), A.derivative(sig)
    b, db = B.value(th), B.derivative(th)
    dens = np.hypot(da[:, None] * b[None, :], (H * a / sig)[:, None] * db[None, :])
    meas = sig ** _radial_power(kind)
    return float((ws * meas) @ dens @ wt)


def sigma_nodes(A, split: int = 1):
    return composite_nodes(np.linspace(*A.support, A_PANELS + 1), DEFAULT_ORDER, split)


def term_lhs(term: CounterexampleTerm, env, spec) -> QuadratureResult:
    vals = []
    n = 0
    for split in (1, 2):
        sig, _, _ = sigma_nodes(term.A, split)
        H, _ = _h_of_sigma(env, spec, term.log_eps, sig)
        vals.append(transformed_lhs(term.A, term.angular, H, term.kind, split))
        n += sig.size * term.angular.quadrature()[0].size
    return QuadratureResult(vals[1], abs(vals[1] - vals[0]), n)


def term_rhs(term: CounterexampleTerm, q: float) -> QuadratureResult:
    """``(int |B_j|**q dS * int |A|**q q sigma**(q-1) d sigma)**(1/q)`` (W0; Winf uses sigma**(-q-1))."""
    radial = q * scale_integrals(term.A, term.kind, q)["lq"]
    val = (term.angular.lq_power(q) * radial) ** (1.0 / q)
    return QuadratureResult(val, 0.0, 0)


def lhs_bound(term: CounterexampleTerm, env, spec) -> float:
    """Upper bound for :func:`term_lhs` from ``(a**2 + b**2)**(1/2) <= sqrt(2) (a + b)``.

    Gradient part: ``int |A'| sigma**p * int |B_j|``; angular part:
    ``int |A| sigma**(p-1) * sup H * int |Lambda B_j|``, with ``p = +1``
    (W0) or ``-1`` (Winf) and the sup of H sampled on the quadrature nodes.
    """
    sig, ws, _ = sigma_nodes(term.A, 2)
    H, _ = _h_of_sigma(env, spec, term.log_eps, sig)
    p = _radial_power(term.kind)
    grad = float(ws @ (np.abs(term.A.derivative(sig)) * sig ** p))
    mass_b = term.angular.integrate(lambda b, _db: np.abs(b))
    second = float(ws @ (np.abs(term.A.value(sig)) * sig ** (p - 1))) * float(H.max()) * term.lam
    return math.sqrt(2.0) * (grad * mass_b + second)
