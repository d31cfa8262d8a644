"""The built-in weight battery used by the property checks and the CLI."""
from __future__ import annotations

import numpy as np

from . import weights as W


def power_table(gamma: float = 1.0, eta: float = 1.0, r_min_ratio: float = 1e-8, count: int = 4096):
    """Tabulated samples of ``t**gamma`` on a log-uniform knot set."""
    knots = np.geomspace(r_min_ratio * eta, eta, count)
    return W.table(knots, knots ** gamma, eta=eta)


def wiggle_table(eta: float = 1.0, count: int = 4096):
    """Non-monotone W0 table: ``t**2 (1 + 0.5 sin(8 pi t))``."""
    knots = np.geomspace(1e-8 * eta, eta, count)
    return W.table(knots, knots ** 2 * (1 + 0.5 * np.sin(8 * np.pi * knots / eta)), eta=eta)


def builtin_battery(eta: float = 1.0, include_tables: bool = True):
    """Named weights covering every family, both classes and plateau cases."""
    items = [(f"pow({g:g})", W.power(g, eta)) for g in (0.5, -0.5, 1.0, -1.0, 2.0, -2.0)]
    items += [(f"expinv({a:g},{'+' if s > 0 else '-'})", W.exp_inv_power(s, a, eta))
              for a in (0.5, 1.0, 2.0) for s in (-1, 1)]
    items += [
        ("scale(3,pow(2))", W.scale(3.0, W.power(2.0, eta))),
        ("prod(pow(1),pow(1))", W.product(W.power(1.0, eta), W.power(1.0, eta))),
        ("prod(pow(1),expinv(1,-))", W.product(W.power(1.0, eta), W.exp_inv_power(-1, 1.0, eta))),
        ("prod(pow(2),expinv(1,+))", W.product(W.power(2.0, eta), W.exp_inv_power(1, 1.0, eta))),
    ]
    if include_tables:
        items += [("table[pow(1)]", power_table(1.0, eta)), ("table[wiggle]", wiggle_table(eta))]
    return items
