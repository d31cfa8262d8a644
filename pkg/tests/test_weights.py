import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from cknweights import weights as W
from cknweights.battery import builtin_battery
from cknweights.errors import DomainError, SpecError

BUILTINS = [s for name, s in builtin_battery(include_tables=False)]


# -- evaluate ---------------------------------------------------------------

def test_identity_weight_value():
    # [TRIVIAL] identity weight
    assert W.evaluate(W.power(1.0), 0.5) == 0.5


def test_exp_inv_value_matches_direct_exponential():
    # [DERIVED] e^{-1/t} at t = 0.5
    assert W.evaluate(W.exp_inv_power(-1, 1.0), 0.5) == pytest.approx(math.exp(-2.0), rel=1e-15)
    assert W.evaluate(W.exp_inv_power(-1, 1.0), 0.5) == pytest.approx(0.135335, abs=1e-6)


def test_constant_table_value():
    # [TRIVIAL] constant table
    spec = W.table([0.1, 1.0], [2.0, 2.0])
    assert W.evaluate(spec, 0.5) == 2.0


def test_table_interpolates_linearly():
    spec = W.table([0.1, 0.5, 1.0], [1.0, 3.0, 2.0])
    assert W.evaluate(spec, 0.3) == pytest.approx(2.0)
    assert W.evaluate(spec, 0.75) == pytest.approx(2.5)


@pytest.mark.parametrize("t", [0.0, -0.1, 1.5])
def test_out_of_domain_is_domain_error(t):
    with pytest.raises(DomainError):
        W.evaluate(W.power(1.0), t)


def test_table_outside_knots_is_domain_error():
    spec = W.table([0.1, 1.0], [2.0, 2.0])
    with pytest.raises(DomainError):
        W.evaluate(spec, 0.05)


@pytest.mark.parametrize("knots, values", [
    ([0.1, 0.1, 1.0], [1, 2, 3]),
    ([0.1, 1.0], [1.0, -1.0]),
    ([0.1, 1.0], [1.0]),
    ([-0.1, 1.0], [1.0, 1.0]),
])
def test_bad_tables_rejected(knots, values):
    with pytest.raises((SpecError, DomainError)):
        W.table(knots, values)


def test_bad_parameters_rejected():
    with pytest.raises((SpecError, DomainError)):
        W.power(0.0)
    with pytest.raises((SpecError, DomainError)):
        W.exp_inv_power(-1, -1.0)
    with pytest.raises((SpecError, DomainError)):
        W.scale(-2.0, W.power(1.0))


def test_evaluate_is_deterministic():
    ts = np.geomspace(1e-3, 1.0, 101)
    for spec in BUILTINS:
        a = np.asarray(W.evaluate(spec, ts))
        b = np.asarray(W.evaluate(spec, ts))
        assert a.tobytes() == b.tobytes()


# -- derivative -----------------------------------------------------------------

def test_square_derivative():
    # [TRIVIAL] d(t^2)/dt = 2t
    assert W.derivative(W.power(2.0), 0.5) == pytest.approx(1.0, rel=1e-15)


def test_exp_inv_derivative_symbolic():
    # [DERIVED] w' = t^-2 e^{-1/t}
    assert W.derivative(W.exp_inv_power(-1, 1.0), 0.5) == pytest.approx(4 * math.exp(-2.0), rel=1e-14)
    assert W.derivative(W.exp_inv_power(-1, 1.0), 0.5) == pytest.approx(0.541341, abs=1e-6)


def test_product_rule_against_central_difference():
    # [DERIVED] product rule on t^2, cross-checked by a central difference
    spec = W.product(W.power(1.0), W.power(1.0))
    t, h = 0.3, 1e-6
    fd = (W.evaluate(spec, t + h) - W.evaluate(spec, t - h)) / (2 * h)
    assert W.derivative(spec, 0.3) == pytest.approx(0.6, rel=1e-14)
    assert fd == pytest.approx(0.6, rel=1e-8)


def test_table_derivative_is_right_slope_at_knots():
    spec = W.table([0.1, 0.5, 1.0], [1.0, 3.0, 2.0])
    assert W.derivative(spec, 0.5) == pytest.approx(-2.0)
    assert W.derivative(spec, 0.3) == pytest.approx(5.0)


@pytest.mark.parametrize("spec", BUILTINS, ids=[n for n, _ in builtin_battery(include_tables=False)])
def test_derivative_matches_finite_difference(spec):
    rng = np.random.default_rng(7)
    lo = 0.05 if W.classify(spec).tag == "Winf" else 0.02
    for t in rng.uniform(lo, 0.99, 100):
        h = 1e-6 * t
        fd = (W.evaluate(spec, t + h) - W.evaluate(spec, t - h)) / (2 * h)
        d = W.derivative(spec, t)
        assert abs(d - fd) <= 1e-5 * (1 + abs(d))


@given(st.floats(0.01, 0.99), st.sampled_from(BUILTINS))
def test_log_derivative_consistent(t, spec):
    w, d, dl = W.evaluate(spec, t), W.derivative(spec, t), W.log_derivative(spec, t)
    assume(w > 1e-300 and math.isfinite(w))
    assert dl == pytest.approx(d / w, rel=1e-10, abs=1e-300)
    assert W.log_value(spec, t) == pytest.approx(math.log(w), rel=1e-12, abs=1e-12)


def test_log_value_survives_underflow():
    spec = W.exp_inv_power(-1, 1.0)
    assert W.evaluate(spec, 1e-4) == 0.0
    assert W.log_value(spec, 1e-4) == pytest.approx(-1e4)


# -- classify -----------------------------------------------------------------------

def test_classify_power_vanishing():
    # [PAPER] t^1.5 is in W0
    assert W.classify(W.power(1.5)) == W.W0


def test_classify_exp_blow_up():
    # [PAPER] e^{r^-2} is in Winf
    assert W.classify(W.exp_inv_power(1, 2.0)) == W.WINF


def test_classify_constant_table():
    # [TRIVIAL] constant weight
    c = W.classify(W.table([0.1, 1.0], [2.0, 2.0]))
    assert c.tag == "Wa" and c.a == pytest.approx(2.0)


@pytest.mark.parametrize("gamma", [0.5, -0.5, 1.0, -1.0, 2.0, -2.0])
def test_classify_power_sign(gamma):
    expected = W.W0 if gamma > 0 else W.WINF
    assert W.classify(W.power(gamma)) == expected


def test_classify_products_use_limit_algebra():
    # exponential factor dominates any power
    assert W.classify(W.product(W.power(-5.0), W.exp_inv_power(-1, 0.5))) == W.W0
    assert W.classify(W.product(W.power(5.0), W.exp_inv_power(1, 0.5))) == W.WINF
    # the larger exponent wins between exponential factors
    assert W.classify(W.product(W.exp_inv_power(1, 1.0), W.exp_inv_power(-1, 2.0))) == W.W0
    # cancelling powers leave the scale factor
    c = W.classify(W.scale(3.0, W.product(W.power(1.0), W.power(-1.0))))
    assert c.tag == "Wa" and c.a == pytest.approx(3.0)


def test_classify_tables_by_probe():
    t = np.geomspace(1e-6, 1.0, 400)
    assert W.classify(W.table(t, t)) == W.W0
    assert W.classify(W.table(t, 1 / t)) == W.WINF
    osc = 2 + np.sin(np.log(t) * 3)
    assert W.classify(W.table(t, osc)).tag == "unknown"


def test_k_function_values():
    assert W.k_function(W.power(2.0), 0.3) == pytest.approx(0.5)
    assert W.k_function(W.exp_inv_power(-1, 1.0), 0.25) == pytest.approx(0.25)
    assert W.k_function(W.power(-1.0), 0.7) == pytest.approx(1.0)
    assert math.isinf(W.k_function(W.table([0.1, 1.0], [2.0, 2.0]), 0.5))


def test_to_string_round_trip():
    from cknweights.weightlang import parse_weight
    for name, spec in builtin_battery(include_tables=False):
        assert parse_weight(W.to_string(spec)) == spec
