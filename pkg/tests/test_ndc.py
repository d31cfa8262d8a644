import math

import numpy as np
import pytest

from cknweights import ndc
from cknweights import weights as W
from cknweights.battery import builtin_battery, power_table
from cknweights.envelope import compute_envelope, make_grid
from cknweights.ndc import (INCONCLUSIVE, SATISFIED, VIOLATED, KProfile, analyze, fit_power_law,
                            infinite_order_detect, integrated_floor, k_profile, ndc_check)

BATTERY = builtin_battery()


def profile_of(spec):
    return k_profile(spec, compute_envelope(spec, grid=make_grid(spec)))


# -- k_profile ---------------------------------------------------------------

def test_k_square_power():
    # [PAPER] K = 1/gamma
    assert np.allclose(profile_of(W.power(2.0)).K, 0.5, rtol=1e-12)


def test_k_exp_inv_is_r():
    # [DERIVED] K = r^alpha / alpha = r
    spec = W.exp_inv_power(-1, 1.0)
    prof = profile_of(spec)
    assert np.allclose(prof.K, prof.r, rtol=1e-12)
    assert W.k_function(spec, 0.25) == pytest.approx(0.25, rel=1e-14)


def test_k_inverse_power():
    # [PAPER] K = -1/gamma
    assert np.allclose(profile_of(W.power(-1.0)).K, 1.0, rtol=1e-12)


@pytest.mark.parametrize("gamma", [0.5, -0.5, 1.0, -1.0, 2.0, -2.0])
def test_k_power_symbolic(gamma):
    assert np.allclose(profile_of(W.power(gamma)).K, 1 / abs(gamma), rtol=1e-6)


@pytest.mark.parametrize("gamma", [0.5, -0.5, 1.0, -1.0, 2.0, -2.0])
def test_k_power_table(gamma):
    # slopes of a linear interpolant of t**gamma on a 4096-point log grid
    prof = profile_of(power_table(gamma))
    assert np.allclose(prof.K, 1 / abs(gamma), rtol=1e-3)


def test_flat_cells_are_flagged():
    spec = W.table([0.1, 0.2, 0.3, 1.0], [1.0, 2.0, 2.0, 3.0])
    prof = profile_of(spec)
    assert prof.n_flagged > 0
    assert np.all(np.isfinite(prof.K))


# -- fitted law -----------------------------------------------------------------

@pytest.mark.parametrize("alpha", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("sign", [-1, 1])
def test_exp_inv_k_law(alpha, sign):
    spec = W.exp_inv_power(sign, alpha)
    prof = profile_of(spec)
    slope = fit_power_law(prof)
    assert slope == pytest.approx(alpha, rel=0.05)
    # ln(K / r^alpha) -> -ln alpha, read off at the bottom of the grid
    i = np.argmin(prof.r)
    lead = math.log(prof.K[i] / prof.r[i] ** alpha)
    assert lead == pytest.approx(-math.log(alpha), abs=0.05 * max(1.0, abs(math.log(alpha))))


# -- verdicts --------------------------------------------------------------------

def test_identity_weight_satisfies():
    # [PAPER] K = 1/gamma = 1
    verdict, C0, _ = ndc_check(profile_of(W.power(1.0)), 1.0)
    assert verdict == SATISFIED and C0 == pytest.approx(1.0)


def test_exp_inv_violates():
    # [DERIVED] K(r) = r decreases to the grid floor
    spec = W.exp_inv_power(-1, 1.0)
    prof = profile_of(spec)
    verdict, C0, _ = ndc_check(prof, 1.0)
    assert verdict == VIOLATED
    assert C0 == pytest.approx(prof.r.min(), rel=1e-12)
    assert C0 < 1e-7


def test_constant_profile_satisfies():
    # [TRIVIAL] constant profile
    r = np.geomspace(1e-8, 1, 200)
    verdict, C0, _ = ndc_check(KProfile(r, np.full_like(r, 0.5)), 1.0)
    assert (verdict, C0) == (SATISFIED, 0.5)


def test_oscillating_profile_is_inconclusive():
    # inf K = 0 along a sequence while the sup near 0 stays put
    r = np.geomspace(1e-8, 1, 4000)
    K = 0.5 * (1 + np.cos(40 * np.log(r))) + 1e-9
    verdict, C0, _ = ndc_check(KProfile(r, K), 1.0)
    assert verdict == INCONCLUSIVE
    assert C0 < 1e-6


def test_verdict_satisfied_implies_threshold():
    for name, spec in BATTERY:
        rep = analyze(spec)
        if rep.verdict == SATISFIED:
            assert rep.C0 >= rep.threshold, name


# -- infinite order ----------------------------------------------------------------

def io(spec):
    return infinite_order_detect(spec, W.classify(spec), make_grid(spec))


def test_exp_inv_has_infinite_order():
    # [DERIVED] ln w / ln r = (1/r)/(-ln r) grows without bound
    res = io(W.exp_inv_power(-1, 1.0))
    assert res.flag
    rs = [r for _, r in res.witness]
    assert len(rs) == 16 and all(a > b for a, b in zip(rs, rs[1:]))
    for m, r in res.witness:
        assert W.log_value(W.exp_inv_power(-1, 1.0), r) <= m * math.log(r)


def test_power_has_finite_order():
    # [TRIVIAL] fixed polynomial order
    res = io(W.power(3.0))
    assert not res.flag
    assert res.log_ratio_floor == pytest.approx(3.0)


def test_blow_up_branch_infinite_order():
    # [DERIVED] -ln w / -ln r = r^{-1/2} / (-ln r) -> inf
    assert io(W.exp_inv_power(1, 0.5)).flag


def test_high_fixed_order_is_finite():
    assert not io(W.power(20.0)).flag


def test_infinite_order_never_satisfied_on_battery():
    for name, spec in BATTERY:
        rep = analyze(spec)
        if rep.infinite_order.flag:
            assert rep.verdict != SATISFIED, name
            assert rep.witness


# -- integrated bound -------------------------------------------------------------

def test_integrated_bound_when_satisfied():
    checked = 0
    for name, spec in BATTERY:
        rep = analyze(spec)
        if rep.verdict != SATISFIED:
            continue
        env = compute_envelope(spec, grid=make_grid(spec))
        floor = integrated_floor(env, rep.C0)
        # W0: v above the floor; Winf: v below the ceiling (1% relative)
        if env.kind == "phi":
            assert np.all(env.log_v >= floor + math.log(0.99)), name
        else:
            assert np.all(env.log_v <= floor + math.log(1.01)), name
        checked += 1
    assert checked >= 6


def test_report_dict_shape():
    d = analyze(W.exp_inv_power(-1, 1.0)).to_dict()
    for key in ("C0", "verdict", "fitted_alpha", "witness", "n_samples", "n_flagged"):
        assert key in d
    assert d["verdict"] == VIOLATED
    assert d["infinite_order"] is True
