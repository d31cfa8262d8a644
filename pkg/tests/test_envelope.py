import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cknweights import weights as W
from cknweights.battery import builtin_battery
from cknweights.envelope import (Grid, compute_envelope, envelope_from_log_samples,
                                 envelope_from_samples, h_profile, inverse_map, make_grid)
from cknweights.errors import DomainError, PlateauImageError, UnsupportedClassError

BATTERY = builtin_battery()
IDS = [n for n, _ in BATTERY]


def env_of(spec, q=1.0, count=4096):
    return compute_envelope(spec, grid=make_grid(spec, count), q=q)


@pytest.fixture(scope="module")
def envelopes():
    return {(name, q): env_of(spec, q) for name, spec in BATTERY for q in (1.0, 1.5, 2.0)}


def test_increasing_weight_is_its_own_envelope():
    # [TRIVIAL] envelope of a monotone w is w
    env = env_of(W.power(1.0))
    assert np.allclose(env.v, env.points, rtol=1e-14)
    assert not env.plateau_mask.any()


def test_four_point_suffix_minimum():
    # [DERIVED] brute-force suffix minimum over s >= t
    w = np.array([1.0, 3.0, 2.0, 4.0])
    env = envelope_from_samples([1.0, 2.0, 3.0, 4.0], w, "phi")
    brute = np.array([w[i:].min() for i in range(4)])
    assert np.allclose(env.v, brute, rtol=1e-15)
    assert np.allclose(env.v, [1, 2, 2, 4])
    assert env.plateau_mask.tolist() == [False, True, False]
    assert env.Vq[1] == 0.0


def test_vq_for_inverse_power():
    # [DERIVED] -d(t^-1)/dt = t^-2; cell average compared within 1e-6
    spec = W.power(-1.0)
    env = env_of(spec)
    pts = env.points
    exact = (1 / pts[:-1] - 1 / pts[1:]) / np.diff(pts)
    assert np.allclose(env.Vq, exact, rtol=1e-10)
    assert np.allclose(env.Vq, env.grid.centers ** -2.0, rtol=1e-6)


def test_vq_density_is_pointwise_exact_inside_cells():
    spec = W.power(-1.0)
    env = env_of(spec)
    t = np.geomspace(2e-8, 0.9, 50)
    assert np.allclose(env.vq_density(t), t ** -2.0, rtol=1e-9)


def test_wa_is_refused():
    spec = W.table([0.1, 1.0], [2.0, 2.0])
    with pytest.raises(UnsupportedClassError):
        compute_envelope(spec, grid=Grid.log_uniform(0.1, 1.0, 16))


def test_bad_q_and_samples():
    with pytest.raises(DomainError):
        envelope_from_samples([1.0, 2.0], [1.0, 2.0], "phi", q=0.5)
    with pytest.raises(DomainError):
        envelope_from_samples([1.0, 2.0], [1.0, -2.0], "phi")
    with pytest.raises(DomainError):
        make_grid(W.power(-1.0, math.inf))


def test_grid_floor_raised_for_huge_weights():
    spec = W.exp_inv_power(1, 1.0)
    grid = make_grid(spec)
    assert W.log_value(spec, grid.r_min) <= 300.0
    assert grid.r_min > 1e-8


# -- inverse map and H --------------------------------------------------------

def test_inverse_identity():
    # [TRIVIAL] v = identity
    assert inverse_map(env_of(W.power(1.0)), 0.3) == pytest.approx(0.3, rel=1e-12)


def test_inverse_exp_inv():
    # [DERIVED] r = -1/ln(rho)
    env = env_of(W.exp_inv_power(-1, 1.0))
    assert inverse_map(env, math.exp(-2.0)) == pytest.approx(0.5, rel=1e-12)
    assert inverse_map(env, log_level=-100.0) == pytest.approx(0.01, rel=1e-12)


def test_inverse_on_plateau_level():
    # [DERIVED] rho = 2 is the flat level of the middle cell
    env = envelope_from_samples([1.0, 2.0, 3.0, 4.0], [1.0, 3.0, 2.0, 4.0], "phi")
    with pytest.raises(PlateauImageError):
        inverse_map(env, 2.0)
    with pytest.raises(DomainError):
        inverse_map(env, 10.0)


def test_h_identity_weight():
    # [DERIVED] K = 1/gamma = 1 and v = identity
    env = env_of(W.power(1.0))
    prof = h_profile(env, W.power(1.0), np.geomspace(1e-6, 0.9, 40))
    assert np.allclose(prof.H, 1.0, rtol=1e-12)
    assert prof.n_skipped == 0


def test_h_exp_inv():
    # [DERIVED] K(r) = r and r = -1/ln(rho)
    spec = W.exp_inv_power(-1, 1.0)
    prof = h_profile(env_of(spec), spec, [math.exp(-2.0)])
    assert prof.H[0] == pytest.approx(0.5, rel=1e-10)


def test_h_skips_plateau_images():
    # [TRIVIAL] excluded set
    pts = [0.1, 0.2, 0.3, 0.4]
    env = envelope_from_samples(pts, [1.0, 3.0, 2.0, 4.0], "phi")
    spec = W.table(pts, [1.0, 3.0, 2.0, 4.0])
    prof = h_profile(env, spec, [1.5, 2.0, 3.0])
    assert prof.skipped.tolist() == [False, True, False]
    assert np.isnan(prof.H[1])


# -- invariants over the battery -----------------------------------------------

@pytest.mark.parametrize("name", IDS)
@pytest.mark.parametrize("q", [1.0, 1.5, 2.0])
def test_domination_and_monotonicity(envelopes, name, q):
    env = envelopes[name, q]
    assert np.all(env.log_v <= env.log_w + 1e-14 * np.abs(env.log_w) + 1e-14)
    d = np.diff(env.log_v)
    assert np.all(d >= 0) if env.kind == "phi" else np.all(d <= 0)
    assert np.all(env.Vq >= 0)
    assert np.all(env.Vq[env.plateau_mask] == 0)


@pytest.mark.parametrize("name", IDS)
@pytest.mark.parametrize("q", [1.0, 1.5, 2.0])
def test_discrete_ftc(envelopes, name, q):
    assert ftc_defect(envelopes[name, q]) <= 1.0


def ftc_defect(env):
    """Worst ``|sum Vq*dt - |Delta v^q|| / (1e-8 (1 + v(t)^q))`` over grid points t.

    The increasing envelope accumulates from r_min; the decreasing one from
    eta, so that the reference magnitude is v(t)^q in both cases.
    """
    q = env.q
    vq = np.exp(q * env.log_v)
    inc = env.Vq * env.grid.widths
    if env.kind == "phi":
        acc = np.concatenate([[0.0], np.cumsum(inc)])
        ref = vq - vq[0]
    else:
        acc = np.concatenate([np.cumsum(inc[::-1])[::-1], [0.0]])
        ref = vq - vq[-1]
    return float(np.max(np.abs(acc - ref) / (1e-8 * (1 + vq))))


@pytest.mark.parametrize("name", IDS)
def test_idempotence(envelopes, name):
    env = envelopes[name, 1.0]
    again = envelope_from_log_samples(env.grid, env.log_v, env.kind)
    scale = np.maximum(np.abs(env.log_v), 1.0)
    assert np.max(np.abs(again.log_v - env.log_v) / scale) <= 1e-14


@pytest.mark.parametrize("name", IDS)
def test_moving_cells_touch_the_weight(envelopes, name):
    env = envelopes[name, 1.0]
    moving = ~env.plateau_mask
    # one endpoint of every moving cell sits on w; the other may be a plateau edge
    ends = np.minimum(np.abs(env.log_v[:-1] - env.log_w[:-1]), np.abs(env.log_v[1:] - env.log_w[1:]))
    assert np.all(ends[moving] <= 1e-12 * np.maximum(1, np.abs(env.log_w[:-1][moving])))


@pytest.mark.parametrize("name", [n for n in IDS if not n.startswith("table[wiggle")])
def test_round_trip(envelopes, name):
    env = envelopes[name, 1.0]
    rng = np.random.default_rng(3)
    moving = np.flatnonzero(~env.plateau_mask)
    cells = rng.choice(moving, 100)
    r = env.points[cells] * (env.points[cells + 1] / env.points[cells]) ** rng.uniform(0.1, 0.9, 100)
    for ri in r:
        back = inverse_map(env, log_level=env.log_value_at(ri))
        assert abs(back - ri) <= 1e-6 * ri


def test_round_trip_wiggle_off_plateau(envelopes):
    env = envelopes["table[wiggle]", 1.0]
    assert env.plateau_mask.any()
    pm = env.plateau_mask
    # cells bordering a plateau share its level at the junction
    inner = ~pm & ~np.r_[False, pm[:-1]] & ~np.r_[pm[1:], False]
    moving = np.flatnonzero(inner)
    for c in moving[:: max(1, moving.size // 100)]:
        r = math.sqrt(env.points[c] * env.points[c + 1])
        assert abs(inverse_map(env, log_level=env.log_value_at(r)) - r) <= 1e-6 * r


@given(st.lists(st.floats(-20, 20), min_size=3, max_size=40), st.sampled_from(["phi", "psi"]),
       st.sampled_from([1.0, 1.5, 2.0]))
def test_random_samples_properties(logs, kind, q):
    logs = np.asarray(logs)
    pts = np.arange(1, logs.size + 1, dtype=float)
    env = envelope_from_log_samples(pts, logs, kind, q)
    brute = [logs[i:].min() if kind == "phi" else logs[: i + 1].min() for i in range(logs.size)]
    assert np.array_equal(env.log_v, brute)
    again = envelope_from_log_samples(pts, env.log_v, kind, q)
    assert np.array_equal(again.log_v, env.log_v)
    assert ftc_defect(env) <= 1.0
