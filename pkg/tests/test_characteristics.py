import math

import numpy as np
import pytest

from cdfkw.characteristics import (
    INITIAL_PLANE,
    K_BOUNDARY,
    SPATIAL_BOUNDARY,
    CharPoint,
    DivergenceError,
    SingularityError,
    burgers_shock_ode,
    burgers_state,
    evaluate_pi,
    evaluate_pi_burgers,
    heaviside,
    rk3_step,
    rk3_step_checked,
    solve_pi_profile,
    step_locations,
    trace_back,
    trace_back_many,
    velocity,
)
from cdfkw.problems import (
    ProblemSpec,
    exact_test1,
    make_3d,
    make_burgers,
    make_saint_venant,
    make_test1d,
)
from cdfkw.randfield import Realization, make_realization
from cdfkw.weno import solve_mcs

R0 = Realization(0, 0)


def advection(speed=1.0, floor=-math.inf):
    return ProblemSpec(
        name="advect",
        dim=1,
        domain=((0.0, 2.0),),
        flux=lambda K, x, r: speed * np.asarray(K)[None, :],
        flux_dK=lambda K, x, r: np.full((1,) + np.shape(K), speed),
        source=lambda x, t, r: np.zeros(x.shape[1]),
        ic=lambda x, r: np.sin(np.pi * x[0]),
        bc=lambda x, t, r: np.sin(-np.pi * speed * t) + 0 * x[0],
        K_floor=floor,
        K_max=5.0,
    )


def test_heaviside_zero_is_one():
    assert list(heaviside([-1e-300, 0.0, 2.0])) == [0.0, 1.0, 1.0]


# --- velocity -----------------------------------------------------------------------


def test_velocity_test_problem_at_quarter():
    p = make_test1d(True)
    # pick a point where the source vanishes: cos(pi (x + t)) = 0
    v = velocity(p, R0, CharPoint.make([0.5], 0.25, 0.0))
    assert v.vx == pytest.approx((1.0, 0.0, 0.0))
    assert v.vK == pytest.approx(0.0, abs=1e-12)


def test_velocity_constant_z_has_no_gradient_term():
    p = make_test1d(False)
    r = Realization(0, 0, {"z": 1.3})
    pt = CharPoint.make([0.7], 20.0, 0.4)
    x = np.array([[0.7]])
    assert velocity(p, r, pt).vK == pytest.approx(float(p.source(x, 0.4, r)[0]))


def test_velocity_3d_unit_advection():
    p = make_3d()
    for K in (-1.0, 0.0, 2.5):
        assert velocity(p, Realization(0, 0, {"z": 1.0}), CharPoint.make([0.1, 0.2, 0.3], K, 0.5)).vx == (1.0, 1.0, 1.0)


def test_velocity_below_floor_is_singular():
    with pytest.raises(SingularityError):
        velocity(make_test1d(True), R0, CharPoint.make([0.5], -0.1, 0.1))


# --- rk3 ----------------------------------------------------------------------------


def test_rk3_zero_rhs_is_identity():
    y = np.array([0.3, -1.2])
    assert np.array_equal(rk3_step(y, 0.0, 0.1, lambda yy, t: np.zeros_like(yy)), y)


def test_rk3_exponential_taylor():
    assert float(rk3_step(1.0, 0.0, 0.1, lambda y, t: y)) == pytest.approx(1.1051667, abs=1e-7)


def test_rk3_exact_on_constant_rhs():
    y = rk3_step(np.array([1.0]), 0.0, -0.37, lambda yy, t: np.full_like(yy, 2.5))
    assert y[0] == pytest.approx(1.0 - 0.925, abs=1e-15)


def test_rk3_checked_reports_state():
    with pytest.raises(FloatingPointError, match="state"):
        rk3_step_checked(np.array([1.0]), 0.0, 0.1, lambda y, t: y * np.nan)


# --- tracing ------------------------------------------------------------------------


def test_straight_line_corner_tie_resolves_to_initial_plane():
    foot = trace_back(advection(), R0, CharPoint.make([1.0], 2.0, 1.0), 0.1)
    assert foot.boundary_kind == INITIAL_PLANE
    assert foot.location.t == 0.0
    assert foot.location.x[0] == pytest.approx(0.0, abs=1e-12)
    assert foot.location.K == 2.0


def test_translation_is_exact_to_roundoff():
    p = advection()
    x = np.linspace(1.05, 2.0, 20)
    for xi in x:
        foot = trace_back(p, R0, CharPoint.make([xi], 0.4, 1.0), 0.013)
        assert foot.location.x[0] == pytest.approx(xi - 1.0, abs=1e-13)


def test_inflow_boundary_crossing_located():
    foot = trace_back(advection(), R0, CharPoint.make([0.3], 1.0, 1.0), 0.1)
    assert foot.boundary_kind == SPATIAL_BOUNDARY
    assert foot.location.t == pytest.approx(0.7, abs=1e-10)


def test_step_cap_raises(monkeypatch):
    import cdfkw.characteristics as ch

    monkeypatch.setattr(ch, "MAX_STEPS", 3)
    with pytest.raises(DivergenceError):
        trace_back(advection(), R0, CharPoint.make([1.5], 0.0, 1.0), 0.01)


def test_saint_venant_low_flow_hits_k_boundary():
    p = make_saint_venant("x")
    r = make_realization(1, 0, p.scalar_inputs, p.field_inputs)
    foot = trace_back(p, r, CharPoint.make([1.0], 0.01, 1.0), 0.01)
    assert foot.boundary_kind == K_BOUNDARY
    assert evaluate_pi(p, r, CharPoint.make([1.0], 0.01, 1.0), 0.01) == 0.0


def test_deterministic_foot_above_initial_value():
    p = make_test1d(True)
    K = float(exact_test1(0.5, 0.1)) + 1e-3
    foot = trace_back(p, R0, CharPoint.make([0.5], K, 0.1), 0.01)
    assert foot.boundary_kind == INITIAL_PLANE
    assert foot.location.t == 0.0
    kin = float(exact_test1(foot.location.x[0], 0.0))
    assert foot.location.K > kin


def test_foot_kind_invariants():
    p = make_test1d(True)
    K = np.linspace(0.05, 5.0, 60)
    xf, Kf, tf, code = trace_back_many(p, R0, [[0.4]], K, 0.5, 0.02)
    assert np.all(tf[code == 0] == 0.0)
    assert np.all(Kf[code == 2] <= p.K_floor + 1e-12)


@pytest.mark.parametrize("K0", [2.2, 2.6, 3.0, 3.6])
def test_pi_is_constant_along_characteristic(K0):
    from cdfkw.characteristics import velocity_arrays

    p = make_test1d(True)
    y, t = np.array([1.2, K0]), 0.3

    def rhs(yy, tt):
        vx, vK = velocity_arrays(p, R0, yy[:1, None], yy[1:], tt)
        return np.array([vx[0, 0], vK[0]])

    for _ in range(150):  # walk back to t = 0.15
        y = rk3_step(y, t, -0.001, rhs)
        t -= 0.001
    pi_q = evaluate_pi(p, R0, CharPoint.make([1.2], K0, 0.3), 0.005)
    pi_mid = evaluate_pi(p, R0, CharPoint.make([y[0]], y[1], t), 0.005)
    assert pi_q == pi_mid


# --- Pi profiles ---------------------------------------------------------------------


def test_pi_saturates_and_vanishes_at_floor():
    p = make_test1d(True)
    assert evaluate_pi(p, R0, CharPoint.make([0.5], 20.0, 0.1), 0.01) == 1.0
    assert evaluate_pi(p, R0, CharPoint.make([0.5], p.K_floor, 0.1), 0.01) == 0.0


def test_pi_flips_at_exact_solution():
    p = make_test1d(True)
    s = step_locations(p, R0, [[0.5]], 0.1, 0.01)[0]
    assert s == pytest.approx(float(exact_test1(0.5, 0.1)), abs=5e-5)


def test_profile_all_zero_and_all_one():
    p = make_test1d(True)
    lo = solve_pi_profile(p, R0, [0.5], 0.1, np.linspace(0.01, 0.5, 10), 0.01)
    hi = solve_pi_profile(p, R0, [0.5], 0.1, np.linspace(5.0, 6.0, 10), 0.01)
    assert np.all(lo.pi_values == 0) and np.all(hi.pi_values == 1)


def test_profile_stochastic_step_location():
    p = make_test1d(False)
    r = Realization(0, 0, {"z": 1.0})
    K = np.linspace(15.0, 25.0, 2001)
    sol = solve_pi_profile(p, r, [0.2], 1.0, K, 0.005)
    exact = (math.sin(math.pi * 1.2) + 5) ** 2
    assert sol.step_location() == pytest.approx(exact, abs=2 * (K[1] - K[0]))
    assert np.all(np.diff(sol.pi_values) >= 0)


def test_profile_rejects_bad_grid():
    p = make_test1d(True)
    with pytest.raises(ValueError):
        solve_pi_profile(p, R0, [0.5], 0.1, [1.0, 0.5], 0.01)
    with pytest.raises(ValueError):
        solve_pi_profile(p, R0, [0.5], 0.1, [-1.0, 0.5], 0.01)


def test_profile_csv(tmp_path):
    p = make_test1d(True)
    sol = solve_pi_profile(p, R0, [0.5], 0.1, np.linspace(1.0, 3.0, 5), 0.01)
    sol.to_csv(tmp_path / "pi.csv")
    lines = (tmp_path / "pi.csv").read_text().splitlines()
    assert lines[0] == "K,pi" and len(lines) == 6


def test_third_order_in_time_asymptotically():
    p = make_test1d(True)
    xs = np.linspace(0, 2, 101)[None, :]
    e = []
    for dt in (0.1 / 32, 0.1 / 64):
        e.append(np.sqrt(np.mean((step_locations(p, R0, xs, 0.1, dt) - exact_test1(xs[0], 0.1)) ** 2)))
    assert math.log2(e[0] / e[1]) > 2.8


# --- Burgers -------------------------------------------------------------------------


def test_no_shock_before_breaking():
    sh = burgers_shock_ode(1.0, 0.1, 0.01)
    assert sh.at(0.1) is None


def test_symmetric_shock_stays_at_one():
    sh = burgers_shock_ode(1.0, 1.0, 0.01)
    assert sh.t_break == pytest.approx(1 / (2 * math.pi))
    assert np.allclose(sh.positions, 1.0, atol=1e-10)


def test_burgers_pi_sides():
    r = Realization(0, 0, {"z": 1.0})
    assert evaluate_pi_burgers(r, CharPoint.make([0.4], 2.0, 1.0), 0.01) == 1.0
    assert evaluate_pi_burgers(r, CharPoint.make([0.4], -2.0, 1.0), 0.01) == 0.0


def test_burgers_state_matches_weno():
    r = Realization(0, 0, {"z": 1.0})
    k = burgers_state(1.0, 0.4, 1.0, burgers_shock_ode(1.0, 1.0, 0.01))
    x, q = solve_mcs(make_burgers(), [r], 1.0, 800, 4e-4)
    assert k == pytest.approx(float(np.interp(0.4, x, q[0])), abs=5e-3)
