import math

import numpy as np
import pytest

from permaforest import energy as E
from permaforest.errors import PhysicsFault
from permaforest.weather import SIGMA_SB


def random_canopy_inputs(rng):
    t_air = rng.uniform(230.0, 305.0)
    return dict(
        t_guess=t_air + rng.uniform(-5.0, 5.0),
        t_air=t_air,
        t_trunk=t_air + rng.uniform(-8.0, 8.0),
        sw_absorbed=rng.uniform(0.0, 700.0),
        l_down=rng.uniform(100.0, 450.0),
        l_up_ground=SIGMA_SB * rng.uniform(230.0, 305.0) ** 4,
        a_can=rng.uniform(0.0, 0.95),
        eps_can=0.97,
        h_can=20.0,
        g_ct=rng.uniform(0.0, 5.0),
        pt_alpha=1.26,
        gamma_psy=0.066,
        stress=rng.uniform(0.0, 1.0),
        le_cap=rng.uniform(50.0, 1e4),
        g_photo=rng.uniform(0.0, 80.0),
    )


def bisection_oracle(kw, tol=1e-6):
    """Independent root finder for the canopy balance (no melt sink)."""
    def f(t):
        return E.canopy_residual(t, kw["t_air"], kw["t_trunk"], kw["sw_absorbed"],
                                 kw["l_down"], kw["l_up_ground"], kw["a_can"],
                                 kw["eps_can"], kw["h_can"], kw["g_ct"], kw["pt_alpha"],
                                 kw["gamma_psy"], kw["stress"], kw["le_cap"],
                                 kw["g_photo"], 0.0)
    lo, hi = E.T_MIN, E.T_MAX
    f_lo, f_hi = f(lo), f(hi)
    assert f_lo * f_hi <= 0.0, "oracle bracket failed"
    for _ in range(300):
        mid = 0.5 * (lo + hi)
        f_mid = f(mid)
        if abs(f_mid) < tol:
            return mid
        if f_lo * f_mid <= 0.0:
            hi = mid
        else:
            lo, f_lo = mid, f_mid
    return 0.5 * (lo + hi)


def test_solver_residual_under_contract_on_randomized_inputs():
    rng = np.random.default_rng(0)
    for _ in range(2000):
        kw = random_canopy_inputs(rng)
        t, le, melt, residual, status = E.solve_canopy(
            kw["t_guess"], kw["t_air"], kw["t_trunk"], kw["sw_absorbed"], kw["l_down"],
            kw["l_up_ground"], kw["a_can"], kw["eps_can"], kw["h_can"], kw["g_ct"],
            kw["pt_alpha"], kw["gamma_psy"], kw["stress"], kw["le_cap"], kw["g_photo"],
            0.0)
        assert status != E.FAULT
        assert abs(residual) < 1e-3


def test_solver_agrees_with_bisection_oracle():
    rng = np.random.default_rng(1)
    worst = 0.0
    for _ in range(1000):
        kw = random_canopy_inputs(rng)
        t, *_ , status = E.solve_canopy(
            kw["t_guess"], kw["t_air"], kw["t_trunk"], kw["sw_absorbed"], kw["l_down"],
            kw["l_up_ground"], kw["a_can"], kw["eps_can"], kw["h_can"], kw["g_ct"],
            kw["pt_alpha"], kw["gamma_psy"], kw["stress"], kw["le_cap"], kw["g_photo"],
            0.0)
        oracle = bisection_oracle(kw)
        worst = max(worst, abs(t - oracle))
    assert worst < 0.01


def test_bare_stand_canopy_relaxes_to_air_temperature():
    # LAI = 0 (area fraction 0) at night: every radiative term carries the
    # area factor, so only sensible exchange is left and t_can == t_air.
    t, le, melt, residual, status = E.solve_canopy(
        260.0, 250.0, 255.0, 0.0, 250.0, 200.0, 0.0, 0.97, 20.0, 0.0, 1.26, 0.066,
        0.5, 1e9, 0.0, 0.0)
    assert abs(t - 250.0) < 0.1
    assert le == 0.0


def test_full_water_stress_kills_latent_flux():
    t, le, melt, residual, status = E.solve_canopy(
        290.0, 288.0, 288.0, 500.0, 300.0, 380.0, 0.8, 0.97, 20.0, 4.0, 1.26, 0.066,
        0.0, 1e9, 0.0, 0.0)
    assert le == 0.0
    assert abs(residual) < 1e-3


def test_melt_sink_pins_canopy_at_freezing():
    # Strong sun on a snow-loaded canopy: the excess flux at 273.15 K melts
    # snow instead of heating, and the diverted energy equals the residual
    # balance exactly.
    kw = dict(t_guess=272.0, t_air=274.0, t_trunk=272.0, sw_absorbed=400.0,
              l_down=300.0, l_up_ground=315.0, a_can=0.8, eps_can=0.97, h_can=20.0,
              g_ct=4.0, pt_alpha=1.26, gamma_psy=0.066, stress=0.3, le_cap=1e9,
              g_photo=10.0)
    melt_cap = 5.0 * 3.34e5 / 3600.0  # 5 mm of canopy snow over one hour
    t, le, melt, residual, status = E.solve_canopy(
        kw["t_guess"], kw["t_air"], kw["t_trunk"], kw["sw_absorbed"], kw["l_down"],
        kw["l_up_ground"], kw["a_can"], kw["eps_can"], kw["h_can"], kw["g_ct"],
        kw["pt_alpha"], kw["gamma_psy"], kw["stress"], kw["le_cap"], kw["g_photo"],
        melt_cap)
    assert status == E.PINNED_MELT
    assert t == 273.15
    assert 0.0 < melt <= melt_cap
    assert abs(residual) < 1e-9
    # melted mass implied by the diverted energy
    mass = melt * 3600.0 / 3.34e5
    assert mass * 3.34e5 / 3600.0 == pytest.approx(melt, rel=1e-12)


def test_melt_never_exceeds_available_snow():
    melt_cap = 0.2 * 3.34e5 / 3600.0  # only 0.2 mm available
    t, le, melt, residual, status = E.solve_canopy(
        272.0, 278.0, 274.0, 600.0, 320.0, 330.0, 0.9, 0.97, 20.0, 4.0, 1.26, 0.066,
        0.3, 1e9, 0.0, melt_cap)
    assert melt == pytest.approx(melt_cap, rel=1e-12)
    assert t > 273.15  # leftover energy warms the canopy past freezing
    assert abs(residual) < 1e-3


def test_raising_albedo_never_raises_net_radiation():
    # sw_absorbed already folds (1 - albedo); the monotonicity check is at
    # the composition level: higher albedo -> lower absorbed -> lower rnet.
    sw_in, a_can = 600.0, 0.8
    def rnet_at(albedo):
        sw_absorbed = sw_in * a_can * (1.0 - albedo)
        t, *_ = E.solve_canopy(285.0, 285.0, 285.0, sw_absorbed, 300.0, 380.0, a_can,
                               0.97, 20.0, 4.0, 1.26, 0.066, 0.5, 1e9, 0.0, 0.0)
        return (sw_absorbed + a_can * 0.97 * (300.0 + 380.0)
                - 2 * a_can * 0.97 * SIGMA_SB * t ** 4)
    values = [rnet_at(a) for a in (0.05, 0.1, 0.2, 0.4, 0.8)]
    assert all(x >= y for x, y in zip(values, values[1:]))


def test_equilibrium_state_is_a_fixed_point():
    t = 270.0
    l_down_ground = SIGMA_SB * t ** 4  # emissivity factors cancel at balance
    out = E.step_ground_nodes(
        t, t, t, t, t, t, 0.0, l_down_ground, 0.0, 0.5, 1e9, 0.8, 0.15, 0.98, 1.0,
        5.0, 8.0, 10.0, 4.0, 2.0, 1.0, 0.5, t, 2e5, 3e5, 6e5, 8e6, 1.26, 0.066,
        0.21, 0.25, 0.3, 1.2, 3.34e5, 3600.0)
    t_trunk, t_snow, t_surf, t_deep = out[0], out[1], out[2], out[3]
    assert t_trunk == pytest.approx(t, abs=1e-9)
    assert t_surf == pytest.approx(t, abs=1e-9)
    assert t_deep == pytest.approx(t, abs=1e-9)
    assert out[10] == 0  # no fault


def test_boundary_flux_zero_when_deep_matches_boundary():
    out = E.step_ground_nodes(
        270.0, 270.0, 272.0, 271.0, 270.0, 270.0, 0.0, 250.0, 0.0, 0.5, 1e9, 0.8,
        0.15, 0.98, 0.95, 5.0, 8.0, 10.0, 4.0, 2.0, 1.0, 0.5, 271.0, 2e5, 3e5, 6e5,
        8e6, 1.26, 0.066, 0.21, 0.25, 0.3, 1.2, 3.34e5, 3600.0)
    assert out[7] == 0.0  # cond_deep_boundary


def test_conduction_scales_linearly_with_conductance():
    def surf_deep_flux(g_sd):
        out = E.step_ground_nodes(
            270.0, 270.0, 275.0, 271.0, 270.0, 270.0, 0.0, 250.0, 0.0, 0.5, 1e9, 0.8,
            0.15, 0.98, 0.95, 5.0, 8.0, 10.0, 4.0, 2.0, g_sd, 0.5, 270.0, 2e5, 3e5,
            6e5, 8e6, 1.26, 0.066, 0.21, 0.25, 0.3, 1.2, 3.34e5, 3600.0)
        return out[6]
    assert surf_deep_flux(1.6) == pytest.approx(2.0 * surf_deep_flux(0.8), rel=1e-12)


def test_snow_node_never_exceeds_freezing_while_snow_exists():
    # Big positive forcing onto a snowpack: temperature pins at 273.15 and
    # melt carries the excess.
    out = E.step_ground_nodes(
        272.0, 272.0, 272.0, 270.0, 280.0, 285.0, 500.0, 350.0, 50.0, 0.5, 1e9,
        0.8, 0.15, 0.98, 0.95, 5.0, 8.0, 10.0, 4.0, 2.0, 1.0, 0.5, 270.0, 2e5, 3e5,
        6e5, 8e6, 1.26, 0.066, 0.21, 0.25, 0.3, 1.2, 3.34e5, 3600.0)
    assert out[1] <= 273.15
    assert out[4] > 0.0  # melt flux
    melt_cap = 50.0 * 3.34e5 / 3600.0
    assert out[4] <= melt_cap + 1e-9


def test_node_sanity_clamp_raises():
    with pytest.raises(PhysicsFault):
        E.NodeTemperatures(500.0, 270.0, 270.0, 270.0, 270.0).validate()


def test_boundary_accumulator_examples():
    acc = E.BoundaryFluxAccumulator(divisor=8.0e6)
    for _ in range(100):
        acc.add(0.0, 3600.0)
    assert acc.f_p == 0.0 and acc.f_n == 0.0

    acc = E.BoundaryFluxAccumulator(divisor=8.0e6)
    fluxes = np.random.default_rng(3).normal(0.0, 4.0, size=500)
    for f in fluxes:
        E.accumulate_boundary_flux(acc, float(f), 1800.0)
    flipped = E.BoundaryFluxAccumulator(divisor=8.0e6)
    for f in fluxes:
        flipped.add(float(-f), 1800.0)
    assert flipped.f_p == pytest.approx(acc.f_n, rel=1e-12)
    assert flipped.f_n == pytest.approx(acc.f_p, rel=1e-12)
    assert acc.f_p >= 0.0 and acc.f_n >= 0.0

    acc.reset()
    assert acc.f_p == 0.0 and acc.f_n == 0.0 and acc.steps == 0


def test_solver_raises_physics_fault_when_unbracketable():
    # A pathological constant source term beyond any radiative balance in
    # [180, 340] K leaves no root to find.
    with pytest.raises(PhysicsFault):
        E.solve_canopy_temperature(280.0, 280.0, 280.0, 1e9, 300.0, 300.0, 0.9,
                                   0.97, 0.0, 0.0, 1.26, 0.066, 0.0)
