"""Five-node energy balance: canopy, trunk, snowpack, surface soil, deep soil.

The canopy temperature is diagnostic: it is solved each timestep so the
canopy balance closes to < 1e-3 W/m2 (Newton iteration with a bracketed
bisection fallback). The four remaining nodes advance with an explicit step.
The conductive flux from the deep-soil node to the fixed-temperature
permafrost boundary is integrated into warming/cooling degree-day totals
that drive the thaw objective.

Scalar functions here are numba-compiled; the dataclasses wrap them with the
simulator-facing API.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ._jit import jit
from .errors import PhysicsFault
from .weather import SIGMA_SB, delta_svp_kpa_per_k

T_FREEZE = 273.15
T_MIN, T_MAX = 180.0, 340.0  # sanity clamp, K

# Solver status codes.
OK_NEWTON = 0
OK_BISECT = 1
PINNED_MELT = 2
FAULT = -1

SECONDS_PER_DAY = 86400.0


@dataclass
class NodeTemperatures:
    t_can: float
    t_trunk: float
    t_snow: float
    t_soil_surf: float
    t_soil_deep: float

    def validate(self):
        for name, t in self.__dict__.items():
            if not (T_MIN <= t <= T_MAX):
                raise PhysicsFault(f"{name} outside sanity clamp", **self.__dict__)
        return self


@dataclass
class EnergyFluxes:
    """Per-timestep flux decomposition, W/m2. ``cond_deep_boundary`` is
    positive when heat flows from the deep soil toward the permafrost
    boundary (warming the permafrost)."""

    r_net_can: float = 0.0
    h_can: float = 0.0
    le_can: float = 0.0
    g_photo: float = 0.0
    melt_can: float = 0.0
    cond_can_trunk: float = 0.0
    r_net_snow: float = 0.0
    h_snow: float = 0.0
    melt_snow: float = 0.0
    r_net_soil: float = 0.0
    h_soil: float = 0.0
    le_soil: float = 0.0
    cond_surf_deep: float = 0.0
    cond_deep_boundary: float = 0.0


@dataclass
class BoundaryFluxAccumulator:
    """Annual warming (f_p) and cooling (f_n) integrals in degC-day
    equivalents. ``divisor`` is the bridge constant converting an energy
    integral (J/m2) into degC-days; it is a config key."""

    divisor: float
    f_p: float = 0.0
    f_n: float = 0.0
    steps: int = field(default=0)

    def add(self, cond_deep_boundary: float, dt: float) -> "BoundaryFluxAccumulator":
        df = cond_deep_boundary * dt / self.divisor
        if df > 0.0:
            self.f_p += df
        else:
            self.f_n -= df
        self.steps += 1
        return self

    def reset(self):
        self.f_p = 0.0
        self.f_n = 0.0
        self.steps = 0


def accumulate_boundary_flux(acc: BoundaryFluxAccumulator, cond_deep_boundary: float,
                             dt: float) -> BoundaryFluxAccumulator:
    return acc.add(cond_deep_boundary, dt)


@jit
def canopy_residual(t_can: float, t_air: float, t_trunk: float, sw_absorbed: float,
                    l_down: float, l_up_ground: float, a_can: float, eps_can: float,
                    h_can: float, g_ct: float, pt_alpha: float, gamma_psy: float,
                    stress: float, le_cap: float, g_photo: float,
                    melt_sink: float) -> float:
    """Net canopy balance at trial temperature ``t_can``.

    Radiative terms scale with the canopy area fraction so a bare stand
    relaxes exactly to the air temperature through the sensible-heat term.
    """
    r_net = (sw_absorbed
             + a_can * eps_can * (l_down + l_up_ground)
             - 2.0 * a_can * eps_can * SIGMA_SB * t_can ** 4)
    h = h_can * (t_can - t_air)
    le = 0.0
    if r_net > 0.0 and stress > 0.0:
        delta = delta_svp_kpa_per_k(t_can)
        le = pt_alpha * delta / (delta + gamma_psy) * r_net * stress
        if le > le_cap:
            le = le_cap
    return r_net - h - le - g_photo - g_ct * (t_can - t_trunk) - melt_sink


@jit
def canopy_le(t_can: float, sw_absorbed: float, l_down: float, l_up_ground: float,
              a_can: float, eps_can: float, pt_alpha: float, gamma_psy: float,
              stress: float, le_cap: float) -> float:
    r_net = (sw_absorbed
             + a_can * eps_can * (l_down + l_up_ground)
             - 2.0 * a_can * eps_can * SIGMA_SB * t_can ** 4)
    if r_net <= 0.0 or stress <= 0.0:
        return 0.0
    delta = delta_svp_kpa_per_k(t_can)
    le = pt_alpha * delta / (delta + gamma_psy) * r_net * stress
    return le if le < le_cap else le_cap


@jit
def _solve_residual_root(t_guess: float, t_air: float, t_trunk: float, sw_absorbed: float,
                         l_down: float, l_up_ground: float, a_can: float, eps_can: float,
                         h_can: float, g_ct: float, pt_alpha: float, gamma_psy: float,
                         stress: float, le_cap: float, g_photo: float, melt_sink: float):
    """Newton with numeric derivative; bracketed bisection fallback.

    Returns (t_can, status). Converges to |F| < 1e-6 W/m2, well inside the
    1e-3 contract.
    """
    t = t_guess
    if t < T_MIN + 1.0:
        t = T_MIN + 1.0
    elif t > T_MAX - 1.0:
        t = T_MAX - 1.0
    for _ in range(30):
        f = canopy_residual(t, t_air, t_trunk, sw_absorbed, l_down, l_up_ground, a_can,
                            eps_can, h_can, g_ct, pt_alpha, gamma_psy, stress, le_cap,
                            g_photo, melt_sink)
        if abs(f) < 1e-6:
            return t, OK_NEWTON
        dt_num = 0.05
        f_p = canopy_residual(t + dt_num, t_air, t_trunk, sw_absorbed, l_down,
                              l_up_ground, a_can, eps_can, h_can, g_ct, pt_alpha,
                              gamma_psy, stress, le_cap, g_photo, melt_sink)
        deriv = (f_p - f) / dt_num
        if abs(deriv) < 1e-9:
            break
        step = f / deriv
        if step > 30.0:
            step = 30.0
        elif step < -30.0:
            step = -30.0
        t = t - step
        if t < T_MIN + 0.5:
            t = T_MIN + 0.5
        elif t > T_MAX - 0.5:
            t = T_MAX - 0.5

    lo, hi = T_MIN, T_MAX
    f_lo = canopy_residual(lo, t_air, t_trunk, sw_absorbed, l_down, l_up_ground, a_can,
                           eps_can, h_can, g_ct, pt_alpha, gamma_psy, stress, le_cap,
                           g_photo, melt_sink)
    f_hi = canopy_residual(hi, t_air, t_trunk, sw_absorbed, l_down, l_up_ground, a_can,
                           eps_can, h_can, g_ct, pt_alpha, gamma_psy, stress, le_cap,
                           g_photo, melt_sink)
    if f_lo * f_hi > 0.0:
        return t, FAULT
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        f_mid = canopy_residual(mid, t_air, t_trunk, sw_absorbed, l_down, l_up_ground,
                                a_can, eps_can, h_can, g_ct, pt_alpha, gamma_psy,
                                stress, le_cap, g_photo, melt_sink)
        if abs(f_mid) < 1e-6:
            return mid, OK_BISECT
        if f_lo * f_mid <= 0.0:
            hi = mid
        else:
            lo = mid
            f_lo = f_mid
    return 0.5 * (lo + hi), OK_BISECT


@jit
def solve_canopy(t_guess: float, t_air: float, t_trunk: float, sw_absorbed: float,
                 l_down: float, l_up_ground: float, a_can: float, eps_can: float,
                 h_can: float, g_ct: float, pt_alpha: float, gamma_psy: float,
                 stress: float, le_cap: float, g_photo: float, melt_cap: float):
    """Full canopy solve including the intercepted-snow melt sink.

    ``melt_cap`` is the flux that would melt all canopy snow this step
    (SWE * Lf / dt); zero when the canopy holds no snow. Returns
    (t_can, le, melt_flux, residual, status).
    """
    t, status = _solve_residual_root(t_guess, t_air, t_trunk, sw_absorbed, l_down,
                                     l_up_ground, a_can, eps_can, h_can, g_ct, pt_alpha,
                                     gamma_psy, stress, le_cap, g_photo, 0.0)
    melt = 0.0
    if status != FAULT and melt_cap > 0.0 and t > T_FREEZE:
        f_at_freeze = canopy_residual(T_FREEZE, t_air, t_trunk, sw_absorbed, l_down,
                                      l_up_ground, a_can, eps_can, h_can, g_ct,
                                      pt_alpha, gamma_psy, stress, le_cap, g_photo, 0.0)
        if f_at_freeze > 0.0:
            if f_at_freeze <= melt_cap:
                t = T_FREEZE
                melt = f_at_freeze
                status = PINNED_MELT
            else:
                melt = melt_cap
                t, status = _solve_residual_root(t, t_air, t_trunk, sw_absorbed, l_down,
                                                 l_up_ground, a_can, eps_can, h_can,
                                                 g_ct, pt_alpha, gamma_psy, stress,
                                                 le_cap, g_photo, melt)
    le = canopy_le(t, sw_absorbed, l_down, l_up_ground, a_can, eps_can, pt_alpha,
                   gamma_psy, stress, le_cap)
    residual = canopy_residual(t, t_air, t_trunk, sw_absorbed, l_down, l_up_ground,
                               a_can, eps_can, h_can, g_ct, pt_alpha, gamma_psy,
                               stress, le_cap, g_photo, melt)
    return t, le, melt, residual, status


@jit
def step_ground_nodes(t_trunk: float, t_snow: float, t_surf: float, t_deep: float,
                      t_can: float, t_air: float, sw_ground: float, l_down_ground: float,
                      swe_ground: float, f_swc: float, le_cap_soil: float,
                      albedo_snow: float, albedo_soil: float, eps_snow: float,
                      eps_soil: float, h_trunk: float, h_snow: float, h_soil: float,
                      g_ct: float, g_tg: float, g_sd: float, g_boundary: float,
                      t_boundary: float, c_trunk: float, c_snow_min: float,
                      c_surf: float, c_deep: float, pt_alpha: float, gamma_psy: float,
                      k_pack: float, snow_density_ratio: float, d_surface_layer: float,
                      k_soil: float, lat_fusion: float, dt: float):
    """Explicit update of trunk, snow, surface-soil, deep-soil nodes.

    Returns (t_trunk, t_snow, t_surf, t_deep, melt_snow_flux, le_soil,
    cond_surf_deep, cond_deep_boundary, r_net_surface, h_surface, fault).
    The snow-surface route runs when ground snow exists; the bare-soil route
    otherwise. Melt never exceeds the energy needed to melt the whole store.
    """
    snow_route = swe_ground > 0.0
    melt_flux = 0.0
    le_soil = 0.0
    leftover_to_soil = 0.0

    if snow_route:
        r_net = (sw_ground * (1.0 - albedo_snow) + eps_snow * l_down_ground
                 - eps_snow * SIGMA_SB * t_snow ** 4)
        h_flux = h_snow * (t_snow - t_air)
        depth_m = swe_ground / 1000.0 / snow_density_ratio
        resistance = 0.5 * depth_m / k_pack + 0.5 * d_surface_layer / k_soil
        g_ss = 1.0 / resistance
        cond_soil_snow = g_ss * (t_surf - t_snow)
        cond_trunk_ground = g_tg * (t_trunk - t_snow)
        net_snow = r_net - h_flux + cond_soil_snow + cond_trunk_ground
        c_snow = swe_ground * 2100.0
        if c_snow < c_snow_min:
            c_snow = c_snow_min
        if net_snow > 0.0:
            to_freeze = (T_FREEZE - t_snow) * c_snow / dt
            if to_freeze < 0.0:
                to_freeze = 0.0
            if net_snow > to_freeze:
                excess = net_snow - to_freeze
                melt_cap = swe_ground * lat_fusion / dt
                melt_flux = excess if excess < melt_cap else melt_cap
                leftover_to_soil = excess - melt_flux
                t_snow_new = T_FREEZE
            else:
                t_snow_new = t_snow + net_snow * dt / c_snow
        else:
            t_snow_new = t_snow + net_snow * dt / c_snow
        if t_snow_new > T_FREEZE:
            t_snow_new = T_FREEZE
        cond_surf_deep = g_sd * (t_surf - t_deep)
        net_surf = -cond_soil_snow - cond_surf_deep + leftover_to_soil
        r_net_surface = r_net
        h_surface = h_flux
    else:
        r_net = (sw_ground * (1.0 - albedo_soil) + eps_soil * l_down_ground
                 - eps_soil * SIGMA_SB * t_surf ** 4)
        h_flux = h_soil * (t_surf - t_air)
        if r_net > 0.0 and t_surf > T_FREEZE and f_swc > 0.0:
            delta = delta_svp_kpa_per_k(t_surf)
            le_soil = pt_alpha * delta / (delta + gamma_psy) * r_net * f_swc
            if le_soil > le_cap_soil:
                le_soil = le_cap_soil
        cond_trunk_ground = g_tg * (t_trunk - t_surf)
        cond_surf_deep = g_sd * (t_surf - t_deep)
        net_surf = r_net - h_flux - le_soil - cond_surf_deep + cond_trunk_ground
        t_snow_new = t_air if t_air < T_FREEZE else T_FREEZE
        r_net_surface = r_net
        h_surface = h_flux

    # Trunk couples to whichever ground node it currently touches.
    net_trunk = h_trunk * (t_air - t_trunk) + g_ct * (t_can - t_trunk) - cond_trunk_ground

    cond_deep_boundary = g_boundary * (t_deep - t_boundary)
    net_deep = cond_surf_deep - cond_deep_boundary

    t_trunk_new = t_trunk + net_trunk * dt / c_trunk
    t_surf_new = t_surf + net_surf * dt / c_surf
    t_deep_new = t_deep + net_deep * dt / c_deep

    fault = 0
    if (t_trunk_new < T_MIN or t_trunk_new > T_MAX or t_snow_new < T_MIN
            or t_snow_new > T_MAX or t_surf_new < T_MIN or t_surf_new > T_MAX
            or t_deep_new < T_MIN or t_deep_new > T_MAX):
        fault = 1
    return (t_trunk_new, t_snow_new, t_surf_new, t_deep_new, melt_flux, le_soil,
            cond_surf_deep, cond_deep_boundary, r_net_surface, h_surface, fault)


def solve_canopy_temperature(t_guess: float, t_air: float, t_trunk: float,
                             sw_absorbed: float, l_down: float, l_up_ground: float,
                             a_can: float, eps_can: float, h_can: float, g_ct: float,
                             pt_alpha: float, gamma_psy: float, stress: float,
                             le_cap: float = 1.0e9, g_photo: float = 0.0,
                             melt_cap: float = 0.0):
    """Raising-level wrapper over :func:`solve_canopy` that raises
    :class:`PhysicsFault` when no bracketing root exists."""
    t, le, melt, residual, status = solve_canopy(
        t_guess, t_air, t_trunk, sw_absorbed, l_down, l_up_ground, a_can, eps_can,
        h_can, g_ct, pt_alpha, gamma_psy, stress, le_cap, g_photo, melt_cap)
    if status == FAULT:
        raise PhysicsFault(
            "canopy balance has no root in the sanity interval",
            t_guess=t_guess, t_air=t_air, t_trunk=t_trunk, sw_absorbed=sw_absorbed,
            l_down=l_down, l_up_ground=l_up_ground, a_can=a_can, g_photo=g_photo)
    return t, le, melt, residual, status
