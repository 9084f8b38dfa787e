"""Sub-annual physics loop: one compiled pass over 365 days of timesteps.

The kernel advances forcing, canopy solve, node temperatures, water stores,
carbon flux integrals, the drought index, daily fire checks, and the
permafrost boundary-flux integrals. Everything stochastic is pre-drawn
outside (weather arrays, fire uniforms), so the loop itself is pure and the
compiled and interpreted paths agree.
"""

from __future__ import annotations

import numpy as np

from ._jit import jit
from .carbon import respiration_timestep
from .disturb import fire_ignition_probability
from .energy import FAULT, T_FREEZE, solve_canopy, step_ground_nodes
from .hydro import apply_melt_and_et, partition_precipitation
from .weather import (
    SIGMA_SB,
    air_temperature,
    longwave_down,
    shortwave_down,
    vapour_pressure_deficit,
)

# Indices into the packed parameter vector (see pack_kernel_params).
K_LATITUDE = 0
K_PEAK_HOUR = 1
K_REL_HUMIDITY = 2
K_TRANSMISSIVITY = 3
K_CLOUD_ATTEN = 4
K_EPS_ATM_CLEAR = 5
K_EPS_ATM_OVERCAST = 6
K_SOLAR_CONSTANT = 7
K_GROWTH_START = 8
K_FALL_START = 9
K_GROWTH_RATE = 10
K_FALL_RATE = 11
K_POT_LAI_CON = 12
K_POT_LAI_DEC = 13
K_W_CON = 14
K_ALBEDO_CON = 15
K_ALBEDO_DEC = 16
K_ALBEDO_LEAFLESS = 17
K_CANOPY_EXT = 18
K_INT_CON = 19
K_INT_DEC = 20
K_CAP_PER_LAI = 21
K_LUE_EFF = 22
K_EPS_CAN = 23
K_EPS_SOIL = 24
K_EPS_SNOW = 25
K_ALBEDO_SNOW = 26
K_ALBEDO_SOIL = 27
K_PT_ALPHA = 28
K_GAMMA_PSY = 29
K_J_PER_GC = 30
K_PAR_FRACTION = 31
K_H_CAN = 32
K_H_TRUNK = 33
K_H_SNOW = 34
K_H_SOIL = 35
K_G_CT = 36
K_G_TG = 37
K_G_SD = 38
K_G_BOUNDARY = 39
K_T_BOUNDARY = 40
K_C_TRUNK = 41
K_C_SNOW_MIN = 42
K_C_SURF = 43
K_C_DEEP = 44
K_K_PACK = 45
K_SNOW_DENSITY = 46
K_D_SURFACE_LAYER = 47
K_K_SOIL = 48
K_MAX_WATER = 49
K_STRESS_THRESHOLD = 50
K_LAT_FUSION = 51
K_LAT_VAPOR = 52
K_BIOMASS = 53
K_SOIL_POOL = 54
K_BIO_REF = 55
K_SOIL_REF = 56
K_R_BASE = 57
K_R_SOIL_BASE = 58
K_Q10 = 59
K_T_REF = 60
K_VPD_SCALE = 61
K_GPP_T_MIN = 62
K_GPP_T_FULL = 63
K_THAW_DIVISOR = 64
K_FIRE_BASE = 65
K_FIRE_THRESHOLD = 66
K_FIRE_HOT_DAY = 67
K_FIRE_MULT_MAX = 68
K_FIRE_CON_WEIGHT = 69
K_CONIFER_FRACTION = 70
K_FIRE_SEV_LO = 71
K_FIRE_SEV_HI = 72
K_DT = 73
K_STEPS_PER_DAY = 74
K_DROUGHT_DIVISOR = 75
N_KERNEL_PARAMS = 76

# Trace columns (per timestep) emitted when the debug flux trace is enabled.
TRACE_COLUMNS = (
    "day", "hour", "t_air", "sw_down", "t_can", "t_trunk", "t_snow", "t_soil_surf",
    "t_soil_deep", "swe_ground", "swe_canopy", "swc", "r_net_surface", "h_surface",
    "le_can", "le_soil", "gpp_rate_gc_s", "g_photo", "melt_can", "melt_snow",
    "cond_surf_deep", "cond_deep_boundary", "canopy_residual",
)

# Result vector layout (see run_year).
R_T_TRUNK = 0
R_T_SNOW = 1
R_T_SURF = 2
R_T_DEEP = 3
R_T_CAN = 4
R_SWE_GROUND = 5
R_SWE_CANOPY = 6
R_SWC = 7
R_DROUGHT = 8
R_GPP_KG = 9
R_RA_KG = 10
R_RH_KG = 11
R_F_P = 12
R_F_N = 13
R_PRECIP = 14
R_ET = 15
R_RUNOFF = 16
R_MELT = 17
R_FIRE_DAY = 18
R_FIRE_SEVERITY = 19
R_MAX_RESIDUAL = 20
R_FAULT = 21
R_FAULT_DAY = 22
R_FAULT_STEP = 23
R_SWE_MAX = 24
N_RESULTS = 25


@jit
def run_year(k: np.ndarray, tmean: np.ndarray, amplitude: np.ndarray,
             precip: np.ndarray, is_snow: np.ndarray, fire_u: np.ndarray,
             fire_sev_u: float, state: np.ndarray, drought_index: float,
             trace_on: bool, trace: np.ndarray) -> np.ndarray:
    """Advance one 365-day year. ``state`` is
    [t_trunk, t_snow, t_surf, t_deep, t_can_guess, swe_ground, swe_canopy, swc]
    and is not mutated; the returned vector carries the final state plus the
    annual integrals (see R_* indices).
    """
    out = np.zeros(N_RESULTS)
    t_trunk = state[0]
    t_snow = state[1]
    t_surf = state[2]
    t_deep = state[3]
    t_can = state[4]
    swe_g = state[5]
    swe_c = state[6]
    swc = state[7]

    dt = k[K_DT]
    steps_per_day = int(k[K_STEPS_PER_DAY])
    dt_hours = 24.0 / steps_per_day

    gpp_g = 0.0
    ra_kg = 0.0
    rh_kg = 0.0
    f_p = 0.0
    f_n = 0.0
    precip_in = 0.0
    et_out = 0.0
    runoff_out = 0.0
    melt_moved = 0.0
    max_residual = 0.0
    swe_max = 0.0
    fire_day = 0
    fire_severity = 0.0

    eps_snow = k[K_EPS_SNOW]
    eps_soil = k[K_EPS_SOIL]
    eps_can = k[K_EPS_CAN]

    row = 0
    for d in range(365):
        doy = d + 1
        day_mean = tmean[d]
        day_amp = amplitude[d]
        day_precip = precip[d]
        day_is_snow = is_snow[d] > 0.5
        wet = day_precip > 0.0

        # Drought index: warm dry days accumulate, precipitation decays.
        if wet:
            drought_index = max(0.0, drought_index - day_precip)
        else:
            drought_index = drought_index + max(0.0, day_mean) / k[K_DROUGHT_DIVISOR]

        # Daily fire check (at most one ignition per year; the draw is
        # consumed either way via the pre-drawn array).
        if fire_day == 0:
            prob = fire_ignition_probability(
                k[K_FIRE_BASE], drought_index, k[K_FIRE_THRESHOLD], day_mean,
                k[K_FIRE_HOT_DAY], k[K_FIRE_MULT_MAX], k[K_FIRE_CON_WEIGHT],
                k[K_CONIFER_FRACTION])
            if fire_u[d] < prob:
                fire_day = doy
                fire_severity = (k[K_FIRE_SEV_LO]
                                 + (k[K_FIRE_SEV_HI] - k[K_FIRE_SEV_LO]) * fire_sev_u)

        # Deciduous leaf phenology and the stand's derived daily parameters.
        up = 1.0 / (1.0 + np.exp(-k[K_GROWTH_RATE] * (doy - k[K_GROWTH_START])))
        down = 1.0 / (1.0 + np.exp(-k[K_FALL_RATE] * (doy - k[K_FALL_START])))
        phen = up * (1.0 - down)
        lai = k[K_POT_LAI_CON] + k[K_POT_LAI_DEC] * phen
        a_can = 1.0 - np.exp(-k[K_CANOPY_EXT] * lai)
        albedo_dec = phen * k[K_ALBEDO_DEC] + (1.0 - phen) * k[K_ALBEDO_LEAFLESS]
        albedo_can = k[K_W_CON] * k[K_ALBEDO_CON] + (1.0 - k[K_W_CON]) * albedo_dec
        interception = ((k[K_W_CON] * k[K_INT_CON]
                         + (1.0 - k[K_W_CON]) * k[K_INT_DEC]) * lai / (lai + 1.0))
        canopy_cap = k[K_CAP_PER_LAI] * lai
        precip_step = day_precip / steps_per_day
        cloud = k[K_CLOUD_ATTEN] if wet else 1.0

        for step in range(steps_per_day):
            hour = (step + 0.5) * dt_hours
            t_air = air_temperature(day_mean, day_amp, hour, k[K_PEAK_HOUR])
            sw = shortwave_down(k[K_LATITUDE], doy, hour, k[K_TRANSMISSIVITY],
                                k[K_SOLAR_CONSTANT], cloud)
            lw_down = longwave_down(t_air, wet, k[K_EPS_ATM_CLEAR], k[K_EPS_ATM_OVERCAST])
            vpd = vapour_pressure_deficit(t_air, k[K_REL_HUMIDITY])

            if precip_step > 0.0:
                precip_in += precip_step
                swe_g, swe_c, swc = partition_precipitation(
                    precip_step, day_is_snow, swe_g, swe_c, swc, interception, canopy_cap)

            f_swc = swc / (k[K_STRESS_THRESHOLD] * k[K_MAX_WATER])
            if f_swc > 1.0:
                f_swc = 1.0
            elif f_swc < 0.0:
                f_swc = 0.0
            f_vpd = 1.0 / (1.0 + vpd / k[K_VPD_SCALE])
            t_air_c = t_air - T_FREEZE
            f_temp = (t_air_c - k[K_GPP_T_MIN]) / (k[K_GPP_T_FULL] - k[K_GPP_T_MIN])
            if f_temp > 1.0:
                f_temp = 1.0
            elif f_temp < 0.0:
                f_temp = 0.0
            stress = f_vpd * f_swc * f_temp

            par_abs = sw * k[K_PAR_FRACTION] * a_can
            gpp_rate = par_abs * k[K_LUE_EFF] * 1.0e-6 * stress  # gC/m2/s
            g_photo = gpp_rate * k[K_J_PER_GC]

            snow_route = swe_g > 0.0
            if snow_route:
                l_up_ground = eps_snow * SIGMA_SB * t_snow ** 4
            else:
                l_up_ground = eps_soil * SIGMA_SB * t_surf ** 4

            sw_abs_can = sw * a_can * (1.0 - albedo_can)
            le_cap_can = swc * k[K_LAT_VAPOR] / dt
            melt_cap_can = swe_c * k[K_LAT_FUSION] / dt
            g_ct_eff = k[K_G_CT] * a_can

            t_can, le_can, melt_can_flux, residual, status = solve_canopy(
                t_can, t_air, t_trunk, sw_abs_can, lw_down, l_up_ground, a_can,
                eps_can, k[K_H_CAN], g_ct_eff, k[K_PT_ALPHA], k[K_GAMMA_PSY],
                stress, le_cap_can, g_photo, melt_cap_can)
            if status == FAULT:
                out[R_FAULT] = 2.0
                out[R_FAULT_DAY] = doy
                out[R_FAULT_STEP] = step
                break
            abs_res = abs(residual)
            if abs_res > max_residual:
                max_residual = abs_res

            gpp_g += gpp_rate * dt
            ra_kg += respiration_timestep(k[K_BIOMASS], k[K_BIO_REF], k[K_R_BASE],
                                          k[K_Q10], t_can, k[K_T_REF], dt)
            rh_kg += respiration_timestep(k[K_SOIL_POOL], k[K_SOIL_REF], k[K_R_SOIL_BASE],
                                          k[K_Q10], t_surf, k[K_T_REF], dt)

            sw_ground = sw * (1.0 - a_can)
            l_down_ground = (1.0 - a_can) * lw_down + a_can * eps_can * SIGMA_SB * t_can ** 4
            le_cap_soil = swc * k[K_LAT_VAPOR] / dt - le_can
            if le_cap_soil < 0.0:
                le_cap_soil = 0.0

            (t_trunk, t_snow, t_surf, t_deep, melt_snow_flux, le_soil, cond_surf_deep,
             cond_deep_boundary, r_net_surface, h_surface, fault) = step_ground_nodes(
                t_trunk, t_snow, t_surf, t_deep, t_can, t_air, sw_ground, l_down_ground,
                swe_g, f_swc, le_cap_soil, k[K_ALBEDO_SNOW], k[K_ALBEDO_SOIL], eps_snow,
                eps_soil, k[K_H_TRUNK], k[K_H_SNOW], k[K_H_SOIL], g_ct_eff, k[K_G_TG],
                k[K_G_SD], k[K_G_BOUNDARY], k[K_T_BOUNDARY], k[K_C_TRUNK],
                k[K_C_SNOW_MIN], k[K_C_SURF], k[K_C_DEEP], k[K_PT_ALPHA],
                k[K_GAMMA_PSY], k[K_K_PACK], k[K_SNOW_DENSITY], k[K_D_SURFACE_LAYER],
                k[K_K_SOIL], k[K_LAT_FUSION], dt)
            if fault != 0:
                out[R_FAULT] = 1.0
                out[R_FAULT_DAY] = doy
                out[R_FAULT_STEP] = step
                break

            df = cond_deep_boundary * dt / k[K_THAW_DIVISOR]
            if df > 0.0:
                f_p += df
            else:
                f_n -= df

            swe_g, swe_c, swc, melt_mm, et_mm, runoff_mm = apply_melt_and_et(
                swe_g, swe_c, swc, k[K_MAX_WATER], melt_can_flux, melt_snow_flux,
                le_can, le_soil, k[K_LAT_FUSION], k[K_LAT_VAPOR], dt)
            et_out += et_mm
            runoff_out += runoff_mm
            melt_moved += melt_mm
            if swe_g > swe_max:
                swe_max = swe_g

            if trace_on:
                trace[row, 0] = doy
                trace[row, 1] = hour
                trace[row, 2] = t_air
                trace[row, 3] = sw
                trace[row, 4] = t_can
                trace[row, 5] = t_trunk
                trace[row, 6] = t_snow
                trace[row, 7] = t_surf
                trace[row, 8] = t_deep
                trace[row, 9] = swe_g
                trace[row, 10] = swe_c
                trace[row, 11] = swc
                trace[row, 12] = r_net_surface
                trace[row, 13] = h_surface
                trace[row, 14] = le_can
                trace[row, 15] = le_soil
                trace[row, 16] = gpp_rate
                trace[row, 17] = g_photo
                trace[row, 18] = melt_can_flux
                trace[row, 19] = melt_snow_flux
                trace[row, 20] = cond_surf_deep
                trace[row, 21] = cond_deep_boundary
                trace[row, 22] = residual
                row += 1
        if out[R_FAULT] != 0.0:
            break

    out[R_T_TRUNK] = t_trunk
    out[R_T_SNOW] = t_snow
    out[R_T_SURF] = t_surf
    out[R_T_DEEP] = t_deep
    out[R_T_CAN] = t_can
    out[R_SWE_GROUND] = swe_g
    out[R_SWE_CANOPY] = swe_c
    out[R_SWC] = swc
    out[R_DROUGHT] = drought_index
    out[R_GPP_KG] = gpp_g * 1.0e-3
    out[R_RA_KG] = ra_kg
    out[R_RH_KG] = rh_kg
    out[R_F_P] = f_p
    out[R_F_N] = f_n
    out[R_PRECIP] = precip_in
    out[R_ET] = et_out
    out[R_RUNOFF] = runoff_out
    out[R_MELT] = melt_moved
    out[R_FIRE_DAY] = fire_day
    out[R_FIRE_SEVERITY] = fire_severity if fire_day > 0 else 0.0
    out[R_MAX_RESIDUAL] = max_residual
    out[R_SWE_MAX] = swe_max
    return out


def pack_kernel_params(p, pot_lai_con: float, pot_lai_dec: float, w_con: float,
                       lue_eff: float, conifer_fraction: float, biomass: float,
                       soil: float, dt_seconds: float, steps_per_day: int) -> np.ndarray:
    """Flatten site parameters + stand-year scalars for the compiled loop."""
    k = np.zeros(N_KERNEL_PARAMS)
    k[K_LATITUDE] = p.latitude
    k[K_PEAK_HOUR] = p.peak_diurnal_hour
    k[K_REL_HUMIDITY] = p.relative_humidity
    k[K_TRANSMISSIVITY] = p.atmospheric_transmissivity
    k[K_CLOUD_ATTEN] = p.cloud_attenuation
    k[K_EPS_ATM_CLEAR] = p.emissivity_atm_clear
    k[K_EPS_ATM_OVERCAST] = p.emissivity_atm_overcast
    k[K_SOLAR_CONSTANT] = p.solar_constant
    k[K_GROWTH_START] = p.growth_start_day
    k[K_FALL_START] = p.fall_start_day
    k[K_GROWTH_RATE] = p.growth_rate
    k[K_FALL_RATE] = p.fall_rate
    k[K_POT_LAI_CON] = pot_lai_con
    k[K_POT_LAI_DEC] = pot_lai_dec
    k[K_W_CON] = w_con
    k[K_ALBEDO_CON] = p.base_albedo_conifer
    k[K_ALBEDO_DEC] = p.base_albedo_deciduous
    k[K_ALBEDO_LEAFLESS] = p.albedo_leafless_canopy
    k[K_CANOPY_EXT] = p.canopy_extinction
    k[K_INT_CON] = p.interception_conifer
    k[K_INT_DEC] = p.interception_deciduous
    k[K_CAP_PER_LAI] = p.canopy_snow_capacity_per_lai
    k[K_LUE_EFF] = lue_eff
    k[K_EPS_CAN] = p.emissivity_canopy
    k[K_EPS_SOIL] = p.emissivity_soil
    k[K_EPS_SNOW] = p.emissivity_snow
    k[K_ALBEDO_SNOW] = p.albedo_snow
    k[K_ALBEDO_SOIL] = p.albedo_soil
    k[K_PT_ALPHA] = p.priestley_taylor_alpha
    k[K_GAMMA_PSY] = p.psychrometric_constant
    k[K_J_PER_GC] = p.photosynthesis_energy_per_gc
    k[K_PAR_FRACTION] = p.par_fraction
    k[K_H_CAN] = p.conductance_canopy_air
    k[K_H_TRUNK] = p.conductance_trunk_air
    k[K_H_SNOW] = p.conductance_snow_air
    k[K_H_SOIL] = p.conductance_soil_air
    k[K_G_CT] = p.conductance_canopy_trunk
    k[K_G_TG] = p.conductance_trunk_ground
    k[K_G_SD] = p.soil_conductivity / p.soil_depth_surface_deep
    k[K_G_BOUNDARY] = p.soil_conductivity / p.soil_depth_deep_boundary
    k[K_T_BOUNDARY] = p.deep_boundary_temp
    k[K_C_TRUNK] = p.heat_capacity_trunk
    k[K_C_SNOW_MIN] = p.heat_capacity_snow_min
    k[K_C_SURF] = p.heat_capacity_soil_surface
    k[K_C_DEEP] = p.heat_capacity_soil_deep
    k[K_K_PACK] = p.snowpack_conductivity
    k[K_SNOW_DENSITY] = p.snow_density_ratio
    k[K_D_SURFACE_LAYER] = p.soil_surface_layer
    k[K_K_SOIL] = p.soil_conductivity
    k[K_MAX_WATER] = p.max_water_content
    k[K_STRESS_THRESHOLD] = p.stress_threshold
    k[K_LAT_FUSION] = p.latent_heat_fusion
    k[K_LAT_VAPOR] = p.latent_heat_vaporization
    k[K_BIOMASS] = biomass
    k[K_SOIL_POOL] = soil
    k[K_BIO_REF] = p.biomass_reference_pool
    k[K_SOIL_REF] = p.soil_reference_pool
    k[K_R_BASE] = p.base_respiration
    k[K_R_SOIL_BASE] = p.soil_respiration
    k[K_Q10] = p.q10_factor
    k[K_T_REF] = p.respiration_t_ref
    k[K_VPD_SCALE] = p.vpd_stress_scale
    k[K_GPP_T_MIN] = p.gpp_t_min
    k[K_GPP_T_FULL] = p.gpp_t_full
    k[K_THAW_DIVISOR] = p.thaw_degree_day_divisor
    k[K_FIRE_BASE] = p.fire_base_probability
    k[K_FIRE_THRESHOLD] = p.fire_drought_threshold
    k[K_FIRE_HOT_DAY] = p.fire_hot_day_temp
    k[K_FIRE_MULT_MAX] = p.fire_drought_mult_max
    k[K_FIRE_CON_WEIGHT] = p.fire_conifer_weight
    k[K_CONIFER_FRACTION] = conifer_fraction
    k[K_FIRE_SEV_LO] = p.fire_severity_low
    k[K_FIRE_SEV_HI] = p.fire_severity_high
    k[K_DT] = dt_seconds
    k[K_STEPS_PER_DAY] = steps_per_day
    k[K_DROUGHT_DIVISOR] = p.drought_temp_divisor
    return k
