"""Water stores and routing: canopy snow, ground snowpack, soil bucket.

All stores are in mm of liquid-water equivalent per unit ground area
(1 mm == 1 kg/m2). Mass is conserved exactly per timestep:
precipitation in == change in stores + evapotranspiration + runoff.
"""

from __future__ import annotations

from dataclasses import dataclass

from ._jit import jit


@dataclass
class WaterState:
    swe_ground: float = 0.0
    swe_canopy: float = 0.0
    swc: float = 0.0
    # annual ledgers (reset once per simulated year)
    precip_total: float = 0.0
    et_total: float = 0.0
    runoff_total: float = 0.0
    melt_total: float = 0.0

    def stores(self) -> float:
        return self.swe_ground + self.swe_canopy + self.swc

    def reset_ledgers(self):
        self.precip_total = 0.0
        self.et_total = 0.0
        self.runoff_total = 0.0
        self.melt_total = 0.0


@jit
def partition_precipitation(precip_mm: float, is_snow: bool, swe_ground: float,
                            swe_canopy: float, swc: float,
                            interception_efficiency: float,
                            canopy_capacity: float):
    """Route one timestep of precipitation.

    Snow is intercepted by the canopy up to its storage capacity; throughfall
    lands on the ground snowpack. Rain falls through entirely: onto the
    snowpack when one exists (refreeze assumed), into the soil otherwise.
    Returns (swe_ground, swe_canopy, swc).
    """
    if precip_mm <= 0.0:
        return swe_ground, swe_canopy, swc
    if is_snow:
        room = canopy_capacity - swe_canopy
        if room < 0.0:
            room = 0.0
        intercepted = precip_mm * interception_efficiency
        if intercepted > room:
            intercepted = room
        swe_canopy += intercepted
        swe_ground += precip_mm - intercepted
    else:
        if swe_ground > 0.0:
            swe_ground += precip_mm
        else:
            swc += precip_mm
    return swe_ground, swe_canopy, swc


@jit
def apply_melt_and_et(swe_ground: float, swe_canopy: float, swc: float,
                      max_water_content: float, melt_can_flux: float,
                      melt_snow_flux: float, le_can: float, le_soil: float,
                      lat_fusion: float, lat_vapor: float, dt: float):
    """Convert melt/latent energy fluxes (W/m2) to mass moves.

    Melt drains the respective snow store into the soil bucket; ET leaves the
    soil bucket; overflow beyond capacity runs off. The energy side was
    already capped against the stores, so pure arithmetic cannot go negative
    beyond float noise (clamped). Returns
    (swe_ground, swe_canopy, swc, melt_mm, et_mm, runoff_mm).
    """
    melt_can = melt_can_flux * dt / lat_fusion
    if melt_can > swe_canopy:
        melt_can = swe_canopy
    melt_snow = melt_snow_flux * dt / lat_fusion
    if melt_snow > swe_ground:
        melt_snow = swe_ground
    swe_canopy -= melt_can
    swe_ground -= melt_snow
    swc += melt_can + melt_snow

    et = (le_can + le_soil) * dt / lat_vapor
    if et > swc:
        et = swc
    swc -= et

    runoff = swc - max_water_content
    if runoff < 0.0:
        runoff = 0.0
    swc -= runoff
    return swe_ground, swe_canopy, swc, melt_can + melt_snow, et, runoff
