"""Boreal forest energy/water/carbon simulator with a two-objective
management environment, baseline policy-learning algorithms, and an
evaluation harness."""

__version__ = "0.1.0"

from .env import ForestEnv, decode_action, encode_action  # noqa: E402,F401
from .params import (  # noqa: E402,F401
    SiteParameters,
    fixed_site_parameters,
    normalize_site_parameters,
    sample_site_parameters,
)
from .rng import RngStream  # noqa: E402,F401
from .sim import AnnualMetrics, Simulator, initial_stand  # noqa: E402,F401
from .stand import StandState  # noqa: E402,F401
