import numpy as np
import pytest

from permaforest.params import SAMPLED_ROWS, SiteParameters, fixed_site_parameters
from permaforest.rng import RngStream


@pytest.fixture
def site_params():
    return fixed_site_parameters(1)


@pytest.fixture
def midpoint_params():
    """Every sampled field pinned to its range midpoint."""
    pins = {key: 0.5 * (lo + hi) for key, lo, hi, _ in SAMPLED_ROWS}
    return fixed_site_parameters(1, overrides=pins)


def make_params(**pins) -> SiteParameters:
    return fixed_site_parameters(1, overrides=pins)


def weather_stream(seed=1, episode=0):
    return RngStream(seed, stream="weather", episode=episode)


def disturb_stream(seed=1, episode=0):
    return RngStream(seed, stream="disturbance", episode=episode)


def rel_err(a, b):
    return abs(a - b) / max(1e-12, abs(b))


def assert_rows_equal(rows_a, rows_b):
    assert len(rows_a) == len(rows_b)
    for ra, rb in zip(rows_a, rows_b):
        assert ra == rb


np.seterr(all="warn")
