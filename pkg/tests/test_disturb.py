import numpy as np
import pytest

from conftest import disturb_stream, make_params
from permaforest import disturb as D
from permaforest.stand import AgeDistribution, StandState


def make_stand(conifer_fraction=0.5, density=1000.0):
    stems = np.zeros((2, 5))
    stems[0, 3] = density * conifer_fraction
    stems[1, 3] = density * (1.0 - conifer_fraction)
    return StandState(age=AgeDistribution(stems), biomass_carbon=5.0, soil_carbon=10.0)


def test_fire_gated_by_drought_threshold():
    p = make_params()
    prob = D.fire_ignition_probability(0.0005, p.fire_drought_threshold - 1.0,
                                       p.fire_drought_threshold, 25.0, 15.0, 4.0, 1.0, 0.5)
    assert prob == 0.0


def test_fire_gated_by_hot_day_threshold():
    prob = D.fire_ignition_probability(0.0005, 50.0, 25.0, 10.0, 15.0, 4.0, 1.0, 0.5)
    assert prob == 0.0


def test_zero_base_probability_never_ignites():
    p = make_params(fire_base_probability=0.0001)
    p.values["fire_base_probability"] = 0.0
    stand = make_stand()
    rng = disturb_stream(1)
    for _ in range(100_000):
        prob = D.fire_ignition_probability(0.0, 100.0, 30.0, 25.0, 15.0, 4.0, 1.0, 1.0)
        assert prob == 0.0
    report = D.fire_check(stand, p, 100.0, 25.0, rng)
    assert not report.fire_occurred


def test_conifers_burn_more_readily():
    args = (0.0005, 60.0, 30.0, 25.0, 15.0, 4.0, 1.0)
    assert (D.fire_ignition_probability(*args, 1.0)
            > D.fire_ignition_probability(*args, 0.0))


def test_fire_check_consumes_two_draws_on_both_paths():
    p = make_params()
    stand = make_stand()
    quiet = disturb_stream(2)
    D.fire_check(stand, p, 0.0, 5.0, quiet)  # gated off -> no event
    assert quiet.draws == 2
    p.values["fire_base_probability"] = 0.0005
    hot = disturb_stream(2)
    D.fire_check(stand, p, 200.0, 25.0, hot)
    assert hot.draws == 2


def test_fire_severity_within_configured_interval():
    p = make_params()
    p.values["fire_base_probability"] = 1.0  # force ignition
    stand = make_stand(1.0)
    for seed in range(30):
        report = D.fire_check(stand, p, 200.0, 25.0, disturb_stream(seed))
        assert report.fire_occurred
        assert p.fire_severity_low <= report.fire_mortality_fraction <= p.fire_severity_high
        assert report.fire_carbon_fraction == report.fire_mortality_fraction


def test_warmer_winters_raise_outbreak_probability():
    base = dict(base_probability=0.03, winter_ref_c=-25.0, winter_slope=0.08,
                winter_mult_min=0.2, winter_mult_max=3.0, density=1000.0,
                density_ref=1000.0, density_mult_min=0.5, density_mult_max=2.0)
    cold = D.insect_outbreak_probability(mean_winter_temp_c=-30.0, **base)
    warm = D.insect_outbreak_probability(mean_winter_temp_c=-25.0, **base)
    warmer = D.insect_outbreak_probability(mean_winter_temp_c=-20.0, **base)
    assert cold < warm < warmer


def test_denser_stands_spread_outbreaks():
    base = dict(base_probability=0.03, mean_winter_temp_c=-25.0, winter_ref_c=-25.0,
                winter_slope=0.08, winter_mult_min=0.2, winter_mult_max=3.0,
                density_ref=1000.0, density_mult_min=0.5, density_mult_max=2.0)
    sparse = D.insect_outbreak_probability(density=500.0, **base)
    dense = D.insect_outbreak_probability(density=1800.0, **base)
    assert dense > sparse


def test_zero_insect_probability_means_no_outbreaks():
    p = make_params()
    p.values["insect_base_probability"] = 0.0
    stand = make_stand()
    for seed in range(200):
        report = D.insect_check(stand, p, -20.0, disturb_stream(seed))
        assert not report.insect_occurred


def test_insect_check_consumes_one_draw():
    p = make_params()
    rng = disturb_stream(3)
    D.insect_check(make_stand(), p, -25.0, rng)
    assert rng.draws == 1


def test_insect_bias_kills_conifers_four_to_one():
    stems = np.zeros((2, 5))
    stems[0, 3] = 400.0
    stems[1, 3] = 600.0
    new, stem_frac, carbon_frac = D.insect_mortality(stems, 0.04, 0.25)
    killed_con = 400.0 - new[0, 3]
    killed_dec = 600.0 - new[1, 3]
    assert killed_con == pytest.approx(400.0 * 0.04, rel=1e-12)
    assert killed_dec == pytest.approx(600.0 * 0.04 * 0.25, rel=1e-12)
    # same age class on both sides, so carbon share equals stem share
    assert carbon_frac == pytest.approx(stem_frac, rel=1e-12)
    assert (new >= 0.0).all()


def test_pure_deciduous_outbreak_kills_at_reduced_rate():
    stems = np.zeros((2, 5))
    stems[1, 3] = 1000.0
    _, stem_frac, _ = D.insect_mortality(stems, 0.04, 0.25)
    assert stem_frac == pytest.approx(0.04 * 0.25, rel=1e-12)


def test_fire_application_preserves_nonnegative_stems():
    stems = np.array([[10.0, 5.0, 3.0, 2.0, 1.0], [4.0, 3.0, 2.0, 1.0, 0.5]])
    burned = D.apply_fire_to_stems(stems, 0.6)
    assert (burned >= 0.0).all()
    assert burned.sum() == pytest.approx(stems.sum() * 0.4, rel=1e-12)
