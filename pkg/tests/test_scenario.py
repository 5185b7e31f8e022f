"""Scenario parsing, sample grids, synthetic terrain."""

import json
import math

import numpy as np
import pytest

from uavrel import dem
from uavrel.scenario import (
    Scenario,
    ScenarioError,
    parse_scenario,
    sample_grid,
    scenario_hash,
    serialize_scenario,
    synth_dem,
)


def test_empty_document_gives_table_defaults():
    s = parse_scenario("{}")
    assert s.r_un == 200.0 and s.sample_spacing == 10.0
    assert s.d_min == 400.0 and s.h_b == 100.0
    assert s.K == 8
    assert s.twr.sigma_c == pytest.approx(2.498, abs=1e-3)
    assert s.requirements.eta_req == 20.0 and s.requirements.eta_t == 18.0
    assert len(sample_grid(s)) == 1257


def test_eta_t_must_undercut_eta_req():
    doc = {"requirements": {"eta_req_m": 20.0, "eta_t_m": 25.0}}
    with pytest.raises(ScenarioError, match="eta_t"):
        parse_scenario(json.dumps(doc))


def test_round_trip_identity():
    doc = {
        "scenario": {"center": [50.0, -20.0], "r_un": 120.0, "spacing": 15.0, "sp_angles_deg": [10, 95, 200, 281, 350]},
        "channel": {"snr_min_db": 6.0},
        "twr": {"tau_d_s": 0.002},
        "requirements": {"eta_req_m": 30.0, "eta_t_m": 25.0},
    }
    s1 = parse_scenario(json.dumps(doc))
    s2 = parse_scenario(serialize_scenario(s1))
    assert s1 == s2
    assert scenario_hash(s1) == scenario_hash(s2)


def test_bad_json_and_bad_fields():
    with pytest.raises(ScenarioError):
        parse_scenario("not json {")
    with pytest.raises(ScenarioError, match="spacing"):
        parse_scenario(json.dumps({"scenario": {"spacing": -1.0}}))
    with pytest.raises(ScenarioError, match="sp_angles"):
        parse_scenario(json.dumps({"scenario": {"sp_angles_deg": []}}))


def test_sample_grid_sizes():
    assert len(sample_grid(Scenario(r_un=0.0))) == 1
    pts = sample_grid(Scenario(r_un=10.0, sample_spacing=10.0))
    assert len(pts) == 5
    assert len(sample_grid(Scenario())) == 1257


def test_sample_grid_translation_equivariance():
    a = sample_grid(Scenario(r_un=60.0, sample_spacing=20.0))
    b = sample_grid(Scenario(r_un=60.0, sample_spacing=20.0, center=(300.0, -150.0)))
    assert np.allclose(b, a + np.array([300.0, -150.0]))


def test_sample_grid_within_disc():
    s = Scenario(r_un=75.0, sample_spacing=10.0)
    pts = sample_grid(s)
    assert np.all(np.hypot(pts[:, 0], pts[:, 1]) <= 75.0 + 1e-9)


def test_sp_positions_on_ring():
    s = Scenario(center=(10.0, 20.0))
    pos = s.sp_positions()
    r = np.hypot(pos[:, 0] - 10.0, pos[:, 1] - 20.0)
    assert np.allclose(r, 400.0)
    assert np.all(pos[:, 2] == 100.0)


def test_scenario_hash_sensitivity():
    s = Scenario()
    assert scenario_hash(s) != scenario_hash(s.rotated(math.radians(5.0)))
    assert scenario_hash(s) == scenario_hash(Scenario())


def test_synth_flat_and_determinism():
    flat = synth_dem("flat", cell_size=50.0, half_extent=500.0, height=0.0)
    assert np.all(flat.elevation == 0.0)
    g1 = synth_dem("gaussian_hills", cell_size=50.0, half_extent=500.0, seed=99)
    g2 = synth_dem("gaussian_hills", cell_size=50.0, half_extent=500.0, seed=99)
    assert np.array_equal(g1.elevation, g2.elevation)


def test_synth_valley_blocks_cross_sightlines():
    # Floor width 300 m, 250 m ridges: a low SP across the valley has a
    # negative clearance margin toward the floor.
    grid = synth_dem("valley", cell_size=10.0, half_extent=700.0, floor_half_width=150.0, ridge_height=250.0, ridge_sigma=50.0)
    prof = dem.profile_between(grid, (0.0, -400.0, 100.0), (0.0, 100.0, 1.5), 5.0)
    assert dem.min_height_margin(prof) < 0.0


def test_synth_unknown_kind():
    with pytest.raises(ValueError):
        synth_dem("mesa")
