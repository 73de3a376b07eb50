import json
from pathlib import Path

import numpy as np
import pytest
from numpy.testing import assert_allclose

from rsma_rm.scenario import (
    DEMANDS_A,
    DEMANDS_B,
    Scenario,
    ScenarioError,
    default_scenario,
    load_scenario,
    save_scenario,
    scenario_from_dict,
    scenario_to_dict,
)

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"


def test_defaults():
    sc = default_scenario()
    assert sc.r_target == DEMANDS_A
    assert sc.n_users == 5 and sc.n_feeds == 4
    assert sc.trials == 20 and sc.seed == 0
    assert np.rad2deg(sc.perturbation.delta_fb_rad) == pytest.approx(5.0)
    assert np.rad2deg(sc.perturbation.delta_ce_rad) == pytest.approx(2.0)
    assert sc.physics.per_feed_power_w == pytest.approx(0.1419, abs=1e-4)


def test_minimal_file_matches_defaults():
    sc = load_scenario(SCENARIOS / "minimal.json")
    assert scenario_to_dict(sc) == scenario_to_dict(default_scenario())


@pytest.mark.parametrize("name", ["default.json", "demands_b.json", "perfect_csi.json", "minimal.json"])
def test_shipped_files_load(name):
    load_scenario(SCENARIOS / name)


def test_demands_b_file():
    assert load_scenario(SCENARIOS / "demands_b.json").r_target == DEMANDS_B


@pytest.mark.parametrize("sc", [
    default_scenario(),
    default_scenario(DEMANDS_B, 0.0, 0.0, trials=3, seed=7),
    default_scenario(fixed_users=True),
])
def test_save_load_roundtrip(tmp_path, sc):
    path = tmp_path / "s.json"
    save_scenario(sc, path)
    back = load_scenario(path)
    assert scenario_to_dict(back) == scenario_to_dict(sc)
    assert back.physics == sc.physics
    assert back.perturbation == sc.perturbation
    assert back.opts == sc.opts


def test_gains_in_db_roundtrip():
    d = scenario_to_dict(default_scenario())
    assert d["physics"]["g_max_dbi"] == pytest.approx(38.5)
    assert d["physics"]["g_rx_dbi"] == pytest.approx(39.7)


def test_fixed_users_pin_geometry(rng):
    sc = default_scenario(fixed_users=True)
    assert sc.trial_geometry(rng) is sc.geometry


def test_users_redrawn_inside_their_beams(rng):
    sc = default_scenario()
    g = sc.trial_geometry(rng)
    centers = g.beam_centers[list(g.user_beam_assignment)]
    assert np.all(np.linalg.norm(g.user_positions - centers, axis=1) <= g.beam_radius_m + 1e-9)
    assert not np.allclose(g.user_positions, sc.trial_geometry(rng).user_positions)


def test_user_positions_in_file_pin_users():
    d = {"r_target": [1, 1, 1, 1, 1],
         "geometry": {"user_positions_m": [[0, 0], [20000, 0], [0, 20000], [20000, 20000], [21000, 20000]]}}
    sc = scenario_from_dict(d)
    assert sc.fixed_users
    assert_allclose(sc.geometry.user_positions[4], [21000, 20000])


@pytest.mark.parametrize("d,field", [
    ({}, "r_target"),
    ({"r_target": "abc"}, "r_target"),
    ({"r_target": [1, 2]}, "r_target"),
    ({"r_target": [1, 1, 1, 1, -1]}, "r_target"),
    ({"r_target": [1, 1, 1, 1, "x"]}, "r_target"),
    ({"r_target": [1] * 5, "colour": 1}, "scenario"),
    ({"r_target": [1] * 5, "physics": {"bandwith_hz": 1}}, "physics"),
    ({"r_target": [1] * 5, "physics": {"bandwidth_hz": -1}}, "physics"),
    ({"r_target": [1] * 5, "perturbation": {"delta_fb_deg": -1}}, "perturbation"),
    ({"r_target": [1] * 5, "optimizer": {"eta": 2}}, "optimizer"),
    ({"r_target": [1] * 5, "optimizer": {"objective_norm": "L9"}}, "optimizer"),
    ({"r_target": [1] * 5, "geometry": {"beam_radius_m": "wide"}}, "geometry"),
    ({"r_target": [1] * 5, "trials": 0}, "trials"),
])
def test_invalid_fields_are_named(d, field):
    with pytest.raises(ScenarioError, match=field):
        scenario_from_dict(d)


def test_bad_json_and_missing_file(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(ScenarioError, match="invalid JSON"):
        load_scenario(p)
    with pytest.raises(ScenarioError):
        load_scenario(tmp_path / "missing.json")


def test_with_returns_copy():
    sc = default_scenario()
    sc2 = sc.with_(seed=3)
    assert sc2.seed == 3 and sc.seed == 0
    assert isinstance(sc2, Scenario)


def test_file_is_plain_json(tmp_path):
    save_scenario(default_scenario(), tmp_path / "s.json")
    json.loads((tmp_path / "s.json").read_text())
