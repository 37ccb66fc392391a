import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from leopos.errors import DegenerateGeometryError, ScenarioGenerationError
from leopos.geometry import (ScenarioConfig, bearing_features, generate_scenario,
                             geometry_condition, los_matrix, los_unit_vector)


def test_default_scale_scenario():
    scen = generate_scenario(ScenarioConfig(m_beams=10, area_side_m=1000.0), 7)
    assert scen.beam_centers.shape == (10, 2)
    assert scen.m_beams == 10
    assert np.all((scen.beam_centers >= 0) & (scen.beam_centers <= 1000))
    assert np.all((scen.ut_true >= 0) & (scen.ut_true <= 1000))
    assert -100 <= scen.clock_bias_m <= 100
    np.testing.assert_allclose(scen.satellite_positions[:, :2], scen.beam_centers)
    np.testing.assert_allclose(scen.satellite_positions[:, 2], 1000.0)


def test_minimal_scenario_has_three_beams():
    for seed in range(5):
        scen = generate_scenario(ScenarioConfig(m_beams=3), seed)
        assert scen.beam_centers.shape == (3, 2)


def test_fewer_than_three_beams_rejected():
    with pytest.raises(ValueError):
        ScenarioConfig(m_beams=2)


def test_infeasible_separation_exhausts_budget():
    cfg = ScenarioConfig(m_beams=10, min_separation_m=2000.0, max_retries=20)
    with pytest.raises(ScenarioGenerationError):
        generate_scenario(cfg, 0)


def test_min_separation_respected():
    scen = generate_scenario(ScenarioConfig(min_separation_m=120.0), 3)
    d = np.linalg.norm(scen.beam_centers[:, None] - scen.beam_centers[None], axis=2)
    assert d[np.triu_indices(10, 1)].min() >= 120.0


def test_same_seed_bit_identical():
    a = generate_scenario(ScenarioConfig(), 99)
    b = generate_scenario(ScenarioConfig(), 99)
    assert np.array_equal(a.beam_centers, b.beam_centers)
    assert np.array_equal(a.ut_true, b.ut_true)
    assert a.clock_bias_m == b.clock_bias_m


def test_different_seeds_move_the_ut():
    uts = {tuple(generate_scenario(ScenarioConfig(), s).ut_true) for s in range(20)}
    assert len(uts) == 20


@pytest.mark.parametrize("seed", range(25))
def test_conditioning_bound_holds(seed):
    cfg = ScenarioConfig()
    scen = generate_scenario(cfg, seed)
    cond, smin = geometry_condition(scen.ut_true, scen.beam_centers)
    assert cond <= cfg.max_condition
    assert smin > 0.1


@pytest.mark.parametrize("x, c, expected", [
    ((1.0, 0.0), (0.0, 0.0), (1.0, 0.0)),
    ((1.0, 1.0), (0.0, 0.0), (np.sqrt(2) / 2, np.sqrt(2) / 2)),
    ((3.0, -4.0), (0.0, 0.0), (0.6, -0.8)),
])
def test_los_unit_vector(x, c, expected):
    np.testing.assert_allclose(los_unit_vector(x, c), expected, atol=1e-15)


def test_los_coincident_points():
    with pytest.raises(DegenerateGeometryError):
        los_unit_vector((2.0, 2.0), (2.0, 2.0))
    with pytest.raises(DegenerateGeometryError):
        los_matrix((0.0, 0.0), [(1.0, 0.0), (0.0, 0.0)])


@pytest.mark.parametrize("x, expected", [
    ((0.0, 1.0), (1.0, 0.0)),
    ((1.0, 0.0), (0.0, 1.0)),
    ((-1.0, 0.0), (0.0, -1.0)),
])
def test_bearing_features(x, expected):
    np.testing.assert_allclose(bearing_features(x, (0.0, 0.0)), expected, atol=1e-15)


def test_bearing_coincident():
    with pytest.raises(DegenerateGeometryError):
        bearing_features((1.0, 1.0), (1.0, 1.0))


coords = st.floats(-1e4, 1e4, allow_nan=False)


@settings(max_examples=200, deadline=None)
@given(coords, coords, coords, coords)
def test_los_is_unit_norm(px, py, cx, cy):
    if np.hypot(px - cx, py - cy) < 1e-3:
        return
    assert abs(np.linalg.norm(los_unit_vector((px, py), (cx, cy))) - 1.0) <= 1e-12
    s, c = bearing_features((px, py), (cx, cy))
    assert abs(s * s + c * c - 1.0) <= 1e-12


def test_los_rows_unit_norm_on_scenarios():
    scen = generate_scenario(ScenarioConfig(), 11)
    rng = np.random.default_rng(0)
    for p in rng.uniform(0, 1000, size=(50, 2)):
        norms = np.linalg.norm(los_matrix(p, scen.beam_centers), axis=1)
        assert np.max(np.abs(norms - 1.0)) <= 1e-12
