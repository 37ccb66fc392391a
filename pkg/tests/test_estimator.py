import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from leopos.errors import DegenerateGeometryError, DivergenceError, RankDeficiencyError
from leopos.estimator import (
    check_weights,
    closed_form_init,
    crlb_position,
    positioning_error,
    wls_solve,
    wls_step,
)
from leopos.geometry import ScenarioConfig, generate_scenario
from leopos.measurement import Observation, synthesize

from oracles import crlb_trace_2d, normal_equation_update


def _instance(rng, m):
    centers = rng.uniform(0, 1000, size=(m, 2))
    x_true = rng.uniform(0, 1000, size=2)
    b = rng.uniform(-100, 100)
    z = np.linalg.norm(centers - x_true, axis=1) + b + rng.normal(0, 5, size=m)
    w = rng.uniform(0.05, 1, size=m)
    return centers, z, w / w.sum(), rng.uniform(0, 1000, size=2), rng.uniform(-50, 50)


def test_wls_step_matches_oracle(rng):
    for _ in range(200):
        m = int(rng.integers(4, 13))
        centers, z, w, x0, b0 = _instance(rng, m)
        x, b = wls_step(z, centers, w, x0, b0, ridge=0.0)
        xo, bo = normal_equation_update(z, centers, w, x0, b0)
        np.testing.assert_allclose(x, xo, rtol=1e-9, atol=1e-9)
        assert b == pytest.approx(bo, rel=1e-9, abs=1e-9)


def test_wls_step_ridge_matches_oracle(rng):
    centers, z, w, x0, b0 = _instance(rng, 6)
    x, b = wls_step(z, centers, w, x0, b0, ridge=0.5)
    xo, bo = normal_equation_update(z, centers, w, x0, b0, ridge=0.5)
    np.testing.assert_allclose(x, xo, rtol=1e-9)
    assert b == pytest.approx(bo, rel=1e-9)


def test_wls_step_fixed_point():
    scen = generate_scenario(ScenarioConfig(), 4)
    z = np.linalg.norm(scen.beam_centers - scen.ut_true, axis=1) + scen.clock_bias_m
    x, b = wls_step(z, scen.beam_centers, np.full(10, 0.1), scen.ut_true, scen.clock_bias_m, 0.0)
    np.testing.assert_allclose(x, scen.ut_true, atol=1e-9)
    assert b == pytest.approx(scen.clock_bias_m, abs=1e-9)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), c=st.floats(0.01, 100.0))
def test_weight_scale_invariance(seed, c):
    rng = np.random.default_rng(seed)
    centers, z, w, x0, b0 = _instance(rng, 7)
    x1, b1 = wls_step(z, centers, w, x0, b0, ridge=0.0)
    x2, b2 = wls_step(z, centers, c * w, x0, b0, ridge=0.0)
    np.testing.assert_allclose(x1, x2, rtol=1e-8, atol=1e-7)
    assert b1 == pytest.approx(b2, rel=1e-8, abs=1e-7)


def test_wls_step_accepts_observation():
    centers = np.array([[0.0, 0.0], [100.0, 0.0], [0.0, 100.0], [100.0, 100.0]])
    z = np.linalg.norm(centers - [30.0, 40.0], axis=1)
    obs = Observation(z, np.ones(4), np.ones(4))
    a = wls_step(obs, centers, np.full(4, 0.25), (50.0, 50.0), 0.0)
    b = wls_step(z, centers, np.full(4, 0.25), (50.0, 50.0), 0.0)
    np.testing.assert_array_equal(a[0], b[0])


def test_wls_step_input_errors():
    centers = np.array([[0.0, 0.0], [100.0, 0.0], [0.0, 100.0]])
    z = np.array([50.0, 60.0, 70.0])
    w = np.full(3, 1 / 3)
    with pytest.raises(ValueError):
        wls_step(np.array([np.nan, 1.0, 1.0]), centers, w, (10.0, 10.0), 0.0)
    with pytest.raises(ValueError):
        wls_step(z, centers, w, (10.0, 10.0), 0.0, ridge=-1.0)
    with pytest.raises(DegenerateGeometryError):
        wls_step(z, centers, w, (0.0, 0.0), 0.0)


def test_noiseless_recovery_many_scenarios():
    for seed in range(100):
        scen = generate_scenario(ScenarioConfig(), seed)
        z = np.linalg.norm(scen.beam_centers - scen.ut_true, axis=1) + scen.clock_bias_m
        sol = wls_solve(z, scen.beam_centers, np.full(10, 0.1), scen.scene_center, ridge=0.0)
        assert positioning_error(sol.position, scen.ut_true) <= 1e-6
        assert abs(sol.clock_bias - scen.clock_bias_m) <= 1e-6
        assert 1 <= sol.iterations <= 10
        assert sol.residuals.shape == (10,)


def test_minimal_geometry_exact():
    centers = np.array([[0.0, 0.0], [800.0, 100.0], [300.0, 900.0]])
    x_true, b = np.array([420.0, 310.0]), 37.0
    z = np.linalg.norm(centers - x_true, axis=1) + b
    sol = wls_solve(z, centers, np.full(3, 1 / 3), (400.0, 400.0), ridge=0.0, max_iter=50, tol=1e-9)
    np.testing.assert_allclose(sol.position, x_true, atol=1e-6)
    assert sol.clock_bias == pytest.approx(b, abs=1e-6)


def test_collinear_centers_rank_deficient():
    # iterate on the line of centers: every LoS vector is +-x, y unobservable
    centers = np.c_[np.linspace(0, 900, 6), np.full(6, 500.0)]
    z = np.linalg.norm(centers - [400.0, 200.0], axis=1)
    with pytest.raises(RankDeficiencyError):
        wls_solve(z, centers, np.full(6, 1 / 6), (450.0, 500.0), ridge=0.0)


def test_too_few_weights_rank_deficient_even_with_ridge():
    centers = np.array([[0.0, 0.0], [800.0, 100.0], [300.0, 900.0], [600.0, 600.0]])
    z = np.linalg.norm(centers - [420.0, 310.0], axis=1)
    with pytest.raises(RankDeficiencyError):
        wls_solve(z, centers, np.array([0.5, 0.5, 0.0, 0.0]), (400.0, 400.0), ridge=1e-3)


def test_solve_argument_validation():
    centers = np.array([[0.0, 0.0], [800.0, 100.0], [300.0, 900.0]])
    z = np.array([500.0, 500.0, 500.0])
    w = np.full(3, 1 / 3)
    with pytest.raises(ValueError):
        wls_solve(z, centers, w, (1.0, 1.0), max_iter=0)
    with pytest.raises(ValueError):
        wls_solve(z, centers, w, (1.0, 1.0), tol=0.0)


def test_divergence_error():
    centers = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    z = np.array([0.0, 5e4, 1e5, -3e4])
    with pytest.raises(DivergenceError):
        wls_solve(z, centers, np.full(4, 0.25), (0.5, 0.4), ridge=0.0, scene_scale=1.0)


def test_condition_monotone_in_ridge():
    scen = generate_scenario(ScenarioConfig(), 9)
    z = np.linalg.norm(scen.beam_centers - scen.ut_true, axis=1) + scen.clock_bias_m
    w = np.full(10, 0.1)
    conds = [wls_solve(z, scen.beam_centers, w, scen.ut_true, ridge=lam,
                       b_init=scen.clock_bias_m).condition_estimate
             for lam in (0.0, 1e-6, 1e-3, 1e-1, 1.0, 10.0)]
    assert all(b <= a * (1 + 1e-12) for a, b in zip(conds, conds[1:]))


def test_closed_form_init_noiseless():
    scen = generate_scenario(ScenarioConfig(), 11)
    z = np.linalg.norm(scen.beam_centers - scen.ut_true, axis=1) + scen.clock_bias_m
    x, b = closed_form_init(z, scen.beam_centers, np.full(10, 0.1))
    np.testing.assert_allclose(x, scen.ut_true, atol=1e-6)
    assert b == pytest.approx(scen.clock_bias_m, abs=1e-6)
    assert closed_form_init(z[:3], scen.beam_centers[:3], np.full(3, 1 / 3)) is None


def test_multistart_picks_lower_cost():
    scen = generate_scenario(ScenarioConfig(), 12)
    obs = synthesize(scen, np.full(10, 0.9), 0)
    w = np.full(10, 0.1)
    far = scen.scene_center + np.array([5000.0, -5000.0])
    sol = wls_solve(obs, scen.beam_centers, w, far, multistart=True)
    assert positioning_error(sol.position, scen.ut_true) < 10.0


def test_check_weights():
    check_weights([0.5, 0.5])
    for bad in ([0.6, 0.6], [-0.1, 1.1], [[0.5, 0.5]]):
        with pytest.raises(ValueError):
            check_weights(bad)


def test_positioning_error_examples(rng):
    assert positioning_error((1.0, 2.0), (1.0, 2.0)) == 0.0
    assert positioning_error((3.0, 4.0), (0.0, 0.0)) == 5.0
    for _ in range(100):
        a, b = rng.normal(size=2) * 100, rng.normal(size=2) * 100
        assert positioning_error(a, b) == pytest.approx(math.hypot(*(a - b)), rel=1e-14)
    with pytest.raises(ValueError):
        positioning_error((1.0, 2.0), (1.0, 2.0, 3.0))


def test_crlb_cross_geometry():
    centers = [(100.0, 0.0), (-100.0, 0.0), (0.0, 100.0), (0.0, -100.0)]
    # hand value: J = diag(2, 2, 4) / sigma^2, position trace = sigma^2
    assert crlb_position(centers, (0.0, 0.0), [3.0] * 4) == pytest.approx(9.0, rel=1e-12)
    assert crlb_trace_2d(centers, (0.0, 0.0), [3.0] * 4) == pytest.approx(9.0, rel=1e-12)


def test_crlb_matches_oracle(rng):
    for _ in range(50):
        centers = rng.uniform(0, 1000, size=(8, 2))
        x = rng.uniform(0, 1000, size=2)
        sig = rng.uniform(0.5, 50, size=8)
        assert crlb_position(centers, x, sig) == pytest.approx(
            crlb_trace_2d(centers.tolist(), x.tolist(), sig.tolist()), rel=1e-9)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), c=st.floats(0.1, 10.0))
def test_crlb_scaling_and_monotonicity(seed, c):
    rng = np.random.default_rng(seed)
    centers = rng.uniform(0, 1000, size=(6, 2))
    x = rng.uniform(0, 1000, size=2)
    sig = rng.uniform(0.5, 50, size=6)
    base = crlb_position(centers, x, sig)
    assert crlb_position(centers, x, c * sig) == pytest.approx(c * c * base, rel=1e-9)
    more = crlb_position(np.vstack([centers, rng.uniform(0, 1000, size=(1, 2))]), x,
                         np.append(sig, rng.uniform(0.5, 50)))
    assert more <= base * (1 + 1e-9)


def test_crlb_errors():
    with pytest.raises(DegenerateGeometryError):
        crlb_position([(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)], (5.0, 0.0), [1.0, 1.0, 1.0])
    with pytest.raises(ValueError):
        crlb_position([(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)], (5.0, 5.0), [1.0, 0.0, 1.0])
