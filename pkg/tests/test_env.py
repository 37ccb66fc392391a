import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from leopos.codebook import build_codebook
from leopos.env import BeamEnv, EnvConfig, RewardConfig, entropy, reward


@pytest.fixture(scope="module")
def env():
    return BeamEnv(EnvConfig(steps=100))


def test_entropy_examples():
    assert entropy(np.full(10, 0.1)) == pytest.approx(math.log(10), abs=1e-12)
    assert entropy(np.eye(10)[3]) == 0.0
    assert entropy([0.5, 0.5] + [0.0] * 8) == pytest.approx(math.log(2), abs=1e-12)


def test_entropy_bounds_over_codebook():
    for w in build_codebook().actions:
        assert -1e-15 <= entropy(w) <= math.log(10) + 1e-12


def test_reward_examples():
    cfg0 = RewardConfig(tau=50.0, alpha=0.0, beta=0.0)
    assert reward(50.0, np.full(10, 0.1), np.zeros(10), cfg0) == pytest.approx(-1.0, abs=1e-12)
    assert reward(0.0, np.full(10, 0.1), np.ones(10), RewardConfig(beta=0.0)) == pytest.approx(0.0, abs=1e-12)
    expected = -0.04 - 0.1 * 0.2 - 0.05 * (1 - math.log(10))
    assert reward(10.0, np.full(10, 0.1), np.full(10, 0.8), RewardConfig()) == pytest.approx(expected, abs=1e-12)
    assert expected == pytest.approx(0.005129, abs=1e-6)


@settings(max_examples=100, deadline=None)
@given(e1=st.floats(0, 1e4), e2=st.floats(0, 1e4), seed=st.integers(0, 1000))
def test_reward_monotone_in_error(e1, e2, seed):
    rng = np.random.default_rng(seed)
    w = rng.dirichlet(np.ones(10))
    q = rng.uniform(0, 1, 10)
    lo, hi = sorted((e1, e2))
    assert reward(hi, w, q, RewardConfig()) <= reward(lo, w, q, RewardConfig())


def test_reward_config_validation():
    with pytest.raises(ValueError):
        RewardConfig(tau=0.0)
    with pytest.raises(ValueError):
        RewardConfig(alpha=-1.0)


def test_reset_state_layout(env):
    s = env.reset(1)
    assert s.shape == (60,)
    blocks = s.reshape(10, 6)
    np.testing.assert_allclose(blocks[:, 5], 0.1)
    np.testing.assert_array_equal(blocks[:, 4], 0.0)
    np.testing.assert_allclose(blocks[:, 1] ** 2 + blocks[:, 2] ** 2, 1.0)
    # ranked layout: SINR feature descends through the slots
    assert np.all(np.diff(blocks[:, 3]) <= 0)


def test_reset_deterministic(env):
    a = env.reset(7)
    b = BeamEnv(EnvConfig()).reset(7)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, env.reset(8))


def test_episode_length_and_done():
    env = BeamEnv(EnvConfig(steps=100))
    for seed in range(3):
        env.reset(seed)
        n = 0
        done = False
        while not done:
            out = env.step(50)
            n += 1
            done = out.done
            assert done == (n == 100)
        assert n == 100
        with pytest.raises(RuntimeError):
            env.step(0)


def test_one_hot_is_rank_deficient(env):
    env.reset(3)
    out = env.step(0)
    assert out.info["rank_deficient"]
    assert out.reward == env.config.rank_penalty
    np.testing.assert_array_equal(out.info["estimate"], env.scenario.scene_center)
    assert not out.done


def test_trajectory_determinism():
    acts = np.random.default_rng(0).integers(0, 106, size=30)

    def roll():
        env = BeamEnv(EnvConfig(steps=30))
        env.reset(11)
        return [(o.reward, o.error_m) for o in (env.step(int(a)) for a in acts)]

    assert roll() == roll()


def test_state_ranges_random_rollouts():
    env = BeamEnv(EnvConfig(steps=40))
    rng = np.random.default_rng(5)
    for seed in range(5):
        s = env.reset(seed)
        for _ in range(40):
            out = env.step(int(rng.integers(env.n_actions)))
            blk = out.next_state.reshape(10, 6)
            assert np.all((blk[:, 0] >= 0) & (blk[:, 0] <= 1))
            assert np.all(np.abs(blk[:, 1:3]) <= 1)
            assert np.all((blk[:, 3] >= 0) & (blk[:, 3] <= 1))
            assert np.all(np.abs(blk[:, 4]) <= 1)
            assert blk[:, 5].sum() == pytest.approx(1.0, abs=1e-9)
            assert np.isfinite(out.reward) and out.error_m >= 0


def test_reward_floor():
    env = BeamEnv(EnvConfig(steps=5))
    env.reset(2)
    for _ in range(5):
        assert env.step(int(np.random.default_rng(0).integers(106))).reward >= -10.0


def test_step_weights_matches_action(env):
    env.reset(4)
    w = env.weights_for(60)
    a = env.step(60)
    env.reset(4)
    b = env.step_weights(w)
    assert a.reward == b.reward and a.error_m == b.error_m


def test_codebook_size_mismatch():
    with pytest.raises(ValueError):
        BeamEnv(EnvConfig(), build_codebook(m=5))


def test_env_config_validation():
    with pytest.raises(ValueError):
        EnvConfig(steps=0)
    with pytest.raises(ValueError):
        EnvConfig(multistart="sometimes")
