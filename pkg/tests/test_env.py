import math

import numpy as np
import pytest

from uavrelay.geometry import Position3D, ScenarioConfig, AreaBounds
from uavrelay.env import EnvState, EnvAction, RewardParams, RelayPlacementEnv


class _StubSystem:
    """Stands in for the full simulator: a deterministic rate surface."""

    def __init__(self, scenario, rate_fn):
        self.scenario = scenario
        self.rate_fn = rate_fn
        self.calls = 0

    def second_hop_rate(self, xy, num_realizations, rng):
        self.calls += 1
        return float(self.rate_fn(np.asarray(xy, dtype=float)))


def _make_env(rate_fn=lambda p: 5.0, threshold=1.0, initial=(50.0, 50.0), seed=0):
    scenario = ScenarioConfig(
        uav_initial=Position3D(initial[0], initial[1], 20.0),
        num_users=2,
        users_per_group=2,
    )
    system = _StubSystem(scenario, rate_fn)
    params = RewardParams(rate_threshold=threshold)
    return RelayPlacementEnv(system, params, seed=seed), system


def test_reset_normalization():
    env, _ = _make_env(initial=(50.0, 50.0))
    s = env.reset()
    assert (s.x_norm, s.y_norm) == (0.5, 0.5)
    env, _ = _make_env(initial=(0.0, 0.0))
    assert _round(env.reset()) == (0.0, 0.0)
    env, _ = _make_env(initial=(100.0, 100.0))
    assert _round(env.reset()) == (1.0, 1.0)


def _round(s):
    return (round(s.x_norm, 12), round(s.y_norm, 12))


def test_reset_rejects_out_of_bounds_initial():
    scenario = ScenarioConfig(
        uav_initial=Position3D(120.0, 50.0, 20.0), num_users=2, users_per_group=2
    )
    system = _StubSystem(scenario, lambda p: 1.0)
    with pytest.raises(ValueError):
        RelayPlacementEnv(system, RewardParams())


def test_step_reward_above_threshold_is_rate():
    env, _ = _make_env(rate_fn=lambda p: 5.0, threshold=1.0)
    env.reset()
    res = env.step(np.array([0.5, -0.5]))
    assert res.reward == pytest.approx(5.0)
    assert res.rate == pytest.approx(5.0)
    assert not res.out_of_bounds


def test_step_reward_below_threshold_penalty():
    env, _ = _make_env(rate_fn=lambda p: 0.5, threshold=1.0)
    env.reset()
    res = env.step(np.array([0.5, 0.0]))
    assert res.reward == -1.0
    assert res.rate == pytest.approx(0.5)


def test_step_out_of_bounds_clamps_and_penalizes():
    env, system = _make_env(initial=(100.0, 50.0))
    env.reset()
    res = env.step(np.array([1.0, 0.0]))
    assert res.reward == -5.0
    assert res.out_of_bounds
    assert math.isnan(res.rate)
    assert env.position[0] == 100.0
    # no rate evaluation happens on an out-of-bounds move
    assert system.calls == 0


def test_step_zero_action_keeps_position_bit_exact():
    env, _ = _make_env(initial=(37.125, 62.5))
    env.reset()
    before = env.position
    env.step(np.array([0.0, 0.0]))
    after = env.position
    assert after[0] == before[0] and after[1] == before[1]


def test_step_rejects_oversized_action():
    env, _ = _make_env()
    env.reset()
    with pytest.raises(ValueError):
        env.step(np.array([1.5, 0.0]))
    env.step(EnvAction(1.0, -1.0))  # boundary magnitudes are allowed


def test_reward_case_exhaustive():
    # for any (position, action, rate) exactly one of the three cases fires
    rng = np.random.default_rng(42)
    rate_holder = {"v": 0.0}
    env, _ = _make_env(rate_fn=lambda p: rate_holder["v"], threshold=2.0)
    for _ in range(500):
        start = rng.uniform(0, 100, 2)
        env.uav_initial = Position3D(start[0], start[1], 20.0)
        env.reset()
        action = rng.uniform(-1, 1, 2)
        rate_holder["v"] = rng.uniform(0, 4)
        res = env.step(action)
        candidate = start + action
        if not env.bounds.contains(candidate[0], candidate[1]):
            assert res.reward == -5.0
        elif rate_holder["v"] >= 2.0:
            assert res.reward == pytest.approx(rate_holder["v"])
        else:
            assert res.reward == -1.0
        s = res.next_state
        assert 0.0 <= s.x_norm <= 1.0 and 0.0 <= s.y_norm <= 1.0


def test_state_and_action_validation():
    with pytest.raises(ValueError):
        EnvState(1.1, 0.0)
    with pytest.raises(ValueError):
        EnvState(0.0, -0.01)
    a = EnvAction(0.25, -0.5)
    assert np.allclose(a.as_array(), [0.25, -0.5])


def test_reward_params_validation():
    with pytest.raises(ValueError):
        RewardParams(rate_threshold=-1.0)
    with pytest.raises(ValueError):
        RewardParams(train_realizations=0)


def test_trace_recording():
    env, _ = _make_env(rate_fn=lambda p: 3.0)
    env.record_trace = True
    env.reset()
    env.step(np.array([0.5, 0.5]))
    env.step(np.array([-0.25, 0.0]))
    assert len(env.trace) == 2
    t, x, y, ax, ay, reward, rate = env.trace[1]
    assert t == 2
    assert x == pytest.approx(50.25) and y == pytest.approx(50.5)
    assert reward == pytest.approx(3.0)


def test_set_initial_for_warm_started_runs():
    env, _ = _make_env()
    env.set_initial(Position3D(70.0, 60.0, 20.0))
    s = env.reset()
    assert (s.x_norm, s.y_norm) == (0.7, 0.6)
    with pytest.raises(ValueError):
        env.set_initial(Position3D(120.0, 60.0, 20.0))
