import math

import numpy as np
import pytest

import dai_lab


def test_linear_schedule():
    assert dai_lab.alpha(0, 20000) == 0.0
    assert dai_lab.alpha(5000, 20000) == 0.25
    assert dai_lab.alpha(40000, 20000) == 1.0
    assert dai_lab.alpha(123, 1000, "constant", 0.3) == 0.3


def test_interpolate_endpoints_and_midpoint():
    e, r = np.array([1.0, 0.0]), np.array([0.0, 1.0])
    np.testing.assert_array_equal(dai_lab.interpolate(e, r, 0.0), e)
    np.testing.assert_array_equal(dai_lab.interpolate(e, r, 1.0), r)
    np.testing.assert_array_equal(dai_lab.interpolate(e, r, 0.25), [0.75, 0.25])
    with pytest.raises(ValueError):
        dai_lab.interpolate(e, r, 1.5)


def test_env_step_matches_hand_computation():
    env = dai_lab.Env.at_state("pendulum_swingup", [math.pi / 2, 0.0])
    obs, reward, done = env.step(np.array([0.0]))
    assert obs[2] == pytest.approx(0.75)
    assert not done
    assert reward <= 0.0


def test_env_reset_is_seeded():
    a, b = dai_lab.Env("pendulum_swingup", 7), dai_lab.Env("pendulum_swingup", 7)
    np.testing.assert_array_equal(a.observation, b.observation)
    assert a.obs_dim == 3 and a.action_dim == 1


def test_scripted_expert():
    assert dai_lab.scripted_expert_action("pendulum_swingup", np.array([1.0, 0.0, 0.0]))[0] == 0.0
    u = dai_lab.scripted_expert_action("point_mass_2d", np.array([1.0, 0.0, 0.0, 0.0]))
    np.testing.assert_allclose(u, [-0.8, 0.0])
    stats = dai_lab.evaluate_expert("pendulum_swingup", episodes=20, seed=0)
    assert stats["mean"] >= -300.0
    assert stats["ci_lo"] <= stats["median"] <= stats["ci_hi"]


def test_python_policy_evaluation():
    stats = dai_lab.evaluate_policy("point_mass_2d", lambda obs: np.zeros(2), episodes=2, seed=3)
    assert len(stats["returns"]) == 2
    assert all(r <= 0.0 for r in stats["returns"])


def test_config_errors_list_every_bad_key():
    with pytest.raises(ValueError) as err:
        dai_lab.resolve_config({"bogus": "1", "td3.gama": "0.9"})
    assert "bogus" in str(err.value) and "td3.gama" in str(err.value)
    resolved = dai_lab.resolve_config({"algorithm": "td3_dai", "total_steps": "1000"})
    assert resolved["schedule.t_change"] == "500"


def test_short_training_run_is_deterministic():
    settings = {
        "algorithm": "td3_dai",
        "total_steps": "400",
        "eval_every": "200",
        "eval_episodes": "2",
        "td3.hidden": "8,8",
        "td3.batch_size": "16",
        "td3.learning_starts": "100",
    }
    a = dai_lab.train(settings)
    b = dai_lab.train(settings)
    assert a["metrics_csv"] == b["metrics_csv"]
    assert len(a["alpha"]) == 400
    assert [e["step"] for e in a["evals"]] == [200, 400]
    assert a["alpha"][99] == 0.5


def test_visitation_and_mixture_gap():
    path = [(0.0, 0.0)] * 50
    grid = dai_lab.visitation_grid("pendulum_swingup", [path], gamma=0.9)
    assert grid.shape == (32, 32)
    assert grid.sum() == pytest.approx(1.0, abs=1e-9)
    other = dai_lab.visitation_grid("pendulum_swingup", [[(2.0, 3.0)] * 50], gamma=0.9)
    assert dai_lab.total_variation("pendulum_swingup", grid, other) == pytest.approx(1.0)
    assert dai_lab.mixture_gap("pendulum_swingup", grid, grid, other, 0.0) < 1e-12


def test_cli_passthrough(tmp_path):
    out = tmp_path / "demo.bin"
    assert dai_lab.cli(["collect", "--episodes", "1", "--out", str(out)]) == 0
    assert out.read_bytes()[:8] == b"DAIDEMO1"
    assert dai_lab.cli(["nonsense"]) != 0
