import math

import numpy as np
import pytest

import rinekf


def test_robust_costs():
    assert rinekf.huber_rho(3.0, 1.5) == pytest.approx(6.75, abs=1e-12)
    assert rinekf.huber_weight(3.0, 1.5) == pytest.approx(0.5, abs=1e-12)
    assert rinekf.tukey_weight(1.0, 1.5) == pytest.approx(25.0 / 81.0, abs=1e-12)
    assert rinekf.tukey_rho(2.0, 1.5) == pytest.approx(0.375, abs=1e-12)


def test_lie_roundtrip():
    rng = np.random.default_rng(0)
    for _ in range(20):
        xi = rng.normal(size=12) * 0.5
        x = rinekf.group_exp(xi)
        assert x.shape == (6, 6)
        np.testing.assert_allclose(rinekf.group_log(x), xi, atol=1e-10)
        r = rinekf.so3_exp(xi[:3])
        np.testing.assert_allclose(r.T @ r, np.eye(3), atol=1e-12)


def test_adjoint_identity():
    rng = np.random.default_rng(1)
    x = rinekf.group_exp(rng.normal(size=9))
    eta = rng.normal(size=9) * 0.3
    lhs = x @ rinekf.group_exp(eta) @ np.linalg.inv(x)
    rhs = rinekf.group_exp(rinekf.group_adjoint(x) @ eta)
    np.testing.assert_allclose(lhs, rhs, atol=1e-10)


def test_simulate_filter_evaluate(tmp_path):
    cfg = rinekf.Config()
    cfg.horizon = 12.0  # keeps the first slip
    cfg.seed = 5
    cfg.trim_slips()
    assert cfg.num_slips == 1
    log, truth = rinekf.simulate(cfg)
    assert log.num_imu == 4800
    assert log.num_joints == 1201
    assert len(truth) == 4801

    cfg.cost = "tukey"
    est = rinekf.run_filter(log, cfg)
    assert len(est) == log.num_joints
    error = rinekf.ate(est, truth)
    assert 0.0 < error < 0.05
    trans, rot = rinekf.rpe(est, truth, 1.0)
    assert trans >= 0.0 and rot >= 0.0

    rinekf.save_log(tmp_path / "log.csv", log)
    rinekf.save_trajectory(tmp_path / "est.txt", est)
    loaded_log = rinekf.load_log(tmp_path / "log.csv")
    again = rinekf.run_filter(loaded_log, cfg)
    np.testing.assert_allclose(again.positions, est.positions, atol=1e-12)
    np.testing.assert_array_equal(rinekf.run_filter(loaded_log, cfg).positions, again.positions)
    loaded = rinekf.load_trajectory(tmp_path / "est.txt")
    np.testing.assert_array_equal(loaded.positions, est.positions)


def test_trajectory_from_arrays():
    t = np.linspace(0.0, 1.0, 11)
    pos = np.stack([t, np.zeros_like(t), np.zeros_like(t)], axis=1)
    quat = np.tile([0.0, 0.0, 0.0, 1.0], (11, 1))
    ref = rinekf.Trajectory(t, pos, quat)
    est = rinekf.Trajectory(t, pos + [1.0, 0.0, 0.0], quat)
    assert rinekf.ate(est, ref, "none") == pytest.approx(1.0, abs=1e-12)
    assert rinekf.ate(est, ref, "se3") == pytest.approx(0.0, abs=1e-9)
    with pytest.raises(ValueError):
        rinekf.Trajectory(t, pos, quat[:, :3])


def test_config_errors():
    with pytest.raises(ValueError, match="invalid config"):
        rinekf.Config.from_json("{}")
    cfg = rinekf.Config.from_json(rinekf.default_config_text())
    assert cfg.scale_c == 9.0
    with pytest.raises(Exception):
        cfg.cost = "cauchy"
    assert not math.isnan(cfg.horizon)
