import math

import numpy as np
import pytest

import smb


def test_worked_model_step():
    s, degenerate = smb.model_step([1.0, 0.0], [1.0, 1.0], alpha=1.0, eta=0.5)
    assert not degenerate
    np.testing.assert_allclose(s, [-0.375, -0.125], atol=1e-15)
    c = smb.compute_coefficients([1.0, 0.0], [1.0, 1.0], alpha=1.0, eta=0.5)
    assert c["sigma"] == pytest.approx(3.0)
    assert c["theta"] == pytest.approx(8.0)
    assert smb.compute_coefficients([0.0, 0.0], [1.0, 1.0], alpha=1.0) is None


def test_dense_oracle_agrees():
    rng = np.random.default_rng(0)
    for dim in (2, 5, 9):
        g = rng.normal(size=dim)
        g_t = g + rng.normal(size=dim)
        H = smb.dense_H(g, g_t, alpha=0.3, eta=0.8)
        B = smb.dense_B(g, g_t, alpha=0.3, eta=0.8)
        s, _ = smb.model_step(g, g_t, alpha=0.3, eta=0.8)
        np.testing.assert_allclose(s, -0.3 * H @ g, rtol=1e-9, atol=1e-14)
        np.testing.assert_allclose(H @ B, np.eye(dim), atol=1e-9)
        lo, hi = smb.eigen_extremes(B)
        y = g_t - g
        assert lo == pytest.approx(1 / 0.8, rel=1e-8)
        assert hi == pytest.approx(2 * np.linalg.norm(y) / np.linalg.norm(g) + 1 / 0.8, rel=1e-8)
        v = rng.normal(size=dim)
        np.testing.assert_allclose(smb.apply_scaling(g, g_t, v, alpha=0.3, eta=0.8), -0.3 * H @ v, rtol=1e-9)


def test_sampler_and_schedules():
    a = smb.sample_batch(7, 0, 100, 16)
    assert a == smb.sample_batch(7, 0, 100, 16)
    assert a != smb.sample_batch(7, 1, 100, 16)
    assert smb.sample_batch(7, 0, 10, 10) == list(range(10))
    with pytest.raises(smb.SmbError):
        smb.sample_batch(7, 0, 10, 11)
    assert smb.auto_schedule_update(1.0, 6, 100, alpha_max=10.0) == 0.9
    assert smb.auto_schedule_update(9.9, 0, 100, alpha_max=10.0) == 10.0
    assert smb.stepsize_at("diminishing", 1.0, 4) == pytest.approx(4 ** -0.75)
    assert smb.alpha_max_lower_bound(1.0, 0.5) == pytest.approx((math.sqrt(5) - 1) / 2, abs=1e-12)
    assert smb.theorem1_stepsize_cap(1.0, 0.5, 1.0) == 0.5
    np.testing.assert_allclose(smb.theorem1_pmf([0.1, 0.2], 1.0, 0.5, 1.0), [0.4, 0.6])


def test_quadratic_run_decreases():
    out = smb.run(problem="quadratic", optimizer="smb", alpha=0.1, epochs=5, batch_size=256)
    losses = [r["train_loss"] for r in out["records"]]
    assert len(losses) == 5
    assert all(b < a for a, b in zip(losses, losses[1:]))
    assert not out["diverged"]
    csv, code = smb.run_csv(problem="quadratic", optimizer="smb", alpha=0.1, epochs=2)
    assert code == 0
    assert "epoch,iter,train_loss" in csv


def test_sweep_and_verify():
    cells = smb.sweep(grid=[0.1, 1.0], variants=["sgd", "smb"], jobs=1, problem="logistic", epochs=2)
    assert [(c["variant"], c["alpha"]) for c in cells] == [("sgd", 0.1), ("sgd", 1.0), ("smb", 0.1), ("smb", 1.0)]
    assert not any(c["diverged"] for c in cells if c["variant"] == "smb")
    report = smb.verify(trials=200)
    assert all(p["passed"] for p in report.values())
    with pytest.raises(ValueError):
        smb.verify(trials=0)


def test_gradcheck_and_config_errors():
    rep = smb.gradcheck(problem="mlp", width=8, subset=500)
    assert rep["passed"]
    assert set(rep["groups"]) == {"W1", "b1", "W2", "b2"}
    with pytest.raises(smb.SmbError):
        smb.run(problem="quadratic", eta=1.5)
    with pytest.raises(smb.SmbError):
        smb.run(colour="blue")
    assert smb.default_config()["optimizer"] == "smb"
