import math

import numpy as np
import pytest

import deepcv


def test_version_and_presets():
    assert deepcv.__version__ == deepcv.version()
    names = deepcv.preset_names()
    assert "exchange2d" in names and len(names) == 12
    cfg = deepcv.preset("exchange2d")
    assert cfg["grid"]["steps"] == 50


def test_margrabe_closed_form():
    sigma_bar = math.sqrt(0.18)
    price = deepcv.margrabe_price(1.0, 1.0, 0.5, sigma_bar)
    phi = 0.5 * (1.0 + math.erf(0.15 / math.sqrt(2.0)))
    assert price == pytest.approx(2.0 * phi - 1.0, abs=1e-12)
    d1, d2 = deepcv.margrabe_delta(1.0, 1.0, 0.5, sigma_bar)
    assert d1 == pytest.approx(phi, abs=1e-12)
    assert d2 == pytest.approx(-(1.0 - phi), abs=1e-12)


def test_simulation_shapes_and_moments():
    states = deepcv.simulate(1, 0.05, 0.3, 0.5, 1, 20000, np.ones(1), seed=3)
    assert len(states) == 2
    assert states[1].shape == (1, 20000)
    logs = np.log(states[1][0])
    assert abs(logs.mean() - (0.05 - 0.045) * 0.5) < 4 * math.sqrt(0.045 / 20000)


def test_chi2_interval_and_stopping_rule():
    v = [0.0] * 10
    v[0], v[1] = math.sqrt(4.5), -math.sqrt(4.5)
    lo, hi = deepcv.variance_chi2_ci(v)
    assert lo == pytest.approx(0.4731, abs=1e-3)
    assert hi == pytest.approx(3.3328, abs=1e-3)
    assert deepcv.stopping_criterion([0.3] * 200, 100, 5e-6)
    assert not deepcv.stopping_criterion([0.3] * 150, 100, 5e-6)


def test_strict_config_errors():
    with pytest.raises(deepcv.ConfigError, match="unknown key"):
        deepcv.canonical_config({"bogus": 1})
    cfg = deepcv.canonical_config({"preset": "basket2d", "output": "a"})
    assert deepcv.config_hash(cfg) == deepcv.config_hash(dict(cfg, output="b"))


def test_train_and_evaluate_round_trip(tmp_path):
    cfg = {
        "preset": "exchange2d",
        "grid": {"steps": 3},
        "training": {"batch_size": 32, "window": 3, "max_iterations": 6},
        "evaluation": {"n_mc": 2, "n_in": 500, "sigma_sweep": []},
        "output": str(tmp_path),
    }
    summary = deepcv.train(cfg)
    assert summary["training_steps"] > 0
    report = deepcv.evaluate(cfg)
    assert math.isfinite(report["reduction_factor"])
    exact = deepcv.evaluate(dict(cfg, grid={"steps": 50}), exact_margrabe=True)
    assert exact["reduction_factor"] > 50
    with pytest.raises(deepcv.IoError):
        deepcv.evaluate(cfg, model=str(tmp_path / "missing"))
