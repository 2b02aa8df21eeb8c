import json

import numpy as np
import pytest

from riglht.config.manager import ConfigManager, RunConfig
from riglht.core.contrast import ExponentMode
from riglht.core.errors import ConfigError


@pytest.fixture
def manager(tmp_path, monkeypatch):
    monkeypatch.delenv("RIGLHT_THREADS", raising=False)
    return ConfigManager(tmp_path / "out")


def _write(tmp_path, payload):
    path = tmp_path / "run.json"
    path.write_text(json.dumps(payload))
    return path


def test_defaults_without_file(manager):
    run = manager.load_run_config(None)
    assert run == RunConfig()
    sim = manager.simulation_config(run)
    assert sim.p == 100 and sim.n_sizes == (20, 30, 45, 50)
    assert sim.level == 0.05 and sim.seed == 0 and sim.threads == 1
    assert sim.weights is None


def test_unknown_keys_are_rejected(manager, tmp_path):
    with pytest.raises(ConfigError, match="unknown key\\(s\\) in config: colour"):
        manager.load_run_config(_write(tmp_path, {"colour": "blue"}))
    with pytest.raises(ConfigError, match="size_grid"):
        manager.load_run_config(_write(tmp_path, {"size_grid": {"dims": [10]}}))


@pytest.mark.parametrize(
    "payload",
    [
        {"level": 1.5},
        {"replicates": "many"},
        {"records": 1},
        {"p": True},
        {"exponent_mode": "cube_root"},
        {"size_grid": {"models": ["model7"]}},
    ],
)
def test_schema_errors(manager, tmp_path, payload):
    with pytest.raises(ConfigError):
        manager.load_run_config(_write(tmp_path, payload))


def test_invalid_json(manager, tmp_path):
    path = tmp_path / "run.json"
    path.write_text("{not json")
    with pytest.raises(ConfigError, match="not valid JSON"):
        manager.load_run_config(path)


def test_contrast_presets(manager):
    labels = ("ctrl", "low", "high")
    manova = manager.resolve_contrast(RunConfig(contrast="manova"), labels)
    np.testing.assert_array_equal(manova.g_tilde, [[1, 0, -1], [0, 1, -1]])

    pair = manager.resolve_contrast(RunConfig(contrast="pairwise:high,ctrl"), labels)
    np.testing.assert_array_equal(pair.g_tilde, [[-1, 0, 1]])

    row = manager.resolve_contrast(
        RunConfig(contrast=[1, -2, 1], exponent_mode=ExponentMode.INVERSE_ROOT), labels
    )
    assert row.q == 1 and row.exponent_mode is ExponentMode.INVERSE_ROOT


def test_named_four_group_contrasts(manager):
    labels = ("a", "b", "c", "d")
    combination = manager.resolve_contrast(RunConfig(contrast="linear_combination"), labels)
    np.testing.assert_array_equal(combination.g_tilde, [[2, -2, -1, 3]])
    analysis = manager.resolve_contrast(RunConfig(contrast="data_analysis"), labels)
    np.testing.assert_array_equal(analysis.g_tilde, [[9, -8, 1, -1]])
    with pytest.raises(ConfigError, match="4 columns but the data has 3 groups"):
        manager.resolve_contrast(RunConfig(contrast="data_analysis"), labels[:3])


@pytest.mark.parametrize(
    "contrast", ["pairwise:ctrl,zzz", "helmert", [1, -1], [[1, -1, 0], [2, -2, 0], [0, 0, 0]], 3]
)
def test_bad_contrasts(manager, contrast):
    with pytest.raises(ConfigError):
        manager.resolve_contrast(RunConfig(contrast=contrast), ("ctrl", "low", "high"))


def test_weights(manager):
    assert manager.resolve_weights(RunConfig(), 4).p == 4
    explicit = manager.resolve_weights(RunConfig(weights={"a": [0, 0], "beta_sq": [1, 2]}), 2)
    np.testing.assert_array_equal(explicit.beta_sq, [1.0, 2.0])
    with pytest.raises(ConfigError):
        manager.resolve_weights(RunConfig(weights={"a": [0, 0], "beta_sq": [1, 2]}), 3)
    with pytest.raises(ConfigError):
        manager.resolve_weights(RunConfig(weights={"a": [0]}), 1)


def test_thread_budget_precedence(manager, tmp_path, monkeypatch):
    monkeypatch.setenv("RIGLHT_THREADS", "3")
    assert manager.simulation_config(RunConfig()).threads == 3
    assert manager.simulation_config(RunConfig(threads=2)).threads == 2
    assert manager.simulation_config(RunConfig(threads=2), threads=5).threads == 5

    with pytest.raises(ConfigError, match="thread budget must be >= 1, got 0"):
        manager.simulation_config(RunConfig(threads=0))
    with pytest.raises(ConfigError, match="got 0"):
        manager.simulation_config(RunConfig(threads=4), threads=0)

    monkeypatch.setenv("RIGLHT_THREADS", "zero")
    with pytest.raises(ConfigError):
        manager.default_threads()


def test_simulation_config_from_file(manager, tmp_path):
    run = manager.load_run_config(
        _write(
            tmp_path,
            {
                "p": 30,
                "n_sizes": [6, 7, 8],
                "covariance": [
                    {"kind": "scaled_identity", "scale": 2},
                    {"kind": "scaled_ar", "scale": 1, "rho": 0.3},
                    {"kind": "scaled_identity", "scale": 1},
                ],
                "distribution": "model3",
                "alternative": {"r": 0.1, "t": 0.2},
                "seed": 12,
                "level": 0.1,
            },
        )
    )
    sim = manager.simulation_config(run, seed=99)
    assert sim.seed == 99
    assert sim.level == 0.1
    assert sim.alternative.target_group == 2
    assert sim.covariances[1].rho == 0.3
    assert sim.contrast.k == 3


def test_mismatched_covariance_count(manager, tmp_path):
    run = manager.load_run_config(_write(tmp_path, {"n_sizes": [6, 7]}))
    with pytest.raises(ConfigError, match="4 covariances given for 2 groups"):
        manager.simulation_config(run)


def test_artefact_writers(manager):
    path = manager.write_json("report.json", {"x": 1.5})
    assert json.loads(path.read_text()) == {"x": 1.5}
    assert path.parent == manager.out_dir
