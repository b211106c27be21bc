import json
import os

import pytest

from backend.models.entities import Combiner
from backend.models.errors import ConfigurationError
from backend.services.experiment_registry import DEFAULT_CONFIG_PATH, ExperimentRegistry


def write_config(path, iterations=100):
    config = {
        "profiles": [
            {"id": "short", "label": "Short", "iterations": iterations, "burn_in": 40, "seed": 3},
            {"id": "max", "label": "Max", "iterations": 50, "burn_in": 10, "combiner": "max"},
        ],
        "experiments": [
            {"id": "sim", "label": "Sim", "kind": "simulate", "default_profile_id": "short", "params": {"n": 10}},
        ],
    }
    path.write_text(json.dumps(config), encoding="utf-8")
    return path


@pytest.fixture
def registry(tmp_path):
    return ExperimentRegistry(str(write_config(tmp_path / "experiments.json")))


class TestProfiles:
    def test_lists(self, registry):
        assert [p.id for p in registry.list_profiles()] == ["short", "max"]
        assert [e.id for e in registry.list_experiments()] == ["sim"]

    def test_chain_config(self, registry):
        config = registry.chain_config("short")
        assert (config.iterations, config.burn_in, config.seed) == (100, 40, 3)
        assert config.combiner == Combiner.MIN

    def test_overrides_skip_none(self, registry):
        config = registry.chain_config("short", seed=None, K=3, iterations=60)
        assert (config.seed, config.K, config.iterations) == (3, 3, 60)

    def test_experiment_default_profile(self, registry):
        assert registry.experiment_chain_config("sim").iterations == 100
        assert registry.experiment_chain_config("sim", "max").combiner == Combiner.MAX

    def test_invalid_override(self, registry):
        with pytest.raises(ValueError):
            registry.chain_config("short", burn_in=500)

    def test_unknown_ids(self, registry):
        with pytest.raises(ConfigurationError):
            registry.get_profile("nope")
        with pytest.raises(ConfigurationError):
            registry.get_experiment("nope")


def test_reloads_when_file_changes(tmp_path):
    path = write_config(tmp_path / "experiments.json")
    registry = ExperimentRegistry(str(path))
    write_config(path, iterations=200)
    later = path.stat().st_mtime + 5
    os.utime(path, (later, later))
    assert registry.chain_config("short").iterations == 200


def test_no_reload_when_disabled(tmp_path):
    path = write_config(tmp_path / "experiments.json")
    registry = ExperimentRegistry(str(path), auto_reload=False)
    write_config(path, iterations=200)
    later = path.stat().st_mtime + 5
    os.utime(path, (later, later))
    assert registry.chain_config("short").iterations == 100


def test_env_var_selects_file(tmp_path, monkeypatch):
    path = write_config(tmp_path / "other.json")
    monkeypatch.setenv("OVERLAP_CONFIG", str(path))
    assert ExperimentRegistry().config_path == path


def test_unknown_profile_reference(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({
        "profiles": [],
        "experiments": [{"id": "x", "kind": "simulate", "default_profile_id": "ghost"}],
    }))
    with pytest.raises(ConfigurationError):
        ExperimentRegistry(str(path))


def test_bad_profile_field(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"profiles": [{"id": "p", "label": "P", "sweeps": 3}]}))
    with pytest.raises(ConfigurationError):
        ExperimentRegistry(str(path))


def test_invalid_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(ConfigurationError):
        ExperimentRegistry(str(path))


def test_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        ExperimentRegistry(str(tmp_path / "none.json"))


def test_shipped_config_loads():
    registry = ExperimentRegistry(str(DEFAULT_CONFIG_PATH))
    ids = {e.id for e in registry.list_experiments()}
    assert {"sim_k3_d18", "classification", "equivalence", "contraction", "dic_accuracy", "real_data"} <= ids
    assert registry.chain_config("full_length").iterations == 30000
