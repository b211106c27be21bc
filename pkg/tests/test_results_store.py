import json

import numpy as np
import pandas as pd
import pytest

from backend.models.entities import PCM, ChainConfig, IncidenceMatrix, RunManifest
from backend.models.errors import DataFormatError
from backend.services.diagnostics_service import map_allocate, posterior_confusion_matrix
from backend.services.gibbs_sampler import run_chain
from backend.services.results_store import ResultsStore, read_draws, read_manifest


@pytest.fixture
def fitted():
    rng = np.random.default_rng(8)
    data = IncidenceMatrix(y=(rng.random((20, 4)) < 0.4).astype(int))
    samples = run_chain(data, ChainConfig(iterations=12, burn_in=6, seed=2, K=2))
    return data, samples


def model_manifest(samples):
    return RunManifest(
        command="fit", software_version="test", seed=samples.seed,
        model={"kind": samples.kind.value, "K": samples.K, "combiner": samples.combiner.value},
    )


def test_allocations_survive_a_reread(tmp_path, fitted):
    data, samples = fitted
    store = ResultsStore(tmp_path)
    avg = samples.averaged_allocations
    store.write_allocations(avg, data, samples)
    again = pd.read_csv(tmp_path / "summaries" / "allocations.csv", index_col=0)
    assert np.max(np.abs(again.to_numpy(dtype=float) - avg)) <= 1e-12
    assert again.columns.tolist() == ["z=(0,0)", "z=(1,0)", "z=(0,1)", "z=(1,1)"]


def test_draws_reread(tmp_path, fitted):
    _, samples = fitted
    store = ResultsStore(tmp_path)
    store.write_draws(samples)
    store.write_manifest(model_manifest(samples))
    again = read_draws(tmp_path)
    assert again.K == 2
    assert again.T == samples.T
    assert np.array_equal(again.sweeps, samples.sweeps)
    assert np.allclose(again.pi, samples.pi, rtol=0, atol=1e-15)
    assert np.allclose(again.alpha_star, samples.alpha_star, rtol=0, atol=1e-15)


def test_draws_need_a_model_entry(tmp_path, fitted):
    _, samples = fitted
    store = ResultsStore(tmp_path)
    store.write_draws(samples)
    store.write_manifest(RunManifest(command="simulate", software_version="test"))
    with pytest.raises(DataFormatError):
        read_draws(tmp_path)


def test_missing_manifest(tmp_path):
    with pytest.raises(FileNotFoundError):
        read_manifest(tmp_path)


def test_empty_pcm_rows_are_zero(tmp_path, fitted):
    _, samples = fitted
    raw = np.array([[0.0] * 4, [0.0, 2.0, 1.0, 0.0], [0.0] * 4, [0.0] * 4])
    pcm = PCM(raw=raw, rescaled=np.vstack([np.zeros(4), raw[1] / 3, np.zeros((2, 4))]), row_units=np.array([0, 3, 0, 0]))
    ResultsStore(tmp_path).write_pcm(pcm, samples)
    frame = pd.read_csv(tmp_path / "tables" / "pcm_rescaled.csv", index_col=0)
    assert frame.loc["z=(0,0)"].tolist() == [0.0] * 4
    assert frame.loc["z=(1,0)"].sum() == pytest.approx(1.0)
    raw_frame = pd.read_csv(tmp_path / "tables" / "pcm_raw.csv", index_col=0)
    assert raw_frame["units"].tolist() == [0, 3, 0, 0]


def test_full_write(tmp_path, fitted):
    data, samples = fitted
    store = ResultsStore(tmp_path)
    avg = samples.averaged_allocations
    labels = map_allocate(avg)
    store.write_results(samples, data, avg, labels, posterior_confusion_matrix(samples, data), selected_K=2)
    store.write_manifest(model_manifest(samples))
    for relative in ("draws/alpha_star.csv", "draws/pi.csv", "summaries/map_labels.csv",
                     "summaries/labels.txt", "tables/pcm_raw.csv", "tables/dic_scan.csv"):
        assert (tmp_path / relative).exists()
    assert len(list(tmp_path.glob("manifest*.json"))) == 1
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["model"]["K"] == 2
    map_frame = pd.read_csv(tmp_path / "summaries" / "map_labels.csv")
    assert map_frame["heir"].tolist() == (labels + 1).tolist()
