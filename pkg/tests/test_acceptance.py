"""
Full-size simulation experiments. Deselected by default (see pytest.ini);
run with ``pytest -m slow``. Each takes minutes to hours on one core.
"""
import numpy as np
import pytest

from backend.models.entities import ChainConfig
from backend.services.experiment_runner import (
    run_baseline_equivalence, run_classification_comparison, run_contraction, run_dic_accuracy
)

pytestmark = pytest.mark.slow

SIMULATION_CHAIN = ChainConfig(iterations=10000, burn_in=5000, seed=2024, log_every=5000)


@pytest.fixture(scope="module")
def classification():
    return run_classification_comparison(SIMULATION_CHAIN, n=300, d_values=[18, 36], K=3, M=8, replicates=25, workers=4)


def _row(table, d, model):
    return table[(table["d"] == d) & (table["model"] == model)].iloc[0]


@pytest.mark.parametrize("d, low, high, ari, ari_tol", [
    (18, 0.085, 0.222, 0.79, 0.16),
    (36, 0.038, 0.100, 0.93, 0.08),
])
def test_overlapping_classification(classification, d, low, high, ari, ari_tol):
    row = _row(classification, d, "overlapping")
    assert low <= row["misclassification_mean"] <= high
    assert abs(row["ari_mean"] - ari) <= ari_tol


@pytest.mark.parametrize("d", [18, 36])
def test_overlapping_beats_flat_mixture(classification, d):
    assert _row(classification, d, "overlapping")["ari_mean"] > _row(classification, d, "flat_M8")["ari_mean"]


def test_dic_picks_true_k():
    table = run_dic_accuracy(SIMULATION_CHAIN, n_values=[25, 300], d=18, K=3, K_values=[2, 3, 4], replicates=10, workers=3)
    picked = table[table["K"] == 3].set_index("n")["frequency"]
    assert picked[300] >= 0.9
    assert picked[25] >= 0.5


def test_posterior_contracts():
    table = run_contraction(SIMULATION_CHAIN, n_values=[100, 500], d=18, K=3, replicates=25, workers=4)
    small = table[table["n"] == 100].sort_values(["parent", "event"])["posterior_sd"].to_numpy()
    large = table[table["n"] == 500].sort_values(["parent", "event"])["posterior_sd"].to_numpy()
    assert np.mean(large < small) >= 0.95


def test_flat_mixture_matches_without_overlap():
    table = run_baseline_equivalence(SIMULATION_CHAIN, n=300, d=18, K=3, replicates=25, workers=4).set_index("model")
    assert abs(table.loc["overlapping", "ari_mean"] - table.loc["flat_M4", "ari_mean"]) <= 0.05
