import numpy as np
import pytest

from backend.models.entities import ChainConfig
from backend.services.experiment_runner import (
    align_to_truth, no_overlap_weights, pooled_posterior_sd, run_baseline_equivalence, run_contraction
)
from backend.services.mixture_algebra import build_membership_matrix
from backend.utils.simulation_generator import SimulationGenerator, simulation_config


class TestPooledSd:
    def test_pools_draws_across_replicates(self):
        centre = np.full((1, 1, 1), 0.3)
        first = np.concatenate([centre - 0.01, centre + 0.01])
        second = np.concatenate([centre + 0.03, centre + 0.05])
        pooled = pooled_posterior_sd([first, second])
        assert pooled.shape == (1, 1)
        assert pooled[0, 0] == pytest.approx(0.02582, abs=1e-5)
        per_replicate = np.mean([first.std(axis=0, ddof=1), second.std(axis=0, ddof=1)])
        assert per_replicate == pytest.approx(0.01414, abs=1e-5)

    def test_single_draw_has_no_spread(self):
        assert np.all(pooled_posterior_sd([np.full((1, 2, 3), 0.5)]) == 0.0)


def test_align_recovers_swapped_parents():
    true_pi = np.array([[0.1, 0.2], [0.8, 0.9]])
    draws = np.stack([true_pi[::-1]] * 3)
    assert np.allclose(align_to_truth(draws, true_pi), true_pi)


@pytest.mark.parametrize("K", [2, 3])
def test_no_overlap_weights(K):
    weights = np.array(no_overlap_weights(K))
    assert weights.sum() == pytest.approx(1.0)
    members = build_membership_matrix(K).sum(axis=1)
    assert np.all(weights[members >= 2] == 0.0)
    assert weights[0] == pytest.approx(0.1)


def test_simulation_settings_for_two_parents():
    sim = simulation_config(20, 4, 2, seed=3)
    assert sim.alpha_star == [0.25] * 4
    assert sim.base_column == pytest.approx([0.2, 0.9])
    dataset = SimulationGenerator(sim).generate()
    assert dataset.true_pi.shape == (2, 4)
    assert dataset.true_labels.max() < 4


def test_contraction_with_two_parents():
    table = run_contraction(ChainConfig(iterations=6, burn_in=3, seed=1), n_values=[30], d=5, K=2, replicates=2)
    assert len(table) == 2 * 5
    assert sorted(table["parent"].unique()) == [1, 2]
    assert (table["posterior_sd"] > 0).all()


def test_flat_mixture_matches_without_overlap():
    chain = ChainConfig(iterations=300, burn_in=150, seed=12)
    table = run_baseline_equivalence(chain, n=120, d=16, K=2, replicates=3).set_index("model")
    assert table.loc["overlapping", "replicates"] == 3
    assert abs(table.loc["overlapping", "ari_mean"] - table.loc["flat_M3", "ari_mean"]) <= 0.05
