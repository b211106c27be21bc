import numpy as np
import pytest

from backend.models.entities import Combiner, SimConfig
from backend.models.errors import ConfigurationError
from backend.services.mixture_algebra import build_membership_matrix, combine_heir_probs
from backend.utils.simulation_generator import (
    REFERENCE_ALPHA_STAR, SimulationGenerator, build_pi_columns, generate_dataset, reference_config
)


class TestPiColumns:
    def test_six_lexicographic_permutations(self):
        cols = build_pi_columns([0.2, 0.5, 0.9], K=3, d=6)
        assert cols[:, 0].tolist() == [0.2, 0.5, 0.9]
        assert [tuple(c) for c in cols.T] == [
            (0.2, 0.5, 0.9), (0.2, 0.9, 0.5), (0.5, 0.2, 0.9),
            (0.5, 0.9, 0.2), (0.9, 0.2, 0.5), (0.9, 0.5, 0.2),
        ]

    def test_single_parent(self):
        assert build_pi_columns([0.4], K=1, d=4).tolist() == [[0.4] * 4]

    def test_cyclic_repetition(self):
        cols = build_pi_columns([0.2, 0.5], K=2, d=5)
        assert [tuple(c) for c in cols.T] == [(0.2, 0.5), (0.5, 0.2), (0.2, 0.5), (0.5, 0.2), (0.2, 0.5)]

    def test_columns_are_permutations(self):
        cols = build_pi_columns([0.2, 0.5, 0.9], K=3, d=18)
        for c in cols.T:
            assert sorted(c) == [0.2, 0.5, 0.9]

    def test_bad_base(self):
        with pytest.raises(ConfigurationError):
            build_pi_columns([0.2, 0.5], K=3, d=6)


class TestSimConfig:
    def test_reference_weights(self):
        cfg = reference_config()
        assert cfg.alpha_star == [0.1, 0.25, 0.20, 0.1, 0.15, 0.1, 0.05, 0.05]
        assert (cfg.n, cfg.d, cfg.K) == (300, 18, 3)

    def test_weights_off_simplex(self):
        with pytest.raises(ValueError):
            SimConfig(n=10, d=3, K=1, alpha_star=[0.5, 0.6], base_column=[0.5])

    def test_weights_length(self):
        with pytest.raises(ValueError):
            SimConfig(n=10, d=3, K=2, alpha_star=[0.5, 0.5], base_column=[0.2, 0.5])


class TestGenerate:
    def test_reproducible(self):
        a = generate_dataset(reference_config(n=50, seed=4))
        b = generate_dataset(reference_config(n=50, seed=4))
        assert np.array_equal(a.data.y, b.data.y)
        assert np.array_equal(a.true_labels, b.true_labels)

    def test_shapes(self):
        ds = generate_dataset(reference_config(n=40, d=6, seed=1))
        assert ds.data.y.shape == (40, 6)
        assert ds.true_labels.shape == (40,)
        assert ds.true_pi.shape == (3, 6)
        assert ds.true_alpha_star == pytest.approx(REFERENCE_ALPHA_STAR)

    def test_empty_cluster_rows_are_zero(self):
        ds = generate_dataset(reference_config(n=500, seed=2))
        assert np.all(ds.data.y[ds.true_labels == 0] == 0)

    def test_heir_frequencies(self):
        n = 10_000
        ds = generate_dataset(reference_config(n=n, d=6, seed=3))
        p = np.asarray(REFERENCE_ALPHA_STAR)
        freq = np.bincount(ds.true_labels, minlength=8) / n
        assert np.all(np.abs(freq - p) < 4 * np.sqrt(p * (1 - p) / n))

    def test_attendance_rates(self):
        n = 10_000
        ds = generate_dataset(reference_config(n=n, d=6, seed=5))
        pi_star = combine_heir_probs(ds.true_pi, build_membership_matrix(3))
        for code in range(1, 8):
            rows = ds.data.y[ds.true_labels == code]
            se = np.sqrt(pi_star[code] * (1 - pi_star[code]) / len(rows))
            assert np.all(np.abs(rows.mean(axis=0) - pi_star[code]) < 4 * se)

    def test_max_combiner(self):
        cfg = reference_config(n=200, seed=6).model_copy(update={"combiner": Combiner.MAX})
        ds = generate_dataset(cfg)
        both = ds.data.y[ds.true_labels == 7]
        assert both.mean() > 0.7

    def test_replicates_use_consecutive_seeds(self):
        gen = SimulationGenerator(reference_config(n=30, seed=10))
        reps = gen.replicates(3)
        assert len(reps) == 3
        again = generate_dataset(reference_config(n=30, seed=11))
        assert np.array_equal(reps[1].data.y, again.data.y)
        assert np.array_equal(gen.replicate(2).data.y, reps[2].data.y)
