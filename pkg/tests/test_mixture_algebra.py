import itertools
import math

import numpy as np
import pytest

from backend.models.entities import Combiner
from backend.models.errors import ConfigurationError
from backend.services.mixture_algebra import (
    build_membership_matrix, combine_heir_probs, heir_index, heir_permutation, log_likelihood_unit,
    mixture_log_density, parent_set, parent_set_label, parent_weights_from_heir, unit_log_likelihoods
)


class TestMembershipMatrix:
    def test_k2_rows(self):
        U = build_membership_matrix(2)
        assert U.tolist() == [[0, 0], [1, 0], [0, 1], [1, 1]]

    def test_k1_rows(self):
        assert build_membership_matrix(1).tolist() == [[0], [1]]

    def test_k3_sixth_row(self):
        U = build_membership_matrix(3)
        assert U.shape == (8, 3)
        assert U[5].tolist() == [1, 0, 1]

    @pytest.mark.parametrize("K", [0, 17, -1])
    def test_out_of_range(self, K):
        with pytest.raises(ConfigurationError):
            build_membership_matrix(K)

    def test_rows_distinct_and_complete(self):
        U = build_membership_matrix(4)
        assert len({tuple(r) for r in U}) == 16
        assert U[0].sum() == 0


class TestBijection:
    def test_examples(self):
        # codes are 0-based: heir index h = code + 1
        assert heir_index([1, 1]) + 1 == 4
        assert parent_set(0, 2).tolist() == [0, 0]
        assert heir_index([0, 1, 0]) + 1 == 3

    @pytest.mark.parametrize("K", range(1, 9))
    def test_exhaustive_round_trip(self, K):
        U = build_membership_matrix(K)
        for z in itertools.product((0, 1), repeat=K):
            code = heir_index(z)
            assert parent_set(code, K).tolist() == list(z)
            assert U[code].tolist() == list(z)

    def test_bad_inputs(self):
        with pytest.raises(ConfigurationError):
            heir_index([0, 2])
        with pytest.raises(ConfigurationError):
            parent_set(4, 2)

    def test_label(self):
        assert parent_set_label(1, 2) == "z=(1,0)"
        assert parent_set_label(3, 2) == "z=(1,1)"


class TestCombiner:
    def test_min_both_parents(self):
        pi = np.array([[0.2], [0.5]])
        pi_star = combine_heir_probs(pi, build_membership_matrix(2), Combiner.MIN)
        assert pi_star[3, 0] == pytest.approx(0.2)

    def test_max_both_parents(self):
        pi = np.array([[0.2], [0.5]])
        pi_star = combine_heir_probs(pi, build_membership_matrix(2), Combiner.MAX)
        assert pi_star[3, 0] == pytest.approx(0.5)

    @pytest.mark.parametrize("combiner", list(Combiner))
    def test_empty_cluster_zero_and_singletons(self, combiner):
        rng = np.random.default_rng(1)
        pi = rng.uniform(0.05, 0.95, size=(3, 5))
        pi_star = combine_heir_probs(pi, build_membership_matrix(3), combiner)
        assert np.all(pi_star[0] == 0)
        for k in range(3):
            assert np.array_equal(pi_star[1 << k], pi[k])

    @pytest.mark.parametrize("combiner", list(Combiner))
    def test_matches_direct_definition(self, combiner):
        rng = np.random.default_rng(2)
        K, d = 4, 6
        pi = rng.uniform(0.05, 0.95, size=(K, d))
        U = build_membership_matrix(K)
        pi_star = combine_heir_probs(pi, U, combiner)
        op = np.min if combiner == Combiner.MIN else np.max
        for code in range(1, 2 ** K):
            members = U[code].astype(bool)
            assert np.allclose(pi_star[code], op(pi[members], axis=0))

    def test_min_monotonicity(self):
        rng = np.random.default_rng(3)
        K = 3
        U = build_membership_matrix(K)
        for _ in range(1000):
            pi = rng.uniform(0.01, 0.99, size=(K, 2))
            pi_star = combine_heir_probs(pi, U)
            for h1 in range(1, 2 ** K):
                for h2 in range(1, 2 ** K):
                    if h1 & h2 == h1:  # subset(h1) within subset(h2)
                        assert np.all(pi_star[h2] <= pi_star[h1])

    def test_dimension_mismatch(self):
        with pytest.raises(ConfigurationError):
            combine_heir_probs(np.full((3, 2), 0.5), build_membership_matrix(2))


class TestParentWeights:
    def test_direct_sum(self):
        alpha = parent_weights_from_heir(np.array([0.1, 0.25, 0.20, 0.45]), build_membership_matrix(2))
        assert alpha == pytest.approx([0.70, 0.65])

    def test_all_mass_on_empty(self):
        alpha = parent_weights_from_heir(np.array([1.0, 0, 0, 0]), build_membership_matrix(2))
        assert alpha.tolist() == [0.0, 0.0]

    def test_uniform(self):
        alpha = parent_weights_from_heir(np.full(4, 0.25), build_membership_matrix(2))
        assert alpha == pytest.approx([0.5, 0.5])

    def test_linearity(self):
        rng = np.random.default_rng(4)
        U = build_membership_matrix(3)
        w1, w2 = rng.dirichlet(np.ones(8)), rng.dirichlet(np.ones(8))
        mixed = parent_weights_from_heir(0.3 * w1 + 0.7 * w2, U)
        assert np.allclose(mixed, 0.3 * parent_weights_from_heir(w1, U) + 0.7 * parent_weights_from_heir(w2, U))


class TestLikelihood:
    def test_impossible_attendance(self):
        assert log_likelihood_unit([1], [0.0]) == -math.inf

    def test_certain_absence(self):
        assert log_likelihood_unit([0, 0], [0.0, 0.0]) == 0.0

    def test_hand_computation(self):
        assert log_likelihood_unit([1, 0], [0.2, 0.5]) == pytest.approx(math.log(0.2) + math.log(0.5))
        assert log_likelihood_unit([1, 0], [0.2, 0.5]) == pytest.approx(-2.3026, abs=1e-4)

    def test_matches_direct_product(self):
        rng = np.random.default_rng(5)
        for _ in range(200):
            d = int(rng.integers(1, 11))
            y = rng.integers(0, 2, size=d)
            p = rng.uniform(0.05, 0.95, size=d)
            direct = np.prod(np.where(y == 1, p, 1 - p))
            assert math.exp(log_likelihood_unit(y, p)) == pytest.approx(direct, abs=1e-12)

    def test_matrix_form(self):
        y = np.array([[1, 0], [0, 0]])
        pi_star = np.array([[0.0, 0.0], [0.2, 0.5]])
        ll = unit_log_likelihoods(y, pi_star)
        assert ll[0, 0] == -math.inf
        assert ll[1, 0] == 0.0
        assert ll[0, 1] == pytest.approx(math.log(0.2) + math.log(0.5))

    def test_mixture_density(self):
        lm = mixture_log_density(np.array([[1]]), np.array([0.5, 0.5]), np.array([[0.0], [0.7]]))
        assert lm[0] == pytest.approx(math.log(0.35))


def test_heir_permutation_swaps_parents():
    # new parent 0 = old parent 1 and vice versa: (1,0) <-> (0,1)
    mapping = heir_permutation([1, 0])
    assert mapping.tolist() == [0, 2, 1, 3]


def test_heir_permutation_identity():
    assert heir_permutation([0, 1, 2]).tolist() == list(range(8))
