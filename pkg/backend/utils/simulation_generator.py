"""
Synthetic actor-event data generated from the overlapping mixture itself,
with known heir allocations, weights and parent probabilities.
"""
import itertools
import logging
from typing import List, Optional, Sequence

import numpy as np

from backend.models.entities import Combiner, IncidenceMatrix, SimConfig, SimDataset, SEED_MODULUS
from backend.models.errors import ConfigurationError
from backend.services.mixture_algebra import build_membership_matrix, combine_heir_probs

logger = logging.getLogger(__name__)


# Heir weights and first-event probabilities of the K=3 simulation setting
REFERENCE_ALPHA_STAR = [0.1, 0.25, 0.20, 0.1, 0.15, 0.1, 0.05, 0.05]
REFERENCE_BASE_COLUMN = [0.2, 0.5, 0.9]


def reference_config(n: int = 300, d: int = 18, seed: int = 0) -> SimConfig:
    """K=3 setting used by the classification, contraction and DIC experiments"""
    return simulation_config(n, d, 3, seed=seed)


def simulation_config(
    n: int, d: int, K: int, seed: int = 0, combiner: Combiner = Combiner.MIN,
    alpha_star: Optional[Sequence[float]] = None, base_column: Optional[Sequence[float]] = None,
) -> SimConfig:
    """
    Generating settings for any K: the reference weights and base column when K=3,
    otherwise uniform heir weights and a base column spread over [0.2, 0.9].

    Args:
        n: Number of actors
        d: Number of events
        K: Number of parent clusters
        seed: Generator seed
        combiner: Heir probability combiner
        alpha_star: Heir weights overriding the defaults (length 2**K)
        base_column: First-event parent probabilities overriding the defaults (length K)

    Returns:
        Validated SimConfig
    """
    if alpha_star is None:
        alpha_star = REFERENCE_ALPHA_STAR if K == 3 else [1.0 / 2 ** K] * 2 ** K
    if base_column is None:
        base_column = REFERENCE_BASE_COLUMN if K == 3 else np.linspace(0.2, 0.9, K).tolist()
    return SimConfig(
        n=n, d=d, K=K, alpha_star=list(alpha_star), base_column=list(base_column), seed=seed, combiner=combiner,
    )


def build_pi_columns(base_column: Sequence[float], K: int, d: int) -> np.ndarray:
    """
    K x d parent probabilities: column j is the ((j-1) mod K!)-th lexicographic
    permutation of ``base_column``, identity first.
    """
    base = np.asarray(base_column, dtype=float)
    if base.shape != (K,) or d < 1:
        raise ConfigurationError(f"base_column must have {K} entries and d >= 1 (got {base.size}, d={d})")
    perms = list(itertools.islice(itertools.permutations(range(K)), d))
    columns = [base[list(perms[j % len(perms)])] for j in range(d)]
    return np.column_stack(columns)


class SimulationGenerator:
    """Generate datasets (single or replicated) with ground truth"""

    def __init__(self, config: SimConfig):
        self.config = config

    def generate(self) -> SimDataset:
        cfg = self.config
        rng = np.random.default_rng(cfg.seed)
        alpha_star = np.asarray(cfg.alpha_star, dtype=float)
        alpha_star = alpha_star / alpha_star.sum()
        U = build_membership_matrix(cfg.K)

        labels = rng.choice(alpha_star.size, size=cfg.n, p=alpha_star)
        pi = build_pi_columns(cfg.base_column, cfg.K, cfg.d)
        pi_star = combine_heir_probs(pi, U, cfg.combiner)
        y = (rng.random((cfg.n, cfg.d)) < pi_star[labels]).astype(np.int8)

        logger.debug(f"Generated n={cfg.n}, d={cfg.d}, K={cfg.K}, seed={cfg.seed}, density={y.mean():.3f}")
        return SimDataset(
            data=IncidenceMatrix(y=y),
            true_labels=labels,
            true_pi=pi,
            true_alpha_star=alpha_star,
        )

    def replicate(self, r: int) -> SimDataset:
        """Dataset r of the replicate series, generated with seed (seed + r) mod 2^64"""
        cfg = self.config.model_copy(update={"seed": (self.config.seed + r) % SEED_MODULUS})
        return SimulationGenerator(cfg).generate()

    def replicates(self, count: int) -> List[SimDataset]:
        """``count`` datasets with seeds seed, seed+1, ..."""
        return [self.replicate(r) for r in range(count)]


def generate_dataset(cfg: SimConfig) -> SimDataset:
    return SimulationGenerator(cfg).generate()
