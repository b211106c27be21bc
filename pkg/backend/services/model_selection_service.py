"""
DIC3 model selection over the number of parent clusters
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Dict, Iterable, List, Optional, Tuple

import numpy as np

from backend.models.entities import (
    ChainConfig, DicResult, IncidenceMatrix, PosteriorSamples, ScanResult, SEED_MODULUS
)
from backend.models.errors import ConfigurationError, NumericalError
from backend.services.gibbs_sampler import run_chain
from backend.services.mixture_algebra import iter_draws, mixture_log_density

logger = logging.getLogger(__name__)


def dic3_unit_terms(samples: PosteriorSamples, data: IncidenceMatrix) -> Tuple[np.ndarray, np.ndarray]:
    """
    Per-unit pieces of DIC3.

    Returns (mean over draws of log P(y_i | theta^(t)), log P-hat(y_i)) where
    P-hat(y_i) averages the mixture density over draws before taking logs.
    """
    if samples.T == 0:
        raise ConfigurationError("DIC needs at least one retained draw")
    y = data.y.astype(float)
    mean_loglik = np.zeros(data.n)
    log_sum = np.full(data.n, -np.inf)
    for t, alpha_star, pi_star in iter_draws(samples):
        lm = mixture_log_density(y, alpha_star, pi_star)
        mean_loglik += lm
        log_sum = np.logaddexp(log_sum, lm)
    mean_loglik /= samples.T
    log_phat = log_sum - np.log(samples.T)
    dead = ~np.isfinite(log_phat)
    if dead.any():
        unit = int(np.flatnonzero(dead)[0])
        raise NumericalError(
            f"P-hat(y_i) is zero for unit {unit} ({data.actor_labels[unit]})", unit=unit
        )
    return mean_loglik, log_phat


def dic3(samples: PosteriorSamples, data: IncidenceMatrix) -> DicResult:
    """DIC(K) = -4 E[log P(y | alpha*, pi)] + 2 log P-hat(y)"""
    mean_loglik, log_phat = dic3_unit_terms(samples, data)
    return DicResult.assemble(
        K=samples.K,
        expected_loglik=float(mean_loglik.sum()),
        log_phat=float(log_phat.sum()),
        retained_T=samples.T,
    )


def select_best(results: Iterable[DicResult]) -> int:
    """Lowest DIC; ties go to the smaller K"""
    return min(results, key=lambda r: (r.dic, r.K)).K


class ModelSelectionService:
    """Runs one chain per candidate K and compares their DIC3 values"""

    def __init__(
        self,
        template: ChainConfig,
        workers: int = 1,
        chain_runner: Callable[[IncidenceMatrix, ChainConfig], PosteriorSamples] = run_chain,
    ):
        self.template = template
        self.workers = max(1, workers)
        self.chain_runner = chain_runner

    def config_for(self, K: int, master_seed: Optional[int] = None) -> ChainConfig:
        seed = self.template.seed if master_seed is None else master_seed
        return self.template.with_overrides(K=K, seed=(seed + K) % SEED_MODULUS, hyper=None)

    def _fit(self, data: IncidenceMatrix, K: int, master_seed: Optional[int]) -> Tuple[DicResult, PosteriorSamples]:
        try:
            samples = self.chain_runner(data, self.config_for(K, master_seed))
            result = dic3(samples, data)
        except NumericalError as e:
            raise NumericalError(f"K={K}: {e.detail}", iteration=e.iteration, unit=e.unit) from e
        logger.info(f"K={K}: DIC={result.dic:.2f} (T={result.retained_T})")
        return result, samples

    def scan(self, data: IncidenceMatrix, K_values: List[int], master_seed: Optional[int] = None) -> ScanResult:
        candidates = sorted(set(int(k) for k in K_values))
        if not candidates:
            raise ConfigurationError("scan_K needs at least one candidate K")
        if self.workers > 1 and len(candidates) > 1:
            with ThreadPoolExecutor(max_workers=self.workers) as pool:
                fitted = list(pool.map(lambda k: self._fit(data, k, master_seed), candidates))
        else:
            fitted = [self._fit(data, k, master_seed) for k in candidates]

        results = [r for r, _ in fitted]
        chains: Dict[int, PosteriorSamples] = {r.K: s for r, s in fitted}
        best = select_best(results)
        logger.info(f"Selected K={best} among {candidates}")
        return ScanResult(results=results, selected_K=best, chains=chains)


def scan_K(
    data: IncidenceMatrix,
    K_values: List[int],
    template: ChainConfig,
    master_seed: Optional[int] = None,
    workers: int = 1,
) -> ScanResult:
    """
    Fit every candidate K and pick the lowest DIC3

    Args:
        data: Binary actor-event incidence matrix
        K_values: Candidate numbers of parent clusters
        template: Chain settings shared by all candidates
        master_seed: Candidate K runs with seed (master_seed + K); the template seed when omitted
        workers: Threads across candidates

    Returns:
        ScanResult with one DicResult per candidate and the selected K
    """
    return ModelSelectionService(template, workers=workers).scan(data, K_values, master_seed)
