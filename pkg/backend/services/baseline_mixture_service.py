"""
Flat (non-overlapping) Bernoulli finite mixture fitted by conjugate Gibbs sampling.

Used as the comparison baseline: M free components, every allocated unit
contributes fully to its component's Beta update.
"""
import logging
import time

import numpy as np

from backend.models.entities import (
    BaselineParams, ChainConfig, Combiner, Hyperparams, IncidenceMatrix, ModelKind, PosteriorSamples
)
from backend.models.errors import ConfigurationError, NumericalError
from backend.services.gibbs_sampler import allocation_posterior, draw_categorical, update_weights
from backend.services.mixture_algebra import clamp_probs

logger = logging.getLogger(__name__)


class FlatMixtureSampler:
    """Gibbs sampler of a standard Bernoulli mixture with M components"""

    def __init__(self, data: IncidenceMatrix, M: int, config: ChainConfig):
        if M < 1:
            raise ConfigurationError(f"Baseline needs at least one component, got M={M}")
        self.data = data
        self.M = M
        self.config = config
        if config.hyper is not None and config.hyper.a.shape == (M,):
            self.hyper = config.hyperparams_for(M, M, data.d)
        else:
            self.hyper = Hyperparams.uniform(M, M, data.d, config.a, config.b1, config.b2)
        self.rng = np.random.default_rng(config.seed)
        self.y = data.y.astype(float)

    def _posterior(self, weights: np.ndarray, probs: np.ndarray, sweep: int) -> np.ndarray:
        try:
            return allocation_posterior(self.y, weights, probs)
        except NumericalError as e:
            logger.error(f"Baseline chain aborted at iteration {sweep}: {e.detail}")
            raise NumericalError(e.detail, iteration=sweep, unit=e.unit) from e

    def _update_probs(self, z: np.ndarray) -> np.ndarray:
        onehot = np.eye(self.M)[z]  # n x M
        successes = onehot.T @ self.y
        trials = onehot.sum(axis=0)[:, None]
        return clamp_probs(self.rng.beta(successes + self.hyper.b1, trials - successes + self.hyper.b2))

    def run(self) -> PosteriorSamples:
        cfg = self.config
        n, d, M = self.data.n, self.data.d, self.M
        T = cfg.retained
        weight_draws = np.empty((T, M))
        prob_draws = np.empty((T, M, d))
        z_draws = np.empty((T, n), dtype=np.int32)
        sweeps = np.empty(T, dtype=np.int64)
        allocation_sums = np.zeros((n, M))

        logger.info(f"Starting baseline chain: n={n}, d={d}, M={M}, {cfg.iterations} sweeps, seed {cfg.seed}")
        start = time.time()
        weights = self.rng.dirichlet(self.hyper.a)
        weights /= weights.sum()
        probs = clamp_probs(self.rng.beta(self.hyper.b1, self.hyper.b2))
        post = self._posterior(weights, probs, 0)
        t = 0
        for sweep in range(1, cfg.iterations + 1):
            z = draw_categorical(post, self.rng)
            weights = update_weights(z, self.hyper.a, self.rng)
            probs = self._update_probs(z)
            post = self._posterior(weights, probs, sweep)
            if cfg.is_retained(sweep):
                weight_draws[t] = weights
                prob_draws[t] = probs
                z_draws[t] = z
                sweeps[t] = sweep
                allocation_sums += post
                t += 1

        logger.info(f"Baseline chain finished in {time.time() - start:.1f}s")
        return PosteriorSamples(
            kind=ModelKind.FLAT,
            K=M,
            combiner=Combiner.MIN,
            alpha_star=weight_draws,
            pi=prob_draws,
            z_star=z_draws,
            sweeps=sweeps,
            allocation_sums=allocation_sums,
            seed=cfg.seed,
        )


def run_chain_baseline(data: IncidenceMatrix, M: int, config: ChainConfig) -> PosteriorSamples:
    """Fit the flat mixture with M components"""
    return FlatMixtureSampler(data, M, config).run()


def posterior_mean_params(samples: PosteriorSamples) -> BaselineParams:
    if samples.kind != ModelKind.FLAT:
        raise ConfigurationError("posterior_mean_params expects a flat-mixture chain")
    return BaselineParams(weights=samples.alpha_star.mean(axis=0), probs=samples.pi.mean(axis=0))
