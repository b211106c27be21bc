"""
Gibbs sampler for the overlapping-cluster Bernoulli mixture.

One sweep draws heir allocations, then the heir weights, then routes every
unit's contribution through its s-vectors and draws the parent attendance
probabilities from their Beta full conditionals.
"""
import logging
import time
from typing import Optional

import numpy as np

from backend.models.entities import (
    ChainConfig, ChainState, Combiner, Hyperparams, IncidenceMatrix, ModelKind, PosteriorSamples
)
from backend.models.errors import ConfigurationError, NumericalError
from backend.services.mixture_algebra import (
    build_membership_matrix, clamp_probs, combine_heir_probs, log_joint
)

logger = logging.getLogger(__name__)


def allocation_posterior(y: np.ndarray, alpha_star: np.ndarray, pi_star: np.ndarray) -> np.ndarray:
    """
    P(z*_i = h | y_i, alpha*, pi*) for one unit (1-d ``y``) or all units (2-d ``y``).

    Normalized in log space after subtracting the row maximum; heir clusters with
    zero likelihood get exactly 0.
    """
    y = np.asarray(y)
    single = y.ndim == 1
    log_w = log_joint(np.atleast_2d(y), alpha_star, pi_star)
    top = log_w.max(axis=1, keepdims=True)
    dead = ~np.isfinite(top[:, 0])
    if dead.any():
        unit = int(np.flatnonzero(dead)[0])
        raise NumericalError(f"All heir clusters have zero posterior mass for unit {unit}", unit=unit)
    weights = np.exp(log_w - top)
    probs = weights / weights.sum(axis=1, keepdims=True)
    return probs[0] if single else probs


def draw_categorical(probs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """One inverse-CDF draw per row; zero-probability entries are never selected"""
    cdf = np.cumsum(probs, axis=1)
    u = rng.random(probs.shape[0])[:, None] * cdf[:, -1:]
    return (u < cdf).argmax(axis=1)


def sample_allocations(
    state: ChainState,
    data: IncidenceMatrix,
    rng: np.random.Generator,
    U: np.ndarray,
    combiner: Combiner = Combiner.MIN,
) -> np.ndarray:
    """Fresh heir codes for every unit from their allocation posteriors"""
    if state.pi.shape[1] != data.d:
        raise ConfigurationError(f"State has {state.pi.shape[1]} events, data has {data.d}")
    pi_star = combine_heir_probs(state.pi, U, combiner)
    return draw_categorical(allocation_posterior(data.y, state.alpha_star, pi_star), rng)


def compute_s_vectors(
    z_star: np.ndarray, pi: np.ndarray, U: np.ndarray, combiner: Combiner = Combiner.MIN
) -> np.ndarray:
    """
    n x d x K routing indicators.

    Singletons copy the membership vector; multi-member units point at the parent
    with the lowest probability for each event (highest under max); the empty
    cluster contributes nothing. Ties go to the lowest parent index.
    """
    members = U[np.asarray(z_star)].astype(bool)  # n x K
    fill = np.inf if Combiner(combiner) == Combiner.MIN else -np.inf
    candidates = np.where(members[:, None, :], pi.T[None, :, :], fill)  # n x d x K
    pick = candidates.argmin(axis=2) if fill > 0 else candidates.argmax(axis=2)
    s = np.zeros(candidates.shape, dtype=np.int8)
    np.put_along_axis(s, pick[:, :, None], 1, axis=2)
    s[~members.any(axis=1)] = 0
    return s


def sufficient_statistics(y: np.ndarray, s: np.ndarray):
    """Successes and trials per (parent, event) under the s-vector routing"""
    y = np.asarray(y, dtype=float)
    trials = s.sum(axis=0).T.astype(float)
    successes = np.einsum("ij,ijk->kj", y, s)
    return successes, trials


def update_weights(z_star: np.ndarray, a: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """alpha* ~ Dir(n*_1 + a_1, ..., n*_K* + a_K*)"""
    counts = np.bincount(np.asarray(z_star), minlength=len(a))
    draw = rng.dirichlet(counts + np.asarray(a, dtype=float))
    return draw / draw.sum()


def update_parent_probs(
    data: IncidenceMatrix, s: np.ndarray, hyper: Hyperparams, rng: np.random.Generator
) -> np.ndarray:
    """pi_kj ~ Beta(successes + b1, trials - successes + b2), clamped away from 0 and 1"""
    successes, trials = sufficient_statistics(data.y, s)
    return clamp_probs(rng.beta(successes + hyper.b1, trials - successes + hyper.b2))


class GibbsSampler:
    """Runs one chain of the overlapping mixture on fixed data"""

    def __init__(self, data: IncidenceMatrix, config: ChainConfig):
        self.data = data
        self.config = config
        self.U = build_membership_matrix(config.K)
        self.n_heirs = self.U.shape[0]
        self.hyper = config.hyperparams_for(self.n_heirs, config.K, data.d)
        self.rng = np.random.default_rng(config.seed)

    def initial_state(self) -> ChainState:
        """Overdispersed, prior-consistent start"""
        n = self.data.n
        active = self.data.attendance_counts() > 0
        z = np.where(
            active,
            self.rng.integers(1, self.n_heirs, size=n),
            self.rng.integers(0, self.n_heirs, size=n),
        )
        alpha_star = self.rng.dirichlet(self.hyper.a)
        pi = clamp_probs(self.rng.beta(self.hyper.b1, self.hyper.b2))
        return ChainState(z_star=z, alpha_star=alpha_star / alpha_star.sum(), pi=pi, iteration=0)

    def sweep(self, state: ChainState, probs: np.ndarray) -> ChainState:
        """allocations -> weights -> s-vectors -> parent probabilities"""
        z = draw_categorical(probs, self.rng)
        alpha_star = update_weights(z, self.hyper.a, self.rng)
        s = compute_s_vectors(z, state.pi, self.U, self.config.combiner)
        pi = update_parent_probs(self.data, s, self.hyper, self.rng)
        return ChainState(z_star=z, alpha_star=alpha_star, pi=pi, iteration=state.iteration + 1)

    def posterior(self, state: ChainState) -> np.ndarray:
        pi_star = combine_heir_probs(state.pi, self.U, self.config.combiner)
        try:
            return allocation_posterior(self.data.y, state.alpha_star, pi_star)
        except NumericalError as e:
            logger.error(f"Chain aborted at iteration {state.iteration}: {e.detail}")
            raise NumericalError(e.detail, iteration=state.iteration, unit=e.unit) from e

    def run(self, state: Optional[ChainState] = None) -> PosteriorSamples:
        cfg = self.config
        n, d, K = self.data.n, self.data.d, cfg.K
        T = cfg.retained
        alpha_draws = np.empty((T, self.n_heirs))
        pi_draws = np.empty((T, K, d))
        z_draws = np.empty((T, n), dtype=np.int32)
        sweeps = np.empty(T, dtype=np.int64)
        allocation_sums = np.zeros((n, self.n_heirs))

        logger.info(
            f"Starting chain: n={n}, d={d}, K={K} (K*={self.n_heirs}), "
            f"{cfg.iterations} sweeps, burn-in {cfg.burn_in}, thinning {cfg.thinning}, seed {cfg.seed}"
        )
        start = time.time()
        state = state or self.initial_state()
        probs = self.posterior(state)
        t = 0
        for sweep in range(1, cfg.iterations + 1):
            state = self.sweep(state, probs)
            probs = self.posterior(state)
            if cfg.is_retained(sweep):
                alpha_draws[t] = state.alpha_star
                pi_draws[t] = state.pi
                z_draws[t] = state.z_star
                sweeps[t] = sweep
                allocation_sums += probs
                t += 1
            if sweep % cfg.log_every == 0:
                logger.debug(f"Sweep {sweep}/{cfg.iterations}, occupied heirs: {np.unique(state.z_star).size}")

        logger.info(f"Chain finished in {time.time() - start:.1f}s, retained {t} draws")
        return PosteriorSamples(
            kind=ModelKind.OVERLAPPING,
            K=K,
            combiner=cfg.combiner,
            alpha_star=alpha_draws,
            pi=pi_draws,
            z_star=z_draws,
            sweeps=sweeps,
            allocation_sums=allocation_sums,
            seed=cfg.seed,
        )


def run_chain(data: IncidenceMatrix, config: ChainConfig) -> PosteriorSamples:
    """
    Run a full chain and return the retained trajectory

    Args:
        data: Binary actor-event incidence matrix
        config: Chain settings (K, iterations, burn-in, thinning, priors, combiner, seed)

    Returns:
        PosteriorSamples with the post-burn-in draws of pi, alpha* and z*
        plus the running allocation averages
    """
    return GibbsSampler(data, config).run()
