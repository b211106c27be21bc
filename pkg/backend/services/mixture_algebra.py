"""
Deterministic algebra of the overlapping mixture: heir enumeration, the
parent/heir bijection, combiners, weight back-mapping and Bernoulli likelihoods.

All functions are pure and operate on numpy arrays; heir clusters are 0-based
codes whose bit k marks parent k.
"""
import itertools
from typing import Iterator, Sequence, Tuple

import numpy as np
from scipy.special import logsumexp

from backend.models.entities import (
    Combiner, ModelKind, PosteriorSamples, MAX_PARENTS, PROB_FLOOR
)
from backend.models.errors import ConfigurationError


def _check_parent_count(K: int) -> None:
    if not isinstance(K, (int, np.integer)) or not 1 <= K <= MAX_PARENTS:
        raise ConfigurationError(f"K must be an integer in 1..{MAX_PARENTS}, got {K!r}")


def build_membership_matrix(K: int) -> np.ndarray:
    """K* x K binary matrix U; row c is the binary expansion of c, LSB = parent 1"""
    _check_parent_count(K)
    codes = np.arange(2 ** K)
    return ((codes[:, None] >> np.arange(K)[None, :]) & 1).astype(np.int8)


def heir_index(z: Sequence[int]) -> int:
    """Heir code of a parent-membership vector"""
    z = np.asarray(z)
    if z.ndim != 1:
        raise ConfigurationError(f"Membership vector must be 1-d, got shape {z.shape}")
    _check_parent_count(int(z.size))
    if not np.isin(z, (0, 1)).all():
        raise ConfigurationError(f"Membership vector must be binary, got {z.tolist()}")
    return int(np.dot(z.astype(np.int64), 1 << np.arange(z.size)))


def parent_set(code: int, K: int) -> np.ndarray:
    """Binary K-vector of the parents composing heir ``code``"""
    _check_parent_count(K)
    if not 0 <= int(code) < 2 ** K:
        raise ConfigurationError(f"Heir code {code} out of range for K={K}")
    return ((int(code) >> np.arange(K)) & 1).astype(np.int8)


def parent_set_label(code: int, K: int) -> str:
    """Table notation of an heir cluster, e.g. ``z=(1,0)``"""
    return "z=(" + ",".join(str(v) for v in parent_set(code, K)) + ")"


def clamp_probs(pi: np.ndarray) -> np.ndarray:
    return np.clip(pi, PROB_FLOOR, 1.0 - PROB_FLOOR)


def combine_heir_probs(pi: np.ndarray, U: np.ndarray, combiner: Combiner = Combiner.MIN) -> np.ndarray:
    """K* x d heir attendance probabilities; the empty heir is 0 under both combiners"""
    pi = np.asarray(pi, dtype=float)
    n_heirs, K = U.shape
    if pi.ndim != 2 or pi.shape[0] != K:
        raise ConfigurationError(f"pi has shape {pi.shape}, membership matrix expects {K} rows")
    if n_heirs != 2 ** K:
        raise ConfigurationError(f"Membership matrix has {n_heirs} rows, expected {2 ** K}")
    op = np.minimum if Combiner(combiner) == Combiner.MIN else np.maximum
    pi_star = np.zeros((n_heirs, pi.shape[1]))
    # codes in [2^k, 2^(k+1)) are parent k joined with every subset of lower parents
    for k in range(K):
        lower = pi_star[: 2 ** k].copy()
        lower[0] = pi[k]
        pi_star[2 ** k: 2 ** (k + 1)] = op(lower, pi[k])
    return pi_star


def parent_weights_from_heir(alpha_star: np.ndarray, U: np.ndarray) -> np.ndarray:
    """alpha_k = sum_h alpha*_h u_hk; works row-wise on a T x K* stack as well"""
    alpha_star = np.asarray(alpha_star, dtype=float)
    if alpha_star.shape[-1] != U.shape[0]:
        raise ConfigurationError(f"{alpha_star.shape[-1]} weights for {U.shape[0]} heir clusters")
    return alpha_star @ U


def unit_log_likelihoods(y: np.ndarray, pi_star: np.ndarray) -> np.ndarray:
    """n x H matrix of sum_j log Ber(y_ij; pi*_hj); -inf where an attendance meets a zero probability"""
    y = np.atleast_2d(np.asarray(y, dtype=float))
    pi_star = np.atleast_2d(np.asarray(pi_star, dtype=float))
    if y.shape[1] != pi_star.shape[1]:
        raise ConfigurationError(f"y has {y.shape[1]} events, probabilities have {pi_star.shape[1]}")
    with np.errstate(divide="ignore"):
        log_p = np.log(pi_star)
        log_q = np.log1p(-pi_star)
    zero_p = ~np.isfinite(log_p)
    zero_q = ~np.isfinite(log_q)
    ll = y @ np.where(zero_p, 0.0, log_p).T + (1.0 - y) @ np.where(zero_q, 0.0, log_q).T
    impossible = (y @ zero_p.T + (1.0 - y) @ zero_q.T) > 0
    ll[impossible] = -np.inf
    return ll


def log_likelihood_unit(y_i: Sequence[int], pi_star_h: Sequence[float]) -> float:
    """log P(y_i | heir cluster with probabilities pi_star_h)"""
    y_i = np.asarray(y_i)
    pi_star_h = np.asarray(pi_star_h, dtype=float)
    if y_i.shape != pi_star_h.shape:
        raise ConfigurationError(f"Shapes differ: y {y_i.shape}, pi* {pi_star_h.shape}")
    return float(unit_log_likelihoods(y_i[None, :], pi_star_h[None, :])[0, 0])


def log_joint(y: np.ndarray, alpha_star: np.ndarray, pi_star: np.ndarray) -> np.ndarray:
    """n x H matrix log alpha*_h + log P(y_i | h)"""
    with np.errstate(divide="ignore"):
        log_w = np.log(np.asarray(alpha_star, dtype=float))
    return unit_log_likelihoods(y, pi_star) + log_w[None, :]


def mixture_log_density(y: np.ndarray, alpha_star: np.ndarray, pi_star: np.ndarray) -> np.ndarray:
    """Per-unit log sum_h alpha*_h P(y_i | h)"""
    return logsumexp(log_joint(y, alpha_star, pi_star), axis=1)


def heir_permutation(perm: Sequence[int]) -> np.ndarray:
    """Map old heir code -> new heir code when new parent k is old parent perm[k]"""
    perm = np.asarray(perm)
    K = perm.size
    U = build_membership_matrix(K)
    relabeled = U[:, perm]
    return relabeled @ (1 << np.arange(K))


def parent_permutations(K: int) -> Iterator[Tuple[int, ...]]:
    return itertools.permutations(range(K))


def sample_heir_probs(samples: PosteriorSamples, t: int, U: np.ndarray = None) -> np.ndarray:
    """Heir probabilities of retained draw t (identity for the flat mixture)"""
    if samples.kind == ModelKind.FLAT:
        return samples.pi[t]
    if U is None:
        U = build_membership_matrix(samples.K)
    return combine_heir_probs(samples.pi[t], U, samples.combiner)


def iter_draws(samples: PosteriorSamples) -> Iterator[Tuple[int, np.ndarray, np.ndarray]]:
    """Yield (t, alpha*^(t), pi*^(t)) over the retained trajectory"""
    U = build_membership_matrix(samples.K) if samples.kind == ModelKind.OVERLAPPING else None
    for t in range(samples.T):
        yield t, samples.alpha_star[t], sample_heir_probs(samples, t, U)
