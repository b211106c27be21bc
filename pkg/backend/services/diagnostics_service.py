"""
Post-processing of retained chains: averaged allocation probabilities, MAP
clustering, posterior confusion matrix, relabeling and agreement metrics.
"""
import logging
from dataclasses import replace
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from scipy.optimize import linear_sum_assignment
from sklearn.metrics import adjusted_rand_score
from sklearn.metrics.cluster import contingency_matrix

from backend.models.entities import IncidenceMatrix, ModelKind, PCM, PosteriorSamples
from backend.models.errors import ConfigurationError
from backend.services.gibbs_sampler import allocation_posterior
from backend.services.mixture_algebra import (
    build_membership_matrix, heir_permutation, iter_draws, parent_permutations,
    parent_set_label, parent_weights_from_heir
)

logger = logging.getLogger(__name__)


def _check_samples(samples: PosteriorSamples) -> None:
    if samples.T == 0:
        raise ConfigurationError("Chain has no retained draws")


def _check_lengths(a: np.ndarray, b: np.ndarray) -> None:
    if len(a) != len(b):
        raise ConfigurationError(f"Label vectors differ in length: {len(a)} vs {len(b)}")


def average_allocations(samples: PosteriorSamples, data: IncidenceMatrix) -> np.ndarray:
    """n x K* mean of the allocation posteriors over retained draws"""
    _check_samples(samples)
    total = np.zeros((data.n, samples.n_heirs))
    for _, alpha_star, pi_star in iter_draws(samples):
        total += allocation_posterior(data.y, alpha_star, pi_star)
    return total / samples.T


def map_allocate(avg: np.ndarray) -> np.ndarray:
    """Per-unit argmax; ties go to the lowest heir code"""
    return np.asarray(avg).argmax(axis=1)


def posterior_confusion_matrix(samples: PosteriorSamples, data: IncidenceMatrix) -> PCM:
    """
    Accumulate, for every draw and unit, the sorted allocation vector along the
    row of its top choice, then average over draws and rescale rows to sum 1.

    Args:
        samples: Retained draws of either model
        data: Incidence matrix the chain was fitted to

    Returns:
        PCM with the raw and row-rescaled matrices and the MAP unit count per row
    """
    _check_samples(samples)
    H = samples.n_heirs
    raw = np.zeros((H, H))
    avg = np.zeros((data.n, H))
    for _, alpha_star, pi_star in iter_draws(samples):
        probs = allocation_posterior(data.y, alpha_star, pi_star)
        top = probs.argmax(axis=1)
        # adding tau_m at (r_1, r_m) for every m is adding the whole vector to row r_1
        np.add.at(raw, top, probs)
        avg += probs
    raw /= samples.T
    row_units = np.bincount(map_allocate(avg), minlength=H)
    row_sums = raw.sum(axis=1, keepdims=True)
    rescaled = np.divide(raw, row_sums, out=np.zeros_like(raw), where=row_sums > 0)
    return PCM(raw=raw, rescaled=rescaled, row_units=row_units)


def misclassification_rate(est: np.ndarray, truth: np.ndarray, K: int) -> float:
    """Fraction of disagreeing units, minimized over all permutations of the K parent labels"""
    est, truth = np.asarray(est), np.asarray(truth)
    _check_lengths(est, truth)
    for name, labels in (("estimated", est), ("true", truth)):
        if labels.size and (labels.min() < 0 or labels.max() >= 2 ** K):
            raise ConfigurationError(f"{name.capitalize()} labels must name one of the {2 ** K} heirs of K={K}")
    best = 1.0
    for perm in parent_permutations(K):
        mapping = heir_permutation(perm)
        best = min(best, float(np.mean(mapping[est] != truth)))
    return best


def flat_misclassification_rate(est: np.ndarray, truth: np.ndarray) -> float:
    """Fraction of disagreeing units under the best one-to-one matching of component labels"""
    est, truth = np.asarray(est), np.asarray(truth)
    _check_lengths(est, truth)
    table = contingency_matrix(truth, est)
    rows, cols = linear_sum_assignment(table, maximize=True)
    return 1.0 - table[rows, cols].sum() / len(truth)


def adjusted_rand_index(a: np.ndarray, b: np.ndarray) -> float:
    """Hubert-Arabie adjusted Rand index"""
    a, b = np.asarray(a), np.asarray(b)
    _check_lengths(a, b)
    return float(adjusted_rand_score(a, b))


def relabel_chain(samples: PosteriorSamples, data: Optional[IncidenceMatrix] = None) -> PosteriorSamples:
    """
    Order parents (components) by decreasing total attendance probability at
    every retained draw and permute pi, alpha* and z* accordingly.

    Allocation accumulators are recomputed when ``data`` is given, dropped otherwise.
    """
    _check_samples(samples)
    pi = samples.pi.copy()
    alpha_star = samples.alpha_star.copy()
    z_star = samples.z_star.copy()
    for t in range(samples.T):
        perm = np.argsort(-samples.pi[t].sum(axis=1), kind="stable")
        if np.array_equal(perm, np.arange(perm.size)):
            continue
        pi[t] = samples.pi[t][perm]
        if samples.kind == ModelKind.FLAT:
            mapping = np.argsort(perm)
        else:
            mapping = heir_permutation(perm)
        alpha_star[t, mapping] = samples.alpha_star[t]
        z_star[t] = mapping[samples.z_star[t]]

    relabeled = replace(samples, pi=pi, alpha_star=alpha_star, z_star=z_star, allocation_sums=None)
    if data is not None:
        relabeled.allocation_sums = average_allocations(relabeled, data) * relabeled.T
    return relabeled


# --- Summaries ---

def cluster_sizes(labels: np.ndarray, K: int, kind: ModelKind = ModelKind.OVERLAPPING) -> pd.DataFrame:
    """MAP cluster sizes per heir cluster (per component for the flat mixture)"""
    H = 2 ** K if kind == ModelKind.OVERLAPPING else K
    counts = np.bincount(np.asarray(labels), minlength=H)
    rows = []
    for code in range(H):
        rows.append({
            "heir": code + 1,
            "parent_set": parent_set_label(code, K) if kind == ModelKind.OVERLAPPING else f"component {code + 1}",
            "units": int(counts[code]),
        })
    return pd.DataFrame(rows)


def ternary_coordinates(avg: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """
    Averaged probabilities over the non-empty heir clusters, renormalized,
    for units whose MAP cluster is not the empty one.

    Returns an array with columns (unit index, p_2, ..., p_K*).
    """
    avg = np.asarray(avg)
    keep = np.flatnonzero(np.asarray(labels) != 0)
    rest = avg[keep, 1:]
    sums = rest.sum(axis=1, keepdims=True)
    coords = np.divide(rest, sums, out=np.zeros_like(rest), where=sums > 0)
    return np.column_stack([keep, coords])


def pi_summary(samples: PosteriorSamples) -> pd.DataFrame:
    """Posterior mean, sd and 95% interval of every pi_kj"""
    _check_samples(samples)
    mean = samples.pi.mean(axis=0)
    sd = samples.pi.std(axis=0, ddof=1) if samples.T > 1 else np.zeros_like(mean)
    lo, hi = np.quantile(samples.pi, [0.025, 0.975], axis=0)
    K, d = mean.shape
    k_idx, j_idx = np.meshgrid(np.arange(K), np.arange(d), indexing="ij")
    return pd.DataFrame({
        "parent": k_idx.ravel() + 1,
        "event": j_idx.ravel() + 1,
        "mean": mean.ravel(),
        "sd": sd.ravel(),
        "q025": lo.ravel(),
        "q975": hi.ravel(),
    })


def parent_weight_summary(samples: PosteriorSamples) -> pd.DataFrame:
    """Posterior mean and sd of the overlapping proportions alpha_k"""
    _check_samples(samples)
    if samples.kind == ModelKind.FLAT:
        alpha = samples.alpha_star
    else:
        alpha = parent_weights_from_heir(samples.alpha_star, build_membership_matrix(samples.K))
    return pd.DataFrame({
        "parent": np.arange(alpha.shape[1]) + 1,
        "mean": alpha.mean(axis=0),
        "sd": alpha.std(axis=0, ddof=1) if samples.T > 1 else np.zeros(alpha.shape[1]),
    })


def evaluate_labels(est: np.ndarray, truth: np.ndarray, K: int, kind: ModelKind = ModelKind.OVERLAPPING) -> Dict[str, float]:
    """Misclassification and ARI of an estimated clustering against the truth"""
    if kind == ModelKind.FLAT:
        error = flat_misclassification_rate(est, truth)
    else:
        error = misclassification_rate(est, truth, K)
    return {"misclassification": error, "ari": adjusted_rand_index(est, truth)}


def cluster_names(samples: PosteriorSamples) -> List[str]:
    """Display name of every heir (overlapping) or component (flat)"""
    if samples.kind == ModelKind.FLAT:
        return [f"component {m + 1}" for m in range(samples.n_heirs)]
    return [parent_set_label(c, samples.K) for c in range(samples.n_heirs)]


def summarize_pcm(pcm: PCM, names: Sequence[str]) -> List[str]:
    """Diagonal of the rescaled PCM, one line per named cluster"""
    lines = []
    for code in range(pcm.rescaled.shape[0]):
        if pcm.row_units[code] == 0 and pcm.raw[code].sum() > 0:
            logger.warning(f"Heir {code + 1} is some draws' top choice but holds no MAP units")
        lines.append(f"{names[code]}: {pcm.rescaled[code, code]:.2f} ({pcm.row_units[code]} units)")
    return lines
