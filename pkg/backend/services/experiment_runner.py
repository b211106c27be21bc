"""
Replicated simulation experiments: classification against the flat mixture,
equivalence with the flat mixture when nobody overlaps, posterior contraction
of pi, and DIC3 selection accuracy
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Dict, List, Sequence, TypeVar

import numpy as np
import pandas as pd

from backend.models.entities import ChainConfig, ModelKind, PosteriorSamples, SimDataset, SEED_MODULUS
from backend.services.baseline_mixture_service import run_chain_baseline
from backend.services.diagnostics_service import average_allocations, evaluate_labels, map_allocate
from backend.services.gibbs_sampler import run_chain
from backend.services.mixture_algebra import parent_permutations
from backend.services.model_selection_service import scan_K
from backend.utils.simulation_generator import SimulationGenerator, simulation_config

logger = logging.getLogger(__name__)

T = TypeVar("T")

FLAT_COMPONENTS = 8


def _fan_out(fn: Callable[[int], T], count: int, workers: int) -> List[T]:
    """fn(0..count-1), in order, optionally on a thread pool"""
    if workers > 1 and count > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, range(count)))
    return [fn(r) for r in range(count)]


def _map_labels(samples: PosteriorSamples, dataset: SimDataset) -> np.ndarray:
    avg = samples.averaged_allocations
    if avg is None:
        avg = average_allocations(samples, dataset.data)
    return map_allocate(avg)


def _replicate_seed(seed: int, r: int) -> int:
    return (seed + r) % SEED_MODULUS


def _summarize_scores(records: List[Dict], keys: List[str]) -> pd.DataFrame:
    summary = pd.DataFrame(records).groupby(keys).agg(
        misclassification_mean=("misclassification", "mean"),
        misclassification_se=("misclassification", "sem"),
        ari_mean=("ari", "mean"),
        ari_se=("ari", "sem"),
        replicates=("replicate", "count"),
    )
    return summary.reset_index()


# --- Classification ---

def classify_replicate(dataset: SimDataset, template: ChainConfig, K: int, M: int = FLAT_COMPONENTS) -> List[Dict]:
    """Fit both models to one dataset and score their MAP clusterings"""
    rows = []
    overlapping = run_chain(dataset.data, template.with_overrides(K=K))
    est = _map_labels(overlapping, dataset)
    rows.append({"model": "overlapping", **evaluate_labels(est, dataset.true_labels, K)})

    flat = run_chain_baseline(dataset.data, M, template)
    est = _map_labels(flat, dataset)
    rows.append({"model": f"flat_M{M}", **evaluate_labels(est, dataset.true_labels, M, kind=ModelKind.FLAT)})
    return rows


def run_classification_comparison(
    template: ChainConfig,
    n: int = 300,
    d_values: Sequence[int] = (6, 18, 36),
    K: int = 3,
    M: int = FLAT_COMPONENTS,
    replicates: int = 25,
    workers: int = 1,
) -> pd.DataFrame:
    """
    Overlapping model against the flat mixture on replicated simulated datasets

    Args:
        template: Chain settings shared by both models (seed is offset per replicate)
        n: Actors per dataset
        d_values: Event counts to sweep
        K: Parent clusters of the generating model and of the fitted overlapping model
        M: Components of the flat mixture
        replicates: Datasets per event count
        workers: Threads across replicates

    Returns:
        One row per (d, model) with mean and standard error of misclassification and ARI
    """
    records = []
    for d in d_values:
        generator = SimulationGenerator(simulation_config(n, d, K, seed=template.seed))

        def one(r: int) -> List[Dict]:
            chain = template.with_overrides(seed=_replicate_seed(template.seed, r))
            rows = classify_replicate(generator.replicate(r), chain, K, M)
            for row in rows:
                row.update(d=d, replicate=r + 1)
            return rows

        for rows in _fan_out(one, replicates, workers):
            records.extend(rows)
        logger.info(f"Classification: d={d} done ({replicates} replicates)")
    return _summarize_scores(records, ["d", "model"])


def no_overlap_weights(K: int, empty_weight: float = 0.1) -> List[float]:
    """Heir weights with mass only on the empty and the singleton heirs"""
    weights = np.zeros(2 ** K)
    weights[0] = empty_weight
    weights[[1 << k for k in range(K)]] = (1.0 - empty_weight) / K
    return weights.tolist()


def run_baseline_equivalence(
    template: ChainConfig,
    n: int = 300,
    d: int = 18,
    K: int = 3,
    replicates: int = 25,
    workers: int = 1,
) -> pd.DataFrame:
    """
    Both models on data without multi-membership: the flat mixture gets M=K+1
    components, one per occupied heir, so both should cluster equally well.
    """
    generator = SimulationGenerator(simulation_config(n, d, K, seed=template.seed, alpha_star=no_overlap_weights(K)))

    def one(r: int) -> List[Dict]:
        chain = template.with_overrides(seed=_replicate_seed(template.seed, r))
        rows = classify_replicate(generator.replicate(r), chain, K, M=K + 1)
        for row in rows:
            row.update(replicate=r + 1)
        return rows

    records = [row for rows in _fan_out(one, replicates, workers) for row in rows]
    table = _summarize_scores(records, ["model"])
    logger.info(f"Equivalence: ARI gap {table['ari_mean'].max() - table['ari_mean'].min():.4f}")
    return table


# --- Contraction ---

def align_to_truth(pi_draws: np.ndarray, true_pi: np.ndarray) -> np.ndarray:
    """Reorder parents so the posterior mean of pi is closest to the generating pi"""
    mean = pi_draws.mean(axis=0)
    K = true_pi.shape[0]
    best = min(parent_permutations(K), key=lambda perm: float(np.abs(mean[list(perm)] - true_pi).sum()))
    return pi_draws[:, list(best), :]


def pooled_posterior_sd(aligned_draws: Sequence[np.ndarray]) -> np.ndarray:
    """K x d sample sd of the retained pi draws of all replicates stacked into one chain"""
    pooled = np.concatenate(list(aligned_draws), axis=0)
    if pooled.shape[0] < 2:
        return np.zeros(pooled.shape[1:])
    return pooled.std(axis=0, ddof=1)


def run_contraction(
    template: ChainConfig,
    n_values: Sequence[int] = (100, 250, 500),
    d: int = 18,
    K: int = 3,
    replicates: int = 10,
    workers: int = 1,
) -> pd.DataFrame:
    """
    Posterior spread of every pi_kj as n grows. Parents of each replicate are
    aligned to the generating pi, all retained draws are pooled, and the pooled
    sd is reported with the mean absolute error of the per-replicate posterior mean.
    """
    frames = []
    for n in n_values:
        generator = SimulationGenerator(simulation_config(n, d, K, seed=template.seed))

        def one(r: int):
            dataset = generator.replicate(r)
            samples = run_chain(dataset.data, template.with_overrides(K=K, seed=_replicate_seed(template.seed, r)))
            return align_to_truth(samples.pi, dataset.true_pi), dataset.true_pi

        results = _fan_out(one, replicates, workers)
        sd = pooled_posterior_sd([draws for draws, _ in results])
        err = np.mean([np.abs(draws.mean(axis=0) - truth) for draws, truth in results], axis=0)
        k_idx, j_idx = np.meshgrid(np.arange(K), np.arange(d), indexing="ij")
        frames.append(pd.DataFrame({
            "n": n,
            "parent": k_idx.ravel() + 1,
            "event": j_idx.ravel() + 1,
            "posterior_sd": sd.ravel(),
            "abs_error": err.ravel(),
        }))
        logger.info(f"Contraction: n={n} mean pooled posterior sd {sd.mean():.4f}")
    return pd.concat(frames, ignore_index=True)


# --- DIC accuracy ---

def run_dic_accuracy(
    template: ChainConfig,
    n_values: Sequence[int] = (25, 75, 150, 300),
    d: int = 18,
    K: int = 3,
    K_values: Sequence[int] = (2, 3, 4),
    replicates: int = 20,
    workers: int = 1,
) -> pd.DataFrame:
    """Fraction of replicates in which DIC3 selects each candidate, per n"""
    rows = []
    for n in n_values:
        generator = SimulationGenerator(simulation_config(n, d, K, seed=template.seed))
        picks = []
        for r in range(replicates):
            scan = scan_K(generator.replicate(r).data, list(K_values), template,
                          master_seed=_replicate_seed(template.seed, r), workers=workers)
            picks.append(scan.selected_K)
        picks = np.asarray(picks)
        for k in sorted(set(K_values)):
            rows.append({
                "n": n,
                "K": k,
                "true_K": k == K,
                "frequency": float(np.mean(picks == k)),
            })
        logger.info(f"DIC accuracy: n={n} picked true K in {np.mean(picks == K):.0%} of replicates")
    return pd.DataFrame(rows)
