"""
Command-line surface: simulate, fit, select-k, pcm, evaluate, compare, experiments.

Exit statuses: 0 success, 2 usage/configuration error, 3 data error,
4 numerical error.
"""
import argparse
import logging
import os
import sys
import time
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from pydantic import ValidationError

from backend import __version__
from backend.ingestion.incidence_reader import file_digest, read_incidence, read_labels, write_incidence, write_labels
from backend.models.entities import (
    ChainConfig, Combiner, DicResult, IncidenceMatrix, ModelKind, PosteriorSamples, RunManifest
)
from backend.models.errors import ConfigurationError, DataFormatError, NumericalError
from backend.services.baseline_mixture_service import posterior_mean_params, run_chain_baseline
from backend.services.diagnostics_service import (
    average_allocations, cluster_names, cluster_sizes, evaluate_labels, map_allocate, parent_weight_summary,
    pi_summary, posterior_confusion_matrix, relabel_chain, summarize_pcm, ternary_coordinates
)
from backend.services.experiment_registry import ExperimentRegistry
from backend.services.experiment_runner import (
    run_baseline_equivalence, run_classification_comparison, run_contraction, run_dic_accuracy
)
from backend.services.gibbs_sampler import run_chain
from backend.services.graph_manager import GraphManager
from backend.services.model_selection_service import dic3, scan_K
from backend.services.results_store import ResultsStore, read_draws, read_manifest
from backend.utils.simulation_generator import SimulationGenerator, simulation_config

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4


# --- Argument parsing ---

def _chain_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--profile", help="Chain profile id from the config file")
    p.add_argument("--seed", type=int)
    p.add_argument("--iterations", type=int, help="Total sweeps (burn-in defaults to half when only this is given)")
    p.add_argument("--burn-in", dest="burn_in", type=int)
    p.add_argument("--thinning", type=int)
    p.add_argument("--combiner", choices=[c.value for c in Combiner])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="overlap", description="Overlapping-cluster Bernoulli mixtures for actor-event data")
    parser.add_argument("--config", help="Experiments JSON (default: $OVERLAP_CONFIG or config/experiments.json)")
    parser.add_argument("--log-level", type=str.upper, default=os.getenv("OVERLAP_LOG_LEVEL", "INFO").upper(),
                        choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="Generate a dataset with known heir allocations")
    p.add_argument("--experiment", default="sim_k3_d18")
    p.add_argument("--n", type=int)
    p.add_argument("--d", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--combiner", choices=[c.value for c in Combiner])
    p.add_argument("--out", required=True)

    for name, help_text in (("fit", "Fit one K and post-process the chain"),
                            ("select-k", "DIC3 scan over K, then post-process the best chain")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--input", required=True, help="Incidence file")
        p.add_argument("--delimiter", default=",")
        p.add_argument("--out", required=True)
        p.add_argument("--relabel", action="store_true", help="Undo label switching before post-processing")
        p.add_argument("--truth", help="Optional heir-label sidecar to score the MAP clustering against")
        _chain_flags(p)
        if name == "fit":
            p.add_argument("--k", type=int)
            p.add_argument("--baseline", type=int, metavar="M",
                           help="Fit the flat Bernoulli mixture with M components instead")
        else:
            p.add_argument("--k", type=int, nargs="+", dest="k_values", help="Candidate K values")
            p.add_argument("--workers", type=int, default=int(os.getenv("OVERLAP_WORKERS", "1")))

    p = sub.add_parser("pcm", help="Posterior confusion matrix of a stored chain")
    p.add_argument("--run", required=True, help="Output directory of a fit or select-k run")
    p.add_argument("--input", help="Incidence file (defaults to the one recorded in the run)")
    p.add_argument("--delimiter", default=",")
    p.add_argument("--out", help="Defaults to <run>/pcm")

    p = sub.add_parser("evaluate", help="Misclassification and ARI of a label file against the truth")
    p.add_argument("--est", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--k", type=int, help="Parent count (inferred from the labels when omitted)")
    p.add_argument("--flat", action="store_true", help="Labels are flat-mixture components")
    p.add_argument("--out")

    p = sub.add_parser("compare", help="Replicated simulation experiments")
    p.add_argument("--experiment", default="classification",
                   help="classification, equivalence, contraction or dic_accuracy (any experiment id of those kinds)")
    p.add_argument("--replicates", type=int)
    p.add_argument("--d-values", dest="d_values", type=int, nargs="+")
    p.add_argument("--n-values", dest="n_values", type=int, nargs="+")
    p.add_argument("--k", type=int)
    p.add_argument("--workers", type=int, default=int(os.getenv("OVERLAP_WORKERS", "1")))
    p.add_argument("--out", required=True)
    _chain_flags(p)

    sub.add_parser("experiments", help="List chain profiles and experiments of the config file")
    return parser


# --- Helpers ---

def _chain_config(args: argparse.Namespace, registry: ExperimentRegistry, experiment_id: str, **extra: Any) -> ChainConfig:
    burn_in = args.burn_in
    if args.iterations is not None and burn_in is None:
        burn_in = args.iterations // 2
    return registry.experiment_chain_config(
        experiment_id,
        args.profile,
        seed=args.seed,
        iterations=args.iterations,
        burn_in=burn_in,
        thinning=args.thinning,
        combiner=args.combiner,
        **extra,
    )


def _manifest(command: str, argv: Sequence[str], config: Dict[str, Any], started: float,
              seed: Optional[int] = None, input_path: Optional[str] = None,
              samples: Optional[PosteriorSamples] = None) -> RunManifest:
    model = {}
    if samples is not None:
        model = {"kind": samples.kind.value, "K": samples.K, "combiner": samples.combiner.value}
    return RunManifest(
        command=command,
        argv=list(argv),
        config=config,
        seed=seed,
        software_version=__version__,
        duration_seconds=round(time.time() - started, 3),
        input_digest=file_digest(input_path) if input_path else None,
        model=model,
    )


def _baseline_params_table(samples: PosteriorSamples) -> pd.DataFrame:
    params = posterior_mean_params(samples)
    frame = pd.DataFrame(params.probs, columns=[f"event_{j + 1}" for j in range(params.probs.shape[1])])
    frame.insert(0, "weight", params.weights)
    frame.insert(0, "component", np.arange(params.weights.size) + 1)
    return frame


def _print_table(title: str, frame: pd.DataFrame) -> None:
    print("=" * 60)
    print(title)
    print("=" * 60)
    print(frame.to_string(index=False))


def _post_process(
    samples: PosteriorSamples,
    data: IncidenceMatrix,
    store: ResultsStore,
    relabel: bool,
    dic_results: List[DicResult],
    selected_K: Optional[int],
    truth_path: Optional[str],
) -> PosteriorSamples:
    """Diagnostics shared by fit and select-k; writes everything but the manifest"""
    if relabel:
        samples = relabel_chain(samples, data)
    avg = samples.averaged_allocations
    if avg is None:
        avg = average_allocations(samples, data)
    labels = map_allocate(avg)
    pcm = posterior_confusion_matrix(samples, data)
    sizes = cluster_sizes(labels, samples.K, samples.kind)
    names = cluster_names(samples)
    graph = GraphManager(data)
    stats = graph.get_graph_stats()

    tables = {
        "cluster_sizes": sizes,
        "pi_summary": pi_summary(samples),
        "parent_weights": parent_weight_summary(samples),
        "graph_stats": pd.DataFrame([stats]),
    }
    flat = samples.kind == ModelKind.FLAT
    if flat:
        tables["baseline_params"] = _baseline_params_table(samples)
    store.write_results(
        samples, data, avg, labels, pcm,
        dic_results=dic_results,
        selected_K=selected_K,
        ternary=None if flat else ternary_coordinates(avg, labels),
        extra_tables=tables,
    )
    graph.annotate_clusters(labels, names)
    graph.write_graphml(store.out_dir / "summaries" / "bipartite.graphml")

    print(f"Graph: {stats['actors']} actors, {stats['events']} events, {stats['edges']} attendances, "
          f"{stats['isolated_actors']} actors and {stats['isolated_events']} events without any")
    title = f"MAP cluster sizes (M={samples.K} components)" if flat else f"MAP cluster sizes (K={samples.K})"
    _print_table(title, sizes)
    print("Rescaled PCM diagonal:")
    for line in summarize_pcm(pcm, names):
        print(f"  {line}")

    if truth_path:
        truth = read_labels(truth_path)
        scores = evaluate_labels(labels, truth, samples.K, samples.kind)
        store.write_table(pd.DataFrame([scores]), "evaluation")
        print(f"Misclassification: {scores['misclassification']:.4f}  ARI: {scores['ari']:.4f}")
    return samples


# --- Commands ---

def cmd_simulate(args: argparse.Namespace, registry: ExperimentRegistry, argv: Sequence[str]) -> int:
    started = time.time()
    params = dict(registry.get_experiment(args.experiment).params)
    sim = simulation_config(
        n=args.n or params.get("n", 300),
        d=args.d or params.get("d", 18),
        K=args.k or params.get("K", 3),
        seed=args.seed if args.seed is not None else params.get("seed", 0),
        combiner=Combiner(args.combiner or params.get("combiner", Combiner.MIN.value)),
        alpha_star=params.get("alpha_star"),
        base_column=params.get("base_column"),
    )
    dataset = SimulationGenerator(sim).generate()

    store = ResultsStore(args.out)
    write_incidence(dataset.data, store.out_dir / "incidence.csv")
    write_labels(dataset.true_labels, store.out_dir / "truth.txt")
    true_pi = pd.DataFrame(dataset.true_pi, columns=[f"event_{j + 1}" for j in range(sim.d)])
    true_pi.insert(0, "parent", np.arange(sim.K) + 1)
    store.write_table(true_pi, "true_pi")
    store.write_table(
        pd.DataFrame({"heir": np.arange(dataset.true_alpha_star.size) + 1, "alpha_star": dataset.true_alpha_star}),
        "true_alpha_star",
    )
    config = sim.model_dump(mode="json")
    store.write_manifest(_manifest("simulate", argv, config, started, seed=sim.seed))
    print(f"Simulated n={sim.n}, d={sim.d}, K={sim.K} (seed {sim.seed}) into {store.out_dir}")
    return EXIT_OK


def cmd_fit(args: argparse.Namespace, registry: ExperimentRegistry, argv: Sequence[str]) -> int:
    started = time.time()
    data = read_incidence(args.input, delimiter=args.delimiter)
    config = _chain_config(args, registry, "real_data", K=args.k)
    if args.baseline is not None:
        samples = run_chain_baseline(data, args.baseline, config)
        label = f"M={args.baseline}"
    else:
        samples = run_chain(data, config)
        label = f"K={config.K}"
    result = dic3(samples, data)
    store = ResultsStore(args.out)
    samples = _post_process(samples, data, store, args.relabel, [result], None, args.truth)
    print(f"DIC3({label}) = {result.dic:.2f}")
    echo = {**config.echo(), "input": str(args.input), "relabel": args.relabel}
    if args.baseline is not None:
        echo["baseline_components"] = args.baseline
    store.write_manifest(_manifest(
        "fit", argv, echo, started, seed=config.seed, input_path=args.input, samples=samples,
    ))
    return EXIT_OK


def cmd_select_k(args: argparse.Namespace, registry: ExperimentRegistry, argv: Sequence[str]) -> int:
    started = time.time()
    data = read_incidence(args.input, delimiter=args.delimiter)
    k_values = args.k_values or registry.get_experiment("real_data").params.get("K_values", [2, 3, 4])
    template = _chain_config(args, registry, "real_data")
    scan = scan_K(data, k_values, template, master_seed=template.seed, workers=args.workers)

    _print_table("DIC3 scan", pd.DataFrame([r.model_dump() for r in scan.results]))
    print(f"Selected K = {scan.selected_K} (DIC3 {scan.result_for(scan.selected_K).dic:.2f})")
    store = ResultsStore(args.out)
    samples = _post_process(
        scan.chains[scan.selected_K], data, store, args.relabel, scan.results, scan.selected_K, args.truth
    )
    config = {**template.echo(), "K_values": sorted(set(k_values)), "input": str(args.input), "relabel": args.relabel}
    store.write_manifest(_manifest(
        "select-k", argv, config, started, seed=template.seed, input_path=args.input, samples=samples,
    ))
    return EXIT_OK


def cmd_pcm(args: argparse.Namespace, registry: ExperimentRegistry, argv: Sequence[str]) -> int:
    started = time.time()
    run_dir = Path(args.run)
    input_path = args.input or read_manifest(run_dir).config.get("input")
    if not input_path:
        raise ConfigurationError(f"Run {run_dir} records no input file; pass --input")
    data = read_incidence(input_path, delimiter=args.delimiter)
    samples = read_draws(run_dir)
    pcm = posterior_confusion_matrix(samples, data)

    store = ResultsStore(args.out or run_dir / "pcm")
    store.write_pcm(pcm, samples)
    print("Rescaled PCM diagonal:")
    for line in summarize_pcm(pcm, cluster_names(samples)):
        print(f"  {line}")
    store.write_manifest(_manifest(
        "pcm", argv, {"run": str(run_dir), "input": str(input_path)}, started,
        seed=samples.seed, input_path=input_path, samples=samples,
    ))
    return EXIT_OK


def cmd_evaluate(args: argparse.Namespace, registry: ExperimentRegistry, argv: Sequence[str]) -> int:
    started = time.time()
    est = read_labels(args.est)
    truth = read_labels(args.truth)
    if len(est) != len(truth):
        raise ConfigurationError(f"Label files differ in length: {len(est)} vs {len(truth)}")
    kind = ModelKind.FLAT if args.flat else ModelKind.OVERLAPPING
    K = args.k
    if K is None:
        top = int(max(est.max(initial=0), truth.max(initial=0)))
        K = top + 1 if args.flat else max(1, int(np.ceil(np.log2(top + 1))))
    scores = evaluate_labels(est, truth, K, kind)
    print(f"Misclassification: {scores['misclassification']:.4f}")
    print(f"ARI: {scores['ari']:.4f}")
    if args.out:
        store = ResultsStore(args.out)
        store.write_table(pd.DataFrame([scores]), "evaluation")
        store.write_manifest(_manifest(
            "evaluate", argv, {"est": str(args.est), "truth": str(args.truth), "K": K, "kind": kind.value}, started,
        ))
    return EXIT_OK


def cmd_compare(args: argparse.Namespace, registry: ExperimentRegistry, argv: Sequence[str]) -> int:
    started = time.time()
    exp = registry.get_experiment(args.experiment)
    params = dict(exp.params)
    for key in ("replicates", "d_values", "n_values"):
        if getattr(args, key) is not None:
            params[key] = getattr(args, key)
    if args.k is not None:
        params["K"] = args.k
    template = _chain_config(args, registry, exp.id)

    if exp.kind == "classification":
        table = run_classification_comparison(
            template, n=params.get("n", 300), d_values=params.get("d_values", [6, 18, 36]),
            K=params.get("K", 3), M=params.get("M", 8), replicates=params.get("replicates", 25),
            workers=args.workers,
        )
    elif exp.kind == "equivalence":
        table = run_baseline_equivalence(
            template, n=params.get("n", 300), d=params.get("d", 18), K=params.get("K", 3),
            replicates=params.get("replicates", 25), workers=args.workers,
        )
    elif exp.kind == "contraction":
        table = run_contraction(
            template, n_values=params.get("n_values", [100, 250, 500]), d=params.get("d", 18),
            K=params.get("K", 3), replicates=params.get("replicates", 10), workers=args.workers,
        )
    elif exp.kind == "dic_accuracy":
        table = run_dic_accuracy(
            template, n_values=params.get("n_values", [25, 75, 150, 300]), d=params.get("d", 18),
            K=params.get("K", 3), K_values=params.get("K_values", [2, 3, 4]),
            replicates=params.get("replicates", 20), workers=args.workers,
        )
    else:
        raise ConfigurationError(f"Experiment '{exp.id}' of kind '{exp.kind}' is not a replicated comparison")

    store = ResultsStore(args.out)
    store.write_table(table, exp.kind)
    _print_table(exp.label, table)
    store.write_manifest(_manifest(
        "compare", argv, {**template.echo(), "experiment": exp.id, "params": params}, started, seed=template.seed,
    ))
    return EXIT_OK


def cmd_experiments(args: argparse.Namespace, registry: ExperimentRegistry, argv: Sequence[str]) -> int:
    _print_table("Chain profiles", pd.DataFrame([
        {"id": p.id, "label": p.label, "iterations": p.iterations, "burn_in": p.burn_in, "thinning": p.thinning}
        for p in registry.list_profiles()
    ]))
    _print_table("Experiments", pd.DataFrame([
        {"id": e.id, "kind": e.kind, "profile": e.default_profile_id, "label": e.label}
        for e in registry.list_experiments()
    ]))
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "fit": cmd_fit,
    "select-k": cmd_select_k,
    "pcm": cmd_pcm,
    "evaluate": cmd_evaluate,
    "compare": cmd_compare,
    "experiments": cmd_experiments,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK

    logging.basicConfig(level=args.log_level, format="%(asctime)s - %(levelname)s - %(message)s")
    try:
        registry = ExperimentRegistry(args.config)
        return COMMANDS[args.command](args, registry, argv)
    except DataFormatError as e:
        logger.error(f"Data error: {e}")
        print(f"Data error: {e}", file=sys.stderr)
        return EXIT_DATA
    except FileNotFoundError as e:
        logger.error(f"{e}")
        print(f"File not found: {e}", file=sys.stderr)
        return EXIT_DATA
    except (ConfigurationError, ValidationError) as e:
        print(f"Configuration error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as e:
        logger.error(f"Numerical failure: {e}")
        print(f"Numerical error: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
