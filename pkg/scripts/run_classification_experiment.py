#!/usr/bin/env python3
"""
Overlapping model vs 8-component flat mixture on replicated simulations:
mean misclassification and ARI per number of events d.
"""

import argparse
import logging
import os
import sys
from pathlib import Path

# Add project root to path
PROJECT_ROOT = Path(__file__).parent.parent
sys.path.insert(0, str(PROJECT_ROOT))

from backend.services.experiment_registry import ExperimentRegistry
from backend.services.experiment_runner import run_classification_comparison


def _parse_args() -> argparse.Namespace:
    p = argparse.ArgumentParser(description="Classification comparison on simulated data.")
    p.add_argument("--profile", help="Chain profile (default: the experiment's)")
    p.add_argument("--replicates", type=int)
    p.add_argument("--d-values", dest="d_values", type=int, nargs="+")
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int, default=int(os.getenv("OVERLAP_WORKERS", "1")))
    p.add_argument("--out", default="classification.csv")
    return p.parse_args()


def main() -> int:
    args = _parse_args()
    logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(levelname)s - %(message)s')
    registry = ExperimentRegistry()
    exp = registry.get_experiment("classification")
    template = registry.experiment_chain_config(exp.id, args.profile, seed=args.seed)
    params = exp.params

    table = run_classification_comparison(
        template,
        n=params["n"],
        d_values=args.d_values or params["d_values"],
        K=params["K"],
        M=params["M"],
        replicates=args.replicates or params["replicates"],
        workers=args.workers,
    )
    print(table.to_string(index=False))
    table.to_csv(args.out, index=False, float_format="%.17g")
    print(f"✓ Saved to {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
