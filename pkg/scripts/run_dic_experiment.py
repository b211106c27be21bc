#!/usr/bin/env python3
"""
DIC3 selection accuracy: how often the true K=3 wins among the candidates,
for several sample sizes.
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
from backend.services.experiment_runner import run_dic_accuracy


def _parse_args() -> argparse.Namespace:
    p = argparse.ArgumentParser(description="DIC selection accuracy experiment.")
    p.add_argument("--profile")
    p.add_argument("--replicates", type=int)
    p.add_argument("--n-values", dest="n_values", type=int, nargs="+")
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int, default=int(os.getenv("OVERLAP_WORKERS", "1")))
    p.add_argument("--out", default="dic_accuracy.csv")
    return p.parse_args()


def main() -> int:
    args = _parse_args()
    logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(levelname)s - %(message)s')
    registry = ExperimentRegistry()
    exp = registry.get_experiment("dic_accuracy")
    template = registry.experiment_chain_config(exp.id, args.profile, seed=args.seed)
    params = exp.params

    table = run_dic_accuracy(
        template,
        n_values=args.n_values or params["n_values"],
        d=params["d"],
        K=params["K"],
        K_values=params["K_values"],
        replicates=args.replicates or params["replicates"],
        workers=args.workers,
    )
    print(table.pivot_table(index="n", columns="K", values="frequency").to_string())
    table.to_csv(args.out, index=False, float_format="%.17g")
    print(f"✓ Saved to {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
