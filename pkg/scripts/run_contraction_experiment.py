#!/usr/bin/env python3
"""
Posterior contraction of pi: pooled posterior sd of every pi_kj for growing n.
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
from backend.services.experiment_runner import run_contraction


def _parse_args() -> argparse.Namespace:
    p = argparse.ArgumentParser(description="Posterior contraction experiment.")
    p.add_argument("--profile")
    p.add_argument("--replicates", type=int)
    p.add_argument("--n-values", dest="n_values", type=int, nargs="+")
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int, default=int(os.getenv("OVERLAP_WORKERS", "1")))
    p.add_argument("--out", default="contraction.csv")
    return p.parse_args()


def main() -> int:
    args = _parse_args()
    logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(levelname)s - %(message)s')
    registry = ExperimentRegistry()
    exp = registry.get_experiment("contraction")
    template = registry.experiment_chain_config(exp.id, args.profile, seed=args.seed)
    params = exp.params

    table = run_contraction(
        template,
        n_values=args.n_values or params["n_values"],
        d=params["d"],
        K=params["K"],
        replicates=args.replicates or params["replicates"],
        workers=args.workers,
    )
    wide = table.pivot_table(index=["parent", "event"], columns="n", values="posterior_sd")
    print(wide.to_string())
    sizes = sorted(table["n"].unique())
    if len(sizes) > 1:
        shrunk = (wide[sizes[-1]] < wide[sizes[0]]).mean()
        print(f"Cells with smaller sd at n={sizes[-1]} than at n={sizes[0]}: {shrunk:.1%}")
    table.to_csv(args.out, index=False, float_format="%.17g")
    print(f"✓ Saved to {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
