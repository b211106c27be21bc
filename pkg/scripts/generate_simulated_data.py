#!/usr/bin/env python3
"""
Generate replicated simulated datasets (incidence + truth sidecar) from the
K=3 reference setting.

WARNING: This script overwrites files in the target directory.
Use --force to allow overwriting.
"""

import argparse
import sys
from pathlib import Path

# Add project root to path
PROJECT_ROOT = Path(__file__).parent.parent
sys.path.insert(0, str(PROJECT_ROOT))

from backend.ingestion.incidence_reader import write_incidence, write_labels
from backend.utils.simulation_generator import SimulationGenerator, reference_config


def _parse_args() -> argparse.Namespace:
    p = argparse.ArgumentParser(description="Generate replicated K=3 simulated actor-event datasets.")
    p.add_argument("--out-dir", default=str(PROJECT_ROOT / "data" / "simulated"),
                   help="Target directory; one replicate_XX/ subdirectory per dataset")
    p.add_argument("--n", type=int, default=300)
    p.add_argument("--d", type=int, default=18)
    p.add_argument("--replicates", type=int, default=25)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--force", action="store_true", help="Overwrite existing files without prompting")
    return p.parse_args()


def main() -> int:
    args = _parse_args()
    out_dir = Path(args.out_dir).expanduser().resolve()
    if out_dir.exists() and any(out_dir.iterdir()) and not args.force:
        print(f"Refusing to overwrite existing files in {out_dir}")
        print("Re-run with --force to overwrite.")
        return 2

    print("=" * 60)
    print(f"Generating {args.replicates} datasets (n={args.n}, d={args.d}, K=3)...")
    print("=" * 60)
    generator = SimulationGenerator(reference_config(n=args.n, d=args.d, seed=args.seed))
    for r, dataset in enumerate(generator.replicates(args.replicates), start=1):
        target = out_dir / f"replicate_{r:02d}"
        target.mkdir(parents=True, exist_ok=True)
        write_incidence(dataset.data, target / "incidence.csv")
        write_labels(dataset.true_labels, target / "truth.txt")
    print(f"✓ Saved to {out_dir}/")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
