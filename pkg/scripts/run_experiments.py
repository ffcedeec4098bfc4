#!/usr/bin/env python3
"""Reproduce the full experiment grid and print the combined results table.

Runs every experiment arm (exp1, exp2, exp3, exp4.1, exp4.2) on the chosen
dataset over a set of seeds, writing per-seed checkpoints/reports plus
aggregates under --out. With default settings this takes several hours on a
laptop; use --epochs/--seeds to scale it down for a smoke run.

    python3 scripts/run_experiments.py --out results/ --seeds 0..2 --epochs 500
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from awm import expharness
from awm.cli import _parse_seeds


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--dataset", choices=("d1", "d2"), default="d1")
    parser.add_argument("--seeds", default="0..5", help="e.g. 0..5 or 0,1,2")
    parser.add_argument("--epochs", type=int, default=500)
    parser.add_argument("--experiments", nargs="+",
                        default=["exp1", "exp2", "exp3", "exp4.1", "exp4.2"])
    args = parser.parse_args(argv)

    seeds = _parse_seeds(args.seeds)
    out = Path(args.out)
    rows = []
    for exp_id in args.experiments:
        spec = expharness.experiment_spec(exp_id, target_kind=args.dataset,
                                          seeds=seeds, epochs=args.epochs)
        print(f"== {exp_id} on {args.dataset} ({len(seeds)} seeds, {args.epochs} epochs)",
              flush=True)
        rows.append(expharness.run_experiment(spec, out / exp_id.replace(".", "_")))
    expharness.write_table(rows, out / "combined.csv")
    print()
    print(expharness.results_table(rows))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
