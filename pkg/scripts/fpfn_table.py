"""Print the false-positive/false-negative comparison table.

Runs the fpfn experiment at n in {1e3, 1e6} (add --large for the 1e8 column,
which takes a few minutes and i_max = 1e5), N in {500, 2000}, 10 repetitions,
alpha = 1 fixed, and prints one row per cell: conditional means with the
percentage of repetitions in which each count is nonzero.
"""

import argparse
import sys
import time

from ebcred.experiments import ExperimentConfig, fpfn_experiment


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--large", action="store_true", help="include the n=1e8 column")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    n_values = (1e3, 1e6, 1e8) if args.large else (1e3, 1e6)
    for n in n_values:
        # the 1e8 column needs a deeper truncation to keep the tail negligible
        i_max = 100_000 if n >= 1e8 else 10_000
        config = ExperimentConfig(
            n_values=(n,),
            draw_counts=(500, 2000),
            repetitions=10,
            i_max=i_max,
            fixed_hyperparameter=1.0,
            master_seed=args.seed,
        )
        t0 = time.time()
        report = fpfn_experiment(config)
        for cell in report.cells:
            print(
                f"n={cell.n:>12g}  N={cell.N:>5d}   "
                f"FP {cell.mean_fp_conditional:5.1f} ({cell.occurrence_fp_pct:4.0f}%)   "
                f"FN {cell.mean_fn_conditional:5.1f} ({cell.occurrence_fn_pct:4.0f}%)   "
                f"[{time.time() - t0:.1f}s]"
            )
    return 0


if __name__ == "__main__":
    sys.exit(main())
