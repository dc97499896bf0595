"""Export the two-law curve comparison figure.

50 curves per law at n = 1e3 (top row) and n = 1e6 (bottom row), recentring
law on the left, plain posterior draws on the right; posterior mean in blue,
truth in black. Writes curves.csv and curves.svg into --outdir.
"""

import argparse
import sys

from ebcred.cli import run


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--outdir", default="curves_out")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--count", type=int, default=50)
    ap.add_argument(
        "--alpha",
        type=float,
        default=None,
        help="pin the prior regularity instead of the default EB fit",
    )
    args = ap.parse_args()

    argv = [
        "curves",
        "--n", "1000,1000000",
        "--laws", "both",
        "--count", str(args.count),
        "--seed", str(args.seed),
        "--outdir", args.outdir,
    ]
    if args.alpha is not None:
        argv += ["--alpha", str(args.alpha)]
    return run(argv)


if __name__ == "__main__":
    sys.exit(main())
