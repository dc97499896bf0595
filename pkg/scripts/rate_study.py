"""Radius and risk scaling in the noise level.

Runs the rate experiment over n in {1e3..1e6} for the integration-operator
spectrum and the identity spectrum at fixed alpha = 1, printing the fitted
log-log slopes next to the slope implied by the posterior variance mass.
Expected: about -0.20 for the inverse problem, about -1/3 for the direct one.
"""

import argparse
import sys

from ebcred.experiments import ExperimentConfig, rate_experiment


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--m", type=int, default=20_000, help="radius sample size")
    ap.add_argument("--imax", type=int, default=10_000)
    args = ap.parse_args()

    for spectrum in ("volterra", "identity"):
        config = ExperimentConfig(
            n_values=(1e3, 1e4, 1e5, 1e6),
            repetitions=5,
            spectrum=spectrum,
            i_max=args.imax,
            m_precise=args.m,
            fixed_hyperparameter=1.0,
            master_seed=args.seed,
        )
        report = rate_experiment(config)
        print(f"{spectrum:>9s}:  radius slope {report.radius_slope:+.4f}   "
              f"variance-mass proxy {report.radius_slope_variance_proxy:+.4f}   "
              f"risk slope {report.risk_slope:+.4f}")
        for row in report.rows:
            print(f"           n={row.n:>10g}  radius {row.mean_radius:.5f}  "
                  f"risk {row.mean_risk:.5f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
