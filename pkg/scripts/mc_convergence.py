"""Closed-form versus Monte-Carlo SINR gap as the sample budget grows.

Prints the worst and RMS relative gap over the small validation scenarios for
each budget, and how often the worst gap stays under a tolerance when the
Monte-Carlo stream is redrawn.

    python scripts/mc_convergence.py [--budgets 1000 4000 20000 80000] [--streams 10]
"""
import argparse
import warnings

import numpy as np

from daamimo.power_control import equal_nu
from daamimo.oracle import mc_sinr
from daamimo.sinr import sinr
from daamimo.validation import random_scenario


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--budgets", nargs="+", type=int, default=[1000, 4000, 20000, 80000])
    ap.add_argument("--scenarios", type=int, default=10)
    ap.add_argument("--streams", type=int, default=5)
    ap.add_argument("--estimator", default="mmse")
    ap.add_argument("--tol", type=float, default=0.03)
    args = ap.parse_args()
    warnings.filterwarnings("ignore", module="cvxpy")

    setups = []
    for fading in ("uncorrelated", "correlated"):
        for s in range(args.scenarios):
            cfg, cov, gram, stats, rng = random_scenario(s, fading_mode=fading, estimator=args.estimator)
            nu = rng.uniform(0.2, 1.0, stats.chi.shape) * equal_nu(stats).nu
            setups.append((cfg, cov, gram, nu, sinr(stats, nu, cfg.noise_power)))
    for n in args.budgets:
        worst, rms = [], []
        for stream in range(args.streams):
            errs = np.concatenate([
                ((mc_sinr(cov, gram, cfg, nu, n, np.random.default_rng([stream, i])) - cf) / cf).ravel()
                for i, (cfg, cov, gram, nu, cf) in enumerate(setups)])
            worst.append(np.abs(errs).max())
            rms.append(np.sqrt(np.mean(errs ** 2)))
        print(f"n={n:>7}: worst gap {np.mean(worst):.4f} (range {min(worst):.4f}-{max(worst):.4f}), "
              f"rms {np.mean(rms):.4f}, worst <= {args.tol} in {np.mean(np.array(worst) <= args.tol):.0%} "
              f"of {args.streams} streams", flush=True)


if __name__ == "__main__":
    main()
