"""Sweep the pilot SNR / noise power pair and print max-min and equal-nu throughput levels.

Absolute transmit power and noise floor are free parameters of the normalised
model; this is the sweep used to pick the NetworkConfig defaults.

    python scripts/calibrate.py --pairs 1e10,1e-10 1.4e10,7.1e-11 2e10,5e-11 --drops 10
"""
import argparse
import time
import warnings

import numpy as np

from daamimo.config import NetworkConfig
from daamimo.harness import run_drop


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--pairs", nargs="+", default=["1e10,1e-10", "1.4e10,7.1e-11", "2e10,5e-11"],
                    help="pilot_snr,noise_power pairs")
    ap.add_argument("--daa", nargs="+", default=["100,4", "10,40"])
    ap.add_argument("--drops", type=int, default=10)
    args = ap.parse_args()
    warnings.filterwarnings("ignore", module="cvxpy")

    for pair in args.pairs:
        rho, noise = map(float, pair.split(","))
        for daa in args.daa:
            M, N = map(int, daa.split(","))
            cfg = NetworkConfig(M=M, N=N, pilot_snr=rho, noise_power=noise)
            t0 = time.perf_counter()
            tput = {"maxmin": [], "equalnu": []}
            for d in range(args.drops):
                for r in run_drop(cfg, d):
                    if r.ok:
                        tput[r.allocator].append(r.avg_throughput / 1e6)
            cells = "  ".join(f"{a} {np.median(v):6.2f} / {np.percentile(v, 5):6.2f}" for a, v in tput.items())
            print(f"rho {rho:.3g} noise {noise:.3g} {{{M},{N}}}: {cells}  (median / 5th pct, Mbit/s) "
                  f"[{time.perf_counter() - t0:.0f}s]", flush=True)


if __name__ == "__main__":
    main()
