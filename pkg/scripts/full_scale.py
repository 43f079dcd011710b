"""Full-scale run: L=2, K=10, M_tot=400, 100 drops, DAA layouts from {100,4} to {10,40}.

Writes results/full_scale.json and results/full_scale.csv and compares the
max-min medians and 95%-likely values with the reference levels.

    python scripts/full_scale.py [--drops 100] [--workers 1]
"""
import argparse
import logging
import time
import warnings
from pathlib import Path

from daamimo.config import load_spec
from daamimo.harness import format_table, run_experiment, summary_csv

ROOT = Path(__file__).resolve().parents[1]
REFERENCE = {(100, 4): (11.6, 7.6), (10, 40): (15.0, 13.9)}  # Mbit/s, max-min, uncorrelated


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--config", default=str(ROOT / "configs" / "full_scale.yaml"))
    ap.add_argument("--drops", type=int)
    ap.add_argument("--workers", type=int)
    ap.add_argument("--out", default=str(ROOT / "results" / "full_scale.json"))
    args = ap.parse_args()
    warnings.filterwarnings("ignore", module="cvxpy")
    logging.basicConfig(level=logging.WARNING)

    spec = load_spec(args.config)
    d = spec.to_dict()
    if args.drops:
        d["n_drops"] = args.drops
    if args.workers:
        d["workers"] = args.workers
    d["output_path"] = args.out
    spec = type(spec).from_dict(d)

    t0 = time.perf_counter()
    results = run_experiment(spec)
    rows = results["summary"]
    Path(args.out).with_suffix(".csv").write_text(summary_csv(rows))
    print(format_table(rows))
    print(f"{time.perf_counter() - t0:.0f}s, wrote {args.out}")
    for r in rows:
        ref = REFERENCE.get(tuple(r["daa"]))
        if ref and r["allocator"] == "maxmin" and r["n_ok"]:
            m, p5 = r["median"] / 1e6, r["likely95"] / 1e6
            print(f"{{{r['daa'][0]},{r['daa'][1]}}} max-min: median {m:.2f} vs {ref[0]} ({m / ref[0] - 1:+.0%}), "
                  f"95%-likely {p5:.2f} vs {ref[1]} ({p5 / ref[1] - 1:+.0%})")


if __name__ == "__main__":
    main()
