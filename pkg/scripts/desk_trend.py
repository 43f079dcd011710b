"""Desk-scale trend: 40 antennas per cell as {5,8} versus {20,2}, 30 drops, uncorrelated fading.

    python scripts/desk_trend.py [--drops 30] [--out results/desk.json]
"""
import argparse
import warnings
from pathlib import Path

from daamimo.config import ExperimentSpec, load_spec
from daamimo.harness import format_table, run_experiment, summary_csv

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--drops", type=int, default=30)
    ap.add_argument("--out", default=str(ROOT / "results" / "desk.json"))
    args = ap.parse_args()
    warnings.filterwarnings("ignore", module="cvxpy")

    d = load_spec(ROOT / "configs" / "desk.yaml").to_dict()
    d.update(n_drops=args.drops, output_path=args.out)
    results = run_experiment(ExperimentSpec.from_dict(d))
    rows = results["summary"]
    Path(args.out).with_suffix(".csv").write_text(summary_csv(rows))
    print(format_table(rows))
    med = {(tuple(r["daa"]), r["allocator"]): r["median"] for r in rows if r["n_ok"]}
    spread, packed = med[((5, 8), "maxmin")], med[((20, 2), "maxmin")]
    verdict = "holds" if spread > packed else "does not hold"
    print(f"max-min median {{5,8}} {spread / 1e6:.2f} vs {{20,2}} {packed / 1e6:.2f} Mbit/s: trend {verdict}")


if __name__ == "__main__":
    main()
