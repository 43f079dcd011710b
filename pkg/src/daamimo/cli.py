"""Command line entry point: run, summarize, validate, export-cone."""
from __future__ import annotations

import argparse
import logging
import sys
import warnings
from pathlib import Path


from .config import ConfigError, ExperimentSpec, load_spec

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_VALIDATION_FAILED = 2


class _Parser(argparse.ArgumentParser):
    # exit code 2 is reserved for validation failures
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _common(p):
    p.add_argument("--config", help="experiment file (YAML with network/experiment sections)")
    p.add_argument("--seed", type=int)
    p.add_argument("--drops", type=int)
    p.add_argument("--out")
    p.add_argument("--mode", choices=["correlated", "uncorrelated"])
    p.add_argument("--estimator", choices=["mmse", "ewmmse"])
    p.add_argument("--allocator", choices=["maxmin", "equalnu", "both"])
    p.add_argument("--workers", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="daamimo", description="Max-min power control for multi-cell DAA massive MIMO")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("run", help="run an experiment file and write results JSON")
    _common(p)

    p = sub.add_parser("summarize", help="summarise a results file")
    p.add_argument("results")
    p.add_argument("--csv", help="write the summary CSV here")

    p = sub.add_parser("validate", help="closed form vs Monte-Carlo and max-min checks at small scale")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--scenarios", type=int, default=10)
    p.add_argument("--samples", type=int, default=20000)
    p.add_argument("--tol", type=float, default=0.03)

    p = sub.add_parser("export-cone", help="dump one conic feasibility problem as text")
    _common(p)
    p.add_argument("--gamma", type=float, help="SINR target (default: half the single-user bound)")
    p.add_argument("--coherent", choices=["direct", "aux"], default="direct")
    return parser


def _resolve(args) -> ExperimentSpec:
    if not args.config:
        raise ConfigError("a --config file is required")
    spec = load_spec(args.config)
    base = spec.base
    if args.seed is not None:
        base = base.replace(rng_seed=args.seed)
    changes = {"base": base}
    if args.drops is not None:
        changes["n_drops"] = args.drops
    if args.out:
        changes["output_path"] = args.out
    if args.mode:
        changes["fading_modes"] = (args.mode,)
    if args.estimator:
        changes["estimators"] = (args.estimator,)
    if args.allocator:
        changes["allocators"] = ("maxmin", "equalnu") if args.allocator == "both" else (args.allocator,)
    if args.workers:
        changes["workers"] = args.workers
    d = spec.to_dict()
    d.update({k: v for k, v in changes.items() if k != "base"})
    d["base"] = changes["base"].to_dict()
    return ExperimentSpec.from_dict(d)


def cmd_run(args) -> int:
    from .harness import format_table, run_experiment

    spec = _resolve(args)
    results = run_experiment(spec)
    print(format_table(results["summary"]))
    print(f"wrote {spec.output_path}")
    return EXIT_OK


def cmd_summarize(args) -> int:
    from .harness import format_table, load_results, summarize, summary_csv

    rows = summarize(load_results(args.results))
    print(format_table(rows))
    if args.csv:
        Path(args.csv).write_text(summary_csv(rows))
        print(f"wrote {args.csv}")
    return EXIT_OK


def cmd_validate(args) -> int:
    from .validation import run_validation

    ok = run_validation(seed=args.seed, scenarios=args.scenarios, n_samples=args.samples, tol=args.tol)
    return EXIT_OK if ok else EXIT_VALIDATION_FAILED


def cmd_export_cone(args) -> int:
    from .covariance import build_covariance_set
    from .estimation import estimator_stats, pilot_gram
    from .geometry import make_layout
    from .harness import GEOMETRY_STREAM, drop_rng
    from .power_control import build_feasibility, export_cone, single_user_bound

    spec = _resolve(args)
    M, N = spec.daa_configs[0]
    cfg = spec.base.replace(M=M, N=N, fading_mode=spec.fading_modes[0], estimator=spec.estimators[0])
    layout = make_layout(cfg, drop_rng(cfg.rng_seed, 0, GEOMETRY_STREAM))
    stats = estimator_stats(build_covariance_set(cfg, layout), pilot_gram(cfg), cfg)
    gamma = args.gamma or 0.5 * float(single_user_bound(stats, cfg.noise_power).min())
    text = export_cone(build_feasibility(stats, cfg.noise_power, gamma, cfg.power_constraint, args.coherent))
    if args.out:
        Path(args.out).write_text(text)
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


COMMANDS = {"run": cmd_run, "summarize": cmd_summarize, "validate": cmd_validate,
            "export-cone": cmd_export_cone}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if not args.verbose:
        warnings.filterwarnings("ignore", module="cvxpy")
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_ERROR
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, FileNotFoundError, ValueError) as exc:
        parser.print_usage(sys.stderr)
        print(f"daamimo {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
