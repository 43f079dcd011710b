"""Drop-based experiment runner and summary statistics."""
from __future__ import annotations

import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import FORMAT_VERSION, ExperimentSpec, NetworkConfig
from .covariance import build_covariance_set
from .estimation import estimator_stats, pilot_gram
from .geometry import make_layout
from .power_control import equal_nu, maxmin
from .sinr import evaluate_sinr

log = logging.getLogger(__name__)

# rng streams derived from (seed, drop, stream)
GEOMETRY_STREAM = 0
SHADOWING_STREAM = 1


@dataclass
class DropResult:
    drop_index: int
    daa: tuple
    fading_mode: str
    estimator: str
    allocator: str
    throughput: list = field(default_factory=list)  # [L][K], b/s
    avg_throughput: float = float("nan")
    min_sinr: float = float("nan")
    gamma_star: float | None = None
    diagnostics: dict = field(default_factory=dict)
    wall_time: float = 0.0
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None

    def to_dict(self, timing: bool = True) -> dict:
        d = dict(self.__dict__)
        d["daa"] = list(self.daa)
        if not timing:
            d.pop("wall_time")
        return d


def drop_rng(seed: int, drop_index: int, stream: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, drop_index, stream]))


def run_drop(config: NetworkConfig, drop_index: int, allocators=("maxmin", "equalnu")) -> list:
    """One user drop under ``config``: geometry, covariances, statistics, every allocator."""
    key = dict(drop_index=drop_index, daa=(config.M, config.N), fading_mode=config.fading_mode,
               estimator=config.estimator)
    t0 = time.perf_counter()
    try:
        layout = make_layout(config, drop_rng(config.rng_seed, drop_index, GEOMETRY_STREAM))
        cov = build_covariance_set(config, layout, drop_rng(config.rng_seed, drop_index, SHADOWING_STREAM))
        stats = estimator_stats(cov, pilot_gram(config), config)
    except Exception as exc:  # a failed drop is recorded, not fatal
        log.warning("drop %d failed during setup: %s", drop_index, exc)
        return [DropResult(allocator=a, error=f"{type(exc).__name__}: {exc}", **key) for a in allocators]
    setup_time = time.perf_counter() - t0

    out = []
    for alloc in allocators:
        t1 = time.perf_counter()
        res = DropResult(allocator=alloc, **key)
        try:
            if alloc == "maxmin":
                mm = maxmin(stats, config.noise_power, config.epsilon,
                            power_constraint=config.power_constraint)
                nu = mm.nu_star
                res.gamma_star = mm.gamma_star
                res.diagnostics = {"iterations": mm.iterations, "status": mm.status,
                                   "feasibility_margin": mm.feasibility_margin,
                                   "gamma_bounds": list(mm.gamma_bounds), "doublings": mm.doublings}
            else:
                nu = equal_nu(stats)
                res.diagnostics = {"nu": float(nu.nu.flat[0])}
            rep = evaluate_sinr(stats, nu, config.noise_power, config.bandwidth, config.dl_fraction)
            res.throughput = rep.throughput.tolist()
            res.avg_throughput = float(rep.throughput.mean())
            res.min_sinr = rep.min_sinr
            res.diagnostics["per_cell_power"] = rep.per_cell_power.tolist()
        except Exception as exc:
            log.warning("drop %d (%s) failed: %s", drop_index, alloc, exc)
            res.error = f"{type(exc).__name__}: {exc}"
        res.wall_time = setup_time + time.perf_counter() - t1
        out.append(res)
    return out


def _jobs(spec: ExperimentSpec):
    for M, N in spec.daa_configs:
        for fading in spec.fading_modes:
            for est in spec.estimators:
                cfg = spec.base.replace(M=M, N=N, fading_mode=fading, estimator=est)
                for d in range(spec.n_drops):
                    yield cfg, d


def _run_job(args):
    cfg, d, allocators = args
    return run_drop(cfg, d, allocators)


def run_experiment(spec: ExperimentSpec, output_path=None) -> dict:
    """Run every drop of ``spec``; writes the results JSON when a path is given."""
    jobs = [(cfg, d, spec.allocators) for cfg, d in _jobs(spec)]
    if spec.workers > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            batches = list(pool.map(_run_job, jobs))  # map preserves submission order
    else:
        batches = [_run_job(j) for j in jobs]
    flat = [r for batch in batches for r in batch]
    # wall times live in a sidecar so the results file itself is reproducible bit for bit
    drops = [r.to_dict(timing=False) for r in flat]
    results = {"format_version": FORMAT_VERSION, "spec": spec.to_dict(), "drops": drops}
    results["summary"] = summarize(results, require_ok=False)
    path = output_path if output_path is not None else spec.output_path
    if path:
        write_results(results, path)
        timing = {"format_version": FORMAT_VERSION,
                  "wall_time": [[r.drop_index, list(r.daa), r.fading_mode, r.estimator, r.allocator, r.wall_time]
                                for r in flat]}
        Path(timing_path(path)).write_text(json.dumps(timing))
    return results


def timing_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + ".timing.json")


def write_results(results: dict, path):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(json.dumps(results, indent=1, sort_keys=True))


def load_results(path) -> dict:
    results = json.loads(Path(path).read_text())
    if results.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"unsupported results format_version {results.get('format_version')}")
    return results


def percentile(values, q: float) -> float:
    """Linear-interpolation percentile (q in [0, 100]) over sorted values."""
    x = np.sort(np.asarray(values, dtype=float))
    if x.size == 0:
        raise ValueError("percentile of an empty sample")
    pos = (x.size - 1) * q / 100.0
    lo = int(np.floor(pos))
    hi = min(lo + 1, x.size - 1)
    return float(x[lo] + (pos - lo) * (x[hi] - x[lo]))


def summary_stats(values) -> dict:
    """Median, 95%-likely value (5th percentile) and a 100-point empirical CDF."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("no successful drops to summarise")
    qs = np.linspace(0, 100, 100)
    return {"median": percentile(values, 50), "likely95": percentile(values, 5),
            "mean": math.fsum(values) / values.size,  # exact sum: independent of drop order
            "cdf": {"probability": (qs / 100).tolist(), "value": [percentile(values, q) for q in qs]}}


def summarize(results: dict, require_ok: bool = True) -> list:
    """Per (DAA config, fading, estimator, allocator): statistics of per-drop average throughput.

    Failed drops are counted and left out; with ``require_ok`` an all-failed
    result set is an error.
    """
    groups = {}
    for d in results["drops"]:
        key = (tuple(d["daa"]), d["fading_mode"], d["estimator"], d["allocator"])
        groups.setdefault(key, []).append(d)
    if not groups:
        raise ValueError("results contain no drops")
    rows = []
    for (daa, fading, est, alloc), drops in groups.items():
        ok = [d["avg_throughput"] for d in drops if d.get("error") is None]
        row = {"daa": list(daa), "fading_mode": fading, "estimator": est, "allocator": alloc,
               "n_ok": len(ok), "n_failed": len(drops) - len(ok)}
        if ok:
            row.update(summary_stats(ok))
        rows.append(row)
    if require_ok and not any(r["n_ok"] for r in rows):
        raise ValueError("no successful drops to summarise")
    return rows


def summary_csv(rows: list) -> str:
    """Table with one row per DAA config and median / 95%-likely columns (Mbit/s) per scheme."""
    schemes = []
    for r in rows:
        s = (r["allocator"], r["fading_mode"], r["estimator"])
        if s not in schemes:
            schemes.append(s)
    daas = []
    for r in rows:
        if r["daa"] not in daas:
            daas.append(r["daa"])
    index = {(tuple(r["daa"]),) + (r["allocator"], r["fading_mode"], r["estimator"]): r for r in rows}
    header = ["M", "N"]
    for a, f, e in schemes:
        header += [f"{a}_{f}_{e}_median_mbps", f"{a}_{f}_{e}_likely95_mbps"]
    lines = [",".join(header)]
    for daa in daas:
        cells = [str(daa[0]), str(daa[1])]
        for s in schemes:
            r = index.get((tuple(daa),) + s)
            if r is None or not r["n_ok"]:
                cells += ["", ""]
            else:
                cells += [f"{r['median'] / 1e6:.4f}", f"{r['likely95'] / 1e6:.4f}"]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def format_table(rows: list) -> str:
    out = [f"{'DAA':>10} {'allocator':>9} {'fading':>13} {'est':>7} {'drops':>6} {'median':>9} {'95%':>9}  (Mbit/s)"]
    for r in rows:
        daa = "{%d,%d}" % tuple(r["daa"])
        if r["n_ok"]:
            out.append(f"{daa:>10} {r['allocator']:>9} {r['fading_mode']:>13} {r['estimator']:>7} "
                       f"{r['n_ok']:>6} {r['median'] / 1e6:9.2f} {r['likely95'] / 1e6:9.2f}")
        else:
            out.append(f"{daa:>10} {r['allocator']:>9} {r['fading_mode']:>13} {r['estimator']:>7} {0:>6}  failed")
    return "\n".join(out)
