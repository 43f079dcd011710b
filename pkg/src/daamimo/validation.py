"""Small-scale self-check: closed-form SINR against Monte-Carlo, max-min against brute force."""
from __future__ import annotations

import itertools
import time

import numpy as np

from .config import NetworkConfig
from .covariance import build_covariance_set
from .estimation import estimator_stats, pilot_gram
from .geometry import make_layout
from .oracle import brute_force_maxmin, mc_sinr
from .power_control import equal_nu, maxmin
from .sinr import sinr

VALIDATION_CONFIG = dict(L=2, K=2, N=2, M=4)


def random_scenario(seed: int, **overrides):
    """Stats plus the objects needed to sample it, for one random drop of a small network."""
    cfg = NetworkConfig(**{**VALIDATION_CONFIG, "rng_seed": seed, **overrides})
    rng = np.random.default_rng(seed)
    cov = build_covariance_set(cfg, make_layout(cfg, rng))
    gram = pilot_gram(cfg)
    return cfg, cov, gram, estimator_stats(cov, gram, cfg), rng


def closed_form_gap(seed: int, fading_mode: str, estimator: str, n_samples: int = 20000) -> float:
    """Largest relative gap between closed-form and sampled SINR over all users of one scenario."""
    cfg, cov, gram, stats, rng = random_scenario(seed, fading_mode=fading_mode, estimator=estimator)
    # random but admissible coefficients, well away from equal-nu symmetry
    nu = rng.uniform(0.2, 1.0, stats.chi.shape) * equal_nu(stats).nu
    cf = sinr(stats, nu, cfg.noise_power)
    mc = mc_sinr(cov, gram, cfg, nu, n_samples, rng)
    return float(np.max(np.abs(cf - mc) / cf))


def run_validation(seed: int = 0, scenarios: int = 10, n_samples: int = 20000, tol: float = 0.03,
                   out=print) -> bool:
    ok = True
    for fading, est in itertools.product(("uncorrelated", "correlated"), ("mmse", "ewmmse")):
        t0 = time.perf_counter()
        gaps = [closed_form_gap(seed * 1000 + s, fading, est, n_samples) for s in range(scenarios)]
        passed = max(gaps) <= tol
        ok &= passed
        out(f"{'PASS' if passed else 'FAIL'} closed-form vs Monte-Carlo {fading:>12} {est:>6}: "
            f"max gap {max(gaps):.4f} (tol {tol}) [{time.perf_counter() - t0:.1f}s]")

    cfg, _, _, stats, _ = random_scenario(seed, L=1, K=2, N=1)
    res = maxmin(stats, cfg.noise_power, 1e-3 * 1e-3)
    _, g_grid = brute_force_maxmin(stats, cfg.noise_power, 400)
    rel = abs(g_grid - res.gamma_star) / res.gamma_star
    passed = rel <= 0.01
    ok &= passed
    out(f"{'PASS' if passed else 'FAIL'} max-min vs brute-force grid: bisection {res.gamma_star:.5g}, "
        f"grid {g_grid:.5g}, gap {rel:.4f} (tol 0.01)")
    out("validation " + ("passed" if ok else "FAILED"))
    return ok
