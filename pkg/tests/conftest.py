import sys

import numpy as np
import pytest

from daamimo.config import NetworkConfig
from daamimo.covariance import CovarianceSet, build_covariance_set
from daamimo.estimation import estimator_stats, pilot_gram
from daamimo.geometry import make_layout


def scenario(seed=0, **overrides):
    """(config, cov, gram, stats) for one random drop of a small network."""
    base = dict(L=2, K=2, N=2, M=4, rng_seed=seed)
    base.update(overrides)
    cfg = NetworkConfig(**base)
    cov = build_covariance_set(cfg, make_layout(cfg, np.random.default_rng(seed)))
    gram = pilot_gram(cfg)
    return cfg, cov, gram, estimator_stats(cov, gram, cfg)


def scalar_cov(M, beta, L=1, K=1, N=1):
    """Every link gets beta * I."""
    R = np.zeros((L, K, L, N, M, M), dtype=complex)
    R[...] = beta * np.eye(M)
    return CovarianceSet(R=R, beta=np.full((L, K, L, N), float(beta)))


def random_psd(rng, M, rank=None):
    rank = M if rank is None else rank
    X = rng.standard_normal((M, rank)) + 1j * rng.standard_normal((M, rank))
    return X @ X.conj().T / rank


@pytest.fixture
def small():
    return scenario(0)


@pytest.fixture
def small_correlated():
    return scenario(1, fading_mode="correlated")


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
