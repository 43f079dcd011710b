import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_psd, scalar_cov, scenario
from daamimo.config import NetworkConfig
from daamimo.covariance import CovarianceSet
from daamimo.estimation import EstimatorStats, compute_Q, estimator_matrices, estimator_stats, pilot_gram
from daamimo.oracle import brute_force_maxmin, mc_sinr, pilot_phase, sample_channels, sqrtm_psd
from daamimo.power_control import equal_nu, maxmin
from daamimo.sinr import sinr


def one_link(R):
    M = R.shape[0]
    return CovarianceSet(R.reshape(1, 1, 1, 1, M, M).astype(complex), np.ones((1, 1, 1, 1)))


def test_zero_covariance_gives_zero_channel():
    h = sample_channels(one_link(np.zeros((3, 3))), np.random.default_rng(0), 10).h
    assert np.all(h == 0)


def test_identity_covariance_unit_variance():
    h = sample_channels(one_link(np.eye(4)), np.random.default_rng(0), 10_000).h
    var = np.mean(np.abs(h) ** 2, axis=0).ravel()
    np.testing.assert_allclose(var, 1.0, rtol=0.03)


def test_rank_one_draws_stay_on_subspace():
    v = np.exp(1j * np.arange(5) * 0.4)
    h = sample_channels(one_link(np.outer(v, v.conj())), np.random.default_rng(1), 200).h.reshape(200, 5)
    P = np.eye(5) - np.outer(v, v.conj()) / 5
    assert np.max(np.abs(h @ P.T)) <= 1e-10 * np.max(np.abs(h))


@given(seed=st.integers(0, 10 ** 5), M=st.integers(1, 6))
@settings(max_examples=10, deadline=None)
def test_empirical_covariance(seed, M):
    rng = np.random.default_rng(seed)
    R = random_psd(rng, M, rank=max(1, M - 1))
    h = sample_channels(one_link(R), rng, 10_000).h.reshape(-1, M)
    emp = h.T @ h.conj() / len(h)
    assert np.linalg.norm(emp - R) <= 0.05 * np.linalg.norm(R)


def test_sqrtm_clips_negative_round_off():
    R = np.diag([1.0, -1e-18, 4.0]).astype(complex)
    S = sqrtm_psd(R)
    np.testing.assert_allclose(S @ S, np.diag([1.0, 0.0, 4.0]), atol=1e-12)


def test_noiseless_pilot_returns_channel():
    cov = scalar_cov(4, 1.0)
    gram = pilot_gram(NetworkConfig(L=1, K=1, N=1, M=4))
    rng = np.random.default_rng(0)
    sample = sample_channels(cov, rng, 5)
    y = pilot_phase(sample, gram, 1e12, rng)
    np.testing.assert_allclose(y[:, 0, 0], sample.h[:, 0, 0, 0], atol=1e-5)


def test_pilot_covariance_matches_Q(small_correlated):
    cfg, cov, gram, _ = small_correlated
    rho = 1e10
    rng = np.random.default_rng(0)
    y = pilot_phase(sample_channels(cov, rng, 20_000), gram, rho, rng)
    for j, k, n in np.ndindex(cfg.L, cfg.K, cfg.N):
        emp = np.einsum("sa,sb->ab", y[:, j, k, n], y[:, j, k, n].conj()) / len(y)
        Q = compute_Q(cov, gram, rho, j, k, n)
        assert np.linalg.norm(emp - Q) <= 0.05 * np.linalg.norm(Q)


def test_orthogonal_pilots_exclude_other_users(small):
    cfg, cov, gram, _ = small
    sample = sample_channels(cov, np.random.default_rng(0), 3)
    y1 = pilot_phase(sample, gram, cfg.pilot_snr, np.random.default_rng(5))
    h = sample.h.copy()
    h[:, :, 1] *= 1e6  # blow up every channel of users with index 1
    y2 = pilot_phase(type(sample)(h), gram, cfg.pilot_snr, np.random.default_rng(5))
    np.testing.assert_array_equal(y1[:, :, 0], y2[:, :, 0])


@pytest.mark.parametrize("fading", ["uncorrelated", "correlated"])
def test_mc_matches_closed_form(fading):
    cfg, cov, gram, s = scenario(21, fading_mode=fading)
    nu = equal_nu(s).nu
    mc = mc_sinr(cov, gram, cfg, nu, 20_000, np.random.default_rng(0))
    cf = sinr(s, nu, cfg.noise_power)
    assert np.max(np.abs(mc - cf) / cf) <= 0.03


@pytest.mark.slow
@pytest.mark.parametrize("estimator", ["mmse", "ewmmse"])
def test_closed_form_at_larger_budget(estimator):
    """Same scenarios as the acceptance protocol, eight times the samples: well inside 3%."""
    worst = 0.0
    for fading in ("uncorrelated", "correlated"):
        for seed in range(10):
            cfg, cov, gram, s = scenario(seed, fading_mode=fading, estimator=estimator)
            rng = np.random.default_rng(seed)
            nu = rng.uniform(0.2, 1.0, s.chi.shape) * equal_nu(s).nu
            cf = sinr(s, nu, cfg.noise_power)
            worst = max(worst, np.max(np.abs(mc_sinr(cov, gram, cfg, nu, 160_000, rng) - cf) / cf))
    assert worst <= 0.02


def test_mc_zero_power_and_sample_floor(small):
    cfg, cov, gram, s = small
    assert np.all(mc_sinr(cov, gram, cfg, np.zeros(s.chi.shape), 1000, np.random.default_rng(0)) == 0)
    with pytest.raises(ValueError):
        mc_sinr(cov, gram, cfg, equal_nu(s).nu, 999, np.random.default_rng(0))


def test_mc_reproducible(small):
    cfg, cov, gram, s = small
    a = mc_sinr(cov, gram, cfg, equal_nu(s).nu, 1000, np.random.default_rng(9))
    b = mc_sinr(cov, gram, cfg, equal_nu(s).nu, 1000, np.random.default_rng(9))
    np.testing.assert_array_equal(a, b)


def test_ewmmse_mc_equals_mmse_mc_for_diagonal_covariances(small):
    cfg, cov, gram, s = small  # uncorrelated: every R diagonal
    nu = equal_nu(s).nu
    a = mc_sinr(cov, gram, cfg, nu, 4000, np.random.default_rng(2))
    b = mc_sinr(cov, gram, cfg.replace(estimator="ewmmse"), nu, 4000, np.random.default_rng(2))
    np.testing.assert_allclose(a, b, rtol=1e-9)


def test_mc_gap_shrinks_with_samples():
    gaps = {n: [] for n in (1000, 4000, 16000)}
    for seed in range(6):
        cfg, cov, gram, s = scenario(100 + seed, fading_mode="correlated")
        nu = equal_nu(s).nu
        cf = sinr(s, nu, cfg.noise_power)
        for n in gaps:
            mc = mc_sinr(cov, gram, cfg, nu, n, np.random.default_rng(seed))
            gaps[n].append(np.sqrt(np.mean(((mc - cf) / cf) ** 2)))
    g = {n: np.mean(v) for n, v in gaps.items()}
    # 1/sqrt(n) predicts a factor 2 per step; allow generous slack for the small seed count
    assert g[4000] < 0.75 * g[1000]
    assert g[16000] < 0.75 * g[4000]


def test_mmse_error_not_larger_than_ewmmse(small_correlated):
    cfg, cov, gram, _ = small_correlated
    rng = np.random.default_rng(0)
    sample = sample_channels(cov, rng, 20_000)
    y = pilot_phase(sample, gram, cfg.pilot_snr, rng)
    own = np.stack([sample.h[:, j, :, j] for j in range(cfg.L)], axis=1)  # (S, L, K, N, M)
    err = {}
    for est in ("mmse", "ewmmse"):
        W, _ = estimator_matrices(cov, gram, cfg.pilot_snr, est)
        e = own - np.einsum("jknab,sjknb->sjkna", W, y)
        err[est] = np.mean(np.sum(np.abs(e) ** 2, axis=-1), axis=0)
    assert np.all(err["mmse"] <= 1.05 * err["ewmmse"])


# brute force ------------------------------------------------------------------

def test_brute_force_single_link_is_full_power():
    cfg = NetworkConfig(L=1, K=1, N=1, M=8, pilot_snr=1e10)
    s = estimator_stats(scalar_cov(8, 1e-9), pilot_gram(cfg), cfg)
    nu, g = brute_force_maxmin(s, 1e-11, 50)
    full = 1 / math.sqrt(s.alpha[0, 0, 0])
    assert nu[0, 0, 0] == pytest.approx(full)
    assert g == pytest.approx(sinr(s, np.full((1, 1, 1), full), 1e-11)[0, 0])


def test_brute_force_symmetric_users_split_evenly():
    a = 2.0
    s = EstimatorStats(chi=np.full((1, 2, 1), a), zeta=np.full((1, 2, 1, 2, 1), 0.3),
                       xi=np.full((1, 2, 1, 1), a), alpha=np.full((1, 2, 1), a))
    nu, _ = brute_force_maxmin(s, 0.5, 201)
    assert nu[0, 0, 0] == pytest.approx(nu[0, 1, 0])
    assert nu[0, 0, 0] ** 2 * a == pytest.approx(0.5)


def test_brute_force_rejects_large_problems(small):
    cfg, _, _, s = small
    with pytest.raises(ValueError):
        brute_force_maxmin(s, cfg.noise_power)


@pytest.mark.parametrize("seed", range(20))
def test_grid_never_beats_bisection(seed):
    cfg, _, _, s = scenario(seed, L=1, K=2, N=1, fading_mode="correlated" if seed % 2 else "uncorrelated")
    res = maxmin(s, cfg.noise_power, epsilon=1e-3)
    _, g = brute_force_maxmin(s, cfg.noise_power, 100)
    assert g <= res.gamma_star + 1e-3 + 1e-9
