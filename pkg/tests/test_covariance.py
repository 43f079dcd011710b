import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from daamimo.config import NetworkConfig
from daamimo.covariance import (CovarianceSet, angular_half_width, build_covariance_set,
                                one_ring_covariance, uncorrelated_covariance)
from daamimo.geometry import Layout, make_layout

DELTA = math.sqrt(3) * math.radians(5.0)


def adaptive_entry(lag, beta, theta, delta, spacing=0.5):
    f = lambda a, part: part(np.exp(1j * 2 * np.pi * spacing * lag * np.sin(a)))
    re, _ = quad(f, theta - delta, theta + delta, args=(np.real,), epsabs=1e-13, epsrel=1e-12, limit=200)
    im, _ = quad(f, theta - delta, theta + delta, args=(np.imag,), epsabs=1e-13, epsrel=1e-12, limit=200)
    return beta * (re + 1j * im) / (2 * delta)


def test_scalar_case():
    np.testing.assert_allclose(one_ring_covariance(1, 2.5, 0.3, DELTA), [[2.5]])


def test_point_source_limit():
    M, theta = 6, 0.7
    R = one_ring_covariance(M, 1.3, theta, 1e-6)
    m = np.arange(M)
    ref = 1.3 * np.exp(1j * 2 * np.pi * 0.5 * np.subtract.outer(m, m) * np.sin(theta))
    np.testing.assert_allclose(R, ref, atol=1e-6)
    eig = np.linalg.eigvalsh(R)
    assert eig[-2] < 1e-5 * eig[-1]


def test_matches_adaptive_quadrature():
    theta = math.radians(30)
    R = one_ring_covariance(4, 1.0, theta, DELTA)
    np.testing.assert_array_equal(np.real(np.diag(R)), np.ones(4))
    for m in range(4):
        for p in range(4):
            assert abs(R[m, p] - adaptive_entry(m - p, 1.0, theta, DELTA)) < 1e-8


@pytest.mark.parametrize("M", [4, 40, 100, 200])
def test_quadrature_converged_at_default_order(M):
    theta = 1.1
    a = one_ring_covariance(M, 1.0, theta, DELTA, order=64)
    b = one_ring_covariance(M, 1.0, theta, DELTA, order=2 * max(64, M + 64))
    assert np.max(np.abs(a - b)) <= 1e-9


def test_rejects_nonpositive_width():
    with pytest.raises(ValueError):
        one_ring_covariance(4, 1.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        one_ring_covariance(4, 1.0, 0.0, 0.1, spacing=0.0)


def test_uncorrelated():
    R = uncorrelated_covariance(3, 2.0)
    np.testing.assert_array_equal(R, np.diag([2.0, 2.0, 2.0]))
    assert np.trace(R).real == 6.0
    np.testing.assert_allclose(np.linalg.eigvalsh(R), 2.0)


def test_half_width_conventions():
    assert angular_half_width(NetworkConfig()) == pytest.approx(DELTA)
    assert angular_half_width(NetworkConfig(angular_spread_convention="half_width")) == pytest.approx(
        math.radians(5.0))


def check_covariance(R, beta, toeplitz=True):
    """Hermitian, PSD, trace and Toeplitz invariants; returns a list of violations."""
    M = R.shape[0]
    bad = []
    if np.max(np.abs(R - R.conj().T)) > 0:
        bad.append("hermitian")
    tr = np.trace(R).real
    if np.linalg.eigvalsh(R)[0] < -1e-10 * tr / M:
        bad.append("psd")
    if abs(tr - M * beta) > 1e-8 * M * beta:
        bad.append("trace")
    if toeplitz:
        for d in range(-(M - 1), M):
            diag = np.diagonal(R, d)
            if np.any(diag != diag[0]):
                bad.append("toeplitz")
                break
    return bad


@given(M=st.integers(1, 64), beta=st.floats(1e-14, 1e3), theta=st.floats(-math.pi, math.pi),
       delta=st.floats(1e-4, 1.0), spacing=st.floats(0.1, 2.0))
@settings(max_examples=150, deadline=None)
def test_one_ring_invariants(M, beta, theta, delta, spacing):
    assert check_covariance(one_ring_covariance(M, beta, theta, delta, spacing), beta) == []


def test_set_uncorrelated_is_diagonal():
    cfg = NetworkConfig(L=2, K=3, N=2, M=5)
    cov = build_covariance_set(cfg, make_layout(cfg, np.random.default_rng(0)))
    off = cov.R - np.einsum("...ii->...i", cov.R)[..., None] * np.eye(5)
    assert np.all(off == 0)
    np.testing.assert_allclose(np.einsum("...ii->...", cov.R).real, 5 * cov.beta, rtol=1e-12)


def test_set_matches_direct_call():
    cfg = NetworkConfig(L=1, K=1, N=1, M=2, fading_mode="correlated")
    lay = make_layout(cfg, np.random.default_rng(4))
    cov = build_covariance_set(cfg, lay)
    d = np.linalg.norm(lay.user_positions[0, 0] - lay.subarray_positions[0, 0])
    diff = lay.user_positions[0, 0] - lay.subarray_positions[0, 0]
    ref = one_ring_covariance(2, d ** -3.76, math.atan2(diff[1], diff[0]), DELTA)
    np.testing.assert_allclose(cov.R[0, 0, 0, 0], ref, rtol=1e-12)


def test_moving_user_away_lowers_trace():
    cfg = NetworkConfig(L=1, K=1, N=1, M=3, fading_mode="correlated")
    traces = []
    for r in (50.0, 200.0, 700.0):
        lay = Layout(np.zeros((1, 2)), np.zeros((1, 1, 2)), np.array([[[r, 10.0]]]))
        traces.append(np.trace(build_covariance_set(cfg, lay).R[0, 0, 0, 0]).real)
    assert traces[0] > traces[1] > traces[2]


@given(seed=st.integers(0, 10 ** 6))
@settings(max_examples=20, deadline=None)
def test_set_invariants_random_configs(seed):
    rng = np.random.default_rng(seed)
    cfg = NetworkConfig(L=int(rng.integers(1, 3)), K=int(rng.integers(1, 4)), N=int(rng.integers(1, 5)),
                        M=int(rng.integers(1, 9)), fading_mode="correlated")
    cov = build_covariance_set(cfg, make_layout(cfg, rng))
    for idx in np.ndindex(cov.beta.shape):
        assert check_covariance(cov.R[idx], cov.beta[idx]) == []


def test_shadowing_needs_rng_and_is_seeded():
    cfg = NetworkConfig(L=1, K=2, N=1, M=2, shadowing_std_db=8.0)
    lay = make_layout(cfg, np.random.default_rng(0))
    with pytest.raises(ValueError):
        build_covariance_set(cfg, lay)
    a = build_covariance_set(cfg, lay, np.random.default_rng(1))
    b = build_covariance_set(cfg, lay, np.random.default_rng(1))
    np.testing.assert_array_equal(a.beta, b.beta)
    assert not np.allclose(a.beta, lay.distances() ** -3.76, rtol=1e-3, atol=0)


def test_save_load(tmp_path):
    cfg = NetworkConfig(L=1, K=2, N=2, M=3, fading_mode="correlated")
    cov = build_covariance_set(cfg, make_layout(cfg, np.random.default_rng(0)))
    cov.save(tmp_path / "cov.npz")
    back = CovarianceSet.load(tmp_path / "cov.npz")
    np.testing.assert_array_equal(back.R, cov.R)
    assert back.shape == (1, 2, 2, 3)
