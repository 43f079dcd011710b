"""Monte-Carlo ground truth for the closed-form SINR, and a brute-force max-min search.

Nothing here uses the trace coefficients of the estimation module: channels
are drawn from their covariances, pilots are received with noise, estimates
are formed from the received pilots and the effective SINR is assembled from
sample averages.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .covariance import CovarianceSet
from .estimation import EstimatorStats, PilotGram


@dataclass(frozen=True)
class ChannelSample:
    h: np.ndarray  # (S, L, K, L, N, M): S draws of every h[j, k, l, n]


def sqrtm_psd(R: np.ndarray) -> np.ndarray:
    """Hermitian square root of a stack of PSD matrices.

    Negative eigenvalues are clipped at 0, and so are eigenvalues at round-off
    level, whose square roots would otherwise leak off a low-rank subspace.
    """
    lam, V = np.linalg.eigh(R)
    floor = R.shape[-1] * np.finfo(float).eps * np.max(np.abs(lam), axis=-1, keepdims=True)
    lam = np.sqrt(np.where(lam > floor, lam, 0.0))
    return (V * lam[..., None, :]) @ np.conj(np.swapaxes(V, -1, -2))


def _cn(rng: np.random.Generator, shape) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def sample_channels(cov: CovarianceSet, rng: np.random.Generator, n_samples: int = 1,
                    root: np.ndarray | None = None) -> ChannelSample:
    if root is None:
        root = sqrtm_psd(cov.R)
    M = cov.R.shape[-1]
    g = _cn(rng, (n_samples,) + cov.R.shape[:-2] + (M,))
    return ChannelSample(np.einsum("jklnab,sjklnb->sjklna", root, g))


def pilot_phase(sample: ChannelSample, gram: PilotGram, pilot_snr: float,
                rng: np.random.Generator) -> np.ndarray:
    """Despread pilot observations y[s, j, k, n] at each user's own-cell sub-arrays."""
    h = sample.h
    S, L, K, _, N, M = h.shape
    # user (l, i) at array (j, n), weighted by the pilot correlation with (j, k)
    y = np.einsum("lijk,slijnm->sjknm", gram.rho, h)
    return y + _cn(rng, (S, L, K, N, M)) / np.sqrt(pilot_snr)


def _estimator(cov: CovarianceSet, gram: PilotGram, pilot_snr: float, estimator: str) -> np.ndarray:
    """Estimator matrices built straight from the model, independent of the estimation module."""
    L, K, _, N, M, _ = cov.R.shape
    W = np.zeros((L, K, N, M, M), dtype=complex)
    for j, k, n in itertools.product(range(L), range(K), range(N)):
        Q = np.eye(M) / pilot_snr
        for l, i in itertools.product(range(L), range(K)):
            Q = Q + abs(gram.rho[l, i, j, k]) ** 2 * cov.R[l, i, j, n]
        R = cov.R[j, k, j, n]
        if estimator == "mmse":
            W[j, k, n] = R @ np.linalg.inv(Q)
        else:
            W[j, k, n] = np.diag(np.real(np.diag(R)) / np.real(np.diag(Q)))
    return W


def mc_moments(cov: CovarianceSet, gram: PilotGram, pilot_snr: float, estimator: str, nu,
               n_samples: int, rng: np.random.Generator, chunk: int = 2000):
    """Sample means of g and |g|^2, where g[j,k,l,i] = sum_n nu_li^n h_jk^{ln,H} a_li^n."""
    nu = np.asarray(getattr(nu, "nu", nu), dtype=float)
    W = _estimator(cov, gram, pilot_snr, estimator)
    root = sqrtm_psd(cov.R)
    L, K = cov.R.shape[:2]
    s1 = np.zeros((L, K, L, K), dtype=complex)
    s2 = np.zeros((L, K, L, K))
    done = 0
    while done < n_samples:
        s = min(chunk, n_samples - done)
        sample = sample_channels(cov, rng, s, root)
        y = pilot_phase(sample, gram, pilot_snr, rng)
        a = np.einsum("linab,slinb->slina", W, y)  # MRT: precoder = channel estimate
        g = np.einsum("lin,sjklnm,slinm->sjkli", nu, np.conj(sample.h), a)
        s1 += g.sum(axis=0)
        s2 += (np.abs(g) ** 2).sum(axis=0)
        done += s
    return s1 / n_samples, s2 / n_samples


def mc_sinr(cov: CovarianceSet, gram: PilotGram, config, nu, n_samples: int,
            rng: np.random.Generator) -> np.ndarray:
    """Effective SINR of every user estimated by sample averages, shape (L, K).

    The mean of the desired gain is the useful signal; its fluctuation and
    every other user's precoded signal count as noise.
    """
    if n_samples < 1000:
        raise ValueError("need at least 1000 samples")
    m1, m2 = mc_moments(cov, gram, config.pilot_snr, config.estimator, nu, n_samples, rng)
    L, K = m1.shape[:2]
    out = np.zeros((L, K))
    for j, k in itertools.product(range(L), range(K)):
        signal = abs(m1[j, k, j, k]) ** 2
        den = m2[j, k].sum() - signal + config.noise_power
        out[j, k] = signal / den
    return out


def _grid_sinr(stats: EstimatorStats, nu: np.ndarray, noise_power: float) -> np.ndarray:
    """SINR of every user for a batch of coefficient tensors nu[g, l, i, n] -> (g, L, K)."""
    G, L, K, N = nu.shape
    out = np.empty((G, L, K))
    for j, k in itertools.product(range(L), range(K)):
        sig = (nu[:, j, k, :] @ stats.chi[j, k]) ** 2
        den = np.full(G, noise_power)
        for l, i in itertools.product(range(L), range(K)):
            den += nu[:, l, i, :] ** 2 @ stats.zeta[j, k, l, i]
        for l in range(L):
            if l != j:
                den += np.abs(nu[:, l, k, :] @ stats.xi[j, k, l]) ** 2
        out[:, j, k] = sig / den
    return out


def brute_force_maxmin(stats: EstimatorStats, noise_power: float, grid_resolution: int = 400,
                       power_constraint: str = "per_cell"):
    """Exhaustive search over per-coefficient power fractions on a uniform grid.

    Each coefficient's transmit power nu^2 alpha takes values in
    linspace(0, 1, grid_resolution); points breaking a power constraint are
    dropped. Returns (nu, gamma) at the best min-SINR grid point.
    """
    L, K, N = stats.chi.shape
    dims = L * K * N
    if dims > 3:
        raise ValueError(f"brute force supports at most 3 coefficients, got {dims}")
    levels = np.linspace(0.0, 1.0, grid_resolution)
    p = np.stack(np.meshgrid(*([levels] * dims), indexing="ij"), axis=-1).reshape(-1, dims)
    pc = p.reshape(-1, L, K, N)
    if power_constraint == "per_cell":
        ok = np.all(pc.sum(axis=(2, 3)) <= 1.0 + 1e-12, axis=1)
    else:
        ok = np.all(pc.sum(axis=2) <= 1.0 + 1e-12, axis=(1, 2))
    pc = pc[ok]
    with np.errstate(divide="ignore", invalid="ignore"):
        nu = np.sqrt(np.where(stats.alpha > 0, pc / stats.alpha, 0.0))
    g = _grid_sinr(stats, nu, noise_power).reshape(len(nu), -1).min(axis=1)
    best = int(np.argmax(g))
    return nu[best], float(g[best])
