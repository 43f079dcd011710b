"""Spatial covariance matrices R[j, k, l, n] for every user/sub-array link."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import toeplitz

from .config import NetworkConfig
from .geometry import Layout, large_scale_gain


@dataclass(frozen=True)
class CovarianceSet:
    """R[j, k, l, n] is the M x M covariance of the channel from user (j, k) to sub-array (l, n)."""
    R: np.ndarray  # (L, K, L, N, M, M) complex
    beta: np.ndarray  # (L, K, L, N)

    @property
    def shape(self):
        L, K, _, N, M, _ = self.R.shape
        return L, K, N, M

    def save(self, path):
        np.savez_compressed(path, R=self.R, beta=self.beta)

    @classmethod
    def load(cls, path) -> "CovarianceSet":
        with np.load(path) as f:
            return cls(R=f["R"], beta=f["beta"])


def _gauss_order(M: int, delta: float, spacing: float, order: int) -> int:
    # nodes must resolve the fastest oscillation of exp(i 2 pi s (M-1) sin a) over the window
    half_phase = math.pi * spacing * max(M - 1, 0) * delta
    return max(order, int(math.ceil(half_phase)) + 32)


def one_ring_covariance(M: int, beta: float, theta: float, delta: float,
                        spacing: float = 0.5, order: int = 64) -> np.ndarray:
    """One-ring covariance of an M-element ULA.

    Scatterers are seen uniformly over [theta - delta, theta + delta] (radians);
    entry (m, p) is the average of exp(i 2 pi spacing (m - p) sin a) over that
    window, scaled by ``beta``. The matrix is Hermitian Toeplitz.
    """
    if delta <= 0:
        raise ValueError("angular half-width must be positive")
    if spacing <= 0:
        raise ValueError("antenna spacing must be positive")
    n = _gauss_order(M, delta, spacing, order)
    x, w = np.polynomial.legendre.leggauss(n)
    alpha = theta + delta * x
    lags = np.arange(M)
    phase = 2 * np.pi * spacing * np.outer(lags, np.sin(alpha))
    col = beta * (np.exp(1j * phase) @ w) / 2.0
    col[0] = beta
    return toeplitz(col, col.conj())


def uncorrelated_covariance(M: int, beta: float) -> np.ndarray:
    return beta * np.eye(M, dtype=complex)


def angular_half_width(config: NetworkConfig) -> float:
    """Half-width of the uniform angular window, radians."""
    std = math.radians(config.angular_spread_std)
    if config.angular_spread_convention == "uniform_std":
        return math.sqrt(3.0) * std
    return std


def build_covariance_set(config: NetworkConfig, layout: Layout,
                         rng: np.random.Generator | None = None) -> CovarianceSet:
    L, K, N, M = config.L, config.K, config.N, config.M
    d = layout.distances()
    beta = large_scale_gain(d, config.path_loss_exponent)
    if config.shadowing_std_db > 0:
        if rng is None:
            raise ValueError("shadow fading needs an rng")
        beta = beta * 10 ** (config.shadowing_std_db * rng.standard_normal(beta.shape) / 10)
    R = np.zeros((L, K, L, N, M, M), dtype=complex)
    if config.fading_mode == "uncorrelated":
        R[...] = beta[..., None, None] * np.eye(M)
        return CovarianceSet(R=R, beta=beta)
    theta = layout.bearings()
    delta = angular_half_width(config)
    for idx in np.ndindex(L, K, L, N):
        R[idx] = one_ring_covariance(M, beta[idx], theta[idx], delta,
                                     config.antenna_spacing, config.quadrature_order)
    return CovarianceSet(R=R, beta=beta)
