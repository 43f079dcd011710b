"""Closed-form downlink SINR, rate, throughput and per-cell power for MRT precoding."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .estimation import EstimatorStats

DEFAULT_BANDWIDTH = 20e6
DEFAULT_DL_FRACTION = 0.45


@dataclass(frozen=True)
class PowerCoefficients:
    nu: np.ndarray  # (L, K, N), nonnegative

    def __post_init__(self):
        nu = np.asarray(self.nu, dtype=float)
        if nu.ndim != 3:
            raise ValueError("power coefficients must be shaped (L, K, N)")
        if np.any(nu < 0):
            raise ValueError("power coefficients must be nonnegative")
        object.__setattr__(self, "nu", nu)


@dataclass(frozen=True)
class SinrReport:
    sinr: np.ndarray  # (L, K)
    rate: np.ndarray  # b/s/Hz
    throughput: np.ndarray  # b/s
    min_sinr: float
    per_cell_power: np.ndarray  # (L,)


def _nu_array(nu) -> np.ndarray:
    return nu.nu if isinstance(nu, PowerCoefficients) else np.asarray(nu, dtype=float)


def _check_dims(stats: EstimatorStats, nu: np.ndarray):
    if nu.shape != stats.chi.shape:
        raise ValueError(f"power coefficients shaped {nu.shape}, stats expect {stats.chi.shape}")


def sinr_terms(stats: EstimatorStats, nu, noise_power: float):
    """Signal and interference-plus-noise of every user, both shaped (L, K)."""
    nu = _nu_array(nu)
    _check_dims(stats, nu)
    L = nu.shape[0]
    signal = np.einsum("jkn,jkn->jk", nu, stats.chi) ** 2
    noncoherent = np.einsum("lin,jklin->jk", nu ** 2, stats.zeta)
    # coh[j, k, l] = sum_n nu[l, k, n] xi[j, k, l, n]
    coh = np.einsum("lkn,jkln->jkl", nu, stats.xi)
    coh2 = np.abs(coh) ** 2
    coh2[np.arange(L), :, np.arange(L)] = 0.0
    return signal, noncoherent + coh2.sum(axis=2) + noise_power


def sinr(stats: EstimatorStats, nu, noise_power: float) -> np.ndarray:
    if noise_power <= 0:
        raise ValueError("noise power must be positive")
    s, d = sinr_terms(stats, nu, noise_power)
    return s / d


def throughput(sinr_values, bandwidth: float = DEFAULT_BANDWIDTH,
               dl_fraction: float = DEFAULT_DL_FRACTION) -> np.ndarray:
    """BW * dl_fraction * log2(1 + SINR), b/s."""
    if bandwidth <= 0:
        raise ValueError("bandwidth must be positive")
    if isinstance(sinr_values, SinrReport):
        sinr_values = sinr_values.sinr
    return bandwidth * dl_fraction * np.log2(1.0 + np.asarray(sinr_values, dtype=float))


def per_cell_power(stats: EstimatorStats, nu) -> np.ndarray:
    nu = _nu_array(nu)
    _check_dims(stats, nu)
    return np.einsum("lin,lin->l", nu ** 2, stats.alpha)


def per_array_power(stats: EstimatorStats, nu) -> np.ndarray:
    nu = _nu_array(nu)
    _check_dims(stats, nu)
    return np.einsum("lin,lin->ln", nu ** 2, stats.alpha)


def evaluate_sinr(stats: EstimatorStats, nu, noise_power: float,
                  bandwidth: float = DEFAULT_BANDWIDTH,
                  dl_fraction: float = DEFAULT_DL_FRACTION) -> SinrReport:
    g = sinr(stats, nu, noise_power)
    return SinrReport(sinr=g, rate=np.log2(1.0 + g), throughput=throughput(g, bandwidth, dl_fraction),
                      min_sinr=float(g.min()), per_cell_power=per_cell_power(stats, nu))
