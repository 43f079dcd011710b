"""Pilot correlations, MMSE / EW-MMSE estimators and the SINR trace coefficients.

Index conventions follow the covariance tensor: ``R[j, k, l, n]`` is the link
from user (j, k) to sub-array (l, n). Estimator tensors ``W[j, k, n]`` and
``Q[j, k, n]`` belong to user (j, k) at its own-cell sub-array (j, n).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import NetworkConfig
from .covariance import CovarianceSet

IMAG_TOL = 1e-9
COND_CAP = 1e13


class SingularCovariance(np.linalg.LinAlgError):
    pass


@dataclass(frozen=True)
class PilotGram:
    rho: np.ndarray  # rho[l, i, j, k] = phi_li^H phi_jk

    @property
    def power(self) -> np.ndarray:
        return np.abs(self.rho) ** 2


@dataclass(frozen=True)
class EstimatorStats:
    chi: np.ndarray  # (L, K, N)        tr(W_jk^n R_jk^jn)
    zeta: np.ndarray  # (L, K, L, K, N) [j,k,l,i,n] tr(W_li^n Q_li^n W_li^nH R_jk^ln)
    xi: np.ndarray  # (L, K, L, N)      [j,k,l,n] tr(W_lk^n R_jk^ln); complex only if it must be
    alpha: np.ndarray  # (L, K, N)      tr(W_li^n Q_li^n W_li^nH), transmit power weight
    estimator_kind: str = "mmse"

    @property
    def dims(self):
        return self.chi.shape


def pilot_gram(config: NetworkConfig) -> PilotGram:
    """Orthogonal pilots inside a cell (tau_p = K), same set reused in every cell."""
    L, K = config.L, config.K
    eye = np.eye(K, dtype=complex)
    rho = np.broadcast_to(eye[None, :, None, :], (L, K, L, K)).copy()
    return PilotGram(rho)


def compute_Q(cov: CovarianceSet, gram: PilotGram, pilot_snr: float, j: int, k: int, n: int) -> np.ndarray:
    """Covariance of the despread pilot observation of user (j, k) at sub-array (j, n)."""
    M = cov.R.shape[-1]
    w = gram.power[:, :, j, k]
    Q = np.einsum("li,liab->ab", w, cov.R[:, :, j, n])
    return Q + np.eye(M) / pilot_snr


def all_Q(cov: CovarianceSet, gram: PilotGram, pilot_snr: float) -> np.ndarray:
    """Q[j, k, n] for every user, shape (L, K, N, M, M)."""
    M = cov.R.shape[-1]
    # R[l, i, j, n]: user (l, i) seen at array (j, n)
    Q = np.einsum("lijk,lijnab->jknab", gram.power, cov.R)
    return Q + np.eye(M) / pilot_snr


def _own_R(cov: CovarianceSet) -> np.ndarray:
    """R[j, k, j, n] for every user, shape (L, K, N, M, M)."""
    L = cov.R.shape[0]
    return np.stack([cov.R[j, :, j] for j in range(L)])


def mmse_W(R: np.ndarray, Q: np.ndarray) -> np.ndarray:
    """R Q^-1 by a linear solve; works on stacks of matrices."""
    cond = np.linalg.cond(Q)
    if np.any(~np.isfinite(cond)) or np.any(cond > COND_CAP):
        raise SingularCovariance(f"pilot covariance is numerically singular (cond={np.max(cond):.3g})")
    # W = R Q^-1  <=>  W^H = Q^-1 R^H, and Q, R are Hermitian
    X = np.linalg.solve(Q, np.conj(np.swapaxes(R, -1, -2)))
    return np.conj(np.swapaxes(X, -1, -2))


def ewmmse_W(cov: CovarianceSet, gram: PilotGram, pilot_snr: float, j: int, k: int, n: int) -> np.ndarray:
    """Element-wise MMSE weights: diagonal of R over diagonal of Q."""
    num = np.real(np.diagonal(cov.R[j, k, j, n]))
    den = np.real(np.diagonal(compute_Q(cov, gram, pilot_snr, j, k, n)))
    return np.diag(num / den).astype(complex)


def estimator_matrices(cov: CovarianceSet, gram: PilotGram, pilot_snr: float, estimator: str = "mmse"):
    """Return (W, Q), each shaped (L, K, N, M, M)."""
    Q = all_Q(cov, gram, pilot_snr)
    Rown = _own_R(cov)
    if estimator == "mmse":
        W = mmse_W(Rown, Q)
    elif estimator == "ewmmse":
        d = np.real(np.diagonal(Rown, axis1=-2, axis2=-1)) / np.real(np.diagonal(Q, axis1=-2, axis2=-1))
        M = Q.shape[-1]
        W = np.zeros_like(Q)
        W[..., np.arange(M), np.arange(M)] = d
    else:
        raise ValueError(f"unknown estimator {estimator!r}")
    return W, Q


def _real(x: np.ndarray, name: str, scale: np.ndarray | float) -> np.ndarray:
    bad = np.abs(x.imag) > IMAG_TOL * np.maximum(np.abs(x.real), scale)
    if np.any(bad):
        raise FloatingPointError(f"{name} has a non-negligible imaginary part")
    return np.ascontiguousarray(x.real)


def estimator_stats(cov: CovarianceSet, gram: PilotGram, config: NetworkConfig) -> EstimatorStats:
    W, Q = estimator_matrices(cov, gram, config.pilot_snr, config.estimator)
    return stats_from_matrices(cov, W, Q, config.estimator)


def stats_from_matrices(cov: CovarianceSet, W: np.ndarray, Q: np.ndarray, kind: str = "mmse") -> EstimatorStats:
    R = cov.R
    A = W @ Q @ np.conj(np.swapaxes(W, -1, -2))  # second moment of the estimate
    Rown = _own_R(cov)
    chi = np.einsum("jknab,jknba->jkn", W, Rown)
    alpha = np.einsum("linaa->lin", A)
    zeta = np.einsum("linab,jklnba->jklin", A, R)
    # xi[j,k,l,n] = tr(W[l,k,n] R[j,k,l,n])
    xi = np.einsum("lknab,jklnba->jkln", W, R)

    # traces of (PSD x PSD) products are real; a scale floor keeps near-zero entries from tripping the check
    tr_scale = np.max(np.abs(alpha)) + 1e-300
    chi = np.clip(_real(chi, "chi", tr_scale), 0, None)
    alpha = np.clip(_real(alpha, "alpha", tr_scale), 0, None)
    zeta = np.clip(_real(zeta, "zeta", tr_scale * np.max(np.abs(cov.beta))), 0, None)
    xi_scale = IMAG_TOL * np.maximum(np.abs(xi.real), tr_scale)
    if np.all(np.abs(xi.imag) <= xi_scale):
        xi = np.ascontiguousarray(xi.real)
    return EstimatorStats(chi=chi, zeta=zeta, xi=xi, alpha=alpha, estimator_kind=kind)
