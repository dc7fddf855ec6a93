"""Unit-gain LMMSE filter bank and soft interference cancellation (IC-MMSE).

For the real model ``y = H x + n`` with ``E[x x^T] = (P / 2Nt) I`` and
``E[n n^T] = (N0 / 2) I``, branch ``i`` uses the MMSE filter rescaled so that
``m_i^T h_i = 1``.  The branch output is then ``xhat_i = x_i + nhat_i`` with
``nhat_i`` of variance ``sigma2_i``.

With soft feedback the expected interference ``H x_ic`` (own entry zeroed) is
subtracted first and the filter is rebuilt from the residual covariance
``H Q_i H^T + (N0/2) I``, ``Q_i = (P/2Nt) I - diag(x_ic_ibar)^2``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

__all__ = [
    "FilterBank",
    "SoftFeedback",
    "mmse_filters",
    "unit_gain_filters",
    "soft_interference",
    "ic_mmse",
    "ic_mmse_all",
]

log = logging.getLogger(__name__)

GAIN_TOL = 1e-12


@dataclass(frozen=True)
class FilterBank:
    """Filters ``m[i]`` (rows) and branch MSEs ``sigma2[i]``."""

    m: np.ndarray
    sigma2: np.ndarray
    P: float
    N0: float

    def apply(self, y):
        return self.m @ np.asarray(y, dtype=float)


@dataclass(frozen=True)
class SoftFeedback:
    mode: str
    x_ic: np.ndarray


def _coord_power(P, Nt, K):
    Nt = K / 2 if Nt is None else Nt
    return P / (2.0 * Nt)


def unit_gain_filters(R, H, p):
    """Unit-gain filters and MSEs for covariance ``R`` (any leading batch axes).

    Parameters
    ----------
    R : (..., M, M) array
    H : (..., M, K) array
        Columns ``h_i``; when ``R`` carries a per-branch axis, pass ``H`` with a
        matching axis and read the diagonal branch yourself.
    p : float
        Per-coordinate signal power ``P / 2Nt``.

    Returns
    -------
    m : (..., K, M) filters, sigma2 : (..., K)
    """
    try:
        Rinv_H = np.linalg.solve(R, H)
    except np.linalg.LinAlgError as exc:
        raise ValueError("covariance matrix is singular") from exc
    gamma = np.einsum("...mk,...mk->...k", H, Rinv_H)
    if np.any(gamma < GAIN_TOL):
        raise ValueError("h_i^T R^-1 h_i vanishes; branch cannot be equalized")
    mc = p * Rinv_H  # unconstrained MMSE solutions, columns
    a = 1.0 - np.einsum("...mk,...mk->...k", mc, H)
    m = mc + (a / gamma)[..., None, :] * Rinv_H
    mc_R_mc = np.einsum("...mk,...mn,...nk->...k", mc, R, mc)
    # Unit-gain MSE; the correction term enters squared, which equals 1/gamma - p.
    sigma2 = p - mc_R_mc + a**2 / gamma
    return np.swapaxes(m, -1, -2), sigma2


def mmse_filters(H, P, N0, Nt=None):
    """Unit-gain LMMSE filter bank for one real channel matrix.

    ``Nt`` defaults to ``K / 2`` (one channel use per block); ``P / 2Nt`` is
    the power of each real coordinate of ``x``.
    """
    H = np.asarray(H, dtype=float)
    M, K = H.shape
    p = _coord_power(P, Nt, K)
    R = p * H @ H.T + 0.5 * N0 * np.eye(M)
    m, sigma2 = unit_gain_filters(R, H, p)
    return FilterBank(m=m, sigma2=sigma2, P=float(P), N0=float(N0))


def soft_interference(probs, values, mode="coordinate", tol=1e-6):
    """Expected transmitted vector from detector probabilities.

    Parameters
    ----------
    probs, values :
        ``mode="vector"``: ``probs`` of shape ``(C,)`` over codebook images
        ``values`` of shape ``(C, K)``.
        ``mode="coordinate"``: sequences, one per position, of probabilities
        over that position's alphabet ``values[i]``.
    """
    if mode == "vector":
        probs = np.asarray(probs, dtype=float)
        if abs(probs.sum() - 1.0) > tol:
            raise ValueError("codeword probabilities are not normalized")
        x = probs @ np.asarray(values, dtype=float)
    elif mode == "coordinate":
        x = []
        for i, (p, v) in enumerate(zip(probs, values)):
            p = np.asarray(p, dtype=float)
            if abs(p.sum() - 1.0) > tol:
                raise ValueError(f"coordinate {i} probabilities are not normalized")
            x.append(p @ np.asarray(v, dtype=float))
        x = np.array(x)
    else:
        raise ValueError(f"unknown feedback mode {mode!r}")
    return SoftFeedback(mode=mode, x_ic=x)


def _residual_power(x_ic, p):
    """Diagonals of ``Q_i`` for all branches, shape ``(..., K, K)`` (branch, coordinate)."""
    x_ic = np.asarray(x_ic, dtype=float)
    K = x_ic.shape[-1]
    sq = np.broadcast_to(x_ic[..., None, :] ** 2, x_ic.shape[:-1] + (K, K)).copy()
    idx = np.arange(K)
    sq[..., idx, idx] = 0.0
    q = p - sq
    if np.any(q < 0):
        log.warning("soft feedback exceeds the coordinate power; clamping residual variance at 0")
        q = np.maximum(q, 0.0)
    return q


def ic_mmse_all(y, H, x_ic, P, N0, Nt=None):
    """IC-MMSE estimates and MSEs of every branch, batched over channel uses.

    Parameters
    ----------
    y : (n, M) or (M,)
    H : (n, M, K) or (M, K)
    x_ic : (n, K) or (K,)
        Soft interference estimate; zeros reproduce plain MMSE.

    Returns
    -------
    xhat, sigma2 : arrays of shape (n, K) (or (K,))
    """
    single = np.asarray(H).ndim == 2
    y = np.atleast_2d(np.asarray(y, dtype=float))
    H = np.asarray(H, dtype=float)
    if single:
        H = H[None]
    x_ic = np.atleast_2d(np.asarray(x_ic, dtype=float))
    n, M, K = H.shape
    p = _coord_power(P, Nt, K)
    q = _residual_power(x_ic, p)  # (n, K_branch, K)
    R = np.einsum("nmk,nbk,nlk->nbml", H, q, H) + 0.5 * N0 * np.eye(M)
    Hb = np.broadcast_to(H[:, None], (n, K, M, K))
    m_all, s_all = unit_gain_filters(R, Hb, p)  # (n, b, K, M), (n, b, K)
    b = np.arange(K)
    m = m_all[:, b, b, :]  # (n, K, M)
    sigma2 = s_all[:, b, b]
    # branch i cancels all fed-back interference except its own coordinate
    Hx = np.einsum("nmk,nk->nm", H, x_ic)
    own = H * x_ic[:, None, :]  # (n, M, K): h_i x_ic_i
    yhat = (y - Hx)[:, None, :] + np.swapaxes(own, 1, 2)  # (n, K, M)
    xhat = np.einsum("nkm,nkm->nk", m, yhat)
    if single:
        return xhat[0], sigma2[0]
    return xhat, sigma2


def ic_mmse(y, H, feedback, P, N0, i, Nt=None):
    """Estimate ``(xhat_i, sigma2_i)`` of branch ``i`` with soft interference cancellation."""
    x_ic = feedback.x_ic if isinstance(feedback, SoftFeedback) else np.asarray(feedback, dtype=float)
    xhat, sigma2 = ic_mmse_all(y, H, x_ic, P, N0, Nt=Nt)
    return float(xhat[i]), float(sigma2[i])
