"""Superorthogonal space-time lattice code (2 transmit antennas, T = 2, QPSK).

A codeword is ``S = sum_l chi_l C_l`` (hypothesis 1) or ``S = sum_l chi'_l C'_l``
(hypothesis 2) with ``chi, chi' in {-1, +1}^4``; its real image is
``x = mat_isom(S.T) = Gamma chi_plus`` where ``chi_plus = [chi; chi']`` has one
all-zero half.  ``Gamma Gamma^T = 2 I`` and, for any 2x2 channel,
``(H Gamma_k)^T (H Gamma_k) = alpha I``, so matched filtering followed by a
binary hypothesis test and lattice detection on D4 recovers the codeword.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass

import numpy as np

from .lattice import D4_GENERATOR
from .realmap import mat_isom, mat_isom_inv

__all__ = [
    "C_BASIS",
    "C_PRIME_BASIS",
    "SuperCode",
    "HypothesisResult",
    "dispersion_generator",
    "encode",
    "matched_filters",
    "abs_sum",
    "hypothesis_llr",
    "hypothesis_llr_weighted",
    "ml_exhaustive",
]

log = logging.getLogger(__name__)

PROP_TOL = 1e-9

C_BASIS = (
    np.array([[1, 0], [0, -1]], dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[1j, 0], [0, 1j]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
)
C_PRIME_BASIS = (
    np.array([[1, 0], [0, 1]], dtype=complex),
    np.array([[0, -1], [1, 0]], dtype=complex),
    np.array([[1j, 0], [0, -1j]], dtype=complex),
    np.array([[0, 1j], [1j, 0]], dtype=complex),
)


def dispersion_generator(basis):
    """Real generator whose columns are ``mat_isom(C.T)`` for each basis matrix ``C``."""
    basis = [np.asarray(C, dtype=complex) for C in basis]
    if not basis:
        raise ValueError("empty basis")
    shape = basis[0].shape
    if any(C.shape != shape for C in basis):
        raise ValueError("basis matrices must share one shape")
    return np.stack([mat_isom(C.T) for C in basis], axis=1)


@dataclass(frozen=True)
class HypothesisResult:
    llr: float
    p_h1: float
    p_h2: float
    chi_hat: np.ndarray
    chi_hat_prime: np.ndarray
    alpha: float


class SuperCode:
    """The 32-matrix QPSK superorthogonal codebook and its generators.

    Codewords are ordered by hypothesis, then lexicographically by ``chi``
    (``-1`` before ``+1``).
    """

    T = 2
    Nt = 2

    def __init__(self):
        self.C = C_BASIS
        self.C_prime = C_PRIME_BASIS
        self.Gamma = dispersion_generator(self.C + self.C_prime)
        self.Gamma1 = self.Gamma[:, :4]
        self.Gamma2 = self.Gamma[:, 4:]
        self.B = D4_GENERATOR.copy()
        chis = np.array(list(itertools.product([-1.0, 1.0], repeat=4)))
        self.chi_region = chis
        hyp, chi_plus = [], []
        for k in (1, 2):
            for chi in chis:
                hyp.append(k)
                chi_plus.append(np.concatenate([chi, np.zeros(4)]) if k == 1 else np.concatenate([np.zeros(4), chi]))
        self.hypothesis = np.array(hyp)
        self.chi_plus = np.array(chi_plus)
        self.chi = np.concatenate([chis, chis])
        self.codebook = self.chi_plus @ self.Gamma.T  # (32, 8) real images

    def __len__(self):
        return self.codebook.shape[0]

    def gamma_k(self, k):
        return self.Gamma1 if k == 1 else self.Gamma2

    def matrix(self, index):
        """Complex 2x2 code matrix of codeword ``index``."""
        return mat_isom_inv(self.codebook[index], self.T, self.Nt).T

    def index_of(self, k, chi):
        chi = np.asarray(chi, dtype=float)
        hits = np.flatnonzero((self.hypothesis == k) & np.all(self.chi == chi, axis=1))
        if hits.size != 1:
            raise ValueError(f"no codeword for hypothesis {k} and chi {chi}")
        return int(hits[0])


def encode(code, k, chi):
    """Code matrix ``S`` and real image ``x`` of hypothesis ``k`` with coefficients ``chi``."""
    chi = np.asarray(chi, dtype=float)
    if chi.shape != (4,) or not np.all(np.isin(chi, (-1.0, 1.0))):
        raise ValueError("chi must be four entries in {-1, +1}")
    if k not in (1, 2):
        raise ValueError("hypothesis must be 1 or 2")
    chi_plus = np.concatenate([chi, np.zeros(4)]) if k == 1 else np.concatenate([np.zeros(4), chi])
    x = code.Gamma @ chi_plus
    S = mat_isom_inv(x, code.T, code.Nt).T
    return S, x


def _alpha(Hk):
    G = Hk.T @ Hk
    alpha = float(np.mean(np.diag(G)))
    if alpha <= 0:
        raise ValueError("channel has no energy")
    off = G - alpha * np.eye(G.shape[0])
    if np.max(np.abs(off)) >= PROP_TOL * alpha:
        raise ValueError("effective channel is not proportional to an orthogonal matrix")
    return alpha


def matched_filters(H, code):
    """Matched filters ``M^k = (H Gamma_k)^T / alpha`` for both hypotheses.

    Returns
    -------
    M1, M2 : (4, 8) arrays
    alpha : float
    """
    H = np.asarray(H, dtype=float)
    H1, H2 = H @ code.Gamma1, H @ code.Gamma2
    a1, a2 = _alpha(H1), _alpha(H2)
    if abs(a1 - a2) > PROP_TOL * max(a1, a2):
        raise ValueError("hypotheses see different channel gains")
    return H1.T / a1, H2.T / a2, a1


def abs_sum(a):
    """Sum of absolute values along the last axis."""
    return np.sum(np.abs(a), axis=-1)


def _sign(a):
    a = np.asarray(a, dtype=float)
    if np.any(a == 0):
        log.debug("sign(0) resolved to +1")
    return np.where(a >= 0, 1.0, -1.0)


def hypothesis_llr(chi_hat, chi_hat_prime, alpha, N0, exact=False):
    """Log likelihood ratio of hypothesis 1 versus 2 from matched-filter outputs.

    ``L = (ABS(chi_hat) - ABS(chi_hat')) * 4 alpha^2 / N0``.  With
    ``exact=True`` the factor is ``2 alpha / N0``, the ratio of the Gaussian
    likelihoods at the per-hypothesis maximizers ``sign(chi_hat)``.
    Works on batches (last axis is the coordinate axis).
    """
    if N0 <= 0:
        raise ValueError("N0 must be positive")
    chi_hat = np.asarray(chi_hat, dtype=float)
    chi_hat_prime = np.asarray(chi_hat_prime, dtype=float)
    if not (np.all(np.isfinite(chi_hat)) and np.all(np.isfinite(chi_hat_prime))):
        raise ValueError("non-finite matched-filter output")
    scale = 2.0 * alpha / N0 if exact else 4.0 * alpha**2 / N0
    llr = (abs_sum(chi_hat) - abs_sum(chi_hat_prime)) * scale
    p1 = _logistic(llr)
    if np.ndim(llr) == 0:
        return HypothesisResult(
            llr=float(llr),
            p_h1=float(p1),
            p_h2=float(1.0 - p1),
            chi_hat=_sign(chi_hat),
            chi_hat_prime=_sign(chi_hat_prime),
            alpha=float(alpha),
        )
    return HypothesisResult(llr=llr, p_h1=p1, p_h2=1.0 - p1, chi_hat=_sign(chi_hat),
                            chi_hat_prime=_sign(chi_hat_prime), alpha=alpha)


def _logistic(x):
    x = np.asarray(x, dtype=float)
    return np.where(x >= 0, 1.0 / (1.0 + np.exp(-np.abs(x))), np.exp(-np.abs(x)) / (1.0 + np.exp(-np.abs(x))))


def hypothesis_llr_weighted(chi_tilde, chi_tilde_prime, var, var_prime):
    """Hypothesis LLR for projected estimates with per-coordinate noise variances.

    Each hypothesis is scored at its maximizer ``sign(.)`` with the other half
    explained as pure noise; equal variances ``v`` give
    ``(ABS(chi) - ABS(chi')) / v``.
    """
    a = np.asarray(chi_tilde, dtype=float)
    b = np.asarray(chi_tilde_prime, dtype=float)
    v = np.asarray(var, dtype=float)
    vp = np.asarray(var_prime, dtype=float)
    return np.sum((2 * np.abs(a) - 1) / (2 * v), axis=-1) - np.sum((2 * np.abs(b) - 1) / (2 * vp), axis=-1)


def ml_exhaustive(y, H, codebook, rtol=1e-12):
    """Index of the codeword minimizing ``|y - H x|^2``; ties go to the lowest index.

    Batched when ``y`` is ``(n, M)`` and ``H`` is ``(n, M, K)``.
    """
    y = np.asarray(y, dtype=float)
    H = np.asarray(H, dtype=float)
    X = np.asarray(codebook, dtype=float)
    if y.ndim == 1:
        d = np.sum((y[None, :] - X @ H.T) ** 2, axis=1)
        tied = d <= d.min() + rtol * max(1.0, abs(d.min()))
        return int(np.flatnonzero(tied)[0])
    HX = np.einsum("nmk,ck->ncm", H, X)
    d = np.sum((y[:, None, :] - HX) ** 2, axis=2)
    tied = d <= d.min(axis=1, keepdims=True) + rtol * np.maximum(1.0, np.abs(d.min(axis=1, keepdims=True)))
    return np.argmax(tied, axis=1)
