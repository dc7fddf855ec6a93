"""Complex/real isomorphisms and the equivalent real MIMO transmission model.

A complex block ``Y = S Hbar + N`` (``Y``: T x Nr, ``S``: T x Nt,
``Hbar``: Nt x Nr) is rewritten over the reals as ``y = H x + n`` with
``x = mat_isom(S.T)`` and ``y = mat_isom(Y)``.  The row permutation that
turns ``mat_isom(Y.T)`` into ``mat_isom(Y)`` depends only on the dimensions.

Power scaling (``sqrt(1/Nt)``) is not applied here; the simulator owns it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "vec_isom",
    "vec_isom_inv",
    "mat_isom",
    "mat_isom_inv",
    "real_channel",
    "row_permutation",
    "permute_to_y",
    "RealModel",
    "real_model",
]


def _check_finite(a):
    if not np.all(np.isfinite(a)):
        raise ValueError("input contains non-finite entries")


def vec_isom(a):
    """Map a complex vector to ``[Re(a); Im(a)]``.

    Examples
    --------
    >>> vec_isom(np.array([1 + 2j, 3 - 4j]))
    array([ 1.,  3.,  2., -4.])
    """
    a = np.asarray(a, dtype=complex).ravel()
    _check_finite(a)
    return np.concatenate([a.real, a.imag])


def vec_isom_inv(v):
    v = np.asarray(v, dtype=float).ravel()
    if v.size % 2:
        raise ValueError("real vector must have even length")
    half = v.size // 2
    return v[:half] + 1j * v[half:]


def mat_isom(A):
    """Stack ``vec_isom`` of each column of ``A`` in column order.

    The result has length ``2 * M * N`` for an ``M x N`` matrix and its
    Euclidean norm equals the Frobenius norm of ``A``.
    """
    A = np.asarray(A, dtype=complex)
    if A.ndim == 1:
        A = A[:, None]
    _check_finite(A)
    # columns of A are rows of A.T
    return np.concatenate([np.concatenate([c.real, c.imag]) for c in A.T])


def mat_isom_inv(v, rows, cols):
    v = np.asarray(v, dtype=float).ravel()
    if v.size != 2 * rows * cols:
        raise ValueError(f"expected length {2 * rows * cols}, got {v.size}")
    blocks = v.reshape(cols, 2, rows)
    return (blocks[:, 0, :] + 1j * blocks[:, 1, :]).T


def real_channel(Hbar, T):
    """Block-diagonal real channel ``I_T kron [[Re Hbar^T, -Im Hbar^T], [Im Hbar^T, Re Hbar^T]]``.

    Parameters
    ----------
    Hbar : (Nt, Nr) complex array
    T : int
        Number of channel uses the block spans.

    Returns
    -------
    (2*Nr*T, 2*Nt*T) real array acting on ``mat_isom(S.T)`` and producing
    ``mat_isom(Y.T)``.
    """
    if int(T) < 1:
        raise ValueError("T must be at least 1")
    Hbar = np.atleast_2d(np.asarray(Hbar, dtype=complex))
    _check_finite(Hbar)
    Ht = Hbar.T
    block = np.block([[Ht.real, -Ht.imag], [Ht.imag, Ht.real]])
    return np.kron(np.eye(int(T)), block)


def row_permutation(Nr, T):
    """Index array ``perm`` with ``mat_isom(Y) == mat_isom(Y.T)[perm]``.

    Only the shapes matter; ``Y`` is ``T x Nr``.
    """
    Nr, T = int(Nr), int(T)
    # position of Re/Im of Y[t, r] inside mat_isom(Y.T): column t of Y.T
    def yc_index(t, r, part):
        return t * 2 * Nr + part * Nr + r

    perm = [yc_index(t, r, part) for r in range(Nr) for part in (0, 1) for t in range(T)]
    return np.array(perm, dtype=int)


def permute_to_y(yc, Nr, T):
    """Reorder ``mat_isom(Y.T)`` into ``mat_isom(Y)``.

    Works on vectors and, row-wise, on matrices (first axis permuted).
    """
    yc = np.asarray(yc)
    if yc.shape[0] != 2 * Nr * T:
        raise ValueError(f"leading length {yc.shape[0]} does not match 2*Nr*T = {2 * Nr * T}")
    return yc[row_permutation(Nr, T)]


@dataclass(frozen=True)
class RealModel:
    H: np.ndarray
    y: np.ndarray | None
    permutation: np.ndarray


def real_model(Hbar, T, Y=None):
    """Build ``(H, y, pi)`` of the real model ``y = H x + n``.

    ``H`` is the row-permuted ``real_channel``; ``y = mat_isom(Y)`` when a
    received block is given.
    """
    Hbar = np.atleast_2d(np.asarray(Hbar, dtype=complex))
    Nr = Hbar.shape[1]
    perm = row_permutation(Nr, T)
    H = real_channel(Hbar, T)[perm]
    y = None if Y is None else mat_isom(Y)
    return RealModel(H=H, y=y, permutation=perm)
