"""Extrinsic coordinate APPs after belief propagation.

The region points are the edges of a degenerate (memoryless) Markov source:
emitting point ``lambda`` moves the source into the state indexing the label
that contains ``lambda``, with input ``u = lambda`` and output ``c = lambda``.
Forward/backward state metrics are state independent and drop out, leaving a
single sum over the edges weighted by the label probabilities delivered by
belief propagation.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

__all__ = [
    "MarkovEdgeSet",
    "SoftIO",
    "build_edges",
    "uniform_priors",
    "extrinsic_coordinate",
    "extrinsic_uncoded",
    "extrinsic_all",
    "point_app",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class MarkovEdgeSet:
    """One edge per region point.

    ``value_index[e, i]`` is the position of coordinate ``i`` of point ``e``
    in ``alphabets[i]``; ``state[e]`` indexes the region label of the point.
    """

    points: np.ndarray
    state: np.ndarray
    alphabets: tuple
    value_index: np.ndarray
    labels: tuple

    @property
    def n_states(self):
        return len(self.labels)

    @property
    def dim(self):
        return self.points.shape[1]


@dataclass
class SoftIO:
    """Per-position probability tables, each ``(n, |K_i|)``.

    ``pu_in``/``pc_in`` are the priors on the unencoded symbol and the
    coordinate likelihoods; ``pu_out``/``pc_out`` are filled by
    :func:`extrinsic_all`.
    """

    pu_in: list
    pc_in: list
    pu_out: list | None = None
    pc_out: list | None = None


def build_edges(ll):
    """Edge set of a labelled lattice code (see :class:`latticebp.lattice.LabeledLattice`)."""
    pts = ll.region
    alphabets = tuple(np.unique(pts[:, i]) for i in range(pts.shape[1]))
    value_index = np.stack(
        [np.searchsorted(alphabets[i], pts[:, i]) for i in range(pts.shape[1])], axis=1
    )
    return MarkovEdgeSet(
        points=pts,
        state=np.asarray(ll.point_state, dtype=int),
        alphabets=alphabets,
        value_index=value_index,
        labels=tuple(ll.code.region_labels),
    )


def uniform_priors(edges, n=1):
    """Priors equal to the reciprocal of each position's alphabet size."""
    return [np.full((n, len(a)), 1.0 / len(a)) for a in edges.alphabets]


def _rows(tables):
    return [np.atleast_2d(np.asarray(t, dtype=float)) for t in tables]


def _edge_factor(edges, tables, skip=None):
    """Product over positions (except ``skip``) of the table entry each edge picks."""
    out = None
    for i, t in enumerate(tables):
        if i == skip:
            continue
        col = t[:, edges.value_index[:, i]]
        out = col if out is None else out * col
    return out


def _scatter(edges, weights, j):
    A = len(edges.alphabets[j])
    onehot = np.zeros((edges.points.shape[0], A))
    onehot[np.arange(edges.points.shape[0]), edges.value_index[:, j]] = 1.0
    out = weights @ onehot
    s = out.sum(axis=1, keepdims=True)
    bad = s[:, 0] <= 0
    if np.any(bad):
        log.warning("zero extrinsic mass at position %d for %d rows; using uniform", j, int(bad.sum()))
        out[bad] = 1.0
        s[bad] = A
    return out / s


def _state_weights(edges, label_probs):
    P = np.atleast_2d(np.asarray(label_probs, dtype=float))
    if P.shape[1] != edges.n_states:
        raise ValueError(f"expected {edges.n_states} label probabilities, got {P.shape[1]}")
    return P[:, edges.state]


def extrinsic_coordinate(edges, label_probs, pu_in, pc_in, j):
    """Extrinsic APP of the coded coordinate at position ``j``.

    ``P(c^j; O)(c) ∝ sum_{e: c^j(e) = c} Pr(l_s(e)) prod_i P(u^i(e); I)
    prod_{i != j} P(c^i(e); I)``.
    """
    single = np.asarray(label_probs).ndim == 1
    pu, pc = _rows(pu_in), _rows(pc_in)
    w = _state_weights(edges, label_probs) * _edge_factor(edges, pu) * _edge_factor(edges, pc, skip=j)
    out = _scatter(edges, w, j)
    return out[0] if single else out


def extrinsic_uncoded(edges, label_probs, pu_in, pc_in, j):
    """Extrinsic APP of the unencoded symbol at position ``j``; roles of u and c swapped."""
    single = np.asarray(label_probs).ndim == 1
    pu, pc = _rows(pu_in), _rows(pc_in)
    w = _state_weights(edges, label_probs) * _edge_factor(edges, pu, skip=j) * _edge_factor(edges, pc)
    out = _scatter(edges, w, j)
    return out[0] if single else out


def point_app(edges, label_probs, pu_in, pc_in, normalize=True):
    """Total APP of every region point: ``Pr(l_s(e)) prod_i P(u^i(e); I) P(c^i(e); I)``.

    Returns ``(n, P)`` weights, normalized per row unless ``normalize=False``.
    """
    single = np.asarray(label_probs).ndim == 1
    pu, pc = _rows(pu_in), _rows(pc_in)
    w = _state_weights(edges, label_probs) * _edge_factor(edges, pu) * _edge_factor(edges, pc)
    if normalize:
        s = w.sum(axis=1, keepdims=True)
        bad = s[:, 0] <= 0
        if np.any(bad):
            log.warning("zero point mass for %d rows; using uniform", int(bad.sum()))
            w = w.copy()
            w[bad] = 1.0
            s = w.sum(axis=1, keepdims=True)
        w = w / s
    return w[0] if single else w


def extrinsic_all(edges, label_probs, io):
    """Fill ``io.pc_out`` and ``io.pu_out`` for every position and return ``io``."""
    m = edges.dim
    io.pc_out = [extrinsic_coordinate(edges, label_probs, io.pu_in, io.pc_in, j) for j in range(m)]
    io.pu_out = [extrinsic_uncoded(edges, label_probs, io.pu_in, io.pc_in, j) for j in range(m)]
    return io
