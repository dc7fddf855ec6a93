"""Non-binary belief propagation on a lattice Tanner graph.

Every routine accepts a single observation ``xhat`` of shape ``(m,)`` or a
batch of shape ``(n, m)``; message tables always carry the batch axis and
results are squeezed back for single observations.

Initialization turns the equalizer output into label probabilities over the
labels used by the region, then into per-coordinate priors ``f``:

* ``projection``: nearest region point of each label in projection
  coordinates, Gaussian metric per direction;
* ``simplified``: the per-direction minimum distance of each label, each
  direction treated in isolation;
* ``probability``: exact sum over the region points of each label of the
  product of coordinate likelihoods.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import logsumexp

__all__ = [
    "NoiseProfile",
    "BeliefState",
    "label_scores_projection",
    "label_scores_simplified",
    "label_scores_probability",
    "init_from_label_probs",
    "init_projection",
    "init_simplified",
    "init_probability",
    "init_state",
    "coordinate_alphabets",
    "bp_iterate",
    "total_app",
    "prune_labels",
]

log = logging.getLogger(__name__)

NORM_TOL = 1e-9


@dataclass(frozen=True)
class NoiseProfile:
    """Per-branch noise variances.

    ``sigma2`` is indexed by Gram-Schmidt direction for the projection-domain
    initializations and by real coordinate for coordinate likelihoods.  A
    scalar is broadcast.
    """

    sigma2: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.sigma2, dtype=float)
        if np.any(~np.isfinite(s)) or np.any(s <= 0):
            raise ValueError("noise variances must be finite and strictly positive")
        object.__setattr__(self, "sigma2", s)

    def broadcast(self, n, m):
        return np.broadcast_to(self.sigma2, (n, m))


@dataclass
class BeliefState:
    """Working state of one batch of detections.

    ``f[i]``, ``q[(j, i)]`` and ``r[(j, i)]`` have shape ``(n, g_i)``.
    ``label_probs`` keeps the initial label distribution over region labels.
    """

    f: list
    q: dict = field(default_factory=dict)
    r: dict = field(default_factory=dict)
    iteration_count: int = 0
    label_probs: np.ndarray | None = None
    single: bool = False


def _batch(xhat):
    x = np.asarray(xhat, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("observation contains non-finite entries")
    single = x.ndim == 1
    return np.atleast_2d(x), single


def _normalize_log(logp):
    """Row-wise softmax of log scores, robust to large magnitudes."""
    logp = np.asarray(logp, dtype=float)
    out = np.exp(logp - logsumexp(logp, axis=-1, keepdims=True))
    return out


def label_scores_projection(xhat, ll, noise):
    """Log label scores with the nearest-point-per-label rule.

    Returns ``(scores, nearest)`` where ``scores`` is ``(n, L)`` and
    ``nearest[:, s]`` indexes the region point chosen for label ``s``.
    """
    x, _ = _batch(xhat)
    n, m = x.shape
    sig = noise.broadcast(n, m)
    diff2 = (project_x(x, ll)[:, None, :] - ll.point_proj[None, :, :]) ** 2  # (n, P, m)
    dist = diff2.sum(axis=2)
    weighted = (diff2 / (2.0 * sig[:, None, :])).sum(axis=2)
    L = len(ll.code.region_labels)
    scores = np.empty((n, L))
    nearest = np.empty((n, L), dtype=int)
    for s in range(L):
        idx = np.flatnonzero(ll.point_state == s)
        # region is lexicographically sorted, argmin returns the first tie
        k = idx[np.argmin(dist[:, idx], axis=1)]
        nearest[:, s] = k
        scores[:, s] = -weighted[np.arange(n), k]
    return scores, nearest


def label_scores_simplified(xhat, ll, noise):
    """Log label scores using per-direction minimum distances."""
    x, _ = _batch(xhat)
    n, m = x.shape
    sig = noise.broadcast(n, m)
    absdiff = np.abs(project_x(x, ll)[:, None, :] - ll.point_proj[None, :, :])
    L = len(ll.code.region_labels)
    scores = np.empty((n, L))
    for s in range(L):
        idx = np.flatnonzero(ll.point_state == s)
        d = absdiff[:, idx, :].min(axis=1)  # (n, m)
        scores[:, s] = -(d**2 / (2.0 * sig)).sum(axis=1)
    return scores


def coordinate_alphabets(ll):
    """Sorted distinct values of each real coordinate over the region."""
    return [np.unique(ll.region[:, i]) for i in range(ll.dim)]


def init_probability(xhat, alphabets, noise):
    """Coordinate likelihood tables ``P(xhat_i | x_i = c)``, normalized per coordinate.

    Returns a list with one ``(n, |K_i|)`` array per coordinate (or ``(|K_i|,)``
    for a single observation).
    """
    x, single = _batch(xhat)
    n, m = x.shape
    sig = noise.broadcast(n, m)
    tables = []
    for i, alph in enumerate(alphabets):
        alph = np.asarray(alph, dtype=float)
        if alph.size == 0:
            raise ValueError(f"empty alphabet at coordinate {i}")
        logp = -((x[:, i:i + 1] - alph[None, :]) ** 2) / (2.0 * sig[:, i:i + 1])
        p = _normalize_log(logp)
        tables.append(p[0] if single else p)
    return tables


def label_scores_probability(xhat, ll, noise):
    """Log label scores summing coordinate likelihoods over each label's points."""
    x, _ = _batch(xhat)
    n, m = x.shape
    sig = noise.broadcast(n, m)
    pts = ll.region
    logl = -(((x[:, None, :] - pts[None, :, :]) ** 2) / (2.0 * sig[:, None, :])).sum(axis=2)
    L = len(ll.code.region_labels)
    scores = np.empty((n, L))
    for s in range(L):
        idx = np.flatnonzero(ll.point_state == s)
        scores[:, s] = logsumexp(logl[:, idx], axis=1)
    return scores


def project_x(x, ll):
    return x @ ll.coords.unit


def init_from_label_probs(label_probs, ll, single=False):
    """Coordinate priors ``f_i(alpha) = sum_{l: l_i = alpha} Pr(l)``; ``q`` starts at ``f``."""
    P = np.atleast_2d(label_probs)
    labels = np.array(ll.code.region_labels, dtype=int)
    f = []
    for i, g in enumerate(ll.code.group_sizes):
        onehot = np.zeros((labels.shape[0], g))
        onehot[np.arange(labels.shape[0]), labels[:, i]] = 1.0
        f.append(P @ onehot)
    return BeliefState(f=f, label_probs=P, single=single)


def _init(scores, ll, single):
    probs = _normalize_log(scores)
    return init_from_label_probs(probs, ll, single)


def init_projection(xhat, ll, noise):
    """Projection-domain initialization with the nearest point of every label."""
    _, single = _batch(xhat)
    scores, _ = label_scores_projection(xhat, ll, noise)
    return _init(scores, ll, single)


def init_simplified(xhat, ll, noise):
    """Per-direction (simplified) projection-domain initialization."""
    _, single = _batch(xhat)
    return _init(label_scores_simplified(xhat, ll, noise), ll, single)


def init_state(scheme, xhat, ll, noise, coord_noise=None):
    """Dispatch on ``scheme`` in ``{"projection", "simplified", "probability"}``.

    ``coord_noise`` gives per-coordinate variances for the probability scheme
    (defaults to ``noise``).
    """
    if scheme == "projection":
        return init_projection(xhat, ll, noise)
    if scheme == "simplified":
        return init_simplified(xhat, ll, noise)
    if scheme == "probability":
        _, single = _batch(xhat)
        scores = label_scores_probability(xhat, ll, coord_noise or noise)
        return _init(scores, ll, single)
    raise ValueError(f"unknown initialization scheme {scheme!r}")


@lru_cache(maxsize=None)
def _check_tables(graph, mode):
    """Per check: configuration matrix over its support and one-hot maps per position."""
    tables = []
    for j, c in enumerate(graph.checks):
        if mode == "local":
            conf = graph.satisfying(j)
        elif mode == "global":
            conf = graph.label_restrictions(j)
        else:
            raise ValueError(f"unknown summation mode {mode!r}")
        onehots = []
        for p, i in enumerate(c.support):
            oh = np.zeros((conf.shape[0], graph.var_alphabets[i]))
            oh[np.arange(conf.shape[0]), conf[:, p]] = 1.0
            onehots.append(oh)
        tables.append((conf, onehots))
    return tables


def _normalize_rows(a, what, fallback=None):
    s = a.sum(axis=1, keepdims=True)
    bad = s[:, 0] <= 0
    if np.any(bad):
        log.warning("%d all-zero %s rows replaced by fallback", int(bad.sum()), what)
        a = a.copy()
        s = s.copy()
        if fallback is None:
            a[bad] = 1.0 / a.shape[1]
        else:
            a[bad] = fallback[bad]
        s[bad] = a[bad].sum(axis=1, keepdims=True)
    return a / s


def bp_iterate(state, graph, n_iters, mode="local"):
    """Run ``n_iters`` flooding rounds, each updating all ``r`` then all ``q``.

    ``mode="local"`` sums the check-to-variable message over the assignments
    of the check's own neighbourhood that satisfy it; ``mode="global"`` sums
    over the label-code words restricted to that neighbourhood.
    """
    tables = _check_tables(graph, mode)
    edges = graph.edges()
    if not state.q:
        for j, i in edges:
            state.q[(j, i)] = state.f[i].copy()
    for _ in range(int(n_iters)):
        new_r = {}
        for j, c in enumerate(graph.checks):
            conf, onehots = tables[j]
            gathered = [state.q[(j, i)][:, conf[:, p]] for p, i in enumerate(c.support)]
            for p, i in enumerate(c.support):
                prod = np.ones((gathered[0].shape[0], conf.shape[0]))
                for k, col in enumerate(gathered):
                    if k != p:
                        prod = prod * col
                new_r[(j, i)] = _normalize_rows(prod @ onehots[p], "r-message")
        state.r = new_r
        new_q = {}
        for j, i in edges:
            acc = state.f[i].copy()
            for jj in graph.var_checks(i):
                if jj != j:
                    acc = acc * state.r[(jj, i)]
            new_q[(j, i)] = _normalize_rows(acc, "q-message", fallback=state.f[i])
        state.q = new_q
        state.iteration_count += 1
    return state


def total_app(state, graph, ll):
    """Per-variable and per-label total APP after belief propagation.

    Returns
    -------
    var_probs : list of arrays ``(n, g_i)``
    label_probs : array ``(n, L)`` over the region labels (renormalized)
    """
    var_probs = []
    for i in range(graph.n_vars):
        acc = state.f[i].copy()
        if state.iteration_count > 0:
            for j in graph.var_checks(i):
                acc = acc * state.r[(j, i)]
        var_probs.append(_normalize_rows(acc, "variable APP", fallback=state.f[i]))
    labels = np.array(ll.code.region_labels, dtype=int)
    P = np.ones((var_probs[0].shape[0], labels.shape[0]))
    for i, vp in enumerate(var_probs):
        P = P * vp[:, labels[:, i]]
    P = _normalize_rows(P, "label APP")
    if state.single:
        return [v[0] for v in var_probs], P[0]
    return var_probs, P


def prune_labels(label_probs, k):
    """Keep the ``k`` most probable labels, zero the rest and renormalize.

    Ties keep the label listed first (labels are in lexicographic order).
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    P = np.asarray(label_probs, dtype=float)
    single = P.ndim == 1
    P = np.atleast_2d(P)
    if k >= P.shape[1]:
        return P[0] if single else P
    order = np.argsort(-P, axis=1, kind="stable")
    keep = np.zeros_like(P, dtype=bool)
    np.put_along_axis(keep, order[:, :k], True, axis=1)
    out = np.where(keep, P, 0.0)
    out = _normalize_rows(out, "pruned label")
    return out[0] if single else out
