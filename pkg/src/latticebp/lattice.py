"""Lattices, Gram-Schmidt coordinates and coset labeling.

The lattice is partitioned by the orthogonal sublattice spanned by the
cross-sections ``Lambda ∩ W_i`` of the Gram-Schmidt directions ``W_i``.  A
point is labelled by the tuple of coset indices of its projections, which
yields an Abelian block code (the label code) over
``Z_{g_1} x ... x Z_{g_m}``.  Its dual, under the lcm-scaled inner product,
supplies the parity checks of the Tanner graph.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce

import numpy as np

__all__ = [
    "Lattice",
    "CoordSystem",
    "LabelCode",
    "DualGenerators",
    "LatticeError",
    "gram_schmidt",
    "project",
    "project_all",
    "compute_spacings",
    "label_of",
    "enumerate_label_code",
    "check_label",
    "dual_code",
    "dual_generators",
    "span",
    "closest_in_coset",
    "LabeledLattice",
    "D4_GENERATOR",
    "D4_CHECKS",
    "d4_qpsk_lattice",
]

INT_TOL = 1e-9
MULT_TOL = 1e-6

# Checkerboard lattice D4, columns are basis vectors.
D4_GENERATOR = np.array(
    [
        [1, 1, 1, 2],
        [1, 0, 1, 0],
        [0, 1, 1, 0],
        [0, 0, 1, 0],
    ],
    dtype=float,
)


class LatticeError(ValueError):
    """Raised when a lattice cannot be handled by the G-S labeling route."""


def _lex_sorted(points):
    points = np.asarray(points, dtype=float)
    order = np.lexsort(points.T[::-1])
    return points[order]


@dataclass(frozen=True)
class Lattice:
    """Finite lattice code: translate ``u0`` plus the points inside a region.

    Parameters
    ----------
    B : (m, m) array
        Generator matrix, basis vectors in columns.
    region : (n, m) array
        Explicit list of region points (already including ``u0``).
    u0 : (m,) array, optional
        Translate, zero by default.
    """

    B: np.ndarray
    region: np.ndarray
    u0: np.ndarray = None

    def __post_init__(self):
        B = np.atleast_2d(np.asarray(self.B, dtype=float))
        m = B.shape[0]
        if B.shape != (m, m):
            raise LatticeError("generator matrix must be square")
        if np.linalg.matrix_rank(B) < m:
            raise LatticeError("generator matrix is rank deficient")
        u0 = np.zeros(m) if self.u0 is None else np.asarray(self.u0, dtype=float).ravel()
        region = np.atleast_2d(np.asarray(self.region, dtype=float))
        if region.size == 0:
            raise LatticeError("empty shaping region")
        if region.shape[1] != m:
            raise LatticeError("region points have the wrong dimension")
        coords = np.linalg.solve(B, (region - u0).T)
        if np.max(np.abs(coords - np.round(coords))) > INT_TOL:
            raise LatticeError("region contains points outside the translated lattice")
        region = _lex_sorted(region)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "u0", u0)
        object.__setattr__(self, "region", region)

    @property
    def dim(self):
        return self.B.shape[0]


@dataclass(frozen=True)
class CoordSystem:
    """Gram-Schmidt directions of a generator matrix.

    ``w[:, i]`` is the i-th orthogonal vector and ``mu[i, j]`` the
    coefficient of ``w_j`` removed from ``b_i``.  Spacings are filled in by
    :func:`compute_spacings`.
    """

    w: np.ndarray
    mu: np.ndarray
    proj_spacing: np.ndarray | None = None
    cross_spacing: np.ndarray | None = None

    @property
    def unit(self):
        return self.w / np.linalg.norm(self.w, axis=0)

    @property
    def group_sizes(self):
        if self.proj_spacing is None:
            raise LatticeError("spacings have not been computed")
        return tuple(int(round(c / p)) for c, p in zip(self.cross_spacing, self.proj_spacing))


def gram_schmidt(B):
    """Classical Gram-Schmidt on the columns of ``B`` (no normalization)."""
    B = np.atleast_2d(np.asarray(B, dtype=float))
    m = B.shape[1]
    w = np.zeros_like(B)
    mu = np.zeros((m, m))
    scale = max(np.max(np.abs(B)), 1.0)
    for i in range(m):
        v = B[:, i].copy()
        for j in range(i):
            mu[i, j] = B[:, i] @ w[:, j] / (w[:, j] @ w[:, j])
            v -= mu[i, j] * w[:, j]
        if np.linalg.norm(v) < 1e-10 * scale:
            raise LatticeError(f"generator matrix is rank deficient at column {i}")
        w[:, i] = v
    return CoordSystem(w=w, mu=mu)


def project(x, i, cs):
    """Signed length of ``x`` along direction ``W_i`` (0-based ``i``)."""
    wi = cs.w[:, i]
    return float(np.asarray(x, dtype=float) @ wi / np.linalg.norm(wi))


def project_all(x, cs):
    """Projections of one or many points onto every direction, shape ``(..., m)``."""
    return np.asarray(x, dtype=float) @ cs.unit


def _as_fraction(value, max_den=10_000):
    frac = Fraction(value).limit_denominator(max_den)
    if abs(float(frac) - value) > MULT_TOL:
        raise LatticeError(
            f"coefficient {value!r} is not rational within tolerance; the orthogonal "
            "sublattice is not reachable by Gram-Schmidt"
        )
    return frac


def _lcm(values):
    return reduce(lambda a, b: a * b // math.gcd(a, b), values, 1)


def compute_spacings(lattice, cs):
    """Projection spacing, cross-section spacing and label group size per direction.

    For direction ``i`` the projections of the basis vectors ``b_j``, ``j >= i``,
    onto ``W_i`` are ``mu[j, i] * |w_i|`` (with ``mu[i, i] = 1``) and every
    lattice point on ``W_i`` is an integer multiple of ``w_i`` expressed through
    ``b_1..b_i``.  Both spacings follow from the denominators of these rational
    coefficients.

    Returns
    -------
    CoordSystem
        Copy of ``cs`` with ``proj_spacing`` and ``cross_spacing`` set.
    """
    B = lattice.B
    m = B.shape[0]
    norms = np.linalg.norm(cs.w, axis=0)
    proj = np.zeros(m)
    cross = np.zeros(m)
    for i in range(m):
        # projection group: gcd of {1} ∪ {mu[j, i] : j > i} times |w_i|
        dens = [_as_fraction(cs.mu[j, i]).denominator for j in range(i + 1, m)]
        proj[i] = norms[i] / _lcm(dens)
        # cross-section: w_i = sum_j c_j b_j with c_i = 1, c_j rational for j < i
        coeffs = np.linalg.solve(B, cs.w[:, i])
        if np.any(np.abs(coeffs[i + 1:]) > MULT_TOL) or abs(coeffs[i] - 1) > MULT_TOL:
            raise LatticeError("unexpected Gram-Schmidt coefficients")
        t = _lcm([_as_fraction(c).denominator for c in coeffs[:i]])
        cross[i] = t * norms[i]
    ratio = cross / proj
    if np.any(np.abs(ratio - np.round(ratio)) > MULT_TOL):
        raise LatticeError("cross-section spacing is not a multiple of the projection spacing")
    return CoordSystem(w=cs.w, mu=cs.mu, proj_spacing=proj, cross_spacing=cross)


def label_of(point, cs, u0=None):
    """Label tuple of a lattice point (translate ``u0`` removed first).

    Raises
    ------
    LatticeError
        If some projection is not a multiple of the projection spacing.
    """
    x = np.asarray(point, dtype=float)
    if u0 is not None:
        x = x - u0
    idx = project_all(x, cs) / cs.proj_spacing
    rounded = np.round(idx)
    if np.any(np.abs(idx - rounded) > MULT_TOL):
        raise LatticeError(f"{point!r} is not a lattice point")
    g = np.array(cs.group_sizes)
    return tuple(int(v) for v in np.mod(rounded.astype(int), g))


def _labels_of_many(points, cs, u0):
    idx = project_all(np.asarray(points) - u0, cs) / cs.proj_spacing
    rounded = np.round(idx)
    if np.any(np.abs(idx - rounded) > MULT_TOL):
        raise LatticeError("region contains non-lattice points")
    return np.mod(rounded.astype(int), np.array(cs.group_sizes))


def span(generators, g):
    """Subgroup of ``Z_g1 x ... x Z_gm`` generated by ``generators``, sorted."""
    g = np.asarray(g, dtype=int)
    zero = tuple([0] * len(g))
    group = {zero}
    frontier = [zero]
    gens = [np.asarray(v, dtype=int) for v in generators]
    while frontier:
        new = []
        for el in frontier:
            for v in gens:
                s = tuple(int(a) for a in np.mod(np.asarray(el) + v, g))
                if s not in group:
                    group.add(s)
                    new.append(s)
        frontier = new
    return sorted(group)


@dataclass(frozen=True)
class LabelCode:
    group_sizes: tuple
    labels: tuple
    region_labels: tuple
    lcm: int

    def __post_init__(self):
        if not set(self.region_labels) <= set(self.labels):
            raise LatticeError("region labels outside the label code")

    def index(self, label):
        return self.region_labels.index(tuple(label))


def enumerate_label_code(lattice, cs):
    """Label code of the lattice and the labels used by the region.

    The labeling is a homomorphism from the lattice onto its image, so the
    full label code is generated by the labels of the basis vectors.  It is
    cross-checked against the labels of all coset representatives of the
    orthogonal sublattice.
    """
    g = cs.group_sizes
    basis_labels = [label_of(lattice.B[:, j], cs) for j in range(lattice.dim)]
    labels = span(basis_labels, g)

    n_cosets = np.prod(cs.cross_spacing) / abs(np.linalg.det(lattice.B))
    if abs(n_cosets - len(labels)) > 1e-6 * n_cosets:
        raise LatticeError(
            f"label code has {len(labels)} words but the orthogonal sublattice has "
            f"index {n_cosets:.6g}"
        )
    region = _labels_of_many(lattice.region, cs, lattice.u0)
    region_labels = sorted({tuple(int(v) for v in row) for row in region})
    if not set(region_labels) <= set(labels):
        raise LatticeError("region labels are not contained in the label code")
    return LabelCode(
        group_sizes=tuple(g),
        labels=tuple(labels),
        region_labels=tuple(region_labels),
        lcm=_lcm(g),
    )


def check_label(v, label, g, lcm=None):
    """Scaled inner product ``sum_i (lcm/g_i) v_i l_i mod lcm``."""
    g = np.asarray(g, dtype=int)
    lcm = _lcm(g.tolist()) if lcm is None else int(lcm)
    scale = lcm // g
    return int(np.sum(scale * np.asarray(v, dtype=int) * np.asarray(label, dtype=int)) % lcm)


def dual_code(code):
    """All words orthogonal to every label, by exhaustive search."""
    g = np.array(code.group_sizes)
    labels = np.array(code.labels, dtype=int)
    scale = code.lcm // g
    ambient = np.array(list(itertools.product(*[range(k) for k in g])), dtype=int)
    residues = (ambient * scale) @ labels.T % code.lcm
    dual = ambient[np.all(residues == 0, axis=1)]
    return [tuple(int(a) for a in row) for row in dual]


@dataclass(frozen=True)
class DualGenerators:
    vstar: tuple
    dual: tuple = field(default=())


def dual_generators(code):
    """Minimal-size generating set of the dual code via greedy span growth.

    At each step the dual word that enlarges the current span the most is
    added (ties broken by lexicographic order), until the span is the whole
    dual code.
    """
    dual = dual_code(code)
    dual_set = set(dual)
    g = code.group_sizes
    gens = []
    current = {tuple([0] * len(g))}
    while current != dual_set:
        best, best_size = None, len(current)
        for v in dual:
            if v in current:
                continue
            size = len(span(gens + [v], g))
            if size > best_size:
                best, best_size = v, size
        gens.append(best)
        current = set(span(gens, g))
    # greedy may overshoot; drop redundant generators
    for v in list(gens):
        rest = [u for u in gens if u != v]
        if set(span(rest, g)) == dual_set:
            gens = rest
    return DualGenerators(vstar=tuple(gens), dual=tuple(dual))


def closest_in_coset(xhat, label, lattice, cs, labels_of_region=None):
    """Region point with the given label closest to ``xhat`` in projection coordinates.

    Ties go to the lexicographically smallest point (region points are kept
    in lexicographic order).
    """
    label = tuple(int(v) for v in label)
    if labels_of_region is None:
        labels_of_region = _labels_of_many(lattice.region, cs, lattice.u0)
    mask = np.all(labels_of_region == np.array(label), axis=1)
    if not np.any(mask):
        raise LatticeError(f"label {label} is not used by the region")
    pts = lattice.region[mask]
    d2 = np.sum((project_all(pts, cs) - project_all(xhat, cs)) ** 2, axis=1)
    return pts[int(np.argmin(d2))]


class LabeledLattice:
    """Bundle of a lattice code with its coordinate system and label code.

    Construction runs the full chain: Gram-Schmidt, spacings, label code,
    dual generators, and verifies the duality of every generator against
    every label.  ``checks`` replaces the computed generator set with an
    explicit one (it must generate the same dual code).
    """

    def __init__(self, lattice, checks=None):
        self.lattice = lattice
        self.coords = compute_spacings(lattice, gram_schmidt(lattice.B))
        self.code = enumerate_label_code(lattice, self.coords)
        self.duals = dual_generators(self.code)
        if checks is not None:
            checks = tuple(tuple(int(a) for a in v) for v in checks)
            if set(span(checks, self.code.group_sizes)) != set(self.duals.dual):
                raise LatticeError("supplied checks do not generate the dual label code")
            self.duals = DualGenerators(vstar=checks, dual=self.duals.dual)
        for v in self.duals.vstar:
            for lab in self.code.labels:
                if check_label(v, lab, self.code.group_sizes, self.code.lcm):
                    raise LatticeError(f"dual generator {v} fails on label {lab}")
        self.point_labels = _labels_of_many(lattice.region, self.coords, lattice.u0)
        region_index = {lab: k for k, lab in enumerate(self.code.region_labels)}
        self.point_state = np.array([region_index[tuple(int(a) for a in row)] for row in self.point_labels])
        self.point_proj = project_all(lattice.region, self.coords)

    @property
    def dim(self):
        return self.lattice.dim

    @property
    def region(self):
        return self.lattice.region

    def label_of(self, point):
        return label_of(point, self.coords, self.lattice.u0)

    def closest_in_coset(self, xhat, label):
        return closest_in_coset(xhat, label, self.lattice, self.coords, self.point_labels)


# Three-check D4 Tanner graph; (0, 2, 4, 0) is twice (1, 1, 5, 1) and so
# redundant as a generator, but it is kept as a separate check node.
D4_CHECKS = ((1, 1, 5, 1), (0, 2, 4, 0), (0, 0, 3, 1))


def d4_qpsk_lattice(checks=D4_CHECKS):
    """D4 with the 16-point region ``{-1, +1}^4`` used by the QPSK superorthogonal code."""
    region = np.array(list(itertools.product([-1.0, 1.0], repeat=4)))
    return LabeledLattice(Lattice(B=D4_GENERATOR, region=region), checks=checks)
