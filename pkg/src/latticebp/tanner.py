"""Tanner graph of a lattice label code.

Variable node ``i`` carries label coordinate ``l_i`` over ``Z_{g_i}``; check
node ``j`` enforces ``sum_i (lcm/g_i) v_ji l_i = 0 mod lcm`` for dual
generator ``v_j``.  Checks keep only their nonzero support.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass

import numpy as np

__all__ = ["Check", "TannerGraph", "build_graph", "local_configs", "to_dot"]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Check:
    support: tuple
    coeffs: tuple
    lcm: int

    def residue(self, values, alphabets):
        scale = [self.lcm // alphabets[i] for i in self.support]
        return sum(s * c * v for s, c, v in zip(scale, self.coeffs, values)) % self.lcm


@dataclass(frozen=True)
class TannerGraph:
    var_alphabets: tuple
    checks: tuple
    labels: tuple = ()

    @property
    def n_vars(self):
        return len(self.var_alphabets)

    def var_checks(self, i):
        """Indices of checks touching variable ``i``."""
        return [j for j, c in enumerate(self.checks) if i in c.support]

    @property
    def unconstrained(self):
        return [i for i in range(self.n_vars) if self.var_alphabets[i] > 1 and not self.var_checks(i)]

    def edges(self):
        return [(j, i) for j, c in enumerate(self.checks) for i in c.support]

    def satisfying(self, j):
        """All assignments over the support of check ``j`` with zero residue."""
        c = self.checks[j]
        ranges = [range(self.var_alphabets[i]) for i in c.support]
        rows = [vals for vals in itertools.product(*ranges) if c.residue(vals, self.var_alphabets) == 0]
        return np.array(rows, dtype=int).reshape(-1, len(c.support))

    def label_restrictions(self, j):
        """Restrictions of every label-code word to the support of check ``j``."""
        if not self.labels:
            raise ValueError("graph was built without the label code")
        idx = list(self.checks[j].support)
        return np.array(self.labels, dtype=int)[:, idx]


def build_graph(duals, code):
    """One check node per dual generator, edges at its nonzero coordinates."""
    g = tuple(code.group_sizes)
    checks = []
    for v in duals.vstar:
        support = tuple(i for i, a in enumerate(v) if a % g[i] != 0)
        if not support:
            log.warning("dropping all-zero generator %s", v)
            continue
        checks.append(Check(support=support, coeffs=tuple(int(v[i]) for i in support), lcm=code.lcm))
    graph = TannerGraph(var_alphabets=g, checks=tuple(checks), labels=tuple(code.labels))
    for i in graph.unconstrained:
        log.info("variable %d is not touched by any check", i)
    return graph


def local_configs(graph, j, pinned):
    """Yield assignments of the other neighbours of check ``j`` completing ``l_i = alpha``.

    Each assignment is a dict ``{variable: value}`` over ``N(j) \\ {i}``.
    """
    i, alpha = pinned
    c = graph.checks[j]
    if i not in c.support:
        raise ValueError(f"variable {i} is not adjacent to check {j}")
    others = [k for k in c.support if k != i]
    for vals in itertools.product(*[range(graph.var_alphabets[k]) for k in others]):
        full = dict(zip(others, vals))
        full[i] = alpha
        if c.residue([full[k] for k in c.support], graph.var_alphabets) == 0:
            yield {k: full[k] for k in others}


def to_dot(graph, name="tanner"):
    """Graphviz DOT text for the bipartite graph."""
    lines = [f"graph {name} {{", "  node [shape=circle];"]
    for i, g in enumerate(graph.var_alphabets):
        lines.append(f'  l{i + 1} [label="l{i + 1}\\nZ{g}"];')
    for j, c in enumerate(graph.checks):
        coeffs = "".join(str(a) for a in c.coeffs)
        lines.append(f'  v{j + 1} [shape=box, label="v{j + 1}\\n{coeffs}"];')
        for i in c.support:
            lines.append(f"  v{j + 1} -- l{i + 1};")
    lines.append("}")
    return "\n".join(lines) + "\n"
