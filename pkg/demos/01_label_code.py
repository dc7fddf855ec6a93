"""Coset labels of the checkerboard lattice D4 and the Tanner graph they induce.

Run: python demos/01_label_code.py
"""
import numpy as np

from latticebp import d4_qpsk_lattice
from latticebp.lattice import check_label, dual_generators, span
from latticebp.tanner import build_graph, to_dot

ll = d4_qpsk_lattice()
cs = ll.coords

# Gram-Schmidt directions, one per row
print("Gram-Schmidt directions:")
print(np.round(cs.w.T, 4))

# Spacing of the projected lattice versus spacing of the points lying on each direction
print("projection spacing:", np.round(cs.proj_spacing, 4))
print("cross-section spacing:", np.round(cs.cross_spacing, 4))
print("label groups:", cs.group_sizes)

fmt = lambda t: "".join(map(str, t))
print("label code:", " ".join(fmt(l) for l in ll.code.labels))
print("labels used by {-1,+1}^4:", " ".join(fmt(l) for l in ll.code.region_labels))

# A few points and their labels
for p in ([1, 1, 0, 0], [1, 0, 1, 0], [1, 1, 1, -1]):
    print(p, "->", fmt(ll.label_of(p)))

# Dual code: every word is orthogonal to every label under the lcm-scaled product
print("dual code:", " ".join(fmt(v) for v in ll.duals.dual))
bad = [(v, l) for v in ll.duals.dual for l in ll.code.labels if check_label(v, l, cs.group_sizes, 6)]
print("non-orthogonal pairs:", len(bad))

# The detector's three checks span the dual, but two generators already suffice
minimal = dual_generators(ll.code).vstar
print("checks used:", [fmt(v) for v in ll.duals.vstar], "minimal set:", [fmt(v) for v in minimal])
print("spans agree:", set(span(minimal, cs.group_sizes)) == set(span(ll.duals.vstar, cs.group_sizes)))

graph = build_graph(ll.duals, ll.code)
print(to_dot(graph))
