"""Soft detection of one noisy D4 point: initialization, BP, pruning, extrinsics.

Run: python demos/02_bp_detection.py
"""
import numpy as np

from latticebp import bp, d4_qpsk_lattice
from latticebp.extrinsic import build_edges, extrinsic_coordinate, extrinsic_uncoded, uniform_priors
from latticebp.tanner import build_graph

ll = d4_qpsk_lattice()
graph = build_graph(ll.duals, ll.code)
edges = build_edges(ll)

xhat = np.array([0.9, 1.1, 0.8, 1.2])
noise = bp.NoiseProfile(0.5)
labels = ["".join(map(str, l)) for l in ll.code.region_labels]


def show(p):
    return "  ".join(f"{l}:{v:.4f}" for l, v in zip(labels, p))


for scheme in ("projection", "simplified", "probability"):
    state = bp.init_state(scheme, xhat, ll, noise)
    print(f"{scheme:>11} init:", show(state.label_probs[0]))

state = bp.init_projection(xhat, ll, noise)
bp.bp_iterate(state, graph, 1)
var_probs, label_probs = bp.total_app(state, graph, ll)
print("  after one round:", show(label_probs))

# Keep the two most likely labels
kept = bp.prune_labels(label_probs, 2)
print("    two survivors:", show(kept))

best = ll.code.region_labels[int(np.argmax(label_probs))]
print("best label", "".join(map(str, best)), "-> closest point", ll.closest_in_coset(xhat, best))

# Extrinsic coordinate APPs: each excludes its own channel likelihood
lik = bp.init_probability(xhat, edges.alphabets, noise)
pu = uniform_priors(edges)
for j in range(4):
    c = extrinsic_coordinate(edges, kept, pu, lik, j)
    u = extrinsic_uncoded(edges, kept, pu, lik, j)
    print(f"coordinate {j}: likelihood {np.round(lik[j], 3)} extrinsic {np.round(c, 3)} total {np.round(u, 3)}")
