"""
Weights tracked by a pseudorandom matching
==========================================

On a near-regular 3-graph a random matching should pick up about a
1/Delta share of any weight spread over the edges.  Vertex-cover weights
make this concrete: their value on a matching is the number of vertices
of U that it covers.
"""

import numpy as np

from nibble.generators import random_hypergraph
from nibble.matcher import derive_params, run_pipeline
from nibble.weights import uniform_weight, vertex_cover_weight

H = random_hypergraph(3, 1200, 16000, codegree_cap=2, seed=3, near_regular=True)
Delta = H.stats().max_degree
print("v(H) =", H.num_vertices, " e(H) =", H.num_edges, " Delta =", Delta)

g = np.random.default_rng(0)
covers = [g.choice(H.num_vertices, size=k, replace=False) for k in (240, 480, 900)]
weights = [uniform_weight(H)] + [vertex_cover_weight(H, U, name=f"cover{len(U)}") for U in covers]

# a single part and a single slice: the matching is one class of a balanced decomposition
params = derive_params(H, p=1, q=1, seed=7)
report = run_pipeline(H, weights, params)
print("matching size", report.size, "from", report.M, "classes")
print(f"{'weight':>10} {'target':>9} {'achieved':>9} {'ratio':>6}")
for w in report.weights:
    print(f"{w.name:>10} {w.target:9.1f} {w.achieved:9} {w.ratio:6.3f}")

# the hypotheses are checked and reported, never enforced
print("hypotheses hold:", report.hypotheses.passed)
for entry in report.hypotheses.failures():
    print("   fails:", entry.name, entry.actual, entry.relation, round(entry.required, 2))
