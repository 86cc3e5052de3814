"""
Matchings in the Fano hypergraph
================================

Every triple of a 7-point set becomes an edge on the 21 pairs it contains.
A matching is then a set of triples sharing no pair, i.e. a partial
Steiner triple system.
"""

from nibble.applications import steiner_hypergraph
from nibble.coloring import conflict_graph, decompose, validate
from nibble.oracle import chromatic_number, max_matching

inst = steiner_hypergraph(7, 3, 2)
H = inst.hypergraph
print(H.num_vertices, "pair-vertices,", H.num_edges, "triple-edges,", H.stats())

# the largest matching is a full Fano plane
size, witness = max_matching(H)
print("maximum matching:", size)
for e in witness:
    print("   ", inst.block(e))

# splitting all 35 triples into matchings is a colouring of the conflict graph
indptr, indices = conflict_graph(H)
chi, _ = chromatic_number(indptr, indices)
D = decompose(H, target_classes=5, seed=1)
print("optimum number of matchings:", chi)
print("tabu search found:", D.num_classes, "valid:", validate(H, D))
print("class sizes:", D.sizes())
