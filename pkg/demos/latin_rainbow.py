"""
Rainbow matchings in Latin squares
==================================

A Latin square colours the edges of K_{n,n}.  Triples {row, column,
symbol} turn rainbow matchings into hypergraph matchings, so a partial
transversal drops out of the same pipeline.
"""

from nibble.applications import is_rainbow_matching, latin_instance, latin_square, rainbow_run

print(latin_square(5))

for n, kind in [(16, "cyclic"), (17, "cyclic"), (32, "random"), (64, "cyclic")]:
    inst = latin_instance(n, kind, seed=1)
    rep = rainbow_run(inst, p=1, q=1, seed=0)
    triples = inst.graph_matching(rep.matching)
    print(f"{kind:>6} n={n:3d}  rainbow matching of size {len(triples):3d}  "
          f"({len(triples) / n:.0%} of n)  rainbow: {is_rainbow_matching(triples)}")

# cyclic squares of even order have no full transversal, odd ones do
