"""
Approximate Steiner triple systems
==================================

A matching in the pair hypergraph of K_n is a partial Steiner triple
system.  Besides its size we count labelled copies of a small pattern and
compare them with a random-like prediction p^e(F) n^v(F).
"""

from nibble.applications import Pattern, is_t_avoiding, mad, steiner_run

cherry = Pattern.of([(0, 1, 2), (2, 3, 4)], "two blocks sharing a vertex")
print("2-avoiding:", is_t_avoiding(cherry, 2), " mad:", mad(cherry))

for n in (21, 31, 45):
    rep = steiner_run(n, 3, 2, [cherry], p=1, q=1, seed=0)
    sec = rep.extra["steiner"]
    pat = sec["patterns"][0]
    print(f"n={n:3d}  blocks={sec['num_blocks']:4d}  pairs covered={sec['coverage']:.3f}  "
          f"inj={pat['inj']:7d}  expected={pat['expected']:9.0f}  ratio={pat['ratio']:.3f}")

# uncovered pairs spread fairly evenly over the points
print("uncovered pairs per point (n=45):", sec["uncovered"])
