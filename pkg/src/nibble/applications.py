"""Approximate Steiner systems and rainbow matchings.

Both applications reduce to finding a pseudorandom matching in an auxiliary
hypergraph:

* a k-set ``X`` of ``[n]`` becomes the edge formed by all t-subsets of ``X``;
  matchings of that hypergraph are partial ``(n, k, t)``-Steiner systems;
* an edge ``uv`` of colour ``c`` in a bipartite graph becomes the triple
  ``{u, v, c}``; matchings of that 3-graph are rainbow matchings.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from . import rng as rngmod
from .errors import BadParams, ImproperColouring, PatternRejected, TooLarge
from .hypergraph import Hypergraph, build, is_matching
from .matcher import MatchReport, PipelineParams, derive_params, run_pipeline
from .weights import TupleWeightFunction, uniform_weight

MAX_STEINER_EDGES = 2_000_000


# -- Steiner systems ----------------------------------------------------------


def _colex_rank(sets: np.ndarray) -> np.ndarray:
    """Colex rank of each row of a row-sorted integer array."""
    t = sets.shape[1]
    top = int(sets.max()) + 1 if sets.size else 1
    table = np.array([[math.comb(a, i + 1) for i in range(t)] for a in range(top)], dtype=np.int64)
    return sum(table[sets[:, i], i] for i in range(t)) if t else np.zeros(len(sets), np.int64)


@dataclass(frozen=True)
class SteinerInstance:
    """The hypergraph whose matchings are partial ``(n, k, t)``-Steiner systems.

    Vertex ``i`` is the t-subset ``tsets[i]`` (colex order); edge ``j`` is the
    block ``blocks[j]`` (lex order).
    """

    n: int
    k: int
    t: int
    hypergraph: Hypergraph
    tsets: np.ndarray
    blocks: np.ndarray

    @property
    def p_density(self) -> Fraction:
        return Fraction(math.factorial(self.k - self.t), self.n ** (self.k - self.t))

    @property
    def Delta(self) -> float:
        """The degree parameter ``1 / p_density``, slightly above the true max degree."""
        return float(1 / self.p_density)

    def block(self, edge_id: int) -> tuple[int, ...]:
        return tuple(int(x) for x in self.blocks[edge_id])

    def tset(self, vertex: int) -> tuple[int, ...]:
        return tuple(int(x) for x in self.tsets[vertex])

    def vertex_of(self, tset: Sequence[int]) -> int:
        row = np.array([sorted(int(x) for x in tset)], dtype=np.int64)
        return int(_colex_rank(row)[0])

    def descriptor(self) -> dict:
        return {"kind": "steiner", "n": self.n, "k": self.k, "t": self.t}


def steiner_hypergraph(n: int, k: int, t: int, max_edges: int = MAX_STEINER_EDGES) -> SteinerInstance:
    if not 2 <= t < k <= n:
        raise BadParams(f"need 2 <= t < k <= n, got n={n}, k={k}, t={t}")
    if math.comb(n, k) > max_edges:
        raise TooLarge(f"C({n},{k}) = {math.comb(n, k)} blocks exceeds the cap {max_edges}")
    blocks = np.array(list(itertools.combinations(range(n), k)), dtype=np.int64).reshape(-1, k)
    tsets = np.array(list(itertools.combinations(range(n), t)), dtype=np.int64)
    tsets = tsets[np.argsort(_colex_rank(tsets), kind="stable")]
    cols = [
        _colex_rank(blocks[:, list(pos)])
        for pos in itertools.combinations(range(k), t)
    ]
    edges = np.sort(np.stack(cols, axis=1), axis=1)
    H = Hypergraph(math.comb(k, t), math.comb(n, t), edges)
    tsets.setflags(write=False)
    blocks.setflags(write=False)
    return SteinerInstance(n, k, t, H, tsets, blocks)


def is_partial_steiner(blocks: Iterable[Sequence[int]], t: int) -> bool:
    """Every t-subset lies in at most one block."""
    seen: set[tuple[int, ...]] = set()
    for b in blocks:
        for T in itertools.combinations(sorted(b), t):
            if T in seen:
                return False
            seen.add(T)
    return True


@dataclass(frozen=True)
class Pattern:
    """A small k-graph with labelled vertices, stored with sorted edges."""

    edges: tuple[tuple[int, ...], ...]
    name: str | None = None

    @classmethod
    def of(cls, edges: Iterable[Sequence[int]], name: str | None = None) -> Pattern:
        canon = sorted({tuple(sorted(int(x) for x in e)) for e in edges})
        if not canon:
            raise BadParams("a pattern needs at least one edge")
        sizes = {len(e) for e in canon}
        if len(sizes) != 1:
            raise BadParams("pattern edges must all have the same size")
        if any(len(set(e)) != len(e) for e in canon):
            raise BadParams("pattern edge repeats a vertex")
        return cls(tuple(canon), name)

    @property
    def k(self) -> int:
        return len(self.edges[0])

    @property
    def vertices(self) -> tuple[int, ...]:
        return tuple(sorted({v for e in self.edges for v in e}))

    @property
    def num_vertices(self) -> int:
        return len(self.vertices)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def to_json(self) -> dict:
        out: dict = {"edges": [list(e) for e in self.edges]}
        if self.name:
            out["name"] = self.name
        return out


def is_t_avoiding(F: Pattern, t: int) -> bool:
    return all(len(set(a) & set(b)) < t for a, b in itertools.combinations(F.edges, 2))


def mad(F: Pattern, k: int | None = None, max_edges: int = 12) -> Fraction:
    """Largest ``k * e(F') / v(F')`` over non-empty edge subsets ``F'``."""
    k = F.k if k is None else k
    m = F.num_edges
    if m > max_edges:
        raise TooLarge(f"mad enumerates 2^{m} subgraphs; cap is {max_edges} edges")
    best = Fraction(0)
    for size in range(1, m + 1):
        for sub in itertools.combinations(F.edges, size):
            verts = len({v for e in sub for v in e})
            best = max(best, Fraction(k * size, verts))
    return best


def _as_edge_set(G) -> tuple[set[tuple[int, ...]], dict[int, list[tuple[int, ...]]]]:
    edges = G.edges if isinstance(G, Hypergraph) else [tuple(sorted(int(x) for x in e)) for e in G]
    eset = set(edges)
    inc: dict[int, list[tuple[int, ...]]] = {}
    for e in eset:
        for v in e:
            inc.setdefault(v, []).append(e)
    return eset, inc


def count_injections(F: Pattern, G, max_vertices: int = 8) -> int:
    """Number of injective maps ``V(F) -> V(G)`` sending every edge of F to an edge of G.

    ``G`` is a :class:`Hypergraph` or an iterable of vertex tuples.
    """
    if F.num_vertices > max_vertices:
        raise TooLarge(f"pattern has {F.num_vertices} vertices; cap is {max_vertices}")
    eset, inc = _as_edge_set(G)
    if not eset:
        return 0
    # edges in an order where each one overlaps the vertices already placed as much as possible
    edges = list(F.edges)
    plan: list[tuple[tuple[int, ...], tuple[int, ...], tuple[int, ...], int]] = []
    placed: set[int] = set()
    while edges:
        e = max(edges, key=lambda f: (len(placed & set(f)), -edges.index(f)))
        edges.remove(e)
        later = {v for f in edges for v in f}
        fixed = tuple(v for v in e if v in placed)
        fresh = [v for v in e if v not in placed]
        late = tuple(v for v in fresh if v in later)
        # vertices no later edge sees can be placed in any order: count them, do not enumerate
        loose = len(fresh) - len(late)
        plan.append((fixed, late, tuple(v for v in fresh if v not in later), math.factorial(loose)))
        placed.update(e)
    everything = sorted(eset)
    image: dict[int, int] = {}
    used: set[int] = set()

    def rec(i):
        if i == len(plan):
            return 1
        fixed, late, loose, mult = plan[i]
        if fixed:
            anchor = {image[v] for v in fixed}
            pool = [g for g in inc.get(image[fixed[0]], ()) if anchor.issubset(g)]
        else:
            anchor = set()
            pool = everything
        total = 0
        for g in pool:
            rest = [x for x in g if x not in anchor]
            if any(x in used for x in rest):
                continue
            for pick in itertools.permutations(rest, len(late)):
                for v, x in zip(late, pick):
                    image[v] = x
                used.update(rest)
                total += mult * rec(i + 1)
                used.difference_update(rest)
                for v in late:
                    del image[v]
        return total

    return rec(0)


def uncovered_stats(blocks: np.ndarray, n: int, t: int) -> dict:
    """Per-(t-1)-set counts of uncovered t-sets containing it."""
    covered = Counter()
    for b in blocks:
        for T in itertools.combinations(sorted(int(x) for x in b), t):
            for S in itertools.combinations(T, t - 1):
                covered[S] += 1
    counts = [
        (n - (t - 1)) - covered.get(S, 0) for S in itertools.combinations(range(n), t - 1)
    ]
    arr = np.array(counts, dtype=np.float64)
    return {
        "min": int(arr.min()),
        "max": int(arr.max()),
        "mean": float(arr.mean()),
        "std": float(arr.std()),
    }


def sampled_pair_weight(H: Hypergraph, count: int, seed: int, name: str = "pairs") -> TupleWeightFunction:
    """Unit weights on ``count`` random vertex-disjoint edge pairs (a clean 2-tuple function)."""
    g = rngmod.stream(seed, "pair-weight")
    m = H.num_edges
    chosen: set[tuple[int, int]] = set()
    attempts = 0
    if m < 2:
        return TupleWeightFunction(2, [], m, name=name)
    while len(chosen) < count and attempts < 20 * count:
        attempts += 1
        a, b = (int(x) for x in g.integers(m, size=2))
        if a == b:
            continue
        a, b = min(a, b), max(a, b)
        if np.intersect1d(H.edge_array[a], H.edge_array[b]).size:
            continue
        chosen.add((a, b))
    return TupleWeightFunction(2, [(pair, 1) for pair in sorted(chosen)], m, name=name)


def check_pattern(F: Pattern, k: int, t: int) -> None:
    if F.k != k:
        raise PatternRejected(f"pattern edges have size {F.k}, blocks have size {k}")
    if not is_t_avoiding(F, t):
        raise PatternRejected(f"pattern {F.name or F.edges} is not {t}-avoiding")
    if mad(F, k) >= Fraction(k, k - t):
        raise PatternRejected(f"pattern {F.name or F.edges} has mad {mad(F, k)} >= {k}/{k - t}")


def steiner_run(
    n: int,
    k: int,
    t: int,
    patterns: Sequence[Pattern] = (),
    params: PipelineParams | None = None,
    pair_samples: int = 0,
    threads: int = 1,
    **overrides,
) -> MatchReport:
    """Pseudorandom partial Steiner system with post-hoc pattern counts.

    The returned report carries a ``steiner`` section with the blocks, the
    partial-system check, coverage and ``inj(F, S) / (p^e(F) n^v(F))`` for
    every pattern.
    """
    for F in patterns:
        check_pattern(F, k, t)
    inst = steiner_hypergraph(n, k, t)
    H = inst.hypergraph
    seed = params.seed if params is not None else overrides.get("seed", 0) or 0
    weights = [uniform_weight(H)]
    if pair_samples:
        weights.append(sampled_pair_weight(H, pair_samples, seed))
    if params is None:
        L = 2 if pair_samples else 1
        params = derive_params(H, overrides.pop("delta", 0.5), overrides.pop("L", L), Delta=inst.Delta, **overrides)
    report = run_pipeline(H, weights, params, threads)
    report.instance = inst.descriptor()
    report.extra["steiner"] = steiner_section(inst, report.matching, patterns, pair_samples)
    return report


def steiner_section(inst: SteinerInstance, matching: Sequence[int], patterns: Sequence[Pattern], pair_samples: int = 0) -> dict:
    blocks = inst.blocks[np.asarray(matching, dtype=np.int64)] if len(matching) else np.zeros((0, inst.k), np.int64)
    rho = inst.p_density
    stats = []
    for F in patterns:
        inj = count_injections(F, [tuple(b) for b in blocks.tolist()])
        expect = float(rho ** F.num_edges) * inst.n ** F.num_vertices
        stats.append({
            "pattern": F.to_json(),
            "v": F.num_vertices,
            "e": F.num_edges,
            "mad": str(mad(F, inst.k)),
            "inj": inj,
            "expected": expect,
            "ratio": inj / expect,
        })
    return {
        "n": inst.n,
        "k": inst.k,
        "t": inst.t,
        "blocks": blocks.tolist(),
        "num_blocks": len(blocks),
        "partial_steiner": is_partial_steiner(blocks.tolist(), inst.t),
        "coverage": len(blocks) * math.comb(inst.k, inst.t) / math.comb(inst.n, inst.t),
        "p_density": float(rho),
        "pair_samples": pair_samples,
        "patterns": stats,
        "uncovered": uncovered_stats(blocks, inst.n, inst.t),
    }


# -- rainbow matchings ----------------------------------------------------------


@dataclass(frozen=True)
class RainbowInstance:
    """Triples ``{u, v, c}``: left vertices first, then right vertices, then colours."""

    n_left: int
    n_right: int
    colours: tuple
    triples: tuple[tuple[int, int, object], ...]
    hypergraph: Hypergraph
    extra: dict = field(default_factory=dict)

    def graph_matching(self, edge_ids: Iterable[int]) -> list[tuple[int, int, object]]:
        return [self.triples[int(e)] for e in edge_ids]

    def descriptor(self) -> dict:
        out = {"kind": "rainbow", "n_left": self.n_left, "n_right": self.n_right}
        out.update(self.extra)
        return out


def rainbow_hypergraph(n_left: int, n_right: int, coloured_edges: Iterable[tuple[int, int, object]]) -> RainbowInstance:
    triples = [(int(u), int(v), c) for u, v, c in coloured_edges]
    seen_pairs: set[tuple[int, int]] = set()
    at_left: set[tuple[int, object]] = set()
    at_right: set[tuple[int, object]] = set()
    for u, v, c in triples:
        if not (0 <= u < n_left and 0 <= v < n_right):
            raise BadParams(f"edge ({u}, {v}) leaves the {n_left} x {n_right} bipartition")
        if (u, v) in seen_pairs:
            raise BadParams(f"edge ({u}, {v}) appears twice")
        seen_pairs.add((u, v))
        if (u, c) in at_left or (v, c) in at_right:
            raise ImproperColouring(f"colour {c!r} repeats at an end of edge ({u}, {v})")
        at_left.add((u, c))
        at_right.add((v, c))
    colours = tuple(sorted({c for _, _, c in triples}, key=lambda c: (str(type(c)), c)))
    cid = {c: i for i, c in enumerate(colours)}
    base = n_left + n_right
    H = build(3, base + len(colours), [(u, n_left + v, base + cid[c]) for u, v, c in triples])
    return RainbowInstance(n_left, n_right, colours, tuple(triples), H)


def is_rainbow_matching(triples: Sequence[tuple[int, int, object]]) -> bool:
    us = [u for u, _, _ in triples]
    vs = [v for _, v, _ in triples]
    cs = [c for _, _, c in triples]
    return len(set(us)) == len(us) and len(set(vs)) == len(vs) and len(set(cs)) == len(cs)


def _random_row(n: int, forbidden: np.ndarray, g: np.random.Generator) -> np.ndarray:
    """Random perfect matching columns -> symbols avoiding ``forbidden[col, sym]``.

    Starts from a random permutation and repairs clashes with augmenting paths.
    """
    sym_of = -np.ones(n, np.int64)
    col_of = -np.ones(n, np.int64)
    for col, sym in enumerate(g.permutation(n)):
        if not forbidden[col, sym]:
            sym_of[col] = sym
            col_of[sym] = col
    for start in np.flatnonzero(sym_of < 0):
        # BFS over alternating paths from the free column
        parent = {int(start): -1}
        frontier = [int(start)]
        found = None
        while frontier and found is None:
            nxt = []
            for col in frontier:
                for sym in g.permutation(n):
                    if forbidden[col, sym]:
                        continue
                    owner = int(col_of[sym])
                    if owner < 0:
                        found = (col, int(sym))
                        break
                    if owner not in parent:
                        parent[owner] = (col, int(sym))
                        nxt.append(owner)
                if found is not None:
                    break
            frontier = nxt
        col, sym = found
        while True:
            prev = sym_of[col]
            sym_of[col] = sym
            col_of[sym] = col
            back = parent[col]
            if back == -1:
                break
            col, sym = back[0], int(prev)
    return sym_of


def latin_square(n: int, kind: str = "cyclic", seed: int = 0) -> np.ndarray:
    """An ``n x n`` Latin square: ``L[i, j]`` is the colour of edge ``ij`` of K_{n,n}."""
    if n < 1:
        raise BadParams("n must be >= 1")
    if kind == "cyclic":
        i = np.arange(n)
        return (i[:, None] + i[None, :]) % n
    if kind != "random":
        raise BadParams(f"unknown Latin square kind {kind!r}")
    g = rngmod.stream(seed, "latin")
    used = np.zeros((n, n), dtype=bool)  # used[col, sym]
    rows = []
    for _ in range(n):
        row = _random_row(n, used, g)
        used[np.arange(n), row] = True
        rows.append(row)
    return np.array(rows, dtype=np.int64)


def is_latin(L: np.ndarray) -> bool:
    n = L.shape[0]
    want = np.arange(n)
    return all(np.array_equal(np.sort(L[i]), want) and np.array_equal(np.sort(L[:, i]), want) for i in range(n))


def latin_instance(n: int, kind: str = "cyclic", seed: int = 0) -> RainbowInstance:
    L = latin_square(n, kind, seed)
    inst = rainbow_hypergraph(n, n, [(i, j, int(L[i, j])) for i in range(n) for j in range(n)])
    inst.extra.update({"latin": kind, "n": n, "seed": seed if kind == "random" else None})
    return inst


def rainbow_run(
    inst: RainbowInstance,
    params: PipelineParams | None = None,
    threads: int = 1,
    **overrides,
) -> MatchReport:
    """Pipeline run on the rainbow hypergraph with the rainbow property checked."""
    H = inst.hypergraph
    if params is None:
        params = derive_params(H, overrides.pop("delta", 0.5), overrides.pop("L", 1), **overrides)
    report = run_pipeline(H, [uniform_weight(H)], params, threads)
    report.instance = inst.descriptor()
    triples = inst.graph_matching(report.matching)
    report.extra["rainbow"] = {
        "matching": [[u, v, c] for u, v, c in triples],
        "size": len(triples),
        "rainbow": is_rainbow_matching(triples) and is_matching(H, report.matching),
    }
    return report
