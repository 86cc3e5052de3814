"""Random instance generators."""

from __future__ import annotations

import numpy as np

from . import rng as rngmod
from .errors import InfeasibleParams
from .hypergraph import Hypergraph


class _PairCounter:
    def __init__(self, n: int, r: int, cap: int | None):
        self.n, self.cap = n, cap
        self.a, self.b = np.triu_indices(r, k=1)
        self.count: dict[int, int] = {}

    def keys(self, e: np.ndarray) -> list[int]:
        return (e[self.a] * self.n + e[self.b]).tolist()

    def fits(self, e: np.ndarray) -> bool:
        return self.cap is None or all(self.count.get(k, 0) < self.cap for k in self.keys(e))

    def add(self, e: np.ndarray) -> None:
        for k in self.keys(e):
            self.count[k] = self.count.get(k, 0) + 1


def random_hypergraph(
    r: int,
    n: int,
    m: int,
    codegree_cap: int | None = None,
    seed: int = 0,
    near_regular: bool = False,
    max_attempts_factor: int = 50,
) -> Hypergraph:
    """Random r-graph with ``m`` distinct edges and every pair in at most ``codegree_cap`` edges.

    With ``near_regular`` the edges come from rounds of random vertex
    permutations cut into consecutive r-blocks, so degrees differ by little.
    Candidate edges violating the cap or repeating an edge are resampled;
    :class:`InfeasibleParams` is raised when too many are rejected.
    """
    if r < 1 or n < r or m < 0:
        raise InfeasibleParams(f"no r-graph with r={r}, n={n}, m={m}")
    if codegree_cap is not None and codegree_cap < 1 and r >= 2 and m > 0:
        raise InfeasibleParams("codegree cap below 1 forbids every edge")
    g = rngmod.stream(seed, "gen", "random-r-graph")
    pairs = _PairCounter(n, r, codegree_cap if r >= 2 else None)
    seen: set[tuple[int, ...]] = set()
    edges: list[np.ndarray] = []
    attempts = 0
    budget = max_attempts_factor * max(m, 1)
    perm: list[np.ndarray] = []
    while len(edges) < m:
        attempts += 1
        if attempts > budget:
            raise InfeasibleParams(f"only {len(edges)} of {m} edges fit the constraints")
        if near_regular:
            if not perm:
                order = g.permutation(n)
                perm = [np.sort(order[i:i + r]) for i in range(0, n - r + 1, r)][::-1]
            e = perm.pop()
        else:
            e = np.sort(g.choice(n, size=r, replace=False))
        key = tuple(e.tolist())
        if key in seen or not pairs.fits(e):
            continue
        seen.add(key)
        pairs.add(e)
        edges.append(e)
    return Hypergraph(r, n, np.array(edges, dtype=np.int64).reshape(-1, r))
