"""Decomposition of a hypergraph's edge set into matchings.

A proper edge colouring of ``H`` is a proper vertex colouring of its conflict
graph (edges adjacent iff they intersect).  :func:`decompose` runs DSatur,
then shrinks the palette one colour at a time with a tabu search over
single-edge recolour moves, and finally evens out class sizes with Kempe
chain interchanges.
"""

from __future__ import annotations

import heapq
import json
from dataclasses import dataclass

import numba
import numpy as np

from .hypergraph import Hypergraph, is_matching


@dataclass(frozen=True)
class MatchingDecomposition:
    classes: tuple[tuple[int, ...], ...]
    assignment: tuple[int, ...]

    @property
    def num_classes(self) -> int:
        return len(self.classes)

    def sizes(self) -> list[int]:
        return [len(c) for c in self.classes]

    def to_json(self) -> dict:
        return {"classes": [list(c) for c in self.classes]}

    @classmethod
    def from_classes(cls, classes, num_edges: int | None = None) -> MatchingDecomposition:
        classes = tuple(tuple(sorted(int(e) for e in c)) for c in classes)
        if num_edges is None:
            num_edges = sum(len(c) for c in classes)
        assignment = [-1] * num_edges
        for k, c in enumerate(classes):
            for e in c:
                if 0 <= e < num_edges:
                    assignment[e] = k
        return cls(classes, tuple(assignment))

    @classmethod
    def from_json(cls, data: dict | str, num_edges: int | None = None) -> MatchingDecomposition:
        if isinstance(data, str):
            data = json.loads(data)
        return cls.from_classes(data["classes"], num_edges)


# -- kernels --------------------------------------------------------------


@numba.njit(cache=True, nogil=True)
def _conflict_csr(edges, inc_ptr, inc_ids):
    m, r = edges.shape
    mark = np.full(m, -1, np.int64)
    counts = np.zeros(m, np.int64)
    for e in range(m):
        for a in range(r):
            v = edges[e, a]
            for t in range(inc_ptr[v], inc_ptr[v + 1]):
                f = inc_ids[t]
                if f != e and mark[f] != e:
                    mark[f] = e
                    counts[e] += 1
    indptr = np.zeros(m + 1, np.int64)
    for e in range(m):
        indptr[e + 1] = indptr[e] + counts[e]
    indices = np.empty(indptr[m], np.int64)
    mark[:] = -1
    for e in range(m):
        pos = indptr[e]
        for a in range(r):
            v = edges[e, a]
            for t in range(inc_ptr[v], inc_ptr[v + 1]):
                f = inc_ids[t]
                if f != e and mark[f] != e:
                    mark[f] = e
                    indices[pos] = f
                    pos += 1
        indices[indptr[e]:indptr[e + 1]].sort()
    return indptr, indices


@numba.njit(cache=True, nogil=True)
def _dsatur(indptr, indices, keys):
    m = indptr.shape[0] - 1
    maxdeg = 0
    for v in range(m):
        d = indptr[v + 1] - indptr[v]
        if d > maxdeg:
            maxdeg = d
    kcap = maxdeg + 1
    seen = np.zeros((m, kcap), np.bool_)
    sat = np.zeros(m, np.int64)
    col = np.full(m, -1, np.int64)
    heap = [(np.int64(0), np.int64(0), np.int64(0), np.int64(0))]
    heap.pop()
    for v in range(m):
        heap.append((np.int64(0), -(indptr[v + 1] - indptr[v]), keys[v], np.int64(v)))
    heapq.heapify(heap)
    done = 0
    while done < m:
        negsat, negdeg, key, v = heapq.heappop(heap)
        if col[v] >= 0 or -negsat != sat[v]:
            continue
        c = 0
        while seen[v, c]:
            c += 1
        col[v] = c
        done += 1
        for t in range(indptr[v], indptr[v + 1]):
            u = indices[t]
            if col[u] < 0 and not seen[u, c]:
                seen[u, c] = True
                sat[u] += 1
                heapq.heappush(heap, (-sat[u], -(indptr[u + 1] - indptr[u]), keys[u], u))
    return col


@numba.njit(cache=True, inline="always")
def _xorshift(state):
    x = state[0]
    x ^= (x << np.uint64(13)) & np.uint64(0xFFFFFFFFFFFFFFFF)
    x ^= x >> np.uint64(7)
    x ^= (x << np.uint64(17)) & np.uint64(0xFFFFFFFFFFFFFFFF)
    state[0] = x
    return x


@numba.njit(cache=True, nogil=True)
def _tabucol(indptr, indices, col, k, max_iter, seed):
    """Tabu search for a proper k-colouring; modifies ``col`` in place.

    Returns ``(iterations_used, remaining_conflicts)``.
    """
    state = np.empty(1, np.uint64)
    state[0] = np.uint64(seed) * np.uint64(2654435761) + np.uint64(0x9E3779B97F4A7C15)
    m = col.shape[0]
    gamma = np.zeros((m, k), np.int32)
    for v in range(m):
        for t in range(indptr[v], indptr[v + 1]):
            gamma[v, col[indices[t]]] += 1
    tabu = np.zeros((m, k), np.int64)
    pos = np.full(m, -1, np.int64)
    clist = np.empty(m, np.int64)
    nlist = 0
    nconf = 0
    for v in range(m):
        g = gamma[v, col[v]]
        if g > 0:
            pos[v] = nlist
            clist[nlist] = v
            nlist += 1
            nconf += g
    nconf //= 2
    best = nconf
    it = 0
    while it < max_iter and nconf > 0:
        best_delta = 1 << 40
        bv = -1
        bc = -1
        ties = 0
        for idx in range(nlist):
            v = clist[idx]
            cv = col[v]
            g0 = gamma[v, cv]
            for c in range(k):
                d = gamma[v, c] - g0
                if d > best_delta or c == cv:
                    continue
                if tabu[v, c] > it and nconf + d >= best:
                    continue
                if d < best_delta:
                    best_delta = d
                    bv = v
                    bc = c
                    ties = 1
                else:
                    ties += 1
                    if _xorshift(state) % np.uint64(ties) == 0:
                        bv = v
                        bc = c
        if bv < 0:
            bv = clist[_xorshift(state) % np.uint64(nlist)]
            bc = np.int64(_xorshift(state) % np.uint64(k - 1))
            if bc >= col[bv]:
                bc += 1
            best_delta = gamma[bv, bc] - gamma[bv, col[bv]]
        old = col[bv]
        col[bv] = bc
        for t in range(indptr[bv], indptr[bv + 1]):
            u = indices[t]
            gamma[u, old] -= 1
            gamma[u, bc] += 1
            cu = col[u]
            if cu == old and gamma[u, old] == 0 and pos[u] >= 0:
                last = clist[nlist - 1]
                clist[pos[u]] = last
                pos[last] = pos[u]
                pos[u] = -1
                nlist -= 1
            elif cu == bc and gamma[u, bc] == 1 and pos[u] < 0:
                pos[u] = nlist
                clist[nlist] = u
                nlist += 1
        if gamma[bv, bc] == 0 and pos[bv] >= 0:
            last = clist[nlist - 1]
            clist[pos[bv]] = last
            pos[last] = pos[bv]
            pos[bv] = -1
            nlist -= 1
        elif gamma[bv, bc] > 0 and pos[bv] < 0:
            pos[bv] = nlist
            clist[nlist] = bv
            nlist += 1
        nconf += best_delta
        if nconf < best:
            best = nconf
        tabu[bv, old] = it + 1 + np.int64(_xorshift(state) % np.uint64(10)) + (6 * nlist) // 10
        it += 1
    return it, nconf


@numba.njit(cache=True, nogil=True)
def _kempe_balance_pair(indptr, indices, col, members, a, b, want, stamp, mark):
    """Swap {a, b}-Kempe components moving at most ``want`` edges from a to b.

    ``members`` lists the vertices of class ``a``.  A component is swapped
    when its excess (a-count minus b-count) is positive and fits in the
    remaining allowance.  Returns the number of edges moved.
    """
    stack = np.empty(indptr.shape[0], np.int64)
    comp = np.empty(indptr.shape[0], np.int64)
    moved = 0
    for s in members:
        if moved >= want:
            break
        if mark[s] == stamp or col[s] != a:
            continue
        top = 1
        stack[0] = s
        mark[s] = stamp
        nm = 0
        excess = 0
        while top > 0:
            top -= 1
            v = stack[top]
            comp[nm] = v
            nm += 1
            excess += 1 if col[v] == a else -1
            for t in range(indptr[v], indptr[v + 1]):
                u = indices[t]
                if mark[u] != stamp and (col[u] == a or col[u] == b):
                    mark[u] = stamp
                    stack[top] = u
                    top += 1
        if excess > 0 and moved + excess <= want:
            for i in range(nm):
                v = comp[i]
                col[v] = b if col[v] == a else a
            moved += excess
    return moved


@numba.njit(cache=True, nogil=True)
def _path_balance(indptr, indices, col, k, max_moves):
    """Even out class sizes by moving edges along chains of classes.

    A chain a = c0 -> c1 -> ... -> cL moves one edge from each c_i into
    c_{i+1}, so c0 shrinks, cL grows and every inner class keeps its size.
    An edge may enter a class where it has no neighbour, or exactly one
    neighbour which is then forced to be the edge leaving that class.  Each
    class appears at most once per chain, which keeps the colouring proper.
    Chains are found by BFS from the largest classes towards any class at
    least two smaller.
    """
    m = col.shape[0]
    gamma = np.zeros((m, k), np.int32)
    for v in range(m):
        for t in range(indptr[v], indptr[v + 1]):
            gamma[v, col[indices[t]]] += 1
    size = np.zeros(k, np.int64)
    for v in range(m):
        size[col[v]] += 1
    parent = np.empty(k, np.int64)
    via = np.empty(k, np.int64)
    forced = np.empty(k, np.int64)
    expanded = np.zeros(k, np.bool_)
    queue = np.empty(k, np.int64)
    start = np.empty(k + 1, np.int64)
    order = np.empty(m, np.int64)
    moves = 0
    while moves < max_moves:
        # bucket vertices by class
        start[:] = 0
        for v in range(m):
            start[col[v] + 1] += 1
        for c in range(k):
            start[c + 1] += start[c]
        fill = start[:k].copy()
        for v in range(m):
            order[fill[col[v]]] = v
            fill[col[v]] += 1
        improved = False
        srcs = np.argsort(-size)
        for si in range(k):
            src = srcs[si]
            if size[src] - size[srcs[k - 1]] <= 1:
                break
            parent[:] = -2
            forced[:] = -1
            expanded[:] = False
            parent[src] = -1
            head = 0
            tail = 1
            queue[0] = src
            sink = -1
            while head < tail and sink < 0:
                a = queue[head]
                head += 1
                expanded[a] = True
                lo = start[a]
                hi = start[a + 1]
                if forced[a] >= 0:
                    lo = 0
                    hi = 1
                for i in range(lo, hi):
                    v = order[i] if forced[a] < 0 else forced[a]
                    for c in range(k):
                        if c == a or expanded[c] or gamma[v, c] > 1:
                            continue
                        if gamma[v, c] == 0:
                            fresh = parent[c] == -2
                            if fresh or forced[c] >= 0:
                                parent[c] = a
                                via[c] = v
                                forced[c] = -1
                                if fresh:
                                    queue[tail] = c
                                    tail += 1
                                if size[c] <= size[src] - 2:
                                    sink = c
                                    break
                        elif parent[c] == -2:
                            u = -1
                            for t in range(indptr[v], indptr[v + 1]):
                                if col[indices[t]] == c:
                                    u = indices[t]
                                    break
                            parent[c] = a
                            via[c] = v
                            forced[c] = u
                            queue[tail] = c
                            tail += 1
                    if sink >= 0:
                        break
            if sink < 0:
                continue
            c = sink
            while parent[c] != -1:
                a = parent[c]
                v = via[c]
                col[v] = c
                for t in range(indptr[v], indptr[v + 1]):
                    u = indices[t]
                    gamma[u, a] -= 1
                    gamma[u, c] += 1
                c = a
            size[src] -= 1
            size[sink] += 1
            moves += 1
            improved = True
            break
        if not improved:
            break
    return moves


# -- public API -------------------------------------------------------------


def conflict_graph(H: Hypergraph) -> tuple[np.ndarray, np.ndarray]:
    """CSR adjacency ``(indptr, indices)`` of the conflict graph on edge ids."""
    if H.num_edges == 0:
        return np.zeros(1, np.int64), np.zeros(0, np.int64)
    inc_ptr, inc_ids = H.incidence()
    return _conflict_csr(np.ascontiguousarray(H.edge_array), inc_ptr, inc_ids)


# An attempt at k - 1 colours may use at most max(STALL_BASE, STALL_FACTOR * u)
# tabu iterations, where u is what the successful attempt at k needed.
STALL_BASE = 5_000
STALL_FACTOR = 4
STALL_RETRIES = 1


def default_effort(num_edges: int) -> int:
    return min(10 * num_edges + 20_000, 100_000)


def colour_conflict_graph(
    indptr: np.ndarray,
    indices: np.ndarray,
    target_classes: int,
    effort: int,
    rng: np.random.Generator,
    balance: bool = True,
) -> np.ndarray:
    """Proper colouring of a CSR graph with as few colours as the budget allows."""
    m = indptr.shape[0] - 1
    if m == 0:
        return np.zeros(0, np.int64)
    keys = rng.permutation(m).astype(np.int64)
    col = _dsatur(indptr, indices, keys)
    k = int(col.max()) + 1
    budget = int(effort)
    prev = 0
    stalls = 0
    # DSatur already yields one colour on an edgeless graph; otherwise two is the floor
    while k > max(target_classes, 2) and budget > 0:
        sizes = np.bincount(col, minlength=k)
        drop = int(np.argmin(sizes))
        trial = col.copy()
        trial[trial == k - 1] = drop if drop != k - 1 else -1
        if drop != k - 1:
            trial[col == drop] = -1
        # removed edges restart on uniformly random surviving colours
        loose = trial < 0
        trial[loose] = rng.integers(0, k - 1, size=int(loose.sum()))
        cap = min(budget, max(STALL_BASE, STALL_FACTOR * prev))
        used, left = _tabucol(indptr, indices, trial, k - 1, cap, int(rng.integers(2**31)))
        budget -= max(int(used), 1)
        if left:
            # a stalled attempt retries with a longer cap a few times
            stalls += 1
            if stalls > STALL_RETRIES:
                break
            prev = max(cap, prev)
            continue
        stalls = 0
        prev = int(used)
        col = trial
        k -= 1
    if balance:
        _balance(indptr, indices, col, k)
    return col


def _balance(indptr, indices, col, k) -> None:
    m = col.shape[0]
    mark = np.zeros(m, np.int64)
    stamp = 0
    for _ in range(2 * k):
        sizes = np.bincount(col, minlength=k)
        lo, hi = int(np.argmin(sizes)), int(np.argmax(sizes))
        want = int(sizes[hi] - sizes[lo]) // 2
        if want <= 0:
            break
        stamp += 1
        members = np.flatnonzero(col == hi)
        if not _kempe_balance_pair(indptr, indices, col, members, hi, lo, want, stamp, mark):
            break
    _path_balance(indptr, indices, col, k, 20 * m)


def decompose(
    H: Hypergraph,
    target_classes: int,
    effort: int | None = None,
    seed: int = 0,
    balance: bool = True,
) -> MatchingDecomposition:
    """Partition ``E(H)`` into matchings, aiming for ``target_classes`` classes.

    Never fails: if the budget runs out the best proper decomposition found
    so far is returned, which may have more classes than requested.  The
    result is a deterministic function of ``(H, target_classes, effort,
    seed)``; empty classes are dropped.
    """
    if target_classes < 1:
        raise ValueError("target_classes must be >= 1")
    m = H.num_edges
    if m == 0:
        return MatchingDecomposition((), ())
    if effort is None:
        effort = default_effort(m)
    rng = np.random.default_rng(seed)
    indptr, indices = conflict_graph(H)
    col = colour_conflict_graph(indptr, indices, target_classes, effort, rng, balance)
    order = np.argsort(col, kind="stable")
    bounds = np.searchsorted(col[order], np.arange(int(col.max()) + 2))
    classes = tuple(
        tuple(int(e) for e in order[bounds[c]:bounds[c + 1]])
        for c in range(len(bounds) - 1)
        if bounds[c + 1] > bounds[c]
    )
    return MatchingDecomposition.from_classes(classes, m)


def validate(H: Hypergraph, D: MatchingDecomposition) -> bool:
    """True iff ``D`` partitions ``E(H)`` exactly into matchings."""
    seen = np.zeros(H.num_edges, dtype=np.int64)
    for c in D.classes:
        ids = np.asarray(c, dtype=np.int64)
        if ids.size and (ids.min() < 0 or ids.max() >= H.num_edges):
            return False
        np.add.at(seen, ids, 1)
        if not is_matching(H, ids):
            return False
    return bool((seen == 1).all())
