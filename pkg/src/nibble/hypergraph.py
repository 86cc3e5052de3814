"""Uniform hypergraphs: construction, degree statistics, sub-hypergraphs.

A :class:`Hypergraph` is immutable after construction.  Vertices are the
integers ``0 .. num_vertices - 1`` and an edge is identified by its position
in the edge list, so weight functions and decompositions can refer to edges
by index.
"""

from __future__ import annotations

import io
import os
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DuplicateEdge,
    FormatError,
    NonUniformEdge,
    SameVertex,
    TooLarge,
    UnknownEdgeId,
    VertexOutOfRange,
)

# Above this many vertex pairs a sorted pair index answers codegree queries.
PAIR_INDEX_THRESHOLD = 50_000


@dataclass(frozen=True)
class DegreeStats:
    max_degree: int
    min_degree: int
    max_codegree: int


class Hypergraph:
    """An r-uniform hypergraph with positional edge identity.

    Use :func:`build` to construct one from untrusted input; the constructor
    itself assumes a canonical ``(m, r)`` array of row-sorted, distinct edges.
    """

    __slots__ = ("_r", "_n", "_edges", "_degrees", "_pairs", "_incidence", "_edge_tuples")

    def __init__(self, r: int, num_vertices: int, edge_array: np.ndarray):
        arr = np.array(edge_array, dtype=np.int64, copy=True).reshape(-1, r)
        arr.setflags(write=False)
        self._r = int(r)
        self._n = int(num_vertices)
        self._edges = arr
        self._degrees = None
        self._pairs = None
        self._incidence = None
        self._edge_tuples = None

    @property
    def r(self) -> int:
        return self._r

    @property
    def num_vertices(self) -> int:
        return self._n

    @property
    def num_edges(self) -> int:
        return self._edges.shape[0]

    @property
    def edge_array(self) -> np.ndarray:
        """Read-only ``(num_edges, r)`` int64 array of sorted edges."""
        return self._edges

    @property
    def edges(self) -> tuple[tuple[int, ...], ...]:
        if self._edge_tuples is None:
            self._edge_tuples = tuple(tuple(int(x) for x in row) for row in self._edges)
        return self._edge_tuples

    def __len__(self) -> int:
        return self.num_edges

    def __repr__(self) -> str:
        return f"Hypergraph(r={self._r}, num_vertices={self._n}, num_edges={self.num_edges})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, Hypergraph):
            return NotImplemented
        return (
            self._r == other._r
            and self._n == other._n
            and np.array_equal(self._edges, other._edges)
        )

    def __hash__(self):
        return hash((self._r, self._n, self._edges.tobytes()))

    # -- degree queries -------------------------------------------------

    @property
    def degrees(self) -> np.ndarray:
        if self._degrees is None:
            d = np.bincount(self._edges.ravel(), minlength=self._n).astype(np.int64)
            d.setflags(write=False)
            self._degrees = d
        return self._degrees

    def degree(self, v: int) -> int:
        self._check_vertex(v)
        return int(self.degrees[v])

    def codegree(self, u: int, v: int) -> int:
        self._check_vertex(u)
        self._check_vertex(v)
        if u == v:
            raise SameVertex(f"codegree needs two distinct vertices, got {u} twice")
        if u > v:
            u, v = v, u
        if self._pairs is None and self.num_edges * self._r * self._r <= PAIR_INDEX_THRESHOLD:
            e = self._edges
            return int(np.count_nonzero((e == u).any(axis=1) & (e == v).any(axis=1)))
        keys, counts = self._pair_index()
        key = u * self._n + v
        i = np.searchsorted(keys, key)
        if i < len(keys) and keys[i] == key:
            return int(counts[i])
        return 0

    def _pair_index(self) -> tuple[np.ndarray, np.ndarray]:
        if self._pairs is None:
            r = self._r
            if r < 2 or self.num_edges == 0:
                self._pairs = (np.zeros(0, np.int64), np.zeros(0, np.int64))
            else:
                a, b = np.triu_indices(r, k=1)
                keys = (self._edges[:, a] * self._n + self._edges[:, b]).ravel()
                self._pairs = np.unique(keys, return_counts=True)
        return self._pairs

    @property
    def max_codegree(self) -> int:
        _, counts = self._pair_index()
        return int(counts.max()) if len(counts) else 0

    def stats(self) -> DegreeStats:
        d = self.degrees
        if self._n == 0:
            return DegreeStats(0, 0, 0)
        return DegreeStats(int(d.max()), int(d.min()), self.max_codegree)

    def incidence(self) -> tuple[np.ndarray, np.ndarray]:
        """CSR vertex -> incident edge ids, as ``(indptr, edge_ids)``."""
        if self._incidence is None:
            flat = self._edges.ravel()
            order = np.argsort(flat, kind="stable")
            edge_ids = (order // self._r).astype(np.int64)
            indptr = np.zeros(self._n + 1, dtype=np.int64)
            np.cumsum(self.degrees, out=indptr[1:])
            self._incidence = (indptr, edge_ids)
        return self._incidence

    def _check_vertex(self, v: int) -> None:
        if not 0 <= v < self._n:
            raise VertexOutOfRange(f"vertex {v} not in [0, {self._n})")

    def check_edge_ids(self, edge_ids: Iterable[int]) -> np.ndarray:
        ids = np.fromiter((int(i) for i in edge_ids), dtype=np.int64)
        if ids.size and (ids.min() < 0 or ids.max() >= self.num_edges):
            bad = ids[(ids < 0) | (ids >= self.num_edges)][0]
            raise UnknownEdgeId(f"edge id {bad} not in [0, {self.num_edges})")
        return ids


def build(r: int, num_vertices: int, edges: Sequence[Sequence[int]]) -> Hypergraph:
    """Validate and canonicalize an r-uniform hypergraph.

    Each edge is sorted; edges keep their input order.  Raises
    :class:`NonUniformEdge` for edges without exactly ``r`` distinct vertices,
    :class:`VertexOutOfRange` and :class:`DuplicateEdge` as named.
    """
    if r < 1:
        raise NonUniformEdge(f"uniformity must be >= 1, got {r}")
    if num_vertices < 0:
        raise VertexOutOfRange("num_vertices must be non-negative")
    rows = []
    for idx, e in enumerate(edges):
        row = [int(x) for x in e]
        if len(row) != r:
            raise NonUniformEdge(f"edge {idx} has {len(row)} vertices, expected {r}")
        rows.append(row)
    arr = np.array(rows, dtype=np.int64).reshape(-1, r)
    arr.sort(axis=1)
    if arr.size:
        if arr.min() < 0 or arr.max() >= num_vertices:
            bad = int(np.argmax((arr < 0).any(axis=1) | (arr >= num_vertices).any(axis=1)))
            raise VertexOutOfRange(f"edge {bad} has a vertex outside [0, {num_vertices})")
        if r > 1:
            rep = (np.diff(arr, axis=1) == 0).any(axis=1)
            if rep.any():
                raise NonUniformEdge(f"edge {int(np.argmax(rep))} repeats a vertex")
        order = np.lexsort(arr.T[::-1])
        srt = arr[order]
        same = (srt[1:] == srt[:-1]).all(axis=1)
        if same.any():
            k = int(np.argmax(same))
            first, second = sorted((int(order[k]), int(order[k + 1])))
            raise DuplicateEdge(f"edges {first} and {second} are equal")
    return Hypergraph(r, num_vertices, arr)


def degree(H: Hypergraph, v: int) -> int:
    return H.degree(v)


def codegree(H: Hypergraph, u: int, v: int) -> int:
    return H.codegree(u, v)


def stats(H: Hypergraph) -> DegreeStats:
    return H.stats()


def is_matching(H: Hypergraph, edge_ids: Iterable[int]) -> bool:
    """True iff the given edges are pairwise vertex-disjoint."""
    ids = H.check_edge_ids(edge_ids)
    ids = np.unique(ids)
    verts = H.edge_array[ids].ravel()
    return np.unique(verts).size == verts.size


def induced(H: Hypergraph, vertex_subset: Iterable[int]) -> tuple[Hypergraph, dict[int, int]]:
    """Edges lying entirely inside ``vertex_subset``.

    Vertex labels are kept (the result has the same ``num_vertices``), so
    the returned dict only maps old edge ids to new ones.
    """
    mask = np.zeros(H.num_vertices, dtype=bool)
    sub = np.fromiter((int(v) for v in vertex_subset), dtype=np.int64)
    if sub.size and (sub.min() < 0 or sub.max() >= H.num_vertices):
        raise VertexOutOfRange("vertex subset leaves [0, num_vertices)")
    mask[sub] = True
    keep = np.flatnonzero(mask[H.edge_array].all(axis=1)) if H.num_edges else np.zeros(0, np.int64)
    return edge_subgraph(H, keep)


def edge_subgraph(H: Hypergraph, edge_ids: Sequence[int]) -> tuple[Hypergraph, dict[int, int]]:
    ids = np.asarray(edge_ids, dtype=np.int64)
    return (
        Hypergraph(H.r, H.num_vertices, H.edge_array[ids]),
        {int(old): new for new, old in enumerate(ids)},
    )


def regularize(H: Hypergraph, target_degree: int, max_vertices: int = 5_000_000) -> Hypergraph:
    """Embed ``H`` into a ``target_degree``-regular hypergraph.

    Each round takes ``r`` disjoint copies of the current hypergraph (copy
    ``c`` of vertex ``x`` is ``c * n + x``) and adds, for every vertex of
    degree below the target, the edge formed by its ``r`` copies, visiting
    deficient vertices in ascending order.  Every round raises the minimum
    degree by one; at least one round is always performed.  New edges only
    create pairs of codegree one, so the maximum codegree is unchanged
    whenever ``H`` has an edge.
    """
    st = H.stats()
    if target_degree < st.max_degree:
        raise ValueError(f"target degree {target_degree} below max degree {st.max_degree}")
    r = H.r
    rounds = max(1, target_degree - st.min_degree)
    if H.num_vertices * r**rounds > max_vertices:
        raise TooLarge(f"regularization needs {H.num_vertices} * {r}^{rounds} vertices")
    edges = H.edge_array
    n = H.num_vertices
    deg = H.degrees.copy()
    for _ in range(rounds):
        deficient = np.flatnonzero(deg < target_degree)
        parts = [edges + c * n for c in range(r)]
        if deficient.size:
            parts.append(np.stack([deficient + c * n for c in range(r)], axis=1))
        edges = np.concatenate(parts, axis=0)
        deg = np.tile(deg, r)
        for c in range(r):
            deg[deficient + c * n] += 1
        n *= r
    return Hypergraph(r, n, edges)


# -- HGR text format ----------------------------------------------------


def to_hgr(H: Hypergraph) -> str:
    lines = [f"{H.r} {H.num_vertices} {H.num_edges}"]
    lines.extend(" ".join(str(int(x)) for x in row) for row in H.edge_array)
    return "\n".join(lines) + "\n"


def from_hgr(text: str) -> Hypergraph:
    rows = [ln.split() for ln in io.StringIO(text) if ln.strip() and not ln.lstrip().startswith("#")]
    if not rows:
        raise FormatError("empty HGR input")
    try:
        r, n, m = (int(x) for x in rows[0])
        edges = [[int(x) for x in row] for row in rows[1:]]
    except ValueError as exc:
        raise FormatError(f"bad HGR token: {exc}") from None
    if len(edges) != m:
        raise FormatError(f"header announces {m} edges, found {len(edges)}")
    return build(r, n, edges)


def save_hgr(H: Hypergraph, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(to_hgr(H))


def load_hgr(path: str | os.PathLike) -> Hypergraph:
    with open(path, encoding="ascii") as fh:
        return from_hgr(fh.read())
