"""Sparse weight functions on tuples of edges.

An ell-tuple weight function assigns a non-negative weight to sorted
ell-tuples of edge ids.  Only positive entries are stored.  Weights are kept
either exactly (``int`` / :class:`fractions.Fraction`) or as doubles; exact
mode is chosen automatically when every input weight is an int or Fraction.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import BadTuple, HostMismatch, UnknownEdgeId, WeightError
from .hypergraph import Hypergraph


def _is_exact(w) -> bool:
    return isinstance(w, Rational) and not isinstance(w, bool)


class TupleWeightFunction:
    """Immutable sparse ``ell``-tuple weight function on ``host_edge_count`` ids."""

    __slots__ = ("ell", "host_edge_count", "tuples", "_w", "_wf", "exact", "name", "origin")

    def __init__(
        self,
        ell: int,
        entries: Mapping[Sequence[int], float] | Iterable[tuple[Sequence[int], float]],
        host_edge_count: int,
        *,
        exact: bool | None = None,
        name: str | None = None,
        origin: dict | None = None,
    ):
        if ell < 1:
            raise WeightError(f"tuple arity must be >= 1, got {ell}")
        items = entries.items() if isinstance(entries, Mapping) else entries
        rows, ws = [], []
        for tup, w in items:
            tup = tuple(int(x) for x in (tup if isinstance(tup, (tuple, list)) else (tup,)))
            if len(tup) != ell or any(a >= b for a, b in zip(tup, tup[1:])):
                raise BadTuple(f"{tup} is not a strictly increasing {ell}-tuple")
            if tup[0] < 0 or tup[-1] >= host_edge_count:
                raise UnknownEdgeId(f"{tup} leaves [0, {host_edge_count})")
            if w < 0 or (isinstance(w, float) and math.isnan(w)):
                raise WeightError(f"negative weight {w} on {tup}")
            if w == 0:
                continue
            rows.append(tup)
            ws.append(w)
        if exact is None:
            exact = all(_is_exact(w) for w in ws)
        if exact:
            ws = [w if _is_exact(w) else Fraction(w) for w in ws]
        else:
            ws = [float(w) for w in ws]
        arr = np.array(rows, dtype=np.int64).reshape(-1, ell)
        order = np.lexsort(arr.T[::-1]) if len(arr) else np.zeros(0, np.int64)
        arr = arr[order]
        ws = [ws[i] for i in order]
        if len(arr) > 1:
            dup = (arr[1:] == arr[:-1]).all(axis=1)
            if dup.any():
                raise WeightError(f"duplicate tuple {tuple(arr[int(np.argmax(dup))])}")
        arr.setflags(write=False)
        self.ell = int(ell)
        self.host_edge_count = int(host_edge_count)
        self.tuples = arr
        self._w = tuple(ws)
        self._wf = np.array([float(w) for w in ws], dtype=np.float64)
        self.exact = bool(exact)
        self.name = name
        self.origin = origin

    def __len__(self) -> int:
        return len(self._w)

    def __repr__(self) -> str:
        mode = "exact" if self.exact else "double"
        return f"TupleWeightFunction(ell={self.ell}, support={len(self)}, {mode}, name={self.name!r})"

    @property
    def weights(self) -> tuple:
        return self._w

    def items(self):
        for row, w in zip(self.tuples, self._w):
            yield tuple(int(x) for x in row), w

    def _sum(self, idx) -> float | Fraction | int:
        if self.exact:
            return sum((self._w[i] for i in idx), 0)
        return math.fsum(self._wf[idx])

    def grand_total(self):
        return self._sum(range(len(self._w)))

    def total(self, edge_ids: Iterable[int]):
        """Sum of the weights of stored tuples lying inside ``edge_ids``."""
        ids = np.fromiter((int(i) for i in edge_ids), dtype=np.int64)
        if ids.size and (ids.min() < 0 or ids.max() >= self.host_edge_count):
            raise UnknownEdgeId(f"edge id outside [0, {self.host_edge_count})")
        if not len(self._w):
            return 0 if self.exact else 0.0
        inside = np.zeros(self.host_edge_count, dtype=bool)
        inside[ids] = True
        mask = inside[self.tuples].all(axis=1)
        return self._sum(np.flatnonzero(mask))

    def shadow(self, T: Sequence[int]):
        """Total weight of stored tuples containing the sorted tuple ``T``."""
        T = tuple(int(x) for x in T)
        if not 1 <= len(T) <= self.ell or any(a >= b for a, b in zip(T, T[1:])):
            raise BadTuple(f"{T} is not a strictly increasing tuple of length 1..{self.ell}")
        mask = np.ones(len(self._w), dtype=bool)
        for t in T:
            mask &= (self.tuples == t).any(axis=1)
        return self._sum(np.flatnonzero(mask))

    def shadows(self, k: int) -> dict[tuple[int, ...], float]:
        """Every non-zero k-tuple shadow, keyed by the k-tuple."""
        if not 1 <= k <= self.ell:
            raise BadTuple(f"k must lie in 1..{self.ell}")
        out: dict = {}
        for row, w in self.items():
            for sub in itertools.combinations(row, k):
                out[sub] = out.get(sub, 0) + w
        return out

    def norm(self, k: int):
        """Maximum shadow over all k-tuples (zero for an empty support)."""
        if not 1 <= k <= self.ell:
            raise BadTuple(f"k must lie in 1..{self.ell}")
        if not len(self._w):
            return 0 if self.exact else 0.0
        if k == self.ell:
            return max(self._w)
        if not self.exact:
            # group sums by sub-tuple key; support closure suffices
            combos = list(itertools.combinations(range(self.ell), k))
            keys = np.concatenate([self.tuples[:, list(c)] for c in combos], axis=0)
            wts = np.tile(self._wf, len(combos))
            _, inv = np.unique(keys, axis=0, return_inverse=True)
            return float(np.bincount(inv.ravel(), weights=wts).max())
        return max(self.shadows(k).values())

    def is_clean(self, H: Hypergraph) -> bool:
        if self.host_edge_count != H.num_edges:
            raise HostMismatch(
                f"weight function indexes {self.host_edge_count} edges, hypergraph has {H.num_edges}"
            )
        if self.ell == 1 or not len(self._w):
            return True
        verts = np.sort(H.edge_array[self.tuples].reshape(len(self._w), -1), axis=1)
        return not bool((verts[:, 1:] == verts[:, :-1]).any())

    # -- serialization --------------------------------------------------

    def to_json(self, compact: bool = False) -> dict:
        out: dict = {"ell": self.ell}
        if self.name is not None:
            out["name"] = self.name
        out["host_edge_count"] = self.host_edge_count
        if compact and self.origin is not None:
            out["origin"] = self.origin
            return out
        out["entries"] = [
            {"tuple": list(t), "w": _json_number(w)} for t, w in self.items()
        ]
        return out


def _json_number(w):
    if isinstance(w, Fraction):
        return w.numerator if w.denominator == 1 else float(w)
    return w


def total(omega: TupleWeightFunction, edge_ids: Iterable[int]):
    return omega.total(edge_ids)


def shadow(omega: TupleWeightFunction, T: Sequence[int]):
    return omega.shadow(T)


def norm_k(omega: TupleWeightFunction, k: int):
    return omega.norm(k)


def is_clean(omega: TupleWeightFunction, H: Hypergraph) -> bool:
    return omega.is_clean(H)


def uniform_weight(H: Hypergraph, value=1, name: str = "ones") -> TupleWeightFunction:
    """The edge weight function that is ``value`` on every edge."""
    return TupleWeightFunction(
        1,
        (((e,), value) for e in range(H.num_edges)),
        H.num_edges,
        name=name,
        origin={"kind": "uniform", "value": _json_number(value)},
    )


def vertex_cover_weight(H: Hypergraph, U: Iterable[int], name: str | None = None) -> TupleWeightFunction:
    """Edge weight ``|e & U|``; on a matching it counts the covered vertices of U."""
    U = sorted({int(u) for u in U})
    inU = np.zeros(H.num_vertices, dtype=bool)
    if U:
        if U[0] < 0 or U[-1] >= H.num_vertices:
            raise WeightError("vertex set leaves the hypergraph")
        inU[U] = True
    counts = inU[H.edge_array].sum(axis=1) if H.num_edges else np.zeros(0, np.int64)
    return TupleWeightFunction(
        1,
        (((int(e),), int(counts[e])) for e in np.flatnonzero(counts)),
        H.num_edges,
        name=name,
        origin={"kind": "vertex_cover", "U": U},
    )


def weight_from_json(data: dict | str, H: Hypergraph | None = None) -> TupleWeightFunction:
    """Load the JSON weight format; ``origin``-only records need the host ``H``."""
    if isinstance(data, str):
        data = json.loads(data)
    ell = int(data["ell"])
    name = data.get("name")
    host = data.get("host_edge_count", H.num_edges if H is not None else None)
    if H is not None and host is not None and host != H.num_edges:
        raise HostMismatch(f"weights index {host} edges, hypergraph has {H.num_edges}")
    if "entries" not in data:
        origin = data.get("origin")
        if origin is None or H is None:
            raise WeightError("weight record needs 'entries' (or 'origin' plus a host hypergraph)")
        if origin["kind"] == "uniform":
            return uniform_weight(H, origin.get("value", 1), name=name)
        if origin["kind"] == "vertex_cover":
            return vertex_cover_weight(H, origin["U"], name=name)
        raise WeightError(f"unknown weight origin {origin['kind']!r}")
    entries = [(tuple(e["tuple"]), e["w"]) for e in data["entries"]]
    if host is None:
        host = 1 + max((max(t) for t, _ in entries), default=-1)
    return TupleWeightFunction(ell, entries, host, name=name)


def load_weights(path, H: Hypergraph | None = None) -> list[TupleWeightFunction]:
    """Read a JSON file holding one weight record or a list of them."""
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    records = data if isinstance(data, list) else [data]
    return [weight_from_json(rec, H) for rec in records]


# -- hypothesis checking ----------------------------------------------------


@dataclass(frozen=True)
class ConditionEntry:
    name: str
    relation: str  # "<=" or ">="
    required: float
    actual: float
    margin: float
    passed: bool

    @classmethod
    def make(cls, name: str, actual, relation: str, required) -> ConditionEntry:
        actual, required = float(actual), float(required)
        margin = required - actual if relation == "<=" else actual - required
        return cls(name, relation, required, actual, margin, margin >= 0)


@dataclass
class ConditionReport:
    Delta: float
    delta: float
    L: int
    epsilon: float
    entries: list[ConditionEntry] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    def failures(self) -> list[ConditionEntry]:
        return [e for e in self.entries if not e.passed]

    def weight_ok(self, name: str) -> bool:
        """Whether every condition recorded for weight function ``name`` holds."""
        prefix = f"{name}:"
        return all(e.passed for e in self.entries if e.name.startswith(prefix))

    def to_json(self) -> dict:
        return {
            "Delta": self.Delta,
            "delta": self.delta,
            "L": self.L,
            "epsilon": self.epsilon,
            "passed": self.passed,
            "entries": [asdict(e) for e in self.entries],
        }


def epsilon_for(delta: float, L: int, r: int) -> float:
    return delta / (50 * L * L * r * r)


def group_by_arity(weight_sets) -> dict[int, list[TupleWeightFunction]]:
    if isinstance(weight_sets, Mapping):
        return {int(k): list(v) for k, v in weight_sets.items()}
    grouped: dict[int, list[TupleWeightFunction]] = {}
    for w in weight_sets:
        grouped.setdefault(w.ell, []).append(w)
    return grouped


def weight_names(weight_sets) -> list[tuple[str, TupleWeightFunction]]:
    """Stable ``(name, omega)`` pairs; unnamed functions become ``w<ell>_<i>``."""
    out = []
    for ell, ws in sorted(group_by_arity(weight_sets).items()):
        for i, w in enumerate(ws):
            out.append((w.name if w.name is not None else f"w{ell}_{i}", w))
    return out


def check_hypotheses(
    H: Hypergraph,
    Delta: float,
    delta: float,
    L: int | None = None,
    weight_sets=(),
) -> ConditionReport:
    """Evaluate every hypothesis needed for a pseudorandom matching.

    Never raises on a failed hypothesis; each one becomes an entry of the
    returned report.
    """
    named = weight_names(weight_sets)
    if L is None:
        L = max((w.ell for _, w in named), default=1)
    st = H.stats()
    eps = epsilon_for(delta, L, H.r)
    rep = ConditionReport(float(Delta), float(delta), int(L), eps)
    rep.entries.append(ConditionEntry.make("max_degree", st.max_degree, "<=", Delta))
    rep.entries.append(ConditionEntry.make("max_codegree", st.max_codegree, "<=", Delta ** (1 - delta)))
    rep.entries.append(ConditionEntry.make("edge_count", H.num_edges, "<=", math.exp(Delta ** (eps * eps))))
    for name, w in named:
        if w.ell > L:
            rep.entries.append(ConditionEntry.make(f"{name}: arity", w.ell, "<=", L))
        whole = w.grand_total()
        for k in range(1, w.ell + 1):
            rep.entries.append(
                ConditionEntry.make(f"{name}: spread k={k}", whole, ">=", w.norm(k) * Delta ** (k + delta))
            )
        rep.entries.append(ConditionEntry.make(f"{name}: clean", int(w.is_clean(H)), ">=", 1))
    return rep
