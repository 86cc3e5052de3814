"""Randomized construction of a pseudorandom matching.

The pipeline has three steps:

1. colour the vertices uniformly with ``p`` part labels and keep the edges
   lying inside one part (the sub-hypergraphs ``H_i``);
2. give every kept edge one of ``q`` slice labels uniformly at random,
   splitting each ``H_i`` into slices ``H_{i,j}``;
3. decompose every slice into matchings, pad each part's list to exactly
   ``q * M`` matchings and pick one of them per part uniformly at random.

Steps 1 and 2 are resampled until their concentration checks pass.  The
asymptotic error terms of those checks are replaced by one ``slack``
parameter; see :class:`PipelineParams`.
"""

from __future__ import annotations

import itertools
import math
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Sequence

import numpy as np

from . import rng as rngmod
from .coloring import decompose
from .errors import BadDelta, BadParams, RetriesExhausted, UniformityTooSmall
from .hypergraph import Hypergraph, is_matching
from .weights import (
    ConditionReport,
    TupleWeightFunction,
    check_hypotheses,
    epsilon_for,
    weight_names,
)


@dataclass(frozen=True)
class PipelineParams:
    """Parameters of one pipeline run.

    ``slack`` stands in for every ``Delta^(-2 eps)`` error factor of the
    concentration checks.  ``retries`` counts resamples after the first
    attempt of Steps 1 and 2.  ``effort`` is the tabu-search budget of each
    slice decomposition (``None`` picks a size-based default).
    """

    Delta: float
    delta: float
    L: int
    epsilon: float
    p: int
    q: int
    slack: float = 0.25
    retries_vertex: int = 20
    retries_edge: int = 20
    effort: int | None = None
    seed: int = 0
    max_patterns: int = 10_000
    formula_p: float = 1.0
    formula_q: float = 1.0

    def __post_init__(self):
        if self.p < 1 or self.q < 1:
            raise BadParams("p and q must be >= 1")
        if self.slack <= 0:
            raise BadParams("slack must be positive")
        if self.Delta <= 0:
            raise BadParams("Delta must be positive")

    def to_json(self) -> dict:
        return asdict(self)


def derive_params(
    H: Hypergraph,
    delta: float = 0.5,
    L: int = 1,
    Delta: float | None = None,
    **overrides,
) -> PipelineParams:
    """Pipeline parameters from the asymptotic formulas, clamped to the instance.

    ``p = Delta^(20 L r eps)`` is clamped to ``[1, v(H) / 2r]`` and
    ``q = Delta^(1 - 20 (r - 1 + 1/4L) L r eps)`` to ``[1, Delta]``, both
    rounded.  Any field of :class:`PipelineParams` may be overridden.
    """
    if not 0 < delta < 1:
        raise BadDelta(f"delta must lie in (0, 1), got {delta}")
    if L < 1:
        raise BadParams(f"L must be >= 1, got {L}")
    r = H.r
    if r < 2:
        raise UniformityTooSmall("the construction needs r >= 2")
    if Delta is None:
        Delta = max(1, H.stats().max_degree)
    eps = epsilon_for(delta, L, r)
    raw_p = Delta ** (20 * L * r * eps)
    raw_q = Delta ** (1 - 20 * (r - 1 + 1 / (4 * L)) * L * r * eps)
    p = int(min(max(round(raw_p), 1), max(1, H.num_vertices // (2 * r))))
    q = int(min(max(round(raw_q), 1), max(1, math.floor(Delta))))
    values = dict(
        Delta=float(Delta), delta=float(delta), L=int(L), epsilon=eps, p=p, q=q,
        formula_p=float(raw_p), formula_q=float(raw_q),
    )
    unknown = set(overrides) - set(PipelineParams.__dataclass_fields__)
    if unknown:
        raise BadParams(f"unknown parameter(s): {sorted(unknown)}")
    values.update({k: v for k, v in overrides.items() if v is not None})
    return PipelineParams(**values)


# -- checks -------------------------------------------------------------------


@dataclass(frozen=True)
class Check:
    name: str
    actual: float
    low: float | None = None
    high: float | None = None

    @property
    def passed(self) -> bool:
        return (self.low is None or self.actual >= self.low) and (
            self.high is None or self.actual <= self.high
        )

    def to_json(self) -> dict:
        return {"name": self.name, "actual": self.actual, "low": self.low,
                "high": self.high, "passed": self.passed}


@dataclass
class Transcript:
    step: str
    attempts: int = 0
    checks: list[Check] = field(default_factory=list)
    info: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> int:
        return sum(not c.passed for c in self.checks)

    def to_json(self) -> dict:
        return {"step": self.step, "attempts": self.attempts, "passed": self.passed,
                "info": self.info, "checks": [c.to_json() for c in self.checks]}


def multiset_count(J: Sequence[int]) -> int:
    """Number of maps ``[ell] -> supp(J)`` whose multiset of values is ``J``."""
    out = math.factorial(len(J))
    for _, grp in itertools.groupby(sorted(J)):
        out //= math.factorial(len(list(grp)))
    return out


def _edge_parts(H: Hypergraph, vertex_part: np.ndarray) -> np.ndarray:
    if H.num_edges == 0:
        return np.zeros(0, np.int64)
    vp = vertex_part[H.edge_array]
    return np.where((vp == vp[:, :1]).all(axis=1), vp[:, 0], -1).astype(np.int64)


def _group_mass(keys: np.ndarray, omega: TupleWeightFunction, rows: np.ndarray) -> dict:
    if omega.exact:
        out: dict = defaultdict(int)
        w = omega.weights
        for key, i in zip(keys.tolist(), rows.tolist()):
            out[key] += w[i]
        return dict(out)
    if not len(rows):
        return {}
    uniq, inv = np.unique(keys, return_inverse=True)
    sums = np.bincount(inv.ravel(), weights=omega._wf[rows])
    return dict(zip(uniq.tolist(), sums.tolist()))


def _patterns(p: int, ell: int, limit: int, rng: np.random.Generator):
    count = math.comb(p + ell - 1, ell)
    if count <= limit:
        return list(itertools.combinations_with_replacement(range(p), ell)), count
    out = []
    for _ in range(limit):
        pick = np.sort(rng.choice(p + ell - 1, size=ell, replace=False))
        out.append(tuple(int(x) - i for i, x in enumerate(pick)))
    return out, count


def _encode(sorted_cols: np.ndarray, base: int) -> np.ndarray:
    key = np.zeros(sorted_cols.shape[0], dtype=np.int64)
    for t in range(sorted_cols.shape[1]):
        key = key * base + sorted_cols[:, t]
    return key


def vertex_checks(
    H: Hypergraph,
    vertex_part: np.ndarray,
    params: PipelineParams,
    named: list[tuple[str, TupleWeightFunction]],
    rng: np.random.Generator,
) -> Transcript:
    """Degree condition (a) and weight-distribution condition (b)."""
    p, r, n = params.p, H.r, H.num_vertices
    ep = _edge_parts(H, vertex_part)
    tr = Transcript("vertex_partition")
    deg_bound = (1 + params.slack) * params.Delta / p ** (r - 1)
    inside = np.flatnonzero(ep >= 0)
    if inside.size:
        keys = (ep[inside][:, None] * n + H.edge_array[inside]).ravel()
        part_deg = np.bincount(keys, minlength=p * n).reshape(p, n).max(axis=1)
    else:
        part_deg = np.zeros(p, np.int64)
    for i in range(p):
        tr.checks.append(Check(f"a: max degree of part {i}", float(part_deg[i]), None, deg_bound))
    sampled = 0
    for name, w in named:
        ell = w.ell
        whole = float(w.grand_total())
        parts = ep[w.tuples] if len(w) else np.zeros((0, ell), np.int64)
        rows = np.flatnonzero((parts >= 0).all(axis=1))
        keys = _encode(np.sort(parts[rows], axis=1), p)
        mass = _group_mass(keys, w, rows)
        pats, total_pats = _patterns(p, ell, params.max_patterns, rng)
        sampled = max(sampled, total_pats - len(pats))
        for J in pats:
            expect = whole * multiset_count(J) / p ** (r * ell)
            key = 0
            for x in J:
                key = key * p + x
            tr.checks.append(Check(
                f"b: {name} J={list(J)}", float(mass.get(key, 0)),
                (1 - params.slack) * expect, (1 + params.slack) * expect,
            ))
    tr.info["crossing_edges"] = int(H.num_edges - inside.size)
    tr.info["patterns_unchecked"] = int(sampled)
    return tr


def edge_checks(
    H: Hypergraph,
    edge_part: np.ndarray,
    edge_slice: np.ndarray,
    params: PipelineParams,
    named: list[tuple[str, TupleWeightFunction]],
) -> Transcript:
    """Slice degree (A), slice codegree (B) and pattern weight (C) conditions."""
    p, q, r, n = params.p, params.q, H.r, H.num_vertices
    tr = Transcript("edge_partition")
    inside = np.flatnonzero(edge_part >= 0)
    sk = edge_part[inside] * q + edge_slice[inside]
    edges = H.edge_array[inside]
    if inside.size:
        deg = np.bincount((sk[:, None] * n + edges).ravel(), minlength=p * q * n)
        slice_deg = deg.reshape(p * q, n).max(axis=1)
    else:
        slice_deg = np.zeros(p * q, np.int64)
    slice_codeg = np.zeros(p * q, np.int64)
    if inside.size and r >= 2:
        a, b = np.triu_indices(r, k=1)
        pair = ((sk[:, None] * n + edges[:, a]) * n + edges[:, b]).ravel()
        uniq, cnt = np.unique(pair, return_counts=True)
        np.maximum.at(slice_codeg, uniq // (n * n), cnt)
    deg_bound = (1 + 2 * params.slack) * params.Delta / (q * p ** (r - 1))
    codeg_bound = (1 + params.slack) * max(params.Delta ** params.epsilon, H.max_codegree / q)
    for s in range(p * q):
        i, j = divmod(s, q)
        tr.checks.append(Check(f"A: max degree of slice {i},{j}", float(slice_deg[s]), None, deg_bound))
    for s in range(p * q):
        i, j = divmod(s, q)
        tr.checks.append(Check(f"B: max codegree of slice {i},{j}", float(slice_codeg[s]), None, codeg_bound))
    carrying = 0
    for name, w in named:
        ell = w.ell
        whole = float(w.grand_total())
        if len(w):
            parts = edge_part[w.tuples]
            slices = edge_slice[w.tuples]
        else:
            parts = slices = np.zeros((0, ell), np.int64)
        ok = (parts >= 0).all(axis=1)
        order = np.argsort(parts, axis=1, kind="stable")
        sp = np.take_along_axis(parts, order, axis=1)
        ss = np.take_along_axis(slices, order, axis=1)
        if ell > 1:
            same_part = sp[:, 1:] == sp[:, :-1]
            ok &= ~(same_part & (ss[:, 1:] != ss[:, :-1])).any(axis=1)
        rows = np.flatnonzero(ok)
        mass = _group_mass(_encode(sp[rows] * q + ss[rows], p * q), w, rows)
        carrying += len(mass)
        bound = (1 + params.slack) * 2 * math.factorial(ell) * whole / (q**ell * p ** (r * ell))
        tr.checks.append(Check(f"C: {name} heaviest pattern", float(max(mass.values(), default=0)), None, bound))
    tr.info["patterns_with_mass"] = int(carrying)
    return tr


# -- pipeline state -------------------------------------------------------------


@dataclass
class PipelineState:
    params: PipelineParams
    vertex_part: np.ndarray
    edge_part: np.ndarray
    edge_slice: np.ndarray
    slice_edges: dict[tuple[int, int], np.ndarray]
    slice_classes: dict[tuple[int, int], int]
    part_matchings: list[list[tuple[int, ...]]]
    M: int
    transcripts: list[Transcript] = field(default_factory=list)

    def slice_of(self, i: int, j: int) -> np.ndarray:
        return self.slice_edges.get((i, j), np.zeros(0, np.int64))


def partition_vertices(
    H: Hypergraph,
    params: PipelineParams,
    weight_sets=(),
    rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, Transcript]:
    """Step 1: random vertex partition satisfying conditions (a) and (b).

    Raises :class:`RetriesExhausted` with the best transcript if no attempt
    passes within the retry budget.
    """
    named = weight_names(weight_sets)
    best = None
    for attempt in range(params.retries_vertex + 1):
        g = rng if rng is not None else rngmod.stream(params.seed, "vertex", attempt)
        vp = g.integers(params.p, size=H.num_vertices).astype(np.int64)
        tr = vertex_checks(H, vp, params, named, g)
        tr.attempts = attempt + 1
        if tr.passed:
            return vp, tr
        if best is None or tr.failures() < best[1].failures():
            best = (vp, tr)
    raise RetriesExhausted("vertex partition", params.retries_vertex + 1, best[1].to_json()["checks"])


def partition_edges(
    H: Hypergraph,
    edge_part: np.ndarray,
    params: PipelineParams,
    weight_sets=(),
    rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, Transcript]:
    """Step 2: random slice labels satisfying conditions (A), (B) and (C).

    Crossing edges (``edge_part == -1``) get slice ``-1``.
    """
    named = weight_names(weight_sets)
    best = None
    for attempt in range(params.retries_edge + 1):
        g = rng if rng is not None else rngmod.stream(params.seed, "edge", attempt)
        f = g.integers(params.q, size=H.num_edges).astype(np.int64)
        sl = np.where(edge_part >= 0, f, -1)
        tr = edge_checks(H, edge_part, sl, params, named)
        tr.attempts = attempt + 1
        if tr.passed:
            return sl, tr
        if best is None or tr.failures() < best[1].failures():
            best = (sl, tr)
    raise RetriesExhausted("edge partition", params.retries_edge + 1, best[1].to_json()["checks"])


def assemble_state(
    H: Hypergraph,
    vertex_part: np.ndarray,
    edge_slice: np.ndarray,
    params: PipelineParams,
    threads: int = 1,
    transcripts: list[Transcript] | None = None,
) -> PipelineState:
    """Decompose every slice into matchings and pad parts to ``q * M`` matchings.

    ``M`` is the largest class count achieved over all slices.
    """
    vertex_part = np.asarray(vertex_part, dtype=np.int64)
    edge_slice = np.asarray(edge_slice, dtype=np.int64)
    ep = _edge_parts(H, vertex_part)
    p, q = params.p, params.q
    slice_edges: dict[tuple[int, int], np.ndarray] = {}
    live = np.flatnonzero(ep >= 0)
    for e_ids, key in _group_ids(live, ep[live] * q + edge_slice[live]):
        slice_edges[divmod(int(key), q)] = e_ids

    def colour(item):
        (i, j), ids = item
        sub = Hypergraph(H.r, H.num_vertices, H.edge_array[ids])
        target = max(1, int(sub.degrees.max()))
        D = decompose(sub, target, params.effort, rngmod.derived_seed(params.seed, "colour", i, j))
        return (i, j), [tuple(int(ids[e]) for e in c) for c in D.classes]

    items = sorted(slice_edges.items())
    if threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = dict(pool.map(colour, items))
    else:
        results = dict(map(colour, items))
    M = max((len(c) for c in results.values()), default=1)
    part_matchings = []
    for i in range(p):
        lst: list[tuple[int, ...]] = []
        for j in range(q):
            cls = results.get((i, j), [])
            lst.extend(cls)
            lst.extend([()] * (M - len(cls)))
        part_matchings.append(lst)
    return PipelineState(
        params, vertex_part, ep, edge_slice, slice_edges,
        {k: len(v) for k, v in results.items()}, part_matchings, M, list(transcripts or []),
    )


def _group_ids(ids: np.ndarray, keys: np.ndarray):
    order = np.argsort(keys, kind="stable")
    ks = keys[order]
    cuts = np.flatnonzero(np.diff(ks)) + 1
    for chunk in np.split(order, cuts):
        if chunk.size:
            yield ids[chunk], keys[chunk[0]]


# -- selection and report --------------------------------------------------------


def sample_indices(state: PipelineState, rng: np.random.Generator) -> list[int]:
    return [int(x) for x in rng.integers(state.params.q * state.M, size=state.params.p)]


def matching_from_indices(state: PipelineState, indices: Sequence[int]) -> list[int]:
    chosen = itertools.chain.from_iterable(
        state.part_matchings[i][s] for i, s in enumerate(indices)
    )
    return sorted(chosen)


def sample_matching(state: PipelineState, rng: np.random.Generator) -> list[int]:
    """One draw of Step 3: the union of one uniformly chosen matching per part."""
    return matching_from_indices(state, sample_indices(state, rng))


@dataclass
class WeightOutcome:
    name: str
    ell: int
    total: float
    target: float
    achieved: float
    ratio: float | None
    passed: bool
    hypotheses_ok: bool
    spec: dict

    def to_json(self) -> dict:
        return asdict(self)


@dataclass
class MatchReport:
    matching: list[int]
    weights: list[WeightOutcome]
    params: PipelineParams
    M: int
    slice_classes: list[list[int]]
    discarded_fraction: float
    transcripts: list[Transcript]
    hypotheses: ConditionReport | None
    indices: list[int]
    instance: dict | None = None
    extra: dict = field(default_factory=dict)

    @property
    def size(self) -> int:
        return len(self.matching)

    def to_json(self) -> dict:
        out = {
            "matching": self.matching,
            "size": self.size,
            "weights": [w.to_json() for w in self.weights],
            "params": self.params.to_json(),
            "M": self.M,
            "slice_classes": self.slice_classes,
            "discarded_fraction": self.discarded_fraction,
            "transcripts": [t.to_json() for t in self.transcripts],
            "hypotheses": self.hypotheses.to_json() if self.hypotheses else None,
            "seeds": {"master": self.params.seed, "indices": self.indices},
        }
        if self.instance is not None:
            out["instance"] = self.instance
        out.update(self.extra)
        return out


def weight_outcome(name: str, w: TupleWeightFunction, matching, Delta: float, tol: float, ok: bool) -> WeightOutcome:
    whole = w.grand_total()
    target = float(whole) / Delta**w.ell
    achieved = w.total(matching)
    if target > 0:
        ratio = float(achieved) / target
        passed = abs(ratio - 1) <= tol
    else:
        ratio = 1.0 if achieved == 0 else None
        passed = achieved == 0
    as_num = lambda x: x if isinstance(x, int) else float(x)
    return WeightOutcome(name, w.ell, as_num(whole), target, as_num(achieved), ratio, passed, ok,
                         w.to_json(compact=True))


def select_matching(
    H: Hypergraph,
    state: PipelineState,
    weight_sets=(),
    rng: np.random.Generator | None = None,
    hypotheses: ConditionReport | None = None,
) -> MatchReport:
    """Step 3 plus the report: achieved weights are recomputed from the matching."""
    params = state.params
    g = rng if rng is not None else rngmod.stream(params.seed, "select")
    idx = sample_indices(state, g)
    matching = matching_from_indices(state, idx)
    named = weight_names(weight_sets)
    outcomes = [
        weight_outcome(name, w, matching, params.Delta, params.slack,
                       hypotheses.weight_ok(name) if hypotheses else True)
        for name, w in named
    ]
    m = H.num_edges
    return MatchReport(
        matching=matching,
        weights=outcomes,
        params=params,
        M=state.M,
        slice_classes=[[i, j, k] for (i, j), k in sorted(state.slice_classes.items())],
        discarded_fraction=float(np.count_nonzero(state.edge_part < 0)) / m if m else 0.0,
        transcripts=state.transcripts,
        hypotheses=hypotheses,
        indices=idx,
    )


def run_pipeline(
    H: Hypergraph,
    weight_sets: Sequence[TupleWeightFunction] = (),
    params: PipelineParams | None = None,
    threads: int = 1,
) -> MatchReport:
    """End-to-end run; deterministic for a fixed ``params.seed``."""
    if params is None:
        params = derive_params(H)
    hyp = check_hypotheses(H, params.Delta, params.delta, params.L, weight_sets)
    vp, t1 = partition_vertices(H, params, weight_sets)
    ep = _edge_parts(H, vp)
    sl, t2 = partition_edges(H, ep, params, weight_sets)
    state = assemble_state(H, vp, sl, params, threads, [t1, t2])
    report = select_matching(H, state, weight_sets, hypotheses=hyp)
    assert is_matching(H, report.matching)
    return report


def with_params(params: PipelineParams, **changes) -> PipelineParams:
    return replace(params, **changes)
