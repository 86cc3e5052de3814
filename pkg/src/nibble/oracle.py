"""Exhaustive ground truth for tiny instances and an empirical concentration lab.

The lab samples a uniform labelling ``f: V -> [q]`` and measures the weight
of the ell-sets whose labels, read in increasing vertex order, equal a fixed
pattern ``alpha``.  Labels are ``0 .. q-1``.  Tail frequencies are compared
with the analytic tail bound

    2^ell exp(-lam^2 / (12 ell^2 M (lam + mean))) + exp(-g / (24 ell^2)),

where ``M = q^-ell max_k ||w||_k q^k g^(k-1)``.  The bound is an upper bound
only; the lab never tests tightness.
"""

from __future__ import annotations

import itertools
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from importlib import resources
from typing import Sequence

import numpy as np

from . import rng as rngmod
from .errors import BadParams, BudgetExceeded, TooLarge
from .hypergraph import Hypergraph
from .weights import TupleWeightFunction

MAX_ENUM_EDGES = 20
MAX_BB_EDGES = 40
MAX_LABELINGS = 2_000_000
LAB_BUDGET = 5_000_000_000  # trials * support * ell
CHUNK_CELLS = 2_000_000


# -- matchings ------------------------------------------------------------------


def enumerate_matchings(H: Hypergraph, max_edges: int = MAX_ENUM_EDGES) -> list[tuple[int, ...]]:
    """All matchings of ``H`` (including the empty one), by include/exclude search."""
    m = H.num_edges
    if m > max_edges:
        raise TooLarge(f"{m} edges exceeds the enumeration cap {max_edges}")
    masks = [sum(1 << int(v) for v in row) for row in H.edge_array]
    out: list[tuple[int, ...]] = []

    def rec(i, used, chosen):
        if i == m:
            out.append(tuple(chosen))
            return
        rec(i + 1, used, chosen)
        if not masks[i] & used:
            chosen.append(i)
            rec(i + 1, used | masks[i], chosen)
            chosen.pop()

    rec(0, 0, [])
    out.sort(key=lambda s: (len(s), s))
    return out


def max_matching(H: Hypergraph, max_edges: int = MAX_BB_EDGES) -> tuple[int, tuple[int, ...]]:
    """Maximum matching size and a witness, by branch and bound."""
    m = H.num_edges
    if m > max_edges:
        raise TooLarge(f"{m} edges exceeds the branch-and-bound cap {max_edges}")
    r = H.r
    masks = [sum(1 << int(v) for v in row) for row in H.edge_array]
    best: list = [0, ()]

    def rec(i, used, chosen):
        if len(chosen) > best[0]:
            best[0], best[1] = len(chosen), tuple(chosen)
        if i == m:
            return
        free = H.num_vertices - bin(used).count("1")
        if len(chosen) + min(m - i, free // r) <= best[0]:
            return
        if not masks[i] & used:
            chosen.append(i)
            rec(i + 1, used | masks[i], chosen)
            chosen.pop()
        rec(i + 1, used, chosen)

    rec(0, 0, [])
    return best[0], best[1]


# -- exact colouring --------------------------------------------------------------


def chromatic_number(indptr: np.ndarray, indices: np.ndarray, node_limit: int = 50_000_000) -> tuple[int, list[int]]:
    """Exact chromatic number of a CSR graph by DSatur branch and bound.

    Returns ``(chi, colouring)``.  Raises :class:`BudgetExceeded` when the
    search visits more than ``node_limit`` nodes.
    """
    n = len(indptr) - 1
    if n == 0:
        return 0, []
    adj = [indices[indptr[v]:indptr[v + 1]].tolist() for v in range(n)]
    deg = [len(a) for a in adj]
    best_col: list[int] = []
    nodes = [0]

    def colourable(k):
        col = [-1] * n
        # forbid[v][c]: number of neighbours of v holding colour c
        forbid = [[0] * k for _ in range(n)]
        sat = [0] * n

        def assign(v, c, sign):
            for u in adj[v]:
                before = forbid[u][c]
                forbid[u][c] += sign
                if before == 0 and sign > 0:
                    sat[u] += 1
                elif forbid[u][c] == 0 and sign < 0:
                    sat[u] -= 1

        def rec(done, used):
            nodes[0] += 1
            if nodes[0] > node_limit:
                raise BudgetExceeded("chromatic number search exceeded its node budget")
            if done == n:
                return True
            v = max((u for u in range(n) if col[u] < 0), key=lambda u: (sat[u], deg[u], -u))
            for c in range(min(used + 1, k)):
                if forbid[v][c]:
                    continue
                col[v] = c
                assign(v, c, 1)
                if rec(done + 1, max(used, c + 1)):
                    return True
                assign(v, c, -1)
                col[v] = -1
            return False

        if rec(0, 0):
            best_col[:] = col
            return True
        return False

    # greedy clique as lower bound
    order = sorted(range(n), key=lambda v: -deg[v])
    clique: list[int] = []
    for v in order:
        if all(v in set(adj[u]) for u in clique):
            clique.append(v)
    k = max(1, len(clique))
    while not colourable(k):
        k += 1
    return k, list(best_col)


# -- concentration lab --------------------------------------------------------------


@dataclass(frozen=True)
class LabConfig:
    """One lab experiment on the ground set ``range(size)``.

    ``weights`` is a list of ``(sorted ell-tuple of vertices, weight)`` pairs.
    """

    size: int
    q: int
    ell: int
    alpha: tuple[int, ...]
    weights: tuple[tuple[tuple[int, ...], float], ...]
    g: float
    trials: int = 10_000
    seed: int = 0
    name: str = "lab"
    lambdas: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.trials < 1:
            raise BadParams("trials must be >= 1")
        if self.g <= 0:
            raise BadParams("g must be positive")
        if len(self.alpha) != self.ell or any(not 0 <= a < self.q for a in self.alpha):
            raise BadParams(f"alpha must be an {self.ell}-tuple of labels in [0, {self.q})")

    def omega(self) -> TupleWeightFunction:
        return TupleWeightFunction(self.ell, list(self.weights), self.size, name=self.name)

    @classmethod
    def from_json(cls, data: dict | str) -> LabConfig:
        if isinstance(data, str):
            data = json.loads(data)
        size, ell = int(data["size"]), int(data["ell"])
        spec = data["weights"]
        kind = spec.get("kind", "entries")
        if kind == "entries":
            ws = [(tuple(e["tuple"]), e["w"]) for e in spec["entries"]]
        elif kind == "all":
            ws = [(T, spec.get("value", 1)) for T in itertools.combinations(range(size), ell)]
        elif kind == "random":
            g = rngmod.stream(int(spec.get("seed", 0)), "lab-weights")
            pool = list(itertools.combinations(range(size), ell))
            pick = g.choice(len(pool), size=min(int(spec["count"]), len(pool)), replace=False)
            top = int(spec.get("max", 1))
            ws = [(pool[i], int(g.integers(1, top + 1))) for i in sorted(pick)]
        else:
            raise BadParams(f"unknown weight kind {kind!r}")
        g_val = data.get("g", "threshold")
        if g_val == "threshold":
            g_val = g_threshold(ell, size)
        lambdas = data.get("lambdas")
        return cls(
            size=size, q=int(data["q"]), ell=ell, alpha=tuple(int(a) for a in data["alpha"]),
            weights=tuple(ws), g=float(g_val), trials=int(data.get("trials", 10_000)),
            seed=int(data.get("seed", 0)), name=str(data.get("name", "lab")),
            lambdas=tuple(float(x) for x in lambdas) if lambdas else None,
        )

    def to_json(self) -> dict:
        return {
            "name": self.name, "size": self.size, "q": self.q, "ell": self.ell,
            "alpha": list(self.alpha), "g": self.g, "trials": self.trials, "seed": self.seed,
            "weights": {"kind": "entries", "entries": [{"tuple": list(t), "w": w} for t, w in self.weights]},
            **({"lambdas": list(self.lambdas)} if self.lambdas else {}),
        }


@dataclass
class LabResult:
    name: str
    trials: int
    empirical_mean: float
    empirical_std: float
    analytic_mean: float
    analytic_mean_exact: str
    M: float
    g: float
    g_threshold: float
    g_ok: bool
    additive_term: float
    lambdas: list[float]
    tails: list[float]
    bounds: list[float]
    tail_sigma: list[float]
    exhaustive_mean: str | None = None
    notes: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return asdict(self)


def g_threshold(ell: int, size: int) -> float:
    return 24 * ell**3 * (ell + 1 + math.log(max(size, 1)))


def lab_M(omega: TupleWeightFunction, q: int, g: float) -> float:
    ell = omega.ell
    return max(float(omega.norm(k)) * q**k * g ** (k - 1) for k in range(1, ell + 1)) / q**ell


def tail_bound(lam: float, ell: int, M: float, mean: float, g: float) -> float:
    if M <= 0:
        return math.exp(-g / (24 * ell * ell))
    main = 2**ell * math.exp(-lam * lam / (12 * ell * ell * M * (lam + mean)))
    return main + math.exp(-g / (24 * ell * ell))


def _lambda_for(target: float, ell: int, M: float, mean: float, g: float) -> float | None:
    """Smallest grid-worthy ``lam`` where the bound drops to ``target`` (bisection)."""
    if tail_bound(1e18, ell, M, mean, g) >= target:
        return None
    lo, hi = 0.0, 1.0
    while tail_bound(hi, ell, M, mean, g) > target:
        hi *= 2
    for _ in range(100):
        mid = (lo + hi) / 2
        if tail_bound(mid, ell, M, mean, g) > target:
            lo = mid
        else:
            hi = mid
    return hi


def exact_expectation(config: LabConfig, method: str = "closed") -> Fraction:
    """``E[w(E_alpha)]`` exactly, in closed form or by enumerating all labellings."""
    omega = config.omega()
    weights = [Fraction(w) for w in omega.weights]
    if method == "closed":
        return sum(weights, Fraction(0)) / config.q**config.ell
    if method != "enumerate":
        raise BadParams(f"unknown method {method!r}")
    states = config.q**config.size
    if states > MAX_LABELINGS:
        raise TooLarge(f"{states} labellings exceed the enumeration cap {MAX_LABELINGS}")
    support = omega.tuples
    alpha = np.array(config.alpha, dtype=np.int64)
    counts = np.zeros(len(support), dtype=np.int64)
    step = max(1, CHUNK_CELLS // max(config.size, 1))
    powers = config.q ** np.arange(config.size, dtype=np.int64)
    for lo in range(0, states, step):
        codes = np.arange(lo, min(states, lo + step), dtype=np.int64)
        labels = (codes[:, None] // powers[None, :]) % config.q
        if len(support):
            counts += (labels[:, support] == alpha).all(axis=2).sum(axis=0)
    return sum((w * int(c) for w, c in zip(weights, counts)), Fraction(0)) / states


def _chunk_values(config: LabConfig, support: np.ndarray, wf: np.ndarray, index: int, count: int) -> np.ndarray:
    g = rngmod.stream(config.seed, "lab", index)
    labels = g.integers(config.q, size=(count, config.size))
    if not len(support):
        return np.zeros(count)
    hits = (labels[:, support] == np.array(config.alpha)).all(axis=2)
    return hits.astype(np.float64) @ wf


def sample_values(config: LabConfig, workers: int = 1) -> np.ndarray:
    """``w(E_alpha)`` for every trial; chunk seeds depend only on the config."""
    omega = config.omega()
    cells = config.trials * max(len(omega), 1) * config.ell
    if cells > LAB_BUDGET:
        raise BudgetExceeded(f"{cells} label comparisons exceed the lab budget {LAB_BUDGET}")
    per = max(1, CHUNK_CELLS // max(len(omega) * config.ell, config.size, 1))
    jobs = [(i, min(per, config.trials - lo)) for i, lo in enumerate(range(0, config.trials, per))]

    def run(job):
        return _chunk_values(config, omega.tuples, omega._wf, *job)

    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, jobs))
    else:
        parts = [run(j) for j in jobs]
    return np.concatenate(parts)


def concentration_lab(config: LabConfig, workers: int = 1) -> LabResult:
    omega = config.omega()
    values = sample_values(config, workers)
    exact_mean = exact_expectation(config)
    mean = float(exact_mean)
    ell, g = config.ell, config.g
    M = lab_M(omega, config.q, g)
    if config.lambdas:
        lambdas = sorted(config.lambdas)
    else:
        std = float(values.std()) or 1.0
        grid = {round(c * std, 12) for c in (1, 2, 3, 4, 5, 6)}
        for target in (0.5, 0.1, 0.01, 0.001):
            lam = _lambda_for(target, ell, M, mean, g)
            if lam is not None:
                grid.add(lam)
        lambdas = sorted(grid)
    dev = np.abs(values - mean)
    tails = [float(np.mean(dev >= lam)) for lam in lambdas]
    bounds = [tail_bound(lam, ell, M, mean, g) for lam in lambdas]
    sig = [math.sqrt(t * (1 - t) / config.trials) for t in tails]
    thr = g_threshold(ell, config.size)
    notes = []
    if g < thr:
        notes.append("g below the threshold: the bound is not claimed to hold")
    additive = math.exp(-g / (24 * ell * ell))
    if additive >= 0.01:
        notes.append("additive term at least 0.01: the bound is vacuous in the checked range")
    exhaustive = None
    if config.q**config.size <= MAX_LABELINGS:
        exhaustive = str(exact_expectation(config, "enumerate"))
    return LabResult(
        name=config.name,
        trials=config.trials,
        empirical_mean=float(np.mean(values)),
        empirical_std=float(values.std(ddof=1)) if config.trials > 1 else 0.0,
        analytic_mean=mean,
        analytic_mean_exact=str(exact_mean),
        M=M,
        g=g,
        g_threshold=thr,
        g_ok=g >= thr,
        additive_term=additive,
        lambdas=[float(x) for x in lambdas],
        tails=tails,
        bounds=bounds,
        tail_sigma=sig,
        exhaustive_mean=exhaustive,
        notes=notes,
    )


def shipped_configs() -> list[LabConfig]:
    """The lab configurations bundled with the package, sorted by file name."""
    base = resources.files("nibble") / "labconfigs"
    out = []
    for entry in sorted(base.iterdir(), key=lambda p: p.name):
        if entry.name.endswith(".json"):
            out.append(LabConfig.from_json(entry.read_text(encoding="utf-8")))
    return out


def load_config(path: str | os.PathLike) -> LabConfig:
    with open(path, encoding="utf-8") as fh:
        return LabConfig.from_json(json.load(fh))


def naive_injections(F_edges: Sequence[Sequence[int]], G_edges: Sequence[Sequence[int]], n_G: int) -> int:
    """Count injections by trying every map ``V(F) -> [n_G]``."""
    fv = sorted({v for e in F_edges for v in e})
    gset = {tuple(sorted(e)) for e in G_edges}
    count = 0
    for img in itertools.permutations(range(n_G), len(fv)):
        f = dict(zip(fv, img))
        if all(tuple(sorted(f[v] for v in e)) in gset for e in F_edges):
            count += 1
    return count


def naive_matchings(H: Hypergraph) -> list[tuple[int, ...]]:
    """Every edge subset that is a matching, from the full ``2^m`` filter."""
    m = H.num_edges
    out = []
    for mask in range(1 << m):
        ids = [i for i in range(m) if mask >> i & 1]
        verts = H.edge_array[ids].ravel()
        if len(set(verts.tolist())) == verts.size:
            out.append(tuple(ids))
    out.sort(key=lambda s: (len(s), s))
    return out
