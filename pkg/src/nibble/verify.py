"""Independent re-validation of a match report against its instance."""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np

from .applications import (
    Pattern,
    count_injections,
    is_partial_steiner,
    is_rainbow_matching,
    latin_instance,
    steiner_hypergraph,
)
from .errors import FormatError
from .hypergraph import Hypergraph, to_hgr
from .matcher import weight_outcome
from .weights import weight_from_json


@dataclass(frozen=True)
class Claim:
    name: str
    passed: bool
    detail: str = ""


def _close(a, b, rel: float = 1e-9) -> bool:
    if a is None or b is None:
        return a is b
    return math.isclose(float(a), float(b), rel_tol=rel, abs_tol=1e-12)


def fingerprint(H: Hypergraph) -> dict:
    """Descriptor of an instance given as a file: shape plus a digest of its HGR text."""
    digest = hashlib.sha256(to_hgr(H).encode("ascii")).hexdigest()
    return {"kind": "hgr", "r": H.r, "n": H.num_vertices, "m": H.num_edges, "sha256": digest}


def instance_from_descriptor(desc: dict):
    kind = desc.get("kind")
    if kind == "steiner":
        return steiner_hypergraph(desc["n"], desc["k"], desc["t"])
    if kind == "rainbow" and "latin" in desc:
        return latin_instance(desc["n"], desc["latin"], desc.get("seed") or 0)
    raise FormatError(f"cannot rebuild an instance of kind {kind!r}")


def check_matching(report: dict, H: Hypergraph) -> Claim:
    ids = report.get("matching")
    if not isinstance(ids, list) or any(not isinstance(i, int) for i in ids):
        return Claim("matching-validity", False, "matching is not a list of edge ids")
    if any(i < 0 or i >= H.num_edges for i in ids):
        return Claim("matching-validity", False, "edge id outside the instance")
    if len(set(ids)) != len(ids):
        return Claim("matching-validity", False, "repeated edge id")
    verts = H.edge_array[np.asarray(ids, dtype=np.int64)].ravel() if ids else np.zeros(0)
    if np.unique(verts).size != verts.size:
        return Claim("matching-validity", False, "two edges share a vertex")
    if report.get("size", len(ids)) != len(ids):
        return Claim("matching-validity", False, "size field disagrees with the matching")
    return Claim("matching-validity", True)


def check_weights(report: dict, H: Hypergraph) -> Claim:
    params = report["params"]
    hyp = report.get("hypotheses")
    for entry in report.get("weights", []):
        w = weight_from_json(entry["spec"], H)
        ok = True
        if hyp is not None:
            prefix = f"{entry['name']}:"
            ok = all(e["passed"] for e in hyp["entries"] if e["name"].startswith(prefix))
        fresh = weight_outcome(entry["name"], w, report["matching"], params["Delta"], params["slack"], ok)
        for key in ("total", "target", "achieved", "ratio"):
            if not _close(getattr(fresh, key), entry[key]):
                return Claim("weight-recomputation", False, f"{entry['name']}: {key} is {entry[key]}, recomputed {getattr(fresh, key)}")
        if fresh.passed != entry["passed"] or fresh.ell != entry["ell"]:
            return Claim("weight-recomputation", False, f"{entry['name']}: pass flag disagrees")
    return Claim("weight-recomputation", True)


def check_transcripts(report: dict) -> Claim:
    for tr in report.get("transcripts", []):
        for c in tr["checks"]:
            ok = (c["low"] is None or c["actual"] >= c["low"]) and (c["high"] is None or c["actual"] <= c["high"])
            if ok != c["passed"]:
                return Claim("transcript-consistency", False, f"{tr['step']}: {c['name']} flag disagrees with its bound")
        if tr["passed"] != all(c["passed"] for c in tr["checks"]):
            return Claim("transcript-consistency", False, f"{tr['step']}: overall flag disagrees")
        if not tr["passed"]:
            return Claim("transcript-consistency", False, f"{tr['step']}: accepted with failing checks")
    hyp = report.get("hypotheses")
    if hyp is not None:
        for e in hyp["entries"]:
            margin = e["required"] - e["actual"] if e["relation"] == "<=" else e["actual"] - e["required"]
            if not _close(margin, e["margin"]) or (margin >= 0) != e["passed"]:
                return Claim("transcript-consistency", False, f"hypothesis {e['name']} inconsistent")
        if hyp["passed"] != all(e["passed"] for e in hyp["entries"]):
            return Claim("transcript-consistency", False, "hypothesis overall flag disagrees")
    return Claim("transcript-consistency", True)


def check_selection(report: dict) -> Claim:
    params = report["params"]
    idx = report.get("seeds", {}).get("indices", [])
    qM = params["q"] * report["M"]
    if len(idx) != params["p"] or any(not 0 <= s < qM for s in idx):
        return Claim("selection-indices", False, f"expected {params['p']} indices in [0, {qM})")
    return Claim("selection-indices", True)


def check_steiner(report: dict, inst) -> Claim:
    sec = report["steiner"]
    blocks = [list(inst.block(e)) for e in report["matching"]]
    if blocks != sec["blocks"]:
        return Claim("steiner-section", False, "blocks differ from the matched edges")
    if not is_partial_steiner(blocks, inst.t) or not sec["partial_steiner"]:
        return Claim("steiner-section", False, "not a partial Steiner system")
    for st in sec["patterns"]:
        F = Pattern.of(st["pattern"]["edges"])
        if count_injections(F, [tuple(b) for b in blocks]) != st["inj"]:
            return Claim("steiner-section", False, "pattern count differs")
        expect = float(inst.p_density ** F.num_edges) * inst.n ** F.num_vertices
        if not _close(st["ratio"], st["inj"] / expect):
            return Claim("steiner-section", False, "pattern ratio differs")
    return Claim("steiner-section", True)


def check_rainbow(report: dict, inst) -> Claim:
    sec = report["rainbow"]
    triples = [list(t) for t in inst.graph_matching(report["matching"])]
    if triples != sec["matching"] or sec["size"] != len(triples):
        return Claim("rainbow-section", False, "graph matching differs from the hypergraph matching")
    if not is_rainbow_matching([tuple(t) for t in triples]) or not sec["rainbow"]:
        return Claim("rainbow-section", False, "not a rainbow matching")
    return Claim("rainbow-section", True)


def verify_report(report: dict, H: Hypergraph | None = None) -> list[Claim]:
    """Every claim, in order; the first failing claim is the one to report."""
    inst = None
    if "instance" in report and report["instance"].get("kind") in ("steiner", "rainbow"):
        try:
            inst = instance_from_descriptor(report["instance"])
        except FormatError:
            inst = None
    if H is None:
        if inst is None:
            raise FormatError("report carries no rebuildable instance; pass the instance file")
        H = inst.hypergraph
    elif inst is not None and inst.hypergraph != H:
        return [Claim("instance-match", False, "instance file differs from the report's instance")]
    desc = report.get("instance")
    if desc is not None and desc.get("kind") == "hgr" and desc != fingerprint(H):
        return [Claim("instance-match", False, "instance file differs from the report's instance")]
    claims = [check_matching(report, H)]
    if not claims[0].passed:
        return claims
    claims += [check_weights(report, H), check_transcripts(report), check_selection(report)]
    if inst is not None and "steiner" in report:
        claims.append(check_steiner(report, inst))
    if inst is not None and "rainbow" in report:
        claims.append(check_rainbow(report, inst))
    return claims

