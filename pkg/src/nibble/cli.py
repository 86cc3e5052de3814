"""Command-line interface: ``nibble <subcommand> ...``.

Exit codes: 0 success, 1 a verified claim failed, 2 hypothesis check failed
under ``--strict``, 3 a random step exhausted its retries, 4 I/O or parse
error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import applications as apps
from .errors import FormatError, RetriesExhausted
from .generators import random_hypergraph
from .hypergraph import load_hgr, to_hgr
from .matcher import derive_params, run_pipeline
from .oracle import concentration_lab, load_config, shipped_configs
from .verify import fingerprint, verify_report
from .weights import check_hypotheses, load_weights, uniform_weight

DEFAULT_SEED = 0

EXIT_OK, EXIT_VERIFY, EXIT_STRICT, EXIT_RETRIES, EXIT_IO = 0, 1, 2, 3, 4


class _Strict(Exception):
    pass


def _dump(obj, path: str | None) -> None:
    text = json.dumps(obj, sort_keys=True, indent=1) + "\n"
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _threads(args) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    env = os.environ.get("NIBBLE_THREADS")
    return max(1, int(env)) if env else 1


def _pipeline_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("pipeline")
    g.add_argument("--delta", type=float, default=0.5, help="codegree exponent in (0, 1)")
    g.add_argument("--Delta", type=float, default=None, help="degree parameter (default: max degree)")
    g.add_argument("--L", type=int, default=None, help="largest tuple arity")
    g.add_argument("--p", type=int, default=None, help="number of vertex parts")
    g.add_argument("--q", type=int, default=None, help="number of edge slices per part")
    g.add_argument("--slack", type=float, default=None, help="tolerance of the random-step checks")
    g.add_argument("--retries", type=int, default=None, help="resamples allowed per random step")
    g.add_argument("--effort", type=int, default=None, help="tabu iterations per slice decomposition")
    g.add_argument("--seed", type=int, default=DEFAULT_SEED)
    g.add_argument("--threads", type=int, default=None, help="worker cap (env NIBBLE_THREADS)")
    g.add_argument("--strict", action="store_true", help="fail with exit 2 if a hypothesis fails")
    g.add_argument("-o", "--output", default=None, help="report path (default stdout)")


def _overrides(args) -> dict:
    out = {"p": args.p, "q": args.q, "slack": args.slack, "effort": args.effort, "seed": args.seed}
    if args.retries is not None:
        out["retries_vertex"] = out["retries_edge"] = args.retries
    return out


def _params(args, H, L_default: int, Delta=None):
    L = args.L if args.L is not None else L_default
    Delta = args.Delta if args.Delta is not None else Delta
    return derive_params(H, args.delta, L, Delta=Delta, **_overrides(args))


def _strict_gate(args, H, params, weights) -> None:
    if args.strict:
        rep = check_hypotheses(H, params.Delta, params.delta, params.L, weights)
        if not rep.passed:
            first = rep.failures()[0]
            raise _Strict(f"hypothesis {first.name} fails: {first.actual} {first.relation} {first.required}")


# -- subcommands ---------------------------------------------------------------


def cmd_gen(args) -> int:
    vals = args.values
    if args.kind == "random-r-graph":
        r, n, m = (int(x) for x in vals[:3])
        H = random_hypergraph(r, n, m, args.codegree, args.seed, args.near_regular)
    elif args.kind == "steiner":
        n, k, t = (int(x) for x in vals[:3])
        H = apps.steiner_hypergraph(n, k, t).hypergraph
    else:
        n = int(vals[0])
        kind = vals[1] if len(vals) > 1 else "cyclic"
        inst = apps.latin_instance(n, kind, args.seed)
        H = inst.hypergraph
        if args.output not in (None, "-"):
            side = {"n": n, "kind": kind, "seed": args.seed if kind == "random" else None,
                    "edges": [list(t) for t in inst.triples]}
            _dump(side, args.output + ".colours.json")
    text = to_hgr(H)
    if args.output in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(args.output, "w", encoding="ascii") as fh:
            fh.write(text)
    return EXIT_OK


def _weights_for(args, H):
    if args.weights:
        return load_weights(args.weights, H)
    return [uniform_weight(H)]


def cmd_check(args) -> int:
    H = load_hgr(args.instance)
    weights = _weights_for(args, H)
    Delta = args.Delta if args.Delta is not None else max(1, H.stats().max_degree)
    L = args.L if args.L is not None else max(w.ell for w in weights)
    rep = check_hypotheses(H, Delta, args.delta, L, weights)
    _dump(rep.to_json(), args.output)
    if args.strict and not rep.passed:
        first = rep.failures()[0]
        print(f"hypothesis {first.name} fails", file=sys.stderr)
        return EXIT_STRICT
    return EXIT_OK


def cmd_match(args) -> int:
    H = load_hgr(args.instance)
    weights = _weights_for(args, H)
    params = _params(args, H, max(w.ell for w in weights))
    _strict_gate(args, H, params, weights)
    report = run_pipeline(H, weights, params, _threads(args))
    report.instance = fingerprint(H)
    _dump(report.to_json(), args.output)
    return EXIT_OK


def _load_patterns(path: str | None) -> list[apps.Pattern]:
    if not path:
        return []
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    out = []
    for i, item in enumerate(data):
        if isinstance(item, dict):
            out.append(apps.Pattern.of(item["edges"], item.get("name")))
        else:
            out.append(apps.Pattern.of(item, f"pattern{i}"))
    return out


def cmd_steiner(args) -> int:
    patterns = _load_patterns(args.patterns)
    inst = apps.steiner_hypergraph(args.n, args.k, args.t)
    H = inst.hypergraph
    L = 2 if args.pair_samples else 1
    params = _params(args, H, L, Delta=inst.Delta)
    weights = [uniform_weight(H)]
    if args.pair_samples:
        weights.append(apps.sampled_pair_weight(H, args.pair_samples, params.seed))
    _strict_gate(args, H, params, weights)
    report = apps.steiner_run(args.n, args.k, args.t, patterns, params, args.pair_samples, _threads(args))
    _dump(report.to_json(), args.output)
    return EXIT_OK


def cmd_rainbow(args) -> int:
    inst = apps.latin_instance(args.n, args.kind, args.seed)
    H = inst.hypergraph
    params = _params(args, H, 1)
    _strict_gate(args, H, params, [uniform_weight(H)])
    report = apps.rainbow_run(inst, params, _threads(args))
    _dump(report.to_json(), args.output)
    return EXIT_OK


def cmd_lab(args) -> int:
    if args.shipped:
        configs = [c for c in shipped_configs() if args.config in (None, c.name)]
        if not configs:
            raise FormatError(f"no shipped lab config named {args.config!r}")
    else:
        if not args.config:
            raise FormatError("lab needs a config path or --shipped")
        configs = [load_config(args.config)]
    workers = _threads(args)
    results = [concentration_lab(c, workers).to_json() for c in configs]
    _dump(results if len(results) > 1 else results[0], args.output)
    return EXIT_OK


def cmd_verify(args) -> int:
    with open(args.report, encoding="utf-8") as fh:
        report = json.load(fh)
    H = load_hgr(args.instance) if args.instance else None
    claims = verify_report(report, H)
    for c in claims:
        if not c.passed:
            print(f"FAIL {c.name}: {c.detail}")
            return EXIT_VERIFY
    print("ok: " + ", ".join(c.name for c in claims))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nibble", description="Pseudorandom hypergraph matchings.")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="write a generated instance as HGR")
    g.add_argument("kind", choices=["random-r-graph", "steiner", "latin"])
    g.add_argument("values", nargs="+", help="r n m | n k t | n [cyclic|random]")
    g.add_argument("--codegree", type=int, default=None, help="codegree cap for random-r-graph")
    g.add_argument("--near-regular", action="store_true")
    g.add_argument("--seed", type=int, default=DEFAULT_SEED)
    g.add_argument("-o", "--output", default=None)
    g.set_defaults(func=cmd_gen)

    c = sub.add_parser("check", help="evaluate the matching hypotheses")
    c.add_argument("instance")
    c.add_argument("--weights", default=None, help="JSON weight record(s)")
    c.add_argument("--delta", type=float, default=0.5)
    c.add_argument("--Delta", type=float, default=None)
    c.add_argument("--L", type=int, default=None)
    c.add_argument("--strict", action="store_true")
    c.add_argument("-o", "--output", default=None)
    c.set_defaults(func=cmd_check)

    m = sub.add_parser("match", help="run the pipeline on an HGR instance")
    m.add_argument("instance")
    m.add_argument("--weights", default=None, help="JSON weight record(s); default all-ones")
    _pipeline_flags(m)
    m.set_defaults(func=cmd_match)

    s = sub.add_parser("steiner", help="approximate Steiner system with pattern counts")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--t", type=int, required=True)
    s.add_argument("--patterns", default=None, help="JSON list of edge lists")
    s.add_argument("--pair-samples", type=int, default=0, help="size of the sampled pair weight")
    _pipeline_flags(s)
    s.set_defaults(func=cmd_steiner)

    r = sub.add_parser("rainbow", help="rainbow matching in a Latin square")
    r.add_argument("--n", type=int, required=True)
    r.add_argument("--kind", choices=["cyclic", "random"], default="cyclic")
    _pipeline_flags(r)
    r.set_defaults(func=cmd_rainbow)

    lab = sub.add_parser("lab", help="concentration lab")
    lab.add_argument("config", nargs="?", default=None, help="LabConfig JSON path (or name with --shipped)")
    lab.add_argument("--shipped", action="store_true", help="use the bundled configs")
    lab.add_argument("--threads", type=int, default=None)
    lab.add_argument("-o", "--output", default=None)
    lab.set_defaults(func=cmd_lab)

    v = sub.add_parser("verify", help="re-check a report against its instance")
    v.add_argument("report")
    v.add_argument("instance", nargs="?", default=None)
    v.set_defaults(func=cmd_verify)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _Strict as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_STRICT
    except RetriesExhausted as exc:
        print(str(exc), file=sys.stderr)
        failing = [c["name"] for c in exc.transcript if not c["passed"]]
        print("failing checks: " + ", ".join(failing[:10]), file=sys.stderr)
        return EXIT_RETRIES
    except (OSError, json.JSONDecodeError, KeyError, ValueError) as exc:
        # bad files, malformed records and infeasible parameters are all input errors
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO

if __name__ == "__main__":
    sys.exit(main())
