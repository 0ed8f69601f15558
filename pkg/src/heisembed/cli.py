"""Command-line front end.

Exit codes: 0 success, 1 verification failure, 2 usage or validation error,
3 resource limit, arithmetic overflow or exhausted attempts.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from heisembed import lattice
from heisembed.cayley import DEFAULT_BALL_CAP, bfs_ball
from heisembed.errors import (ArithmeticOverflow, AttemptsExhausted, HeisembedError, ResourceError)
from heisembed.graphs import random_regular, read_edge_list
from heisembed.group import HEISENBERG, parse_genset
from heisembed.harness import rows_to_csv, run_experiment
from heisembed.random_wiring import RandomWiringConfig, generate_run
from heisembed.transforms import DEFAULT_RELIEF_FACTOR, PipelineConfig, ReliefConfig, StageError, embed_graph
from heisembed.wiring import from_json_text, metrics_of, thick_bounds, to_json_text, verify

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_RESOURCE = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _dump(obj) -> str:
    return json.dumps(obj, separators=(",", ":"))


def _write(path: str | None, text: str):
    if path is None or path == "-":
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
    else:
        Path(path).write_text(text if text.endswith("\n") else text + "\n")


def _side(path: str | None, obj):
    """Secondary JSON output: to ``path`` if given, else one line on stderr."""
    if path:
        Path(path).write_text(_dump(obj) + "\n")
    else:
        print(_dump(obj), file=sys.stderr)


def _int_list(text: str) -> list[int]:
    out = []
    for part in text.split(","):
        if "-" in part.strip()[1:]:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return out


def _load_graph(args):
    if args.graph and args.random_regular:
        raise UsageError("give either --graph or --random-regular, not both")
    if args.graph:
        return read_edge_list(args.graph)
    if args.random_regular:
        try:
            n, d = (int(t) for t in args.random_regular.split(","))
        except ValueError:
            raise UsageError("--random-regular expects N,D") from None
        seed = args.graph_seed if args.graph_seed is not None else args.seed
        return random_regular(n, d, seed)
    raise UsageError("an input graph is required (--graph or --random-regular)")


def _genset(args):
    return parse_genset(args.genset or "x,y")


def _random_config(args) -> RandomWiringConfig:
    return RandomWiringConfig(alpha=args.alpha, load_threshold_constant=args.load_const,
                              max_attempts=args.max_attempts, seed=args.seed, ball_cap=args.ball_cap)


def _pipeline_config(args) -> PipelineConfig:
    factor = args.relief_factor
    relief = ReliefConfig(factor, override_allowed=factor != DEFAULT_RELIEF_FACTOR)
    return PipelineConfig(_random_config(args), relief, args.diameter_mode, args.ball_cap)


# ---------------------------------------------------------------- subcommands

def cmd_ball(args) -> int:
    S = _genset(args)
    ball = bfs_ball(S, args.radius, args.ball_cap)
    radii = range(args.radius + 1) if args.all else [args.radius]
    _write(args.output, "".join(f"{R},{ball.size_at(R)}\n" for R in radii))
    return EXIT_OK


def cmd_wire(args) -> int:
    G = _load_graph(args)
    S = _genset(args)
    run = generate_run(G, S, _random_config(args))
    report = verify(run.wiring, k=run.outcome.threshold)
    _write(args.output, to_json_text(run.wiring))
    ball = bfs_ball(S, 4 * run.radius, args.ball_cap) if args.diameter_mode != "proxy" else None
    metrics = metrics_of(run.wiring, args.diameter_mode, ball=ball, ball_cap=args.ball_cap)
    _side(args.report, {"attempts": run.attempts, "r": run.radius, "threshold": run.outcome.threshold,
                        "ball_2r": run.ball.size_at(2 * run.radius), "metrics": metrics.to_json(),
                        "verify": report.to_json()})
    ok = report.wiring_ok and report["neighbor_distinct"].passed
    return EXIT_OK if ok else EXIT_VERIFY


def cmd_embed(args) -> int:
    G = _load_graph(args)
    S = _genset(args)
    res = embed_graph(G, S, _pipeline_config(args))
    _write(args.output, to_json_text(res.wiring))
    doc = res.to_json()
    if args.timing:
        doc["elapsed_ms"] = {s.stage: round(s.elapsed_ms, 1) for s in res.stages}
    _side(args.report, doc)
    return EXIT_OK if res.ok else EXIT_VERIFY


def cmd_verify(args) -> int:
    if args.mode == "wiring" and args.k is None:
        raise UsageError("--mode wiring needs --k")
    f = from_json_text(Path(args.wiring).read_text())
    report = verify(f, k=args.k)
    doc = {"mode": args.mode, "ok": None, **report.to_json()}
    ok = report.embedding_ok if args.mode == "embedding" else report.wiring_ok
    doc["ok"] = ok
    if args.metrics:
        metrics = metrics_of(f, args.diameter_mode, ball_cap=args.ball_cap)
        doc["metrics"] = metrics.to_json()
        doc["thick_bounds"] = thick_bounds(f, metrics, report)
    _write(args.output, _dump(doc))
    return EXIT_OK if ok else EXIT_VERIFY


def cmd_convert(args) -> int:
    drawing = lattice.read_drawing(args.input)
    res = lattice.convert_embedding(drawing)
    f, doc = res.wiring, res.to_json()
    ok = res.ok
    if args.genset:
        S = lattice.lattice_genset(drawing.d, args.genset)
        f, m = lattice.retarget_zd(f, S)
        rep = verify(f)
        doc["retarget"] = {"m": m, "verify": rep.to_json()}
        ok = ok and rep.embedding_ok
    _write(args.output, to_json_text(f))
    _side(args.report, doc)
    return EXIT_OK if ok else EXIT_VERIFY


def cmd_experiment(args) -> int:
    ns = _int_list(args.n)
    seeds = _int_list(args.seeds)
    S = _genset(args)
    rows, errors, fits = run_experiment(ns, args.d, seeds, S, _pipeline_config(args),
                                        stage1_only=args.stage1_only, jobs=args.jobs, timing=args.timing)
    _write(args.output, rows_to_csv(rows))
    for e in errors:
        print(_dump({"row_error": e}), file=sys.stderr)
    _side(args.report, {"fits": {k: v.to_json() for k, v in fits.items()}, "failed_rows": len(errors)})
    return EXIT_OK if all(r.verify_ok for r in rows) else EXIT_VERIFY


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--genset", default=None,
                        help="generators, e.g. x,y or x,y,z or x,y,1:0:2 (default x,y; lattice basis for convert-rd)")
    common.add_argument("--load-const", type=float, default=3.0, help="C in the threshold ceil(C ln(1+n))")
    common.add_argument("--relief-factor", type=int, default=DEFAULT_RELIEF_FACTOR, help="K = factor * k")
    common.add_argument("--max-attempts", type=int, default=200)
    common.add_argument("--ball-cap", type=int, default=DEFAULT_BALL_CAP)
    common.add_argument("--alpha", type=float, default=HEISENBERG.growth_order)
    common.add_argument("--diameter-mode", choices=("auto", "exact", "proxy"), default="auto")
    common.add_argument("--output", "-o", default=None, help="main output file (default stdout)")
    common.add_argument("--report", default=None, help="report JSON file (default one line on stderr)")
    common.add_argument("--jobs", type=int, default=1)
    common.add_argument("--timing", action="store_true", help="include wall-clock timings (not reproducible)")

    graph = _Parser(add_help=False)
    graph.add_argument("--graph", help="edge-list file: 'n m' header then m lines 'u v'")
    graph.add_argument("--random-regular", metavar="N,D", help="use a random D-regular graph on N vertices")
    graph.add_argument("--graph-seed", type=int, default=None, help="seed for --random-regular (default --seed)")

    p = _Parser(prog="heisembed", description="Graph embeddings into the discrete Heisenberg group.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    b = sub.add_parser("ball", parents=[common], help="ball sizes |B_R| as CSV lines R,|B_R|")
    b.add_argument("--radius", type=int, required=True)
    b.add_argument("--all", action="store_true", help="print every radius 0..R")
    b.set_defaults(func=cmd_ball)

    w = sub.add_parser("wire", parents=[common, graph], help="random k-wiring into Cay(H, S)")
    w.set_defaults(func=cmd_wire)

    e = sub.add_parser("embed", parents=[common, graph], help="full pipeline to an embedding into Cay(H, S)")
    e.set_defaults(func=cmd_embed)

    v = sub.add_parser("verify", parents=[common], help="check a wiring JSON file")
    v.add_argument("--wiring", required=True)
    v.add_argument("--mode", choices=("embedding", "wiring"), default="embedding")
    v.add_argument("--k", type=int, default=None)
    v.add_argument("--metrics", action="store_true", help="also compute volume, diameter and thick bounds")
    v.set_defaults(func=cmd_verify)

    c = sub.add_parser("convert-rd", parents=[common], help="polyline drawing in R^d to a lattice embedding")
    c.add_argument("--input", required=True)
    c.set_defaults(func=cmd_convert)

    x = sub.add_parser("experiment", parents=[common], help="sweep random regular graphs, CSV rows")
    x.add_argument("--n", default="8,16,32,64", help="comma list or ranges, e.g. 8,16 or 4-6")
    x.add_argument("--d", type=int, default=3)
    x.add_argument("--seeds", default="0-4")
    x.add_argument("--stage1-only", action="store_true")
    x.set_defaults(func=cmd_experiment)
    return p


def _diagnose(exc: BaseException) -> dict:
    cause = exc.cause if isinstance(exc, StageError) else exc
    doc = {"error": type(cause).__name__, "message": str(exc)}
    if isinstance(exc, StageError):
        doc["stage"] = exc.stage
    if isinstance(cause, AttemptsExhausted):
        doc["stats"] = cause.stats
    if isinstance(cause, ResourceError) and cause.reached is not None:
        doc["reached"] = cause.reached
    return doc


def _exit_code(exc: BaseException) -> int:
    cause = exc.cause if isinstance(exc, StageError) else exc
    if isinstance(cause, (ResourceError, ArithmeticOverflow, AttemptsExhausted, MemoryError)):
        return EXIT_RESOURCE
    return EXIT_USAGE


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(_dump({"error": "UsageError", "message": str(exc)}), file=sys.stderr)
        return EXIT_USAGE
    except (HeisembedError, ValueError, OverflowError, MemoryError, OSError) as exc:
        print(_dump(_diagnose(exc)), file=sys.stderr)
        return _exit_code(exc)


if __name__ == "__main__":
    sys.exit(main())
