"""Command-line entry point: ``gnngrammar <subcommand> [flags]``.

Reports go to standard output as JSON (default) or CSV. Exit status is 0 on
success, 1 on a domain error and 2 on a usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import cfg, counting, g2n2, graph, matlang, spectral, wl
from .graph import Graph

KINDS = [k.name for k in counting.ALL_KINDS]


class DomainError(Exception):
    pass


# input resolution ---------------------------------------------------------------


def load_graph(spec: str) -> Graph:
    """A graph6 file holding exactly one graph, or a builtin name such as ``cycle(6)``."""
    if os.path.isfile(spec):
        graphs = graph.read_graph6_file(spec)
        if len(graphs) != 1:
            raise DomainError(f"{spec}: expected one graph, found {len(graphs)}")
        return graphs[0]
    try:
        return graph.builtin(spec)
    except ValueError:
        raise DomainError(f"{spec!r} is neither a readable graph6 file nor a builtin graph") from None


def _split_top_level(text: str) -> list[str]:
    parts, depth, cur = [], 0, ""
    for ch in text:
        if ch == "," and depth == 0:
            parts.append(cur)
            cur = ""
            continue
        depth += (ch == "(") - (ch == ")")
        cur += ch
    parts.append(cur)
    return [p.strip() for p in parts]


def load_pair(spec: str) -> tuple[Graph, Graph]:
    if spec in graph.PAIRS:
        return graph.builtin_pair(spec)
    parts = _split_top_level(spec)
    if len(parts) != 2:
        raise DomainError(f"--pair needs a builtin pair ({', '.join(sorted(graph.PAIRS))}) or two graphs 'a,b'")
    return load_graph(parts[0]), load_graph(parts[1])


def load_exprs(spec: str) -> list[str]:
    if os.path.isfile(spec):
        with open(spec, encoding="utf-8") as fh:
            lines = [ln.strip() for ln in fh]
        return [ln for ln in lines if ln]
    return [spec]


# output ----------------------------------------------------------------------------


def emit_json(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def emit_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for row in rows:
        writer.writerow([repr(float(x)) if isinstance(x, float) else x for x in row])
    return buf.getvalue()


def _rows(data) -> list[list]:
    """CSV rows: matrix rows as-is, a vector one entry per row, a scalar one cell."""
    arr = np.asarray(data)
    if arr.ndim == 0:
        return [[arr.item()]]
    if arr.ndim == 1:
        return [[x] for x in arr.tolist()]
    return arr.tolist()


# subcommands --------------------------------------------------------------------


def cmd_eval(args) -> str:
    g = load_graph(args.graph)
    ev = matlang.Evaluator(g)
    reports = []
    for text in load_exprs(args.expr):
        e = matlang.parse_expr(text)
        value = ev(e)
        reports.append({"expr": matlang.to_sexpr(e), "shape": value.shape.value, "value": value.to_python()})
    if args.format == "csv":
        if len(reports) != 1:
            raise DomainError("csv output takes a single expression")
        return emit_csv(_rows(reports[0]["value"]))
    return emit_json(reports[0] if len(reports) == 1 else reports)


def cmd_sentences(args) -> str:
    grammar = cfg.preset(args.grammar)
    sents = cfg.enumerate_sentences(grammar, args.depth, args.limit)
    if args.format == "csv":
        return emit_csv([[h, line] for h, line in zip(sents.heights, sents.to_lines())])
    return emit_json({
        "grammar": grammar.name,
        "productions": grammar.to_text(),
        "depth": args.depth,
        "count": len(sents),
        "truncated": sents.truncated,
        "sentences": sents.to_lines(),
    })


def _count_report(args, fn) -> str:
    g = load_graph(args.graph)
    result = fn(args.kind, args.level, g)
    if args.format == "csv":
        return emit_csv(_rows(result.data))
    return emit_json(result.to_dict())


def cmd_count(args) -> str:
    return _count_report(args, counting.count)


def cmd_oracle(args) -> str:
    return _count_report(args, counting.oracle_count)


def cmd_wl(args) -> str:
    if args.pair:
        g1, g2 = load_pair(args.pair)
        return emit_json(wl.compare(g1, g2, args.test).to_dict())
    if not args.graph:
        raise DomainError("wl needs --pair or --graph")
    g = load_graph(args.graph)
    col = wl.wl1(g) if args.test == "wl1" else wl.fwl2(g)
    if args.format == "csv":
        return emit_csv(_rows(col.colors))
    return emit_json({"test": args.test, "rounds": col.rounds, "classes": col.num_classes,
                      "colors": col.colors.tolist()})


def cmd_distinguish(args) -> str:
    g1, g2 = load_pair(args.pair)
    if args.grammar:
        verdict = cfg.distinguish_by_sentences(g1, g2, cfg.preset(args.grammar), args.depth, args.limit)
        return emit_json({"pair": args.pair, "grammar": args.grammar, **verdict.to_dict()})
    seeds = range(args.seed, args.seed + args.seeds)
    verdict = g2n2.distinguish(g1, g2, seeds=seeds, threshold=args.threshold, pair=args.pair, jobs=args.jobs)
    return emit_json(verdict.to_dict())


def cmd_spectral(args) -> str:
    g = load_graph(args.graph)
    fit = spectral.fit_filter(g, args.filter, args.degree)
    if args.format == "csv":
        return emit_csv([["lambda", "target", "response"]] + fit.table().tolist())
    return emit_json(fit.to_dict())


def cmd_verify_counting(args) -> tuple[str, int]:
    corpus = counting.verification_corpus(args.graphs, args.n, args.seed)
    graphs = [graph.erdos_renyi(n, p, s) for n, p, s in corpus]
    with ThreadPoolExecutor(max_workers=max(1, args.jobs)) as pool:
        found = list(pool.map(counting.check_graph, graphs, range(len(graphs))))
    mismatches = [m for ms in found for m in ms]
    report = {
        "graphs": len(graphs),
        "kinds": KINDS,
        "levels": list(counting.LEVELS),
        "comparisons": len(graphs) * len(KINDS) * (len(counting.LEVELS) + 2),
        "mismatches": [vars(m) for m in mismatches],
        "ok": not mismatches,
    }
    return emit_json(report), 0 if not mismatches else 1


def cmd_verify_shapes(args) -> tuple[str, int]:
    rng = np.random.default_rng(args.seed)
    g = graph.erdos_renyi(args.n, 0.5, args.seed)
    ev = matlang.Evaluator(g)
    shapes = list(matlang.Shape)
    violations = []
    for k in range(args.count):
        want = shapes[k % len(shapes)]
        e = matlang.random_expr(rng, want, args.depth)
        inferred = matlang.infer_shape(e)
        with np.errstate(all="ignore"):
            got = matlang.result_shape_class(ev(e).data, g.n)
        if inferred != want or got != inferred:
            violations.append({"expr": matlang.to_sexpr(e), "inferred": inferred.value, "evaluated": got.value})
    grammar_sentences = 0
    for name in cfg.PRESET_NAMES:
        for e in cfg.enumerate_sentences(cfg.preset(name), args.grammar_depth, 2000):
            grammar_sentences += 1
            try:
                matlang.infer_shape(e)
            except matlang.ShapeError as exc:
                violations.append({"expr": matlang.to_sexpr(e), "grammar": name, "error": str(exc)})
    report = {
        "expressions": args.count,
        "grammar_sentences": grammar_sentences,
        "violations": violations,
        "ok": not violations,
    }
    return emit_json(report), 0 if not violations else 1


# parser ---------------------------------------------------------------------------


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gnngrammar", description="MATLANG grammars, WL tests, counting and spectral tools.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="subcommand")

    def add(name, help_text, fn):
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.set_defaults(func=fn)
        return p

    def fmt(p):
        p.add_argument("--format", choices=["json", "csv"], default="json")

    p = add("eval", "evaluate MATLANG expressions on a graph", cmd_eval)
    p.add_argument("--expr", required=True, help="expression file (one per line) or inline S-expression")
    p.add_argument("--graph", required=True, help="graph6 file or builtin name")
    fmt(p)

    p = add("sentences", "enumerate grammar sentences up to a derivation depth", cmd_sentences)
    p.add_argument("--grammar", required=True, choices=cfg.PRESET_NAMES)
    p.add_argument("--depth", required=True, type=_positive)
    p.add_argument("--limit", type=_positive, default=10_000)
    fmt(p)

    for name, fn, what in (("count", cmd_count, "closed-form"), ("oracle", cmd_oracle, "brute-force")):
        p = add(name, f"{what} substructure counts", fn)
        p.add_argument("--kind", required=True, choices=KINDS)
        p.add_argument("--level", required=True, choices=list(counting.LEVELS))
        p.add_argument("--graph", required=True)
        fmt(p)

    p = add("wl", "1-WL or 2-FWL colouring of a graph, or equivalence of a pair", cmd_wl)
    p.add_argument("--test", choices=["wl1", "fwl2"], default="wl1")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--pair")
    group.add_argument("--graph")
    fmt(p)

    p = add("distinguish", "random-weight G2N2 (or grammar sentences) on a graph pair", cmd_distinguish)
    p.add_argument("--pair", required=True)
    p.add_argument("--seeds", type=_positive, default=10)
    p.add_argument("--seed", type=int, default=0, help="first seed")
    p.add_argument("--threshold", type=float, default=1e-3)
    p.add_argument("--jobs", type=_positive, default=1)
    p.add_argument("--grammar", choices=cfg.PRESET_NAMES, help="compare grammar sentences instead")
    p.add_argument("--depth", type=_positive, default=4)
    p.add_argument("--limit", type=_positive, default=10_000)

    p = add("spectral", "fit a polynomial filter of the normalized Laplacian", cmd_spectral)
    p.add_argument("--graph", required=True)
    p.add_argument("--filter", required=True, choices=sorted(spectral.FILTERS))
    p.add_argument("--degree", required=True, type=int)
    fmt(p)

    p = add("verify-counting", "check counting formulas against the oracle on random graphs", cmd_verify_counting)
    p.add_argument("--n", type=int, default=12, help="largest node count (smallest is 6)")
    p.add_argument("--graphs", type=_positive, default=50)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--jobs", type=_positive, default=1)

    p = add("verify-shapes", "check inferred shapes against evaluated results", cmd_verify_shapes)
    p.add_argument("--count", type=_positive, default=1000)
    p.add_argument("--depth", type=_positive, default=4, help="random expression depth")
    p.add_argument("--grammar-depth", type=_positive, default=4)
    p.add_argument("--n", type=_positive, default=7)
    p.add_argument("--seed", type=int, default=0)
    return parser


DOMAIN_ERRORS = (
    DomainError,
    ValueError,
    TypeError,
    ArithmeticError,
    OSError,
    spectral.ConvergenceError,
)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "verify-counting" and not 6 <= args.n <= counting.ORACLE_MAX_N:
        parser.error(f"--n must be in 6..{counting.ORACLE_MAX_N}")
    if args.command == "spectral" and args.degree < 0:
        parser.error("--degree must be non-negative")
    try:
        out = args.func(args)
    except DOMAIN_ERRORS as exc:
        print(f"gnngrammar {args.command}: {exc}", file=sys.stderr)
        return 1
    status = 0
    if isinstance(out, tuple):
        out, status = out
    sys.stdout.write(out)
    return status


if __name__ == "__main__":
    sys.exit(main())
