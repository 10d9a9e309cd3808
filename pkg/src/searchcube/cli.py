"""Command-line interface.

Every workflow step is scriptable without the service: ingest, index,
guides, query, contexts, connections, materialize, cube, serve. Refinement
state is passed as flags (--select-context / --select-connection), so the
full explore-refine-cube loop can run as a shell pipeline. Report commands
can render figures next to their delimited output.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .corpus_store import ContextPath, CorpusStore, StoreError, ingest_directory, load_link_specs
from .cube_builder import CubeError, define_entry
from .dataguide import GuideError, GuideSet, build_guides, check_coverage
from .engine import Engine, EngineConfig
from .materializer import PlanningError
from .path_index import PathIndex, PathIndexError
from .query_model import InvalidSelectionError, QuerySyntaxError
from .search_expr import SearchSyntaxError
from .topk_engine import DEFAULT_K, DEFAULT_RADIUS_CAP


def _store_arg(parser: argparse.ArgumentParser) -> None:
    import os

    default = os.environ.get("SEARCHCUBE_STORE")
    parser.add_argument(
        "--store",
        required=default is None,
        default=default,
        help="store directory (default: $SEARCHCUBE_STORE)",
    )


def _selection_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--select-context",
        action="append",
        default=[],
        metavar="TERM=PATH",
        help="pin a term (0-based) to a context path; repeatable",
    )
    parser.add_argument(
        "--select-connection",
        action="append",
        default=[],
        metavar="ID",
        help="choose a connection id from the summary; repeatable",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="searchcube",
        description="keyword search over XML with star-schema cube output",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="load XML documents into a new store")
    _store_arg(p)
    p.add_argument("--input", required=True, help="directory of .xml files")
    p.add_argument("--links", help="JSON file of link specifications")

    p = sub.add_parser("index", help="build the full-text index (or print a posting)")
    _store_arg(p)
    p.add_argument("--term", help="print the path posting for one term and exit")

    p = sub.add_parser("guides", help="build dataguides / print their stats")
    _store_arg(p)
    p.add_argument("action", nargs="?", choices=["build", "stats"], default="build")
    p.add_argument("--threshold", type=float, default=0.4)
    p.add_argument("--no-merge", action="store_true", help="disable overlap merging")
    p.add_argument("--figure", help="also render the stats chart to this PNG")

    p = sub.add_parser("query", help="run top-k search")
    _store_arg(p)
    p.add_argument("query")
    p.add_argument("--k", type=int, default=DEFAULT_K)
    p.add_argument("--radius-cap", type=int, default=DEFAULT_RADIUS_CAP)
    p.add_argument("--distinct", action="store_true", help="forbid duplicate nodes across terms")
    _selection_args(p)

    p = sub.add_parser("contexts", help="print per-term context buckets")
    _store_arg(p)
    p.add_argument("query")
    p.add_argument("--figures", help="render bucket bar charts into this directory")

    p = sub.add_parser("connections", help="print the connection summary")
    _store_arg(p)
    p.add_argument("query")
    p.add_argument("--k", type=int, default=DEFAULT_K)
    p.add_argument("--radius-cap", type=int, default=DEFAULT_RADIUS_CAP)
    _selection_args(p)

    p = sub.add_parser("materialize", help="compute the complete refined result as CSV")
    _store_arg(p)
    p.add_argument("query")
    p.add_argument("--k", type=int, default=DEFAULT_K)
    p.add_argument("--radius-cap", type=int, default=DEFAULT_RADIUS_CAP)
    p.add_argument("--out", help="CSV output file (default: stdout)")
    _selection_args(p)

    p = sub.add_parser("cube", help="derive and populate the star schema")
    _store_arg(p)
    p.add_argument("query")
    p.add_argument("--k", type=int, default=DEFAULT_K)
    p.add_argument("--radius-cap", type=int, default=DEFAULT_RADIUS_CAP)
    _selection_args(p)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--add-fact", action="append", default=[], metavar="NAME")
    p.add_argument("--drop-fact", action="append", default=[], metavar="NAME")
    p.add_argument("--add-dim", action="append", default=[], metavar="NAME")
    p.add_argument("--drop-dim", action="append", default=[], metavar="NAME")
    p.add_argument(
        "--define-entry",
        action="append",
        default=[],
        metavar="FILE",
        help="JSON file with new catalog definitions to verify and add",
    )
    p.add_argument("--skip-bad-rows", action="store_true")
    p.add_argument("--figures", action="store_true", help="render star summary chart")

    p = sub.add_parser("serve", help="run the HTTP service")
    _store_arg(p)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8400)
    p.add_argument("--k", type=int, default=DEFAULT_K)
    p.add_argument("--radius-cap", type=int, default=DEFAULT_RADIUS_CAP)
    p.add_argument("--config", help="JSON file with default k/radius_cap/host/port")
    p.add_argument("--ui-dir", help="static directory with the built web UI")

    return parser


def _parse_context_selections(engine: Engine, raw: list[str]) -> dict[int, set]:
    selections: dict[int, set] = {}
    for item in raw:
        term_text, _, path_text = item.partition("=")
        if not path_text:
            raise InvalidSelectionError(f"--select-context wants TERM=PATH, got {item!r}")
        selections.setdefault(int(term_text), set()).add(ContextPath.of(path_text))
    return selections


def _refined_query(engine: Engine, args) -> tuple:
    """Shared refinement pipeline: parse, buckets, context selection,
    top-k, connection summary, connection selection."""
    query = engine.parse(args.query)
    buckets = engine.buckets(query)
    selections = _parse_context_selections(engine, args.select_context)
    if selections:
        query = engine.select_contexts(query, buckets, selections)
    topk = engine.top_k(query, k=args.k, radius_cap=args.radius_cap)
    summary = engine.connections(topk, radius_cap=args.radius_cap)
    if args.select_connection:
        query = engine.select_connections(query, summary, set(args.select_connection))
    return query, buckets, topk, summary


def cmd_ingest(args) -> int:
    links = load_link_specs(args.links) if args.links else []
    store = ingest_directory(args.input, links)
    store.save(args.store)
    print(store.stats.render())
    return 0


def cmd_index(args) -> int:
    store = CorpusStore.open(args.store)
    if args.term:
        index = PathIndex.open(store, args.store)
        posting = index.posting(args.term)
        for entry in posting.entries:
            print(f"{entry.path}\t{entry.doc_frequency}\t{entry.occurrence}")
        return 0
    index = PathIndex.build(store)
    index.save(args.store)
    print(index.stats.render())
    return 0


def cmd_guides(args) -> int:
    store = CorpusStore.open(args.store)
    if args.action == "stats":
        guides = GuideSet.open(args.store)
    else:
        threshold = 1.5 if args.no_merge else args.threshold
        guides = build_guides(store, threshold=threshold)
        check_coverage(store, guides)
        guides.save(args.store)
    print(guides.render_stats())
    if args.figure:
        from .figures import save_guide_stats_figure

        target = save_guide_stats_figure(guides, args.figure)
        print(f"figure\t{target}", file=sys.stderr)
    return 0


def cmd_query(args) -> int:
    engine = Engine.open(args.store, EngineConfig(distinct=args.distinct))
    query = engine.parse(args.query)
    buckets = engine.buckets(query)
    selections = _parse_context_selections(engine, args.select_context)
    if selections:
        query = engine.select_contexts(query, buckets, selections)
    topk = engine.top_k(query, k=args.k, radius_cap=args.radius_cap)
    header = ["rank", "score", "distance"]
    for i in range(1, len(query.terms) + 1):
        header.extend([f"c_n{i}", f"c_p{i}"])
    print("\t".join(header))
    for rank, tup in enumerate(topk.tuples, start=1):
        record = [str(rank), f"{tup.score:.6f}", str(tup.distance)]
        for node, path in zip(tup.nodes, tup.paths):
            record.extend([str(node), str(path)])
        print("\t".join(record))
    return 0


def cmd_contexts(args) -> int:
    engine = Engine.open(args.store)
    query = engine.parse(args.query)
    buckets = engine.buckets(query)
    from .context_summary import render_buckets

    print(render_buckets(buckets, query))
    if args.figures:
        from .figures import save_bucket_figures

        written = save_bucket_figures(buckets, args.figures)
        for path in written:
            print(f"figure\t{path}", file=sys.stderr)
    return 0


def cmd_connections(args) -> int:
    engine = Engine.open(args.store)
    _query, _buckets, _topk, summary = _refined_query(engine, args)
    print(summary.render())
    return 0


def cmd_materialize(args) -> int:
    engine = Engine.open(args.store)
    query, _buckets, _topk, summary = _refined_query(engine, args)
    result = engine.materialize(query, summary)
    if args.out:
        with open(args.out, "w", newline="", encoding="utf-8") as fh:
            result.write_csv(fh)
        print(f"rows\t{len(result.rows)}")
    else:
        result.write_csv(sys.stdout)
    return 0


def cmd_cube(args) -> int:
    engine = Engine.open(args.store)
    query, _buckets, _topk, summary = _refined_query(engine, args)
    result = engine.materialize(query, summary)
    for define_file in args.define_entry:
        raw = json.loads(Path(define_file).read_text(encoding="utf-8"))
        for item in raw if isinstance(raw, list) else [raw]:
            column = int(item["column"])
            nodes = [row.nodes[column] for row in result.rows]
            define_entry(
                engine.store,
                engine.catalog,
                item["kind"],
                item["name"],
                [(e["context"], e["key"]) for e in item["contexts"]],
                nodes,
                column_paths={row.paths[column] for row in result.rows},
            )
            engine.save_catalog()
    report = engine.match(result)
    f_final = set(report.facts_matched) | set(args.add_fact)
    f_final -= set(args.drop_fact)
    d_final = set(report.dims_matched) | set(args.add_dim)
    d_final -= set(args.drop_dim)
    for warning in report.warnings:
        print(f"warning\t{warning}", file=sys.stderr)
    aug, star = engine.build_cube(
        result, f_final, d_final, query_text=args.query, skip_bad_rows=args.skip_bad_rows
    )
    written = star.write(args.out_dir)
    for path in written:
        print(f"wrote\t{path}")
    if args.figures:
        from .figures import save_star_figure

        target = save_star_figure(star, Path(args.out_dir) / "star_summary.png")
        print(f"figure\t{target}", file=sys.stderr)
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    defaults = {"k": args.k, "radius_cap": args.radius_cap, "host": args.host, "port": args.port}
    if args.config:
        defaults.update(json.loads(Path(args.config).read_text(encoding="utf-8")))
    engine = Engine.open(
        args.store, EngineConfig(k=defaults["k"], radius_cap=defaults["radius_cap"])
    )
    app = create_app(engine, ui_dir=args.ui_dir)
    uvicorn.run(app, host=defaults["host"], port=int(defaults["port"]), log_level="warning")
    return 0


_COMMANDS = {
    "ingest": cmd_ingest,
    "index": cmd_index,
    "guides": cmd_guides,
    "query": cmd_query,
    "contexts": cmd_contexts,
    "connections": cmd_connections,
    "materialize": cmd_materialize,
    "cube": cmd_cube,
    "serve": cmd_serve,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except (
        QuerySyntaxError,
        SearchSyntaxError,
        InvalidSelectionError,
        PlanningError,
        CubeError,
        StoreError,
        GuideError,
        PathIndexError,
        FileNotFoundError,
        RuntimeError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
