"""Command line entry point: ``cakg ingest|ontology|serve|query|stats``.

Exit codes: 0 success, 1 usage error, 2 data or I/O error.
"""

from __future__ import annotations

import argparse
import logging
import os
import signal
import sys
import threading
from pathlib import Path
from typing import Optional, Sequence

from . import analytics
from .client import EndpointError, query_remote
from .endpoint import EndpointConfig, serve, shutdown
from .ingest import IngestConfig, IngestError, load_config, run_pipeline
from .ontology import OntologyConfig, emit_ontology_document
from .rdf import RDFError
from .sparql import QueryError, QueryTimeout, evaluate, parse_query, serialize_results
from .sparql.results import RESULT_MEDIA_TYPES
from .store import SnapshotError, TripleStore
from .turtle import parse

__all__ = ["main", "run", "query_remote"]

log = logging.getLogger("cakg")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # type: ignore[override]
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cakg", description="CDO climate CSV to RDF, SPARQL endpoint and summaries.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log warnings and progress")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("ingest", help="convert a CDO daily-summaries CSV")
    p.add_argument("--csv", required=True, type=Path)
    out = p.add_mutually_exclusive_group(required=True)
    out.add_argument("--out", type=Path, help="Turtle output file")
    out.add_argument("--snapshot", type=Path, help="binary store snapshot (.cakg)")
    p.add_argument("--config", type=Path, help="TOML ingest configuration")
    p.add_argument("--base-iri", default=None, help="instance IRI base (env CAKG_BASE_IRI)")
    p.add_argument("--standard-sosa", action="store_true", help="emit sosa:madeBySensor")
    p.add_argument("--strict", action="store_true", help="abort on malformed rows or cells")
    p.add_argument("--missing-sentinel", default=None, help="cell value meaning 'missing'")

    p = sub.add_parser("ontology", help="write the CA ontology document")
    p.add_argument("--out", type=Path, default=Path("ca-ontology.ttl"))

    p = sub.add_parser("serve", help="serve a dataset over HTTP")
    _add_local_source(p)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=3030, help="(env CAKG_PORT)")
    p.add_argument("--prefix", default="/ds")
    p.add_argument("--read-only", action="store_true")
    p.add_argument("--timeout-ms", type=int, default=30_000)
    p.add_argument("--max-body", type=int, default=64 * 1024 * 1024)

    p = sub.add_parser("query", help="run a SELECT query")
    text = p.add_mutually_exclusive_group(required=True)
    text.add_argument("--file", type=Path, help="query file (.rq)")
    text.add_argument("--query", help="query text")
    _add_source(p)
    p.add_argument("--format", choices=("json", "csv"), default="json")

    p = sub.add_parser("stats", help="monthly box-plot statistics or trend buckets")
    p.add_argument("kind", choices=("monthly", "trend"))
    p.add_argument("--station", required=True, help="station rdfs:label, e.g. SHANGHAI")
    p.add_argument("--feature", default="temperature")
    p.add_argument("--measure", default=None, help="measure key such as tavg")
    p.add_argument("--from", dest="year_from", type=int, default=1951)
    p.add_argument("--to", dest="year_to", type=int, default=2020)
    p.add_argument("--span", type=int, default=5, help="trend window in years")
    p.add_argument("--start-year", type=int, default=None, help="first trend window (default --from)")
    p.add_argument("--standard-sosa", action="store_true")
    _add_source(p)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", type=Path, default=None, help="output file (default stdout)")
    return parser


def _add_local_source(p: argparse.ArgumentParser) -> None:
    group = p.add_mutually_exclusive_group()
    group.add_argument("--snapshot", type=Path, help="load a .cakg snapshot")
    group.add_argument("--data", type=Path, help="load a .ttl or .nt file")


def _add_source(p: argparse.ArgumentParser) -> None:
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--endpoint", help="SPARQL endpoint URL, e.g. http://localhost:3030/ds/sparql")
    group.add_argument("--snapshot", type=Path, help="local .cakg snapshot")
    group.add_argument("--data", type=Path, help="local .ttl or .nt file")


def _load_store(args: argparse.Namespace) -> TripleStore:
    if getattr(args, "snapshot", None):
        return TripleStore.load_snapshot(args.snapshot)
    store = TripleStore()
    if getattr(args, "data", None):
        fmt = "ntriples" if args.data.suffix == ".nt" else "turtle"
        store.insert(parse(args.data.read_text(encoding="utf-8"), fmt))
    return store


def _cmd_ingest(args: argparse.Namespace) -> int:
    base = args.base_iri or os.environ.get("CAKG_BASE_IRI")
    if args.config:
        config = load_config(
            args.config,
            base_iri=base,
            standard_sosa=args.standard_sosa or None,
            strict=args.strict or None,
            missing_sentinel=args.missing_sentinel,
        )
    else:
        ontology = OntologyConfig(standard_sosa=args.standard_sosa, **({"instance_base": base} if base else {}))
        config = IngestConfig(strict=args.strict, missing_sentinel=args.missing_sentinel, ontology=ontology)
    if args.out:
        report = run_pipeline(args.csv, config, args.out)
    else:
        store = TripleStore()
        report = run_pipeline(args.csv, config, store)
        store.save_snapshot(args.snapshot)
    for warning in report.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    print(report.summary())
    return 0


def _cmd_ontology(args: argparse.Namespace) -> int:
    args.out.write_text(emit_ontology_document(), encoding="utf-8")
    print(f"wrote {args.out}")
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    store = _load_store(args)
    config = EndpointConfig(
        host=args.host,
        port=args.port,
        prefix=args.prefix,
        read_only=args.read_only,
        max_body_bytes=args.max_body,
        query_timeout_ms=args.timeout_ms,
    ).with_env()
    handle = serve(store, config)
    print(f"serving {store.size()} triples at {handle.url}/sparql and {handle.url}/data", file=sys.stderr)
    stop = threading.Event()
    signal.signal(signal.SIGTERM, lambda *_: stop.set())
    try:
        while not stop.wait(0.5):
            pass
    except KeyboardInterrupt:
        pass
    finally:
        shutdown(handle)
    return 0


def _cmd_query(args: argparse.Namespace) -> int:
    text = args.file.read_text(encoding="utf-8") if args.file else args.query
    if args.endpoint:
        body = query_remote(args.endpoint, text, RESULT_MEDIA_TYPES[args.format])
    else:
        body = serialize_results(evaluate(parse_query(text), _load_store(args)), args.format)
    sys.stdout.buffer.write(body)
    if args.format == "json":
        sys.stdout.buffer.write(b"\n")
    sys.stdout.flush()
    return 0


def _cmd_stats(args: argparse.Namespace) -> int:
    source = args.endpoint if args.endpoint else _load_store(args)
    config = OntologyConfig(standard_sosa=args.standard_sosa)
    if args.feature not in config.registry:
        raise UsageError(f"unknown feature {args.feature!r}; choose from {', '.join(config.registry)}")
    series = analytics.collect_series(
        source, args.station, args.feature, args.year_from, args.year_to,
        measure_key=args.measure, config=config,
    )
    if args.kind == "monthly":
        items = analytics.monthly_summary(series)
    else:
        start = args.start_year if args.start_year is not None else args.year_from
        items = analytics.trend_buckets(series, start, args.span)
    if args.out:
        analytics.emit_table(items, args.format, args.out, kind=args.kind)
    else:
        sys.stdout.write(analytics.format_table(items, args.format, kind=args.kind))
    return 0


_COMMANDS = {
    "ingest": _cmd_ingest,
    "ontology": _cmd_ontology,
    "serve": _cmd_serve,
    "query": _cmd_query,
    "stats": _cmd_stats,
}

_DATA_ERRORS = (
    OSError,
    IngestError,
    RDFError,
    QueryError,
    QueryTimeout,
    SnapshotError,
    EndpointError,
    analytics.StationNotFound,
    ValueError,
)


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(
            level=logging.INFO if args.verbose else logging.ERROR,
            format="%(levelname)s %(name)s: %(message)s",
        )
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except _DATA_ERRORS as exc:
        message = " ".join(str(exc).split()) or type(exc).__name__
        print(f"cakg: error: {message}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
