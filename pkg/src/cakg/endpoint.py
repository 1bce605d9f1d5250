"""SPARQL 1.1 Protocol query endpoint and Graph Store Protocol (default graph) over HTTP.

Routes, relative to the dataset prefix (default ``/ds``):

    GET/POST  {prefix}/sparql   query; results as JSON (default) or CSV per Accept
    GET       {prefix}/data     whole store as Turtle (default) or N-Triples
    PUT       {prefix}/data     replace contents with the request body
    POST      {prefix}/data     merge the request body into the store
    DELETE    {prefix}/data     clear the store

There is no authentication; ``read_only`` turns the mutating methods into 403s.
"""

from __future__ import annotations

import logging
import os
import threading
import time
from dataclasses import dataclass, replace
from http import HTTPStatus
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Optional
from urllib.parse import parse_qs, urlsplit

from .ontology import default_prefixes
from .rdf import RDFError
from .sparql import (
    QueryError,
    QueryTimeout,
    evaluate,
    parse_query,
    serialize_results,
)
from .store import TripleStore
from .turtle import SerializationConfig, parse, serialize_ntriples, serialize_turtle

__all__ = ["EndpointConfig", "ServerHandle", "serve", "shutdown", "negotiate"]

log = logging.getLogger(__name__)

RESULTS_TYPES = {
    "application/sparql-results+json": "json",
    "application/json": "json",
    "text/csv": "csv",
}
RDF_TYPES = {
    "text/turtle": "turtle",
    "application/x-turtle": "turtle",
    "application/n-triples": "ntriples",
    "text/plain": "ntriples",
}
_CONTENT_TYPE = {"json": "application/sparql-results+json", "csv": "text/csv; charset=utf-8",
                 "turtle": "text/turtle; charset=utf-8", "ntriples": "application/n-triples; charset=utf-8"}


@dataclass(frozen=True)
class EndpointConfig:
    host: str = "127.0.0.1"
    port: int = 3030
    prefix: str = "/ds"
    read_only: bool = False
    max_body_bytes: int = 64 * 1024 * 1024
    query_timeout_ms: int = 30_000

    def __post_init__(self) -> None:
        if not 1 <= self.port <= 65535:
            raise ValueError(f"port {self.port} outside [1, 65535]")
        if self.query_timeout_ms <= 0:
            raise ValueError("query timeout must be positive")
        prefix = "/" + self.prefix.strip("/") if self.prefix.strip("/") else ""
        object.__setattr__(self, "prefix", prefix)

    def with_env(self) -> "EndpointConfig":
        """Apply ``CAKG_PORT`` if set."""
        port = os.environ.get("CAKG_PORT")
        return replace(self, port=int(port)) if port else self


def negotiate(accept: Optional[str], offered: dict[str, str], default: str) -> Optional[str]:
    """Pick a format key from an Accept header by q-value; ``None`` if nothing acceptable."""
    if not accept or not accept.strip():
        return default
    ranges = []
    for position, part in enumerate(accept.split(",")):
        fields = [f.strip() for f in part.split(";")]
        media = fields[0].lower()
        q = 1.0
        for param in fields[1:]:
            if param.startswith("q="):
                try:
                    q = float(param[2:])
                except ValueError:
                    q = 0.0
        if media:
            ranges.append((-q, position, media))
    for neg_q, _, media in sorted(ranges):
        if neg_q >= 0:
            break
        if media in offered:
            return offered[media]
        if media == "*/*":
            return default
        if media.endswith("/*"):
            matches = [key for m, key in offered.items() if m.startswith(media[:-1])]
            if matches:
                return default if default in matches else matches[0]
    return None


class _Handler(BaseHTTPRequestHandler):
    server: "_Server"
    protocol_version = "HTTP/1.1"

    def log_message(self, fmt: str, *args) -> None:
        log.debug("%s - %s", self.address_string(), fmt % args)

    # helpers
    def _send(self, status: int, body: bytes = b"", content_type: str = "text/plain; charset=utf-8") -> None:
        self.send_response(status)
        if status != HTTPStatus.NO_CONTENT:
            self.send_header("Content-Type", content_type)
            self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        if body and self.command != "HEAD":
            self.wfile.write(body)

    def _text(self, status: int, message: str) -> None:
        if status >= 400:
            # a request body may still be unread
            self.close_connection = True
        self._send(status, (message.rstrip("\n") + "\n").encode("utf-8"))

    def _body(self) -> Optional[bytes]:
        length = int(self.headers.get("Content-Length") or 0)
        if length > self.server.config.max_body_bytes:
            self._text(HTTPStatus.REQUEST_ENTITY_TOO_LARGE, "request body too large")
            self.close_connection = True
            return None
        return self.rfile.read(length) if length else b""

    def _content_type(self) -> str:
        return (self.headers.get("Content-Type") or "").split(";")[0].strip().lower()

    def _route(self) -> tuple[Optional[str], dict[str, list[str]]]:
        url = urlsplit(self.path)
        prefix = self.server.config.prefix
        params = parse_qs(url.query, keep_blank_values=True)
        for suffix in ("sparql", "query", "data"):
            if url.path in (f"{prefix}/{suffix}", f"{prefix}/{suffix}/"):
                return ("data" if suffix == "data" else "sparql"), params
        return None, params

    def _dispatch(self) -> None:
        route, params = self._route()
        if route is None:
            self._text(HTTPStatus.NOT_FOUND, f"no such resource: {self.path}")
            return
        if route == "sparql":
            if self.command not in ("GET", "POST"):
                self._text(HTTPStatus.METHOD_NOT_ALLOWED, "use GET or POST")
                return
            self._query(params)
        else:
            self._graph_store(params)

    do_GET = do_POST = do_PUT = do_DELETE = _dispatch

    # SPARQL protocol
    def _query(self, params: dict[str, list[str]]) -> None:
        if "named-graph-uri" in params or "default-graph-uri" in params:
            self._text(HTTPStatus.BAD_REQUEST, "named graphs unsupported")
            return
        text = params.get("query", [None])[0]
        if self.command == "POST":
            body = self._body()
            if body is None:
                return
            ctype = self._content_type()
            if ctype == "application/sparql-query":
                text = body.decode("utf-8")
            elif ctype == "application/x-www-form-urlencoded":
                form = parse_qs(body.decode("utf-8"), keep_blank_values=True)
                if "named-graph-uri" in form or "default-graph-uri" in form:
                    self._text(HTTPStatus.BAD_REQUEST, "named graphs unsupported")
                    return
                text = form.get("query", [None])[0]
            else:
                self._text(HTTPStatus.UNSUPPORTED_MEDIA_TYPE, f"unsupported content type {ctype!r}")
                return
        if text is None:
            self._text(HTTPStatus.BAD_REQUEST, "missing query parameter")
            return
        fmt = negotiate(self.headers.get("Accept"), RESULTS_TYPES, "json")
        if fmt is None:
            self._text(HTTPStatus.NOT_ACCEPTABLE, "supported: application/sparql-results+json, text/csv")
            return
        try:
            query = parse_query(text)
        except (QueryError, RDFError) as exc:
            self._text(HTTPStatus.BAD_REQUEST, f"malformed query: {exc}")
            return
        deadline = time.monotonic() + self.server.config.query_timeout_ms / 1000
        try:
            table = evaluate(query, self.server.store.read(), deadline=deadline)
        except QueryTimeout:
            self._text(HTTPStatus.SERVICE_UNAVAILABLE, "query timed out")
            return
        self._send(HTTPStatus.OK, serialize_results(table, fmt), _CONTENT_TYPE[fmt])

    # Graph Store protocol
    def _graph_store(self, params: dict[str, list[str]]) -> None:
        if "graph" in params:
            self._text(HTTPStatus.BAD_REQUEST, "named graphs unsupported")
            return
        store = self.server.store
        if self.command == "GET":
            fmt = negotiate(self.headers.get("Accept"), RDF_TYPES, "turtle")
            if fmt is None:
                self._text(HTTPStatus.NOT_ACCEPTABLE, "supported: text/turtle, application/n-triples")
                return
            triples = list(store.read())
            if fmt == "turtle":
                body = serialize_turtle(triples, SerializationConfig(self.server.prefixes))
            else:
                body = serialize_ntriples(triples)
            self._send(HTTPStatus.OK, body.encode("utf-8"), _CONTENT_TYPE[fmt])
            return
        if self.server.config.read_only:
            self._text(HTTPStatus.FORBIDDEN, "endpoint is read-only")
            return
        if self.command == "DELETE":
            store.clear()
            self._send(HTTPStatus.NO_CONTENT)
            return
        fmt = RDF_TYPES.get(self._content_type())
        if fmt is None:
            self._text(HTTPStatus.UNSUPPORTED_MEDIA_TYPE, f"unsupported content type {self._content_type()!r}")
            return
        body = self._body()
        if body is None:
            return
        try:
            triples = parse(body.decode("utf-8"), fmt)
        except (RDFError, UnicodeDecodeError) as exc:
            self._text(HTTPStatus.BAD_REQUEST, f"unparsable {fmt} body: {exc}")
            return
        if self.command == "PUT":
            store.replace(triples)
        else:
            store.insert(triples)
        self._send(HTTPStatus.NO_CONTENT)


class _Server(ThreadingHTTPServer):
    daemon_threads = False
    block_on_close = True

    def __init__(self, store: TripleStore, config: EndpointConfig) -> None:
        self.store = store
        self.config = config
        self.prefixes = default_prefixes()
        super().__init__((config.host, config.port), _Handler)


@dataclass
class ServerHandle:
    server: _Server
    thread: threading.Thread

    @property
    def url(self) -> str:
        host, port = self.server.server_address[:2]
        return f"http://{host}:{port}{self.server.config.prefix}"

    @property
    def port(self) -> int:
        return self.server.server_address[1]


def serve(store: TripleStore, config: EndpointConfig = EndpointConfig()) -> ServerHandle:
    """Start serving ``store`` on a background thread. Raises ``OSError`` if the port is taken."""
    server = _Server(store, config)
    thread = threading.Thread(target=server.serve_forever, args=(0.05,), name="cakg-endpoint", daemon=True)
    thread.start()
    return ServerHandle(server, thread)


def shutdown(handle: ServerHandle, timeout: float = 10.0) -> None:
    """Stop accepting requests, let in-flight ones finish, and release the port."""
    handle.server.shutdown()
    handle.thread.join(timeout)
    handle.server.server_close()
