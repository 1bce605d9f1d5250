import json
import socket
import threading
from urllib.parse import quote, urlencode

import pytest

from conftest import free_port, http

from cakg.endpoint import EndpointConfig, negotiate, serve, shutdown
from cakg.ontology import default_prefixes
from cakg.sparql import evaluate, parse_query, serialize_results
from cakg.turtle import SerializationConfig, parse, serialize_turtle

STATIONS = "SELECT ?s WHERE { ?s a <http://example.org/ca#Station> }"
NT = "application/n-triples"
ONE = b"<http://ex.org/a> <http://ex.org/b> <http://ex.org/c> .\n"


def _get(base, query, accept="application/sparql-results+json"):
    return http("GET", f"{base}/sparql?query={quote(query)}", headers={"Accept": accept})


def test_get_query_json(served):
    status, headers, body = _get(served().url, STATIONS)
    assert status == 200
    assert headers["Content-Type"].startswith("application/sparql-results+json")
    doc = json.loads(body)
    assert doc["head"]["vars"] == ["s"] and len(doc["results"]["bindings"]) == 2


def test_post_query_forms(served, fixture_store):
    base = served().url
    expected = serialize_results(evaluate(parse_query(STATIONS), fixture_store))
    direct = http("POST", f"{base}/sparql", STATIONS.encode(), {"Content-Type": "application/sparql-query"})
    form = http("POST", f"{base}/sparql", urlencode({"query": STATIONS}).encode(),
                {"Content-Type": "application/x-www-form-urlencoded"})
    assert direct[0] == form[0] == 200
    assert direct[2] == form[2] == expected
    assert http("POST", f"{base}/sparql", b"x", {"Content-Type": "text/plain"})[0] == 415


def test_malformed_query_reports_position(served):
    status, _, body = http("POST", f"{served().url}/sparql", b"SELEC ?s WHERE { ?s ?p ?o }",
                           {"Content-Type": "application/sparql-query"})
    assert status == 400
    assert b"line 1, column 1" in body


def test_csv_negotiation_and_406(served):
    base = served().url
    status, headers, body = _get(base, STATIONS, "text/csv")
    assert status == 200 and headers["Content-Type"].startswith("text/csv")
    assert body.startswith(b"s\r\n") and body.count(b"\r\n") == 3
    assert _get(base, STATIONS, "image/png")[0] == 406


def test_negotiate_q_values():
    offered = {"application/sparql-results+json": "json", "text/csv": "csv"}
    assert negotiate(None, offered, "json") == "json"
    assert negotiate("text/csv;q=0.9, application/sparql-results+json;q=0.5", offered, "json") == "csv"
    assert negotiate("*/*", offered, "json") == "json"
    assert negotiate("text/*", offered, "json") == "csv"
    assert negotiate("text/csv;q=0", offered, "json") is None


def test_named_graphs_rejected(served):
    base = served().url
    status, _, body = http("GET", f"{base}/sparql?query={quote(STATIONS)}&default-graph-uri=http://g")
    assert status == 400 and b"named graphs unsupported" in body
    assert http("GET", f"{base}/data?graph=http://g")[0] == 400
    assert http("GET", f"{base}/data?default")[0] == 200


def test_put_get_roundtrip_and_semantics(served, fixture_store):
    base = served().url
    original = set(fixture_store.triples())
    ttl = serialize_turtle(original, SerializationConfig(default_prefixes())).encode()
    assert http("PUT", f"{base}/data", ttl, {"Content-Type": "text/turtle"})[0] == 204
    status, headers, body = http("GET", f"{base}/data", headers={"Accept": NT})
    assert status == 200 and headers["Content-Type"].startswith(NT)
    assert parse(body.decode(), "ntriples") == original

    assert http("POST", f"{base}/data", ONE, {"Content-Type": NT})[0] == 204
    assert http("POST", f"{base}/data", ONE, {"Content-Type": NT})[0] == 204
    assert fixture_store.size() == len(original) + 1
    assert http("PUT", f"{base}/data", ONE, {"Content-Type": NT})[0] == 204
    assert fixture_store.size() == 1
    assert http("DELETE", f"{base}/data")[0] == 204
    assert fixture_store.size() == 0


def test_bad_bodies_leave_store_intact(served, fixture_store):
    base = served(max_body_bytes=1000).url
    before = set(fixture_store.triples())
    assert http("PUT", f"{base}/data", b"<http://a> <http://b> .", {"Content-Type": "text/turtle"})[0] == 400
    assert http("PUT", f"{base}/data", ONE, {"Content-Type": "application/rdf+xml"})[0] == 415
    assert http("POST", f"{base}/data", ONE * 100, {"Content-Type": NT})[0] == 413
    assert set(fixture_store.triples()) == before


def test_read_only(served, fixture_store):
    base = served(read_only=True).url
    size = fixture_store.size()
    for method in ("PUT", "POST", "DELETE"):
        assert http(method, f"{base}/data", ONE, {"Content-Type": NT})[0] == 403
    assert fixture_store.size() == size
    assert _get(base, STATIONS)[0] == 200


def test_unknown_path_and_method(served):
    base = served().url
    assert http("GET", base.replace("/ds", "/other") + "/sparql")[0] == 404
    assert http("PUT", f"{base}/sparql", b"")[0] == 405


def test_timeout_maps_to_503(served):
    base = served(query_timeout_ms=1).url
    heavy = "SELECT * WHERE { ?a ?b ?c . ?d ?e ?f . ?g ?h ?i }"
    assert _get(base, heavy)[0] == 503


def test_concurrent_large_queries_match_sequential(served, fixture_store):
    base = served().url
    query = "SELECT ?s ?p ?o WHERE { ?s ?p ?o } LIMIT 1000"
    expected = _get(base, query)[2]
    results = []
    threads = [threading.Thread(target=lambda: results.append(_get(base, query)[2])) for _ in range(2)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert results == [expected, expected]
    assert len(json.loads(expected)["results"]["bindings"]) == 1000


def test_shutdown_releases_port(fixture_store):
    handle = serve(fixture_store, EndpointConfig(port=free_port()))
    port = handle.port
    assert _get(handle.url, STATIONS)[0] == 200
    shutdown(handle)
    with socket.socket() as s:
        s.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        s.bind(("127.0.0.1", port))


def test_config_validation(monkeypatch):
    with pytest.raises(ValueError):
        EndpointConfig(port=70000)
    monkeypatch.setenv("CAKG_PORT", "4040")
    assert EndpointConfig().with_env().port == 4040
