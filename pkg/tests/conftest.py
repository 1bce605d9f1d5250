import socket
import sys
import urllib.error
import urllib.request
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from cakg.endpoint import EndpointConfig, serve, shutdown  # noqa: E402
from cakg.ingest import IngestConfig, run_pipeline  # noqa: E402
from cakg.store import TripleStore  # noqa: E402

DATA = Path(__file__).parent / "data"
FIXTURE_CSV = DATA / "fixture.csv"
JANUARY_CSV = DATA / "january1951.csv"


def free_port() -> int:
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


def http(method, url, body=None, headers=None, timeout=10):
    """(status, headers, body) without raising on 4xx/5xx."""
    req = urllib.request.Request(url, data=body, method=method, headers=headers or {})
    try:
        with urllib.request.urlopen(req, timeout=timeout) as resp:
            return resp.status, resp.headers, resp.read()
    except urllib.error.HTTPError as err:
        return err.code, err.headers, err.read()


@pytest.fixture
def fixture_store():
    store = TripleStore()
    run_pipeline(FIXTURE_CSV, IngestConfig(), store)
    return store


@pytest.fixture
def served(fixture_store):
    """Yields a function building a running endpoint; all are shut down afterwards."""
    handles = []

    def start(store=None, **overrides):
        config = EndpointConfig(port=free_port(), **overrides)
        handle = serve(fixture_store if store is None else store, config)
        handles.append(handle)
        return handle

    yield start
    for handle in handles:
        shutdown(handle)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    if module is None or not module.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(module.RESULTS):
        terminalreporter.write_line(module.RESULTS[n])
