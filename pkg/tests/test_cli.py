import json

from conftest import FIXTURE_CSV, free_port

from cakg.cli import run

STATIONS = "SELECT ?s WHERE { ?s a <http://example.org/ca#Station> }"


def test_usage_errors_exit_1(capsys):
    assert run([]) == 1
    assert run(["ingest"]) == 1
    assert run(["query", "--query", STATIONS]) == 1
    assert "usage" in capsys.readouterr().err


def test_ingest_reports_and_is_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a.ttl", tmp_path / "b.ttl"
    assert run(["ingest", "--csv", str(FIXTURE_CSV), "--out", str(a)]) == 0
    assert "triples=1216" in capsys.readouterr().out
    assert run(["ingest", "--csv", str(FIXTURE_CSV), "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_ingest_missing_file_exits_2(tmp_path, capsys):
    assert run(["ingest", "--csv", str(tmp_path / "nope.csv"), "--out", str(tmp_path / "o.ttl")]) == 2
    assert capsys.readouterr().err.startswith("cakg: error:")
    assert not (tmp_path / "o.ttl").exists()


def test_ingest_strict_malformed_exits_2(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("STATION,NAME,LATITUDE,LONGITUDE,DATE,TAVG\nS,N,1,2,2020-01-01,abc\n")
    assert run(["ingest", "--csv", str(bad), "--out", str(tmp_path / "o.ttl"), "--strict"]) == 2
    assert run(["ingest", "--csv", str(bad), "--out", str(tmp_path / "o.ttl")]) == 0


def test_snapshot_then_query_csv(tmp_path, capsysbinary):
    snap = tmp_path / "f.cakg"
    assert run(["ingest", "--csv", str(FIXTURE_CSV), "--snapshot", str(snap)]) == 0
    capsysbinary.readouterr()
    assert run(["query", "--query", STATIONS, "--snapshot", str(snap), "--format", "csv"]) == 0
    out = capsysbinary.readouterr().out
    assert out.startswith(b"s\r\n") and out.count(b"\r\n") == 3


def test_remote_query_matches_local(tmp_path, served, capsysbinary):
    ttl = tmp_path / "f.ttl"
    run(["ingest", "--csv", str(FIXTURE_CSV), "--out", str(ttl)])
    qfile = tmp_path / "q.rq"
    qfile.write_text(STATIONS)
    url = served().url + "/sparql"
    capsysbinary.readouterr()
    for fmt in ("json", "csv"):
        assert run(["query", "--file", str(qfile), "--data", str(ttl), "--format", fmt]) == 0
        local = capsysbinary.readouterr().out
        assert run(["query", "--file", str(qfile), "--endpoint", url, "--format", fmt]) == 0
        assert capsysbinary.readouterr().out == local


def test_bad_port_exits_2(capsys):
    url = f"http://127.0.0.1:{free_port()}/ds/sparql"
    assert run(["query", "--query", STATIONS, "--endpoint", url]) == 2
    assert "cakg: error:" in capsys.readouterr().err


def test_server_400_body_surfaced(served, capsys):
    url = served().url + "/sparql"
    assert run(["query", "--query", "SELEC ?s", "--endpoint", url]) == 2
    assert "malformed query" in capsys.readouterr().err


def test_stats_monthly_and_trend(tmp_path, capsys):
    ttl = tmp_path / "f.ttl"
    run(["ingest", "--csv", str(FIXTURE_CSV), "--out", str(ttl)])
    capsys.readouterr()
    args = ["--station", "SHANGHAI", "--feature", "temperature", "--from", "1951", "--to", "2020", "--data", str(ttl)]
    assert run(["stats", "monthly", *args]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "month,count,mean,median,q1,q3,min,max" and len(lines) == 13
    out = tmp_path / "trend.json"
    assert run(["stats", "trend", *args, "--format", "json", "--out", str(out)]) == 0
    buckets = json.loads(out.read_text())
    assert buckets[0]["start_year"] == 1951 and buckets[0]["count"] == 50 and len(buckets) == 1


def test_stats_unknown_station_and_feature(tmp_path, capsys):
    ttl = tmp_path / "f.ttl"
    run(["ingest", "--csv", str(FIXTURE_CSV), "--out", str(ttl)])
    assert run(["stats", "monthly", "--station", "ATLANTIS", "--data", str(ttl)]) == 2
    assert run(["stats", "monthly", "--station", "DUBLIN", "--feature", "humidity", "--data", str(ttl)]) == 1


def test_ontology_command(tmp_path):
    out = tmp_path / "ca.ttl"
    assert run(["ontology", "--out", str(out)]) == 0
    assert "ca:TemperatureObservation rdfs:subClassOf sosa:Observation ." in out.read_text()


def test_serve_process_answers_and_stops_on_sigterm(tmp_path):
    import signal
    import subprocess
    import sys
    import time
    from urllib.parse import quote

    from conftest import http

    ttl = tmp_path / "f.ttl"
    run(["ingest", "--csv", str(FIXTURE_CSV), "--out", str(ttl)])
    port = free_port()
    proc = subprocess.Popen([sys.executable, "-m", "cakg.cli", "serve", "--data", str(ttl), "--port", str(port),
                             "--read-only"], stderr=subprocess.PIPE)
    try:
        url = f"http://127.0.0.1:{port}/ds/sparql?query={quote(STATIONS)}"
        for _ in range(100):
            try:
                status, _, body = http("GET", url, timeout=1)
                break
            except OSError:
                time.sleep(0.05)
        assert status == 200 and len(json.loads(body)["results"]["bindings"]) == 2
    finally:
        proc.send_signal(signal.SIGTERM)
        assert proc.wait(timeout=10) == 0
