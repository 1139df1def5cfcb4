import hashlib
import json
import socket
import subprocess
import sys
import time
from pathlib import Path

import httpx
import pytest

from mobiliscope.cli import EXIT_CONNECT, EXIT_HTTP, EXIT_PARSE, EXIT_USAGE, main


def corpus_digest(out_dir: Path) -> str:
    h = hashlib.sha256()
    for path in sorted(out_dir.iterdir()):
        h.update(path.name.encode())
        h.update(path.read_bytes())
    return h.hexdigest()


class TestSimulate:
    def test_writes_corpus_and_manifest(self, tmp_path):
        out = tmp_path / "corpus"
        assert main(["simulate", "--suite", "default", "--seed", "42", "--out", str(out)]) == 0
        traces = list(out.glob("*.trace"))
        assert len(traces) == 50
        assert (out / "manifest.txt").exists()

    def test_same_seed_byte_identical(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        main(["simulate", "--seed", "7", "--out", str(a)])
        main(["simulate", "--seed", "7", "--out", str(b)])
        assert corpus_digest(a) == corpus_digest(b)

    def test_different_seed_differs(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        main(["simulate", "--seed", "7", "--out", str(a)])
        main(["simulate", "--seed", "8", "--out", str(b)])
        assert corpus_digest(a) != corpus_digest(b)

    def test_noise_changes_output(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        main(["simulate", "--seed", "7", "--out", str(a)])
        main(["simulate", "--seed", "7", "--out", str(b), "--noise", "0.1,20,0.1"])
        assert corpus_digest(a) != corpus_digest(b)

    def test_unwritable_out_is_usage_error(self, tmp_path):
        blocker = tmp_path / "blocker"
        blocker.write_text("")
        rc = main(["simulate", "--out", str(blocker / "sub")])
        assert rc == EXIT_USAGE


@pytest.fixture(scope="module")
def trace_file(tmp_path_factory):
    out = tmp_path_factory.mktemp("cli") / "corpus"
    main(["simulate", "--seed", "42", "--out", str(out)])
    return next(p for p in sorted(out.glob("*.trace")) if "S-METRO" in p.name)


class TestDetect:
    def test_text_output(self, trace_file, capsys):
        assert main(["detect", "--trace", str(trace_file)]) == 0
        out = capsys.readouterr().out
        assert "segments" in out and "METRO" in out

    def test_json_output(self, trace_file, capsys):
        assert main(["detect", "--trace", str(trace_file), "--format", "json"]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["trips"]
        modes = {s["mode"] for t in doc["trips"] for s in t["segments"]}
        assert "METRO" in modes

    def test_truncated_trace_is_parse_error(self, trace_file, tmp_path):
        broken = tmp_path / "broken.trace"
        broken.write_text(trace_file.read_text()[:200])
        assert main(["detect", "--trace", str(broken)]) == EXIT_PARSE

    def test_bad_config_is_usage_error(self, trace_file, tmp_path):
        cfg = tmp_path / "cfg"
        cfg.write_text("estimator.flux_capacitor=1\n")
        assert main(["detect", "--trace", str(trace_file), "--config", str(cfg)]) == EXIT_USAGE


class TestKeygenSeal:
    def test_keygen_then_seal_round_trip(self, trace_file, tmp_path):
        keyfile = tmp_path / "keys"
        envfile = tmp_path / "upload.env"
        assert main(["keygen", "--out", str(keyfile)]) == 0
        assert main(
            ["seal", "--trace", str(trace_file), "--key", str(keyfile), "--out", str(envfile)]
        ) == 0

        from mobiliscope.privacy import KeyStore, decode_envelope, decrypt_envelope

        keys = KeyStore.load(keyfile.read_text())
        payload = decrypt_envelope(decode_envelope(envfile.read_bytes()), keys)
        assert payload.decode() == trace_file.read_text()

    def test_seal_rejects_invalid_trace(self, tmp_path):
        keyfile = tmp_path / "keys"
        main(["keygen", "--out", str(keyfile)])
        bad = tmp_path / "bad.trace"
        bad.write_text("not a trace\n")
        rc = main(
            ["seal", "--trace", str(bad), "--key", str(keyfile), "--out", str(tmp_path / "o")]
        )
        assert rc == EXIT_PARSE


def free_port() -> int:
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


@pytest.fixture(scope="module")
def live_server(tmp_path_factory, trace_file):
    """`serve` running as a real subprocess, plus a sealed envelope to feed it."""
    root = tmp_path_factory.mktemp("serve")
    keyfile = root / "keys"
    envfile = root / "upload.env"
    main(["keygen", "--out", str(keyfile)])
    main(["seal", "--trace", str(trace_file), "--key", str(keyfile), "--out", str(envfile)])

    port = free_port()
    proc = subprocess.Popen(
        [
            sys.executable, "-m", "mobiliscope.cli", "serve",
            "--data", str(root / "data"), "--key", str(keyfile), "--port", str(port),
        ],
        stdout=subprocess.DEVNULL,
        stderr=subprocess.DEVNULL,
    )
    url = f"http://127.0.0.1:{port}"
    try:
        deadline = time.monotonic() + 15
        while True:
            try:
                httpx.get(url + "/v1/records", timeout=1.0)
                break
            except httpx.TransportError:
                if time.monotonic() > deadline or proc.poll() is not None:
                    raise RuntimeError("server did not start")
                time.sleep(0.1)
        yield url, envfile
    finally:
        proc.terminate()
        proc.wait(timeout=10)


class TestEndToEnd:
    def test_ingest_then_query(self, live_server, capsys):
        url, envfile = live_server
        assert main(["ingest", "--envelope", str(envfile), "--url", url]) == 0
        first = json.loads(capsys.readouterr().out)
        assert not first["duplicate"]

        assert main(["ingest", "--envelope", str(envfile), "--url", url]) == 0
        assert json.loads(capsys.readouterr().out)["duplicate"]

        assert main(["query", "--url", url, "modal-split"]) == 0
        split = json.loads(capsys.readouterr().out)
        assert split["by_mode"]["METRO"]["segment_count"] > 0

        assert main(["query", "--url", url, "carbon"]) == 0
        carbon = json.loads(capsys.readouterr().out)
        assert carbon["total_g"] > 0

        assert main(["query", "--url", url, "trips"]) == 0
        trips = json.loads(capsys.readouterr().out)
        assert trips["trips"] and "pseudonym" not in trips["trips"][0]

    def test_bad_query_is_http_error(self, live_server, capsys):
        url, _ = live_server
        assert main(["query", "--url", url, "trips", "--cursor", "junk"]) == EXIT_HTTP
        capsys.readouterr()

    def test_connection_refused(self, tmp_path, capsys):
        port = free_port()
        env = tmp_path / "e"
        env.write_bytes(b"\x01" + b"\x00" * 48)
        rc = main(["ingest", "--envelope", str(env), "--url", f"http://127.0.0.1:{port}"])
        assert rc == EXIT_CONNECT
        capsys.readouterr()
