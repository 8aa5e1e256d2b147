"""Shared fixtures: toy corpus, oracle backend, stub HTTP server."""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from emosura.manifest import read_manifest
from emosura.mock import OracleBackend
from emosura.toydata import build_toy_corpus


@pytest.fixture(scope="session")
def toy_corpus(tmp_path_factory):
    directory = tmp_path_factory.mktemp("toy_corpus")
    manifest_path, truth_path = build_toy_corpus(directory)
    return {
        "dir": directory,
        "manifest": manifest_path,
        "truth": truth_path,
        "records": read_manifest(manifest_path),
        "truth_table": json.loads(truth_path.read_text()),
    }


@pytest.fixture()
def oracle(toy_corpus):
    return OracleBackend(toy_corpus["truth_table"], strict=True)


class _StubState:
    def __init__(self):
        self.requests: list[dict] = []
        self.response_body: dict | str = {
            "choices": [{"message": {"role": "assistant", "content": "stub reply"}}]
        }
        self.status = 200
        self.delay_s = 0.0


class _StubHandler(BaseHTTPRequestHandler):
    state: _StubState = None  # set per server

    def do_POST(self):
        import time as _time

        state = self.server.state
        length = int(self.headers.get("Content-Length", 0))
        payload = json.loads(self.rfile.read(length) or b"{}")
        state.requests.append({
            "path": self.path,
            "payload": payload,
            "authorization": self.headers.get("Authorization"),
        })
        if state.delay_s:
            _time.sleep(state.delay_s)
        body = state.response_body
        raw = (body if isinstance(body, str) else json.dumps(body)).encode("utf-8")
        self.send_response(state.status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(raw)))
        self.end_headers()
        self.wfile.write(raw)

    def log_message(self, *args):  # quiet
        pass


@pytest.fixture()
def stub_server():
    server = ThreadingHTTPServer(("127.0.0.1", 0), _StubHandler)
    server.state = _StubState()
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    url = f"http://127.0.0.1:{server.server_address[1]}"
    try:
        yield server.state, url
    finally:
        server.shutdown()
        server.server_close()
