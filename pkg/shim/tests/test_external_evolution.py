"""Full external-candidate loop: a mock chat endpoint emits an Improver class,
the evolve command writes it to a child directory with a shim launch spec, and
the offspring is evaluated over the wire protocol."""
import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer
from pathlib import Path

import pytest

from triplehop.cli import main

IDENTITY_SOURCE = (Path(__file__).parent / "fixtures" / "identity_hex.py").read_text()


class _Endpoint(BaseHTTPRequestHandler):
    def do_POST(self):
        self.rfile.read(int(self.headers["Content-Length"]))
        content = "A child, as requested:\n```python\n" + IDENTITY_SOURCE + "\n```"
        body = json.dumps({"choices": [{"message": {"content": content}}]}).encode()
        self.send_response(200)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def log_message(self, *args):
        pass


@pytest.fixture
def endpoint_config(tmp_path):
    server = HTTPServer(("127.0.0.1", 0), _Endpoint)
    threading.Thread(target=server.serve_forever, daemon=True).start()
    cfg = tmp_path / "endpoint.json"
    cfg.write_text(json.dumps({
        "base_url": f"http://127.0.0.1:{server.server_port}",
        "model": "mock", "temperature": 1.0,
    }))
    yield cfg
    server.shutdown()


def test_external_children_created_and_evaluated(tmp_path, endpoint_config, capsys):
    archive_path = tmp_path / "archive.json"
    rc = main(["evolve", "hex", "--n", "2", "--generations", "1",
               "--mutation", "external", "--endpoint", str(endpoint_config),
               "--fitness-range=-6,-1.5",
               "--eval-seeds", "1", "--eval-rounds", "0", "--seed", "0",
               "--archive", str(archive_path),
               "--report", str(tmp_path / "reports.jsonl")])
    assert rc == 0
    archive = json.loads(archive_path.read_text())
    kinds = {c["kind"] for c in archive["bins"] if c}
    assert "external-process" in kinds
    children = list((tmp_path / "archive-children").rglob("improver.py"))
    assert children and "class Improver" in children[0].read_text()
    reports = [json.loads(line) for line in
               (tmp_path / "reports.jsonl").read_text().splitlines()]
    assert any(r["status"] == "inserted" for r in reports)
