import hashlib
import json
import socket
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest


class StubNode:
    """Recording stand-in for a node API: captures raw request bytes and
    serves scripted responses."""

    def __init__(self):
        self.recorded = []  # (method, path, body_bytes, headers dict)
        self.drop_next = 0  # abruptly close this many connections first
        self.capture_status = 202
        self.capture_error = "scripted failure"
        self.receipt_result = {}
        self.tx_counter = 0

        stub = self

        class Handler(BaseHTTPRequestHandler):
            protocol_version = "HTTP/1.1"

            def log_message(self, *args):
                pass

            def _reply(self, status, doc):
                body = json.dumps(doc).encode()
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)

            def _drop_connection(self):
                stub.drop_next -= 1
                try:
                    self.connection.shutdown(socket.SHUT_RDWR)
                finally:
                    self.connection.close()

            def do_POST(self):
                if stub.drop_next > 0:
                    self._drop_connection()
                    return
                length = int(self.headers.get("Content-Length") or 0)
                body = self.rfile.read(length)
                stub.recorded.append(("POST", self.path, body, dict(self.headers)))
                if stub.capture_status != 202:
                    return self._reply(stub.capture_status, {"error": stub.capture_error})
                stub.tx_counter += 1
                tx_id = hashlib.sha256(f"tx{stub.tx_counter}".encode()).hexdigest()
                doc = json.loads(body) if body else {}
                asset = None
                if doc.get("kind") in ("RegisterDataset", "RegisterModel"):
                    asset = hashlib.sha256(f"asset{stub.tx_counter}".encode()).hexdigest()[:40]
                self._reply(202, {"tx_id": tx_id, "asset": asset,
                                  "status_url": f"/v1/tx/{tx_id}"})

            def do_GET(self):
                if stub.drop_next > 0:
                    self._drop_connection()
                    return
                stub.recorded.append(("GET", self.path, b"", dict(self.headers)))
                if self.path.startswith("/v1/tx/"):
                    return self._reply(200, {
                        "included": True,
                        "height": 1,
                        "confirmations": 1,
                        "receipt": {
                            "tx_id": self.path.rsplit("/", 1)[1],
                            "status": "success",
                            "reason": None,
                            "gas_used": 280000,
                            "events": [],
                            "new_contract": None,
                            "result": stub.receipt_result,
                        },
                        "accepted_transition": stub.receipt_result.get("accepted_transition"),
                    })
                self._reply(404, {"error": "no such endpoint"})

        class QuietServer(ThreadingHTTPServer):
            daemon_threads = True

            def handle_error(self, request, client_address):
                pass  # dropped connections are intentional in these tests

        self._httpd = QuietServer(("127.0.0.1", 0), Handler)
        self._thread = threading.Thread(target=self._httpd.serve_forever, daemon=True)

    @property
    def url(self):
        return f"http://127.0.0.1:{self._httpd.server_address[1]}"

    def start(self):
        self._thread.start()
        return self

    def stop(self):
        self._httpd.shutdown()
        self._httpd.server_close()

    def posts(self):
        return [r for r in self.recorded if r[0] == "POST"]


@pytest.fixture
def stub():
    node = StubNode().start()
    yield node
    node.stop()
