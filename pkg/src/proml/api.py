"""JSON-over-HTTP node API.

Hashes and addresses travel hex-encoded; submission is asynchronous (202
plus a status_url to poll) because block inclusion takes a slot or two.

    POST /v1/provenance                      capture request -> 202
    GET  /v1/tx/{tx_id}                      inclusion, confirmations, receipt
    GET  /v1/assets/{address}                current asset state
    GET  /v1/assets/{address}/history        full provenance history
    GET  /v1/assets?participant={address}    registry lookup
    GET  /v1/events?from_height=N            long-poll event stream
    GET  /v1/blocks/{height}                 header view
    GET  /v1/blobs/{hash}?size=N             off-chain blob retrieval
    GET  /v1/status                          tip + node identity
"""

from __future__ import annotations

import json
import logging
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlparse

from .node import CaptureError
from .store import ContentId, IntegrityError, NotFound

logger = logging.getLogger(__name__)

MAX_BODY_BYTES = 512 << 20


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"

    @property
    def node(self):
        return self.server.node  # type: ignore[attr-defined]

    def log_message(self, fmt, *args):
        logger.debug("api %s " + fmt, self.client_address[0], *args)

    def _send_json(self, status: int, doc: dict) -> None:
        body = json.dumps(doc).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _send_bytes(self, status: int, blob: bytes) -> None:
        self.send_response(status)
        self.send_header("Content-Type", "application/octet-stream")
        self.send_header("Content-Length", str(len(blob)))
        self.end_headers()
        self.wfile.write(blob)

    def _error(self, status: int, message: str) -> None:
        self._send_json(status, {"error": message})

    def _read_body(self) -> dict | None:
        length = int(self.headers.get("Content-Length") or 0)
        if length > MAX_BODY_BYTES:
            self._error(400, "request body too large")
            return None
        raw = self.rfile.read(length) if length else b"{}"
        try:
            doc = json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            self._error(400, f"malformed JSON body: {exc}")
            return None
        if not isinstance(doc, dict):
            self._error(400, "body must be a JSON object")
            return None
        return doc

    @staticmethod
    def _hex20(value: str) -> bytes | None:
        try:
            raw = bytes.fromhex(value)
        except ValueError:
            return None
        return raw if len(raw) == 20 else None

    # ------------------------------------------------------------------

    def do_POST(self):  # noqa: N802 (stdlib naming)
        url = urlparse(self.path)
        if url.path != "/v1/provenance":
            return self._error(404, "no such endpoint")
        doc = self._read_body()
        if doc is None:
            return
        try:
            out = self.node.capture(doc)
        except CaptureError as exc:
            return self._error(exc.http_status, str(exc))
        self._send_json(202, out)

    def do_GET(self):  # noqa: N802
        url = urlparse(self.path)
        parts = [p for p in url.path.split("/") if p]
        query = {k: v[0] for k, v in parse_qs(url.query).items()}
        if len(parts) < 2 or parts[0] != "v1":
            return self._error(404, "no such endpoint")
        head = parts[1]

        if head == "status" and len(parts) == 2:
            return self._send_json(200, self.node.status_view())

        if head == "tx" and len(parts) == 3:
            try:
                tx_id = bytes.fromhex(parts[2])
            except ValueError:
                return self._error(400, "tx id must be hex")
            return self._send_json(200, self.node.tx_status(tx_id))

        if head == "blocks" and len(parts) == 3:
            try:
                height = int(parts[2])
            except ValueError:
                return self._error(400, "height must be an integer")
            view = self.node.block_view(height)
            if view is None:
                return self._error(404, "no block at that height")
            return self._send_json(200, view)

        if head == "assets" and len(parts) == 2:
            participant = None
            if "participant" in query:
                participant = self._hex20(query["participant"])
                if participant is None:
                    return self._error(400, "participant must be a 40-hex-char address")
            return self._send_json(200, self.node.assets_view(participant))

        if head == "assets" and len(parts) in (3, 4):
            address = self._hex20(parts[2])
            if address is None:
                return self._error(400, "asset must be a 40-hex-char address")
            if len(parts) == 4 and parts[3] != "history":
                return self._error(404, "no such endpoint")
            if len(parts) == 4:
                history = self.node.asset_history(address)
                if history is None:
                    return self._error(404, "unknown asset")
                return self._send_json(200, {"asset": parts[2], "history": history})
            view = self.node.asset_view(address)
            if view is None:
                return self._error(404, "unknown asset")
            return self._send_json(200, view)

        if head == "events" and len(parts) == 2:
            try:
                from_height = int(query.get("from_height", "0"))
                timeout_ms = int(query.get("timeout_ms", "10000"))
            except ValueError:
                return self._error(400, "from_height and timeout_ms must be integers")
            return self._send_json(200, self.node.events_since(from_height, timeout_ms))

        if head == "blobs" and len(parts) == 3:
            try:
                digest = bytes.fromhex(parts[2])
                size = int(query["size"]) if "size" in query else None
            except (ValueError, KeyError):
                return self._error(400, "blob hash must be hex; size an integer")
            if len(digest) != 32:
                return self._error(400, "blob hash must be 32 bytes of hex")
            if size is None:
                path = self.node.blob_store.content_dir / digest.hex()
                if not path.exists():
                    return self._error(404, "blob not held locally; supply ?size= for peer fetch")
                size = path.stat().st_size
            try:
                blob = self.node.fetch_blob(ContentId(digest, size))
            except NotFound:
                return self._error(404, "no local or peer copy of that blob")
            except IntegrityError as exc:
                return self._error(502, str(exc))
            return self._send_bytes(200, blob)

        return self._error(404, "no such endpoint")


class ApiServer:
    def __init__(self, node, host: str, port: int):
        self._httpd = ThreadingHTTPServer((host, port), _Handler)
        self._httpd.daemon_threads = True
        self._httpd.node = node  # type: ignore[attr-defined]
        self._thread: threading.Thread | None = None

    @property
    def port(self) -> int:
        return self._httpd.server_address[1]

    def start(self) -> None:
        self._thread = threading.Thread(
            target=self._httpd.serve_forever, name="api-server", daemon=True
        )
        self._thread.start()

    def stop(self) -> None:
        self._httpd.shutdown()
        self._httpd.server_close()
        if self._thread:
            self._thread.join(timeout=5)
