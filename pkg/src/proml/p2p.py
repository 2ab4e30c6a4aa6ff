"""Peer-to-peer transport: length-prefixed canonical-encoded messages over
TCP with a static peer list.

One message (optionally one reply) per connection keeps the protocol
stateless. Every envelope carries the sender's participant address; nodes
drop messages from identities outside the genesis allowlist. Transactions
and blocks flood push-style; block ranges and blobs are request/response.
"""

from __future__ import annotations

import logging
import socket
import socketserver
import threading
from dataclasses import dataclass

from . import codec

logger = logging.getLogger(__name__)

MSG_TX = "tx"
MSG_BLOCK = "block"
MSG_GET_BLOCKS = "get_blocks"
MSG_BLOCKS = "blocks"
MSG_PUSH_BLOB = "push_blob"
MSG_GET_BLOB = "get_blob"
MSG_BLOB = "blob"

MAX_FRAME_BYTES = 64 << 20
CONNECT_TIMEOUT_S = 3.0
REPLY_TIMEOUT_S = 10.0


@dataclass(frozen=True)
class Peer:
    address: bytes  # participant identity
    host: str
    port: int

    def to_json(self) -> dict:
        return {"address": self.address.hex(), "host": self.host, "port": self.port}

    @classmethod
    def from_json(cls, doc: dict) -> "Peer":
        return cls(bytes.fromhex(doc["address"]), doc["host"], int(doc["port"]))


class ProtocolError(Exception):
    pass


def _read_exact(sock: socket.socket, n: int) -> bytes:
    buf = b""
    while len(buf) < n:
        chunk = sock.recv(n - len(buf))
        if not chunk:
            raise ProtocolError("connection closed mid-frame")
        buf += chunk
    return buf


def read_frame(sock: socket.socket) -> tuple[bytes, str, bytes]:
    """Returns (sender_address, message_type, body)."""
    size = int.from_bytes(_read_exact(sock, 4), "big")
    if size > MAX_FRAME_BYTES:
        raise ProtocolError(f"frame of {size} bytes exceeds limit")
    envelope = _read_exact(sock, size)
    fields = codec.read_fields(envelope)
    if len(fields) != 3:
        raise ProtocolError("envelope must carry sender, type, body")
    return fields[0], fields[1].decode("utf-8"), fields[2]


def write_frame(sock: socket.socket, sender: bytes, msg_type: str, body: bytes) -> None:
    envelope = codec.encode_fields(sender, msg_type.encode("utf-8"), body)
    sock.sendall(len(envelope).to_bytes(4, "big") + envelope)


def send_message(
    peer: Peer,
    sender: bytes,
    msg_type: str,
    body: bytes,
    expect_reply: bool = False,
    timeout: float = REPLY_TIMEOUT_S,
) -> tuple[str, bytes] | None:
    """One-shot connect/send(/receive). Raises OSError/ProtocolError on failure."""
    with socket.create_connection((peer.host, peer.port), timeout=CONNECT_TIMEOUT_S) as sock:
        write_frame(sock, sender, msg_type, body)
        if not expect_reply:
            return None
        sock.settimeout(timeout)
        _, reply_type, reply_body = read_frame(sock)
        return reply_type, reply_body


class _Handler(socketserver.BaseRequestHandler):
    def handle(self):
        server: GossipServer = self.server  # type: ignore[assignment]
        try:
            sender, msg_type, body = read_frame(self.request)
        except (ProtocolError, codec.EncodingError, OSError) as exc:
            logger.debug("dropping malformed p2p frame: %s", exc)
            return
        if sender not in server.known_identities:
            logger.debug("dropping message from unknown peer %s", sender.hex())
            return
        try:
            reply = server.on_message(sender, msg_type, body)
        except Exception:
            logger.exception("p2p handler failed for %s", msg_type)
            return
        if reply is not None:
            reply_type, reply_body = reply
            try:
                write_frame(self.request, server.identity, reply_type, reply_body)
            except OSError:
                pass


class GossipServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, host: str, port: int, identity: bytes,
                 known_identities: set[bytes], on_message):
        self.identity = identity
        self.known_identities = known_identities
        self.on_message = on_message
        super().__init__((host, port), _Handler)
        self._thread: threading.Thread | None = None

    @property
    def port(self) -> int:
        return self.server_address[1]

    def start(self) -> None:
        self._thread = threading.Thread(
            target=self.serve_forever, name="p2p-server", daemon=True
        )
        self._thread.start()

    def stop(self) -> None:
        self.shutdown()
        self.server_close()
        if self._thread:
            self._thread.join(timeout=5)


class Broadcaster:
    """Push-based flooding to the static peer list; send failures are logged
    and skipped so one dead peer never blocks the others."""

    def __init__(self, identity: bytes, peers: list[Peer]):
        self.identity = identity
        self.peers = peers

    def broadcast(self, msg_type: str, body: bytes, exclude: bytes | None = None) -> int:
        delivered = 0
        for peer in self.peers:
            if exclude is not None and peer.address == exclude:
                continue
            try:
                send_message(peer, self.identity, msg_type, body)
                delivered += 1
            except (OSError, ProtocolError) as exc:
                logger.debug("broadcast %s to %s failed: %s", msg_type, peer.host, exc)
        return delivered

    def request(self, peer: Peer, msg_type: str, body: bytes,
                timeout: float = REPLY_TIMEOUT_S) -> tuple[str, bytes] | None:
        try:
            return send_message(peer, self.identity, msg_type, body,
                                expect_reply=True, timeout=timeout)
        except (OSError, ProtocolError) as exc:
            logger.debug("request %s to %s failed: %s", msg_type, peer.host, exc)
            return None
