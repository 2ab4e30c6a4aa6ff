"""The node daemon: one participant's window into the network.

Wires the signer (wallet), blockchain provider (ledger + consensus),
storage provider (blob store), provenance capturing service, and query
service behind the HTTP API, and gossips transactions and blocks with the
static peer list.

Concurrency: a single chain worker thread owns the pending pool and all
ledger appends; gossip ingest and the block-production timer feed it
through an ordered queue. Committed objects (blocks, world states,
receipts) are immutable once published, so API readers only need the
commit lock for multi-field consistency.
"""

from __future__ import annotations

import base64
import binascii
import json
import logging
import queue
import threading
from dataclasses import dataclass
from pathlib import Path

from . import chain, codec, consensus, engine, p2p
from .chainstore import ChainStore
from .clock import WallClock
from .contracts import (
    ALL_ACTIVITIES,
    KIND_DATASET,
    KIND_MODEL,
    MODEL_ACTIVITIES,
    contract_address,
)
from .genesis import Genesis
from .keys import KeyPair
from .ledger import (
    Block,
    Ledger,
    Transaction,
    intrinsic_gas,
    sign_transaction,
    verify_transaction,
)
from .p2p import Broadcaster, GossipServer, Peer
from .store import BlobStore, ContentId, verify_artifact
from .wallet import load_wallet

logger = logging.getLogger(__name__)

DEFAULT_GAS_LIMIT = 5_000_000
CAPTURE_KINDS = ("RegisterDataset", "RegisterModel", "RecordActivity", "Publish")

_ACTIVITY_LOOKUP = {a.lower().replace("-", "").replace("_", ""): a for a in ALL_ACTIVITIES}


def canonical_activity(name: str) -> str | None:
    """'train', 'select-data', 'SelectData' all map to the canonical name."""
    if not isinstance(name, str):
        return None
    return _ACTIVITY_LOOKUP.get(name.lower().replace("-", "").replace("_", ""))


class NodeError(Exception):
    pass


class CaptureError(NodeError):
    """Capture request failed; http_status says how to report it."""

    def __init__(self, http_status: int, message: str):
        super().__init__(message)
        self.http_status = http_status


@dataclass(frozen=True)
class NodeConfig:
    node_key_file: str
    genesis_file: str
    api_listen: str
    p2p_listen: str
    peers: tuple[Peer, ...]
    data_dir: str
    role: str = "validator"

    @classmethod
    def from_json(cls, doc: dict) -> "NodeConfig":
        return cls(
            node_key_file=doc["node_key_file"],
            genesis_file=doc["genesis_file"],
            api_listen=doc["api_listen"],
            p2p_listen=doc["p2p_listen"],
            peers=tuple(Peer.from_json(p) for p in doc.get("peers", [])),
            data_dir=doc["data_dir"],
            role=doc.get("role", "validator"),
        )

    @classmethod
    def load(cls, path: str | Path) -> "NodeConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json(json.load(fh))

    def to_json(self) -> dict:
        return {
            "node_key_file": self.node_key_file,
            "genesis_file": self.genesis_file,
            "api_listen": self.api_listen,
            "p2p_listen": self.p2p_listen,
            "peers": [p.to_json() for p in self.peers],
            "data_dir": self.data_dir,
            "role": self.role,
        }


def _split_listen(listen: str) -> tuple[str, int]:
    host, _, port = listen.rpartition(":")
    return host or "127.0.0.1", int(port)


class Node:
    def __init__(self, config: NodeConfig, passphrase: str, clock=None):
        self.config = config
        self.clock = clock if clock is not None else WallClock()
        self.genesis = Genesis.load(config.genesis_file)
        self.vset = consensus.ValidatorSet.from_genesis(self.genesis)

        keys = load_wallet(config.node_key_file, passphrase)
        if len(keys) != 1:
            raise NodeError("a node wallet holds exactly one participant identity")
        self.key: KeyPair = next(iter(keys.values()))
        self.address = self.key.address
        if self.genesis.participant_pubkey(self.address) is None:
            raise NodeError("node identity is not in the genesis participant allowlist")
        self.is_validator = config.role == "validator"
        if self.is_validator and self.address not in self.vset.validators:
            raise NodeError("validator role requires the node key in the genesis validator set")

        data_dir = Path(config.data_dir)
        data_dir.mkdir(parents=True, exist_ok=True)
        self.blob_store = BlobStore(data_dir / "blobs")
        self.chain_store = ChainStore(data_dir / "chain")

        # committed state (worker-owned writes; readers lock for consistency)
        self._lock = threading.RLock()
        self.new_block_cond = threading.Condition(self._lock)
        self.ledger = Ledger()
        self.world = engine.build_genesis_state(self.genesis)
        self.receipts: dict[bytes, engine.Receipt] = {}
        self.tx_heights: dict[bytes, int] = {}
        self.reject_log: list[tuple[str, str]] = []
        self.pool: dict[bytes, tuple[int, int, Transaction]] = {}
        self._pool_seq = 0
        self._nonce_floor = 0

        self._load_or_init_chain()

        self._queue: queue.Queue = queue.Queue()
        self._stop = threading.Event()
        self._threads: list[threading.Thread] = []
        self._syncing = threading.Event()

        host, port = _split_listen(config.p2p_listen)
        known = {p.address for p in self.genesis.participants}
        self.gossip = GossipServer(host, port, self.address, known, self._on_p2p_message)
        self.broadcaster = Broadcaster(self.address, list(config.peers))

        from .api import ApiServer  # late import: api imports node types

        api_host, api_port = _split_listen(config.api_listen)
        self.api = ApiServer(self, api_host, api_port)

    # ------------------------------------------------------------------
    # lifecycle
    # ------------------------------------------------------------------

    def _load_or_init_chain(self) -> None:
        stored = self.chain_store.load_all()
        if not stored:
            genesis_block = chain.make_genesis_block(self.genesis, self.world)
            self.ledger.append(genesis_block)
            self.chain_store.append(genesis_block, [])
            return
        # restart: replay from disk, re-validating every block
        world = engine.build_genesis_state(self.genesis)
        expected = chain.make_genesis_block(self.genesis, world)
        first, _ = stored[0]
        if first.header.to_bytes() != expected.header.to_bytes():
            raise NodeError("persisted genesis does not match the genesis file")
        self.ledger.append(first)
        for block, _receipts in stored[1:]:
            outcome = chain.validate_block(block, self.ledger.tip.header, world, self.genesis)
            if isinstance(outcome, chain.ValidationResult):
                raise NodeError(
                    f"persisted chain invalid at height {outcome.height}: {outcome.reason}"
                )
            world, receipts = outcome
            self.ledger.append(block)
            for tx, receipt in zip(block.transactions, receipts):
                self.tx_heights[tx.tx_id] = block.height
                self.receipts[tx.tx_id] = receipt
        self.world = world

    def start(self) -> None:
        self.gossip.start()
        self.api.start()
        worker = threading.Thread(target=self._worker_loop, name="chain-worker", daemon=True)
        worker.start()
        self._threads.append(worker)
        if self.is_validator:
            producer = threading.Thread(
                target=self._production_loop, name="block-producer", daemon=True
            )
            producer.start()
            self._threads.append(producer)

    def stop(self) -> None:
        self._stop.set()
        self._queue.put(("stop",))
        self.api.stop()
        self.gossip.stop()
        for t in self._threads:
            t.join(timeout=5)
        self._threads.clear()

    def stop_production(self) -> None:
        """Stops the slot timer only; the node keeps serving and ingesting."""
        self._stop.set()

    # ------------------------------------------------------------------
    # chain worker
    # ------------------------------------------------------------------

    def _worker_loop(self) -> None:
        while True:
            item = self._queue.get()
            kind = item[0]
            try:
                if kind == "stop":
                    return
                if kind == "tx":
                    self._handle_tx(item[1], item[2])
                elif kind == "block":
                    self._handle_block(item[1], item[2])
                elif kind == "produce":
                    self._handle_produce(item[1])
            except Exception:
                logger.exception("chain worker failed handling %s", kind)

    def _handle_tx(self, tx: Transaction, origin: bytes | None) -> None:
        with self._lock:
            if tx.tx_id in self.pool or tx.tx_id in self.tx_heights:
                return
            account = self.world.get_account(tx.sender)
            if account is None:
                return
            if tx.nonce < account.nonce:
                self.reject_log.append((tx.tx_id.hex(), "BadNonce"))
                return
            if tx.gas_limit < intrinsic_gas(tx, self.genesis.gas_schedule):
                self.reject_log.append((tx.tx_id.hex(), "GasTooLow"))
                return
            self._pool_seq += 1
            self.pool[tx.tx_id] = (self.clock.now_ms(), self._pool_seq, tx)
        self.broadcaster.broadcast(p2p.MSG_TX, tx.to_bytes(), exclude=origin)

    def _pending_in_order(self, arrived_before_ms: int | None = None) -> list[Transaction]:
        entries = sorted(self.pool.values(), key=lambda e: (e[0], e[2].tx_id))
        if arrived_before_ms is None:
            return [tx for _, _, tx in entries]
        return [tx for arr, _, tx in entries if arr <= arrived_before_ms]

    def _handle_produce(self, slot: int) -> None:
        with self._lock:
            parent = self.ledger.tip.header
            world = self.world
            if consensus.slot_start_ms(self.genesis, slot) <= parent.timestamp_ms:
                return
            cutoff = consensus.slot_start_ms(self.genesis, slot) - consensus.proposal_cutoff_ms(
                self.genesis
            )
            pending = self._pending_in_order(arrived_before_ms=cutoff)
        try:
            result = consensus.propose_block(pending, parent, world, slot, self.key, self.genesis)
        except consensus.NotYourSlot:
            return
        self._append_block(result.block, result.world, result.receipts, origin=None)
        with self._lock:
            for tx, reason in result.rejected:
                # future-nonce transactions wait for their turn; the rest drop
                if reason == "BadNonce" and tx.nonce > result.world.get_account(tx.sender).nonce:
                    continue
                if self.pool.pop(tx.tx_id, None) is not None:
                    self.reject_log.append((tx.tx_id.hex(), reason))

    def _handle_block(self, block, origin: bytes | None) -> None:
        with self._lock:
            tip = self.ledger.tip.header
            world = self.world
        if block.height <= tip.height:
            return  # duplicate delivery, ignored idempotently
        if block.height > tip.height + 1:
            self._start_sync(origin, tip.height + 1, block.height)
            return
        result = consensus.accept_block(block, tip, world, self.genesis)
        if not result.accepted:
            logger.debug("rejected block %d: %s", block.height, result.reason)
            return
        self._append_block(block, result.world, result.receipts, origin=origin)

    def _append_block(self, block, new_world, receipts, origin: bytes | None) -> None:
        with self._lock:
            self.ledger.append(block)
            self.world = new_world
            for tx, receipt in zip(block.transactions, receipts):
                self.pool.pop(tx.tx_id, None)
                self.tx_heights[tx.tx_id] = block.height
                self.receipts[tx.tx_id] = receipt
            # pool hygiene: entries overtaken by committed nonces can never
            # be included and become queryable as rejected
            stale = [
                tx_id
                for tx_id, (_, _, tx) in self.pool.items()
                if tx.nonce < new_world.get_account(tx.sender).nonce
            ]
            for tx_id in stale:
                self.pool.pop(tx_id, None)
                self.reject_log.append((tx_id.hex(), "BadNonce"))
            self.chain_store.append(block, receipts)
            self.new_block_cond.notify_all()
        self.broadcaster.broadcast(p2p.MSG_BLOCK, block.to_bytes(), exclude=origin)

    def _production_loop(self) -> None:
        while not self._stop.is_set():
            now = self.clock.now_ms()
            next_slot = consensus.current_slot(self.genesis, now) + 1
            start = consensus.slot_start_ms(self.genesis, next_slot)
            self.clock.wait_until(start, stop=self._stop)
            if self._stop.is_set():
                return
            # an overslept slot is treated as missed; producing a stale block
            # would race the next scheduled proposer
            if self.clock.now_ms() - start > 0.9 * self.genesis.block_interval_ms:
                continue
            if consensus.proposer_for_slot(self.vset, next_slot) == self.address:
                self._queue.put(("produce", next_slot))

    def _start_sync(self, origin: bytes | None, from_h: int, to_h: int) -> None:
        if self._syncing.is_set():
            return
        self._syncing.set()

        def run():
            try:
                peers = [p for p in self.config.peers if origin is None or p.address == origin]
                peers = peers or list(self.config.peers)
                body = codec.encode_fields(codec.encode_uint(from_h), codec.encode_uint(to_h))
                for peer in peers:
                    reply = self.broadcaster.request(peer, p2p.MSG_GET_BLOCKS, body)
                    if reply is None or reply[0] != p2p.MSG_BLOCKS:
                        continue
                    for raw in codec.read_fields(reply[1]):
                        self._queue.put(("block", Block.from_bytes(raw), peer.address))
                    return
            finally:
                self._syncing.clear()

        threading.Thread(target=run, name="chain-sync", daemon=True).start()

    # ------------------------------------------------------------------
    # p2p ingest
    # ------------------------------------------------------------------

    def _on_p2p_message(self, sender: bytes, msg_type: str, body: bytes):
        if msg_type == p2p.MSG_TX:
            self._queue.put(("tx", Transaction.from_bytes(body), sender))
            return None
        if msg_type == p2p.MSG_BLOCK:
            self._queue.put(("block", Block.from_bytes(body), sender))
            return None
        if msg_type == p2p.MSG_GET_BLOCKS:
            f = codec.read_fields(body)
            lo, hi = codec.decode_uint(f[0]), codec.decode_uint(f[1])
            hi = min(hi, lo + 500)
            with self._lock:
                blocks = [
                    self.ledger.blocks[h].to_bytes()
                    for h in range(lo, hi + 1)
                    if h <= self.ledger.height
                ]
            return p2p.MSG_BLOCKS, codec.encode_fields(*blocks)
        if msg_type == p2p.MSG_PUSH_BLOB:
            self.blob_store.put(body, pin=True)
            return None
        if msg_type == p2p.MSG_GET_BLOB:
            f = codec.read_fields(body)
            cid = ContentId(f[0], codec.decode_uint(f[1]))
            blob = self.blob_store.get_local(cid)
            return p2p.MSG_BLOB, blob if blob is not None else b""
        logger.debug("unknown p2p message type %r", msg_type)
        return None

    # ------------------------------------------------------------------
    # blobs: replication + retrieval
    # ------------------------------------------------------------------

    def offload_blob(self, blob: bytes) -> ContentId:
        """Store locally, then push copies to the next R-1 validators in
        ring order (deterministic placement)."""
        cid = self.blob_store.put(blob, pin=True)
        ring = list(self.vset.validators)
        start = ring.index(self.address) + 1 if self.address in ring else 0
        wanted = self.genesis.replication_factor - 1
        pushed = 0
        peer_by_addr = {p.address: p for p in self.config.peers}
        for i in range(len(ring)):
            if pushed >= wanted:
                break
            target = ring[(start + i) % len(ring)]
            if target == self.address:
                continue
            peer = peer_by_addr.get(target)
            if peer is None:
                continue
            try:
                p2p.send_message(peer, self.address, p2p.MSG_PUSH_BLOB, blob)
                pushed += 1
            except (OSError, p2p.ProtocolError) as exc:
                logger.warning("blob replication to %s failed: %s", peer.host, exc)
        return cid

    def fetch_blob(self, cid: ContentId) -> bytes:
        """Local copy, else parallel peer fan-out; first verified wins."""

        def peer_fetch(content_id: ContentId) -> bytes | None:
            result: list[bytes] = []
            done = threading.Event()
            body = codec.encode_fields(content_id.hash, codec.encode_uint(content_id.size))

            def ask(peer):
                reply = self.broadcaster.request(peer, p2p.MSG_GET_BLOB, body)
                if reply is None or reply[0] != p2p.MSG_BLOB or not reply[1]:
                    return
                if verify_artifact(reply[1], content_id):
                    result.append(reply[1])
                    done.set()
                else:
                    logger.warning("peer %s served corrupt bytes for %s", peer.host, content_id.hex)

            threads = [
                threading.Thread(target=ask, args=(peer,), daemon=True)
                for peer in self.config.peers
            ]
            for t in threads:
                t.start()
            done.wait(timeout=p2p.REPLY_TIMEOUT_S)
            return result[0] if result else None

        return self.blob_store.get(cid, peer_fetch=peer_fetch)

    # ------------------------------------------------------------------
    # provenance capture service
    # ------------------------------------------------------------------

    def capture(self, doc: dict) -> dict:
        kind = doc.get("kind")
        if kind not in CAPTURE_KINDS:
            raise CaptureError(400, f"kind must be one of {CAPTURE_KINDS}")
        asset_hex = doc.get("asset")
        if kind in ("RegisterDataset", "RegisterModel") and asset_hex:
            raise CaptureError(400, "registration requests must not carry an asset")
        if kind in ("RecordActivity", "Publish") and not asset_hex:
            raise CaptureError(400, f"{kind} requires an asset address")
        if self.config.role == "observer" and not self.config.peers:
            raise CaptureError(503, "observer node with no peers cannot submit")

        payload = doc.get("payload") or {}
        if not isinstance(payload, dict):
            raise CaptureError(400, "payload must be an object")
        sections = {
            key: payload.get(key) or {} for key in ("inputs", "outputs", "params")
        }
        for name, section in sections.items():
            if not isinstance(section, dict):
                raise CaptureError(400, f"payload.{name} must be an object")

        inline_cid: ContentId | None = None
        if doc.get("inline_blob"):
            try:
                blob = base64.b64decode(doc["inline_blob"], validate=True)
            except (binascii.Error, ValueError) as exc:
                raise CaptureError(400, f"inline_blob is not valid base64: {exc}") from exc
            if not blob:
                raise CaptureError(400, "inline_blob must be non-empty")
            inline_cid = self.offload_blob(blob)

        target: bytes | None
        if kind == "RegisterDataset":
            args = {"metadata": doc.get("metadata")}
            if doc.get("ancestor"):
                args["ancestor"] = doc["ancestor"]
            if inline_cid is not None:
                args["anchor"] = inline_cid.to_json()
            elif doc.get("anchor"):
                args["anchor"] = doc["anchor"]
            op, target = "register_dataset", self._registry_address()
        elif kind == "RegisterModel":
            args = {"metadata": doc.get("metadata")}
            op, target = "register_model", self._registry_address()
        elif kind == "RecordActivity":
            activity = canonical_activity(doc.get("activity"))
            if activity is None or activity not in MODEL_ACTIVITIES:
                raise CaptureError(400, "unknown workflow activity")
            if inline_cid is not None:
                sections["outputs"]["content_anchor"] = inline_cid.to_json()
            args = {"activity": activity, **sections}
            op, target = "record_activity", self._parse_asset(asset_hex)
        else:  # Publish
            anchor = inline_cid.to_json() if inline_cid is not None else doc.get("anchor")
            if not anchor:
                raise CaptureError(400, "Publish requires inline_blob or anchor")
            args = {"anchor": anchor}
            op, target = "publish", self._parse_asset(asset_hex)

        gas_limit = int(doc.get("gas_limit") or DEFAULT_GAS_LIMIT)
        tx = self._sign_with_fresh_nonce(target, op, args, gas_limit)
        self._queue.put(("tx", tx, None))
        asset = None
        if kind in ("RegisterDataset", "RegisterModel"):
            asset = contract_address(self.address, tx.nonce).hex()
        return {
            "tx_id": tx.tx_id.hex(),
            "asset": asset,
            "status_url": f"/v1/tx/{tx.tx_id.hex()}",
        }

    def _registry_address(self) -> bytes:
        with self._lock:
            registry = self.world.registry()
        if registry is None:
            raise CaptureError(503, "no registry contract on this chain")
        return registry.address

    def _parse_asset(self, asset_hex: str) -> bytes:
        try:
            raw = bytes.fromhex(asset_hex)
        except (TypeError, ValueError):
            raise CaptureError(400, "asset must be a 40-hex-char address") from None
        if len(raw) != 20:
            raise CaptureError(400, "asset must be a 40-hex-char address")
        return raw

    def _sign_with_fresh_nonce(self, target, op, args, gas_limit) -> Transaction:
        last_reject = None
        for _ in range(3):
            with self._lock:
                committed = self.world.get_account(self.address).nonce
                if not any(tx.sender == self.address for _, _, tx in self.pool.values()):
                    self._nonce_floor = committed
                nonce = max(committed, self._nonce_floor)
                self._nonce_floor = nonce + 1
                world = self.world
            try:
                tx = engine.make_call_tx(self.address, nonce, target, op, args, gas_limit)
                tx = sign_transaction(tx, self.key)
            except codec.EncodingError as exc:
                raise CaptureError(400, f"unencodable payload: {exc}") from exc
            if nonce == world.get_account(self.address).nonce:
                reject = verify_transaction(tx, world, self.genesis.gas_schedule)
                if reject == "BadNonce":
                    last_reject = reject
                    continue
                if reject == "GasTooLow":
                    raise CaptureError(400, "gas_limit below intrinsic cost")
            return tx
        raise CaptureError(409, f"nonce assignment raced three times ({last_reject})")

    # ------------------------------------------------------------------
    # query service (read-only views)
    # ------------------------------------------------------------------

    def tx_status(self, tx_id: bytes) -> dict:
        with self._lock:
            height = self.tx_heights.get(tx_id)
            tip = self.ledger.height
            receipt = self.receipts.get(tx_id)
            rejected = None
            if height is None:
                wanted = tx_id.hex()
                rejected = next((r for t, r in self.reject_log if t == wanted), None)
        if height is None:
            out = {"included": False, "confirmations": 0}
            if rejected is not None:
                out["rejected"] = True
                out["reason"] = rejected
            return out
        out = {
            "included": True,
            "height": height,
            "confirmations": tip - height + 1,
            "receipt": receipt.to_json(),
        }
        if "accepted_transition" in receipt.result:
            out["accepted_transition"] = receipt.result["accepted_transition"]
        return out

    def block_view(self, height: int) -> dict | None:
        with self._lock:
            block = self.ledger.block_at(height)
        if block is None:
            return None
        return {
            "height": block.height,
            "block_hash": block.block_hash.hex(),
            "parent_hash": block.header.parent_hash.hex(),
            "timestamp_ms": block.header.timestamp_ms,
            "proposer": block.header.proposer.hex(),
            "state_root": block.header.state_root.hex(),
            "event_root": block.header.event_root.hex(),
            "tx_ids": [tx.tx_id.hex() for tx in block.transactions],
        }

    def asset_view(self, address: bytes) -> dict | None:
        with self._lock:
            inst = self.world.get_contract(address)
        if inst is None or inst.kind not in (KIND_DATASET, KIND_MODEL):
            return None
        storage = inst.storage
        return {
            "asset": address.hex(),
            "kind": inst.kind,
            "owner": storage.owner.hex(),
            "metadata": storage.metadata,
            "stage": storage.stage,
            "ancestor": storage.ancestor.hex() if getattr(storage, "ancestor", None) else None,
            "artifact_anchor": storage.artifact_anchor.to_json()
            if storage.artifact_anchor
            else None,
            "history_length": len(storage.history),
        }

    def asset_history(self, address: bytes) -> list[dict] | None:
        with self._lock:
            inst = self.world.get_contract(address)
            if inst is None or inst.kind not in (KIND_DATASET, KIND_MODEL):
                return None
            return [r.to_json() for r in inst.storage.history]

    def assets_view(self, participant: bytes | None) -> dict:
        with self._lock:
            registry = self.world.registry()
            storage = registry.storage
            if participant is not None:
                return {"assets": [a.hex() for a in storage.by_participant.get(participant, [])]}
            return {
                "datasets": [a.hex() for a in storage.dataset_addresses],
                "models": [a.hex() for a in storage.model_addresses],
            }

    def events_since(self, from_height: int, timeout_ms: int) -> dict:
        """Long-poll: returns as soon as any events at or above from_height
        exist, else waits for new blocks until the timeout elapses."""
        deadline = self.clock.now_ms() + max(0, timeout_ms)
        with self.new_block_cond:
            while True:
                tip = self.ledger.height
                events = []
                for h in range(from_height, tip + 1):
                    for tx in self.ledger.blocks[h].transactions:
                        receipt = self.receipts.get(tx.tx_id)
                        if receipt:
                            events.extend(e.to_json() for e in receipt.events)
                if events or self.clock.now_ms() >= deadline:
                    return {"events": events, "next_from": max(tip + 1, from_height)}
                remaining = self.clock.real_seconds_until(deadline)
                self.new_block_cond.wait(timeout=max(0.01, min(remaining, 0.5)))

    def status_view(self) -> dict:
        with self._lock:
            tip = self.ledger.tip
            return {
                "chain_id": self.genesis.chain_id,
                "node": self.address.hex(),
                "role": self.config.role,
                "height": tip.height,
                "block_hash": tip.block_hash.hex(),
                "state_root": tip.header.state_root.hex(),
                "pending": len(self.pool),
                "contracts": self.world.next_contract_seq,
                "time_ms": self.clock.now_ms(),
            }
