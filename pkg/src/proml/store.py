"""Content-addressed blob store with pinning and peer fallback.

Layout on disk: blobs live under ``<dir>/content/<hex sha256>``; the pin
set is a flat ``pins.txt`` manifest (one "<hex> <size>" line per pin)
rewritten atomically. Pinned blobs survive restarts; unpinned blobs form
an LRU cache bounded by a byte budget.
"""

from __future__ import annotations

import hashlib
import os
import threading
import time
from dataclasses import dataclass
from pathlib import Path

DEFAULT_MAX_BLOB = 1 << 30  # 1 GiB
DEFAULT_CACHE_BUDGET = 256 << 20


class StoreError(Exception):
    pass


class TooLarge(StoreError):
    pass


class NotFound(StoreError):
    pass


class IntegrityError(StoreError):
    """Bytes did not match the content id they were served under."""


@dataclass(frozen=True)
class ContentId:
    hash: bytes  # sha256 of the blob
    size: int

    @classmethod
    def for_blob(cls, blob: bytes) -> "ContentId":
        return cls(hashlib.sha256(blob).digest(), len(blob))

    @property
    def hex(self) -> str:
        return self.hash.hex()

    def to_json(self) -> dict:
        return {"hash": self.hash.hex(), "size": self.size}

    @classmethod
    def from_json(cls, doc: dict) -> "ContentId":
        return cls(bytes.fromhex(doc["hash"]), int(doc["size"]))


def verify_artifact(blob: bytes, anchor: ContentId) -> bool:
    """Match iff both the SHA-256 and the byte count agree."""
    return len(blob) == anchor.size and hashlib.sha256(blob).digest() == anchor.hash


class BlobStore:
    """Local blob storage for one node. Thread-safe."""

    def __init__(
        self,
        root: str | Path,
        max_blob_bytes: int = DEFAULT_MAX_BLOB,
        cache_budget_bytes: int = DEFAULT_CACHE_BUDGET,
    ):
        self.root = Path(root)
        self.content_dir = self.root / "content"
        self.manifest_path = self.root / "pins.txt"
        self.max_blob_bytes = max_blob_bytes
        self.cache_budget_bytes = cache_budget_bytes
        self._lock = threading.Lock()
        self._pins: dict[bytes, int] = {}
        self._cache_touch: dict[bytes, float] = {}
        self.content_dir.mkdir(parents=True, exist_ok=True)
        self._load_manifest()

    def _load_manifest(self) -> None:
        if not self.manifest_path.exists():
            return
        for line in self.manifest_path.read_text(encoding="utf-8").splitlines():
            line = line.strip()
            if not line:
                continue
            hex_hash, size = line.split()
            self._pins[bytes.fromhex(hex_hash)] = int(size)

    def _write_manifest_locked(self) -> None:
        tmp = self.manifest_path.with_suffix(".tmp")
        body = "".join(f"{h.hex()} {s}\n" for h, s in sorted(self._pins.items()))
        tmp.write_text(body, encoding="utf-8")
        os.replace(tmp, self.manifest_path)

    def _blob_path(self, digest: bytes) -> Path:
        return self.content_dir / digest.hex()

    def _write_blob(self, blob: bytes, digest: bytes) -> None:
        path = self._blob_path(digest)
        if path.exists():
            return
        tmp = path.with_name(path.name + ".tmp")
        try:
            tmp.write_bytes(blob)
            os.replace(tmp, path)
        except OSError as exc:
            raise StoreError(f"cannot write blob: {exc}") from exc

    def put(self, blob: bytes, pin: bool = True) -> ContentId:
        """Store and (by default) pin a blob; idempotent on equal bytes."""
        if not blob:
            raise StoreError("blob must be non-empty")
        if len(blob) > self.max_blob_bytes:
            raise TooLarge(f"blob of {len(blob)} bytes exceeds limit {self.max_blob_bytes}")
        cid = ContentId.for_blob(blob)
        with self._lock:
            self._write_blob(blob, cid.hash)
            if pin:
                if self._pins.get(cid.hash) != cid.size:
                    self._pins[cid.hash] = cid.size
                    self._write_manifest_locked()
                self._cache_touch.pop(cid.hash, None)
            elif cid.hash not in self._pins:
                self._cache_touch[cid.hash] = time.monotonic()
                self._evict_over_budget_locked()
        return cid

    def _evict_over_budget_locked(self) -> None:
        total = 0
        for digest in self._cache_touch:
            try:
                total += self._blob_path(digest).stat().st_size
            except OSError:
                continue
        if total <= self.cache_budget_bytes:
            return
        for digest, _ in sorted(self._cache_touch.items(), key=lambda kv: kv[1]):
            if total <= self.cache_budget_bytes:
                break
            path = self._blob_path(digest)
            try:
                size = path.stat().st_size
                path.unlink()
                total -= size
            except OSError:
                pass
            del self._cache_touch[digest]

    def has_local(self, cid: ContentId) -> bool:
        return self._blob_path(cid.hash).exists()

    def get_local(self, cid: ContentId) -> bytes | None:
        """Local lookup with integrity verification; None when absent."""
        path = self._blob_path(cid.hash)
        try:
            blob = path.read_bytes()
        except FileNotFoundError:
            return None
        if not verify_artifact(blob, cid):
            # corrupt on disk: drop it rather than serve bad bytes
            with self._lock:
                try:
                    path.unlink()
                except OSError:
                    pass
            return None
        with self._lock:
            if cid.hash in self._cache_touch:
                self._cache_touch[cid.hash] = time.monotonic()
        return blob

    def get(self, cid: ContentId, peer_fetch=None) -> bytes:
        """Return the blob, trying peers via ``peer_fetch(cid)`` when it is
        not held locally. Never returns unverified bytes."""
        blob = self.get_local(cid)
        if blob is not None:
            return blob
        if peer_fetch is not None:
            fetched = peer_fetch(cid)
            if fetched is not None:
                if not verify_artifact(fetched, cid):
                    raise IntegrityError(f"peer bytes do not match {cid.hex}")
                self.put(fetched, pin=True)
                return fetched
        raise NotFound(f"no local or peer copy of {cid.hex}")

    def pin(self, cid: ContentId) -> None:
        with self._lock:
            self._pins[cid.hash] = cid.size
            self._cache_touch.pop(cid.hash, None)
            self._write_manifest_locked()

    def pins(self) -> list[ContentId]:
        with self._lock:
            return [ContentId(h, s) for h, s in sorted(self._pins.items())]
