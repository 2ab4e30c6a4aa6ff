"""Append-only on-disk chain persistence.

Blocks and their receipts are written as canonical-encoding frames into
segment files; a flat index file maps height to (segment, offset) for
random access. Rewriting never happens: a restarted node replays the
segments in order and re-validates.
"""

from __future__ import annotations

import os
import threading
from pathlib import Path

from . import codec
from .engine import Receipt
from .ledger import Block

SEGMENT_ROLL_BYTES = 16 << 20


class ChainStore:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.index_path = self.root / "index.txt"
        self._lock = threading.Lock()
        self._segment_no = 0
        existing = sorted(self.root.glob("chain-*.seg"))
        if existing:
            self._segment_no = int(existing[-1].stem.split("-")[1])

    def _segment_path(self, n: int) -> Path:
        return self.root / f"chain-{n:05d}.seg"

    def append(self, block: Block, receipts: list[Receipt]) -> None:
        frame = codec.encode_fields(
            block.to_bytes(), codec.encode_fields(*(r.to_bytes() for r in receipts))
        )
        with self._lock:
            path = self._segment_path(self._segment_no)
            if path.exists() and path.stat().st_size >= SEGMENT_ROLL_BYTES:
                self._segment_no += 1
                path = self._segment_path(self._segment_no)
            with open(path, "ab") as fh:
                offset = fh.tell()
                fh.write(frame)
            with open(self.index_path, "a", encoding="utf-8") as fh:
                fh.write(f"{block.height} {self._segment_no} {offset}\n")

    def load_all(self) -> list[tuple[Block, list[Receipt]]]:
        """All persisted (block, receipts) pairs in chain order."""
        out: list[tuple[Block, list[Receipt]]] = []
        for path in sorted(self.root.glob("chain-*.seg")):
            data = path.read_bytes()
            for block_raw, receipts_raw in _frames(data, 0):
                block = Block.from_bytes(block_raw)
                receipts = [Receipt.from_bytes(r) for r in codec.read_fields(receipts_raw)]
                out.append((block, receipts))
        out.sort(key=lambda pair: pair[0].height)
        return out

    def read_at(self, height: int) -> tuple[Block, list[Receipt]] | None:
        """Random access through the index file."""
        if not self.index_path.exists():
            return None
        for line in self.index_path.read_text(encoding="utf-8").splitlines():
            h, seg, off = line.split()
            if int(h) == height:
                data = self._segment_path(int(seg)).read_bytes()
                for block_raw, receipts_raw in _frames(data, int(off)):
                    return (
                        Block.from_bytes(block_raw),
                        [Receipt.from_bytes(r) for r in codec.read_fields(receipts_raw)],
                    )
        return None


def _frames(data: bytes, pos: int):
    """Yield (block_bytes, receipts_bytes) frames from pos to end of data."""
    view = memoryview(data)
    while pos < len(data):
        fields = []
        for _ in range(2):
            n = int.from_bytes(view[pos : pos + 4], "big")
            pos += 4
            fields.append(bytes(view[pos : pos + n]))
            pos += n
        yield fields[0], fields[1]
