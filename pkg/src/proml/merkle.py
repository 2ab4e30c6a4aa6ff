"""Binary SHA-256 Merkle tree.

Rules: empty tree root is 32 zero bytes; a single leaf is its own root;
an odd level duplicates its last node before pairing.
"""

from __future__ import annotations

import hashlib

EMPTY_ROOT = b"\x00" * 32


def merkle_root(leaves: list[bytes]) -> bytes:
    if not leaves:
        return EMPTY_ROOT
    level = list(leaves)
    while len(level) > 1:
        if len(level) % 2 == 1:
            level.append(level[-1])
        level = [
            hashlib.sha256(level[i] + level[i + 1]).digest()
            for i in range(0, len(level), 2)
        ]
    return level[0]


def merkle_proof(leaves: list[bytes], index: int) -> list[tuple[bytes, bool]]:
    """Sibling path for ``leaves[index]``; each entry is (hash, sibling_is_right)."""
    if not 0 <= index < len(leaves):
        raise IndexError("leaf index out of range")
    path = []
    level = list(leaves)
    pos = index
    while len(level) > 1:
        if len(level) % 2 == 1:
            level.append(level[-1])
        sibling = pos + 1 if pos % 2 == 0 else pos - 1
        path.append((level[sibling], pos % 2 == 0))
        level = [
            hashlib.sha256(level[i] + level[i + 1]).digest()
            for i in range(0, len(level), 2)
        ]
        pos //= 2
    return path


def verify_proof(leaf: bytes, path: list[tuple[bytes, bool]], root: bytes) -> bool:
    node = leaf
    for sibling, sibling_is_right in path:
        pair = node + sibling if sibling_is_right else sibling + node
        node = hashlib.sha256(pair).digest()
    return node == root
