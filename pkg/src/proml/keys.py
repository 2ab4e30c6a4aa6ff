"""Ed25519 keypairs and the address scheme.

An address is the low 20 bytes of SHA-256(raw public key), so it is always
recomputable from the key that signs for it.
"""

from __future__ import annotations

import hashlib

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)

ADDRESS_LEN = 20
PUBKEY_LEN = 32
SIGNATURE_LEN = 64

ZERO_ADDRESS = b"\x00" * ADDRESS_LEN


def sha256(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


def address_from_pubkey(pubkey: bytes) -> bytes:
    """Low 20 bytes of SHA-256 of the 32-byte verification key."""
    if len(pubkey) != PUBKEY_LEN:
        raise ValueError(f"public key must be {PUBKEY_LEN} bytes")
    return sha256(pubkey)[-ADDRESS_LEN:]


class KeyPair:
    """An Ed25519 signing key plus its derived public key and address."""

    def __init__(self, private: Ed25519PrivateKey):
        self._private = private
        self.public_bytes = private.public_key().public_bytes_raw()
        self.address = address_from_pubkey(self.public_bytes)

    @classmethod
    def generate(cls) -> "KeyPair":
        return cls(Ed25519PrivateKey.generate())

    @classmethod
    def from_seed(cls, seed: bytes) -> "KeyPair":
        return cls(Ed25519PrivateKey.from_private_bytes(seed))

    @property
    def seed(self) -> bytes:
        return self._private.private_bytes_raw()

    def sign(self, message: bytes) -> bytes:
        return self._private.sign(message)


def verify_signature(pubkey: bytes, message: bytes, signature: bytes) -> bool:
    if len(signature) != SIGNATURE_LEN:
        return False
    try:
        Ed25519PublicKey.from_public_bytes(pubkey).verify(signature, message)
        return True
    except (InvalidSignature, ValueError):
        return False
