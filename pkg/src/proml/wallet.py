"""Encrypted at-rest key file for a node's signing keys.

Seeds are sealed with AES-GCM under a PBKDF2-derived key; the file holds
no plaintext key material and keys never leave the process once loaded.
"""

from __future__ import annotations

import json
import os
from pathlib import Path

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives.ciphers.aead import AESGCM
from cryptography.hazmat.primitives.hashes import SHA256
from cryptography.hazmat.primitives.kdf.pbkdf2 import PBKDF2HMAC

from .keys import KeyPair

DEFAULT_ITERATIONS = 200_000


class WalletError(Exception):
    pass


def _derive(passphrase: str, salt: bytes, iterations: int) -> bytes:
    kdf = PBKDF2HMAC(algorithm=SHA256(), length=32, salt=salt, iterations=iterations)
    return kdf.derive(passphrase.encode("utf-8"))


def create_wallet(
    path: str | Path,
    passphrase: str,
    keypairs: list[KeyPair],
    iterations: int = DEFAULT_ITERATIONS,
) -> None:
    salt = os.urandom(16)
    key = _derive(passphrase, salt, iterations)
    aead = AESGCM(key)
    entries = {}
    for kp in keypairs:
        nonce = os.urandom(12)
        sealed = aead.encrypt(nonce, kp.seed, kp.address)
        entries[kp.address.hex()] = {"nonce": nonce.hex(), "sealed": sealed.hex()}
    doc = {
        "kdf": {"algorithm": "pbkdf2-sha256", "salt": salt.hex(), "iterations": iterations},
        "keys": entries,
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def load_wallet(path: str | Path, passphrase: str) -> dict[bytes, KeyPair]:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        kdf = doc["kdf"]
        key = _derive(passphrase, bytes.fromhex(kdf["salt"]), int(kdf["iterations"]))
    except (OSError, KeyError, ValueError, json.JSONDecodeError) as exc:
        raise WalletError(f"unreadable wallet file {path}: {exc}") from exc
    aead = AESGCM(key)
    out: dict[bytes, KeyPair] = {}
    for addr_hex, entry in doc["keys"].items():
        address = bytes.fromhex(addr_hex)
        try:
            seed = aead.decrypt(
                bytes.fromhex(entry["nonce"]), bytes.fromhex(entry["sealed"]), address
            )
        except InvalidTag as exc:
            raise WalletError("wrong passphrase or corrupted wallet") from exc
        kp = KeyPair.from_seed(seed)
        if kp.address != address:
            raise WalletError("wallet entry address does not match its key")
        out[address] = kp
    if not out:
        raise WalletError("wallet holds no keys")
    return out
