"""Transactions, blocks, and the signing/hashing rules that chain them.

Hash and signature coverage:

* a transaction is signed over its canonical encoding without the
  signature field; ``tx_id`` is SHA-256 of the encoding including it;
* a block header is signed over its canonical encoding without the
  proposer signature; ``block_hash`` is SHA-256 of the full header.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property

from . import codec
from .keys import ADDRESS_LEN, SIGNATURE_LEN, KeyPair, sha256, verify_signature

GENESIS_PARENT = b"\x00" * 32

# verify_transaction reject reasons
BAD_SIGNATURE = "BadSignature"
BAD_NONCE = "BadNonce"
GAS_TOO_LOW = "GasTooLow"


class KeyMismatchError(Exception):
    """Signing key does not correspond to the transaction sender."""


@dataclass
class Account:
    address: bytes
    public_key: bytes
    nonce: int = 0

    def clone(self) -> "Account":
        return Account(self.address, self.public_key, self.nonce)


@dataclass(frozen=True)
class Call:
    """Operation name plus JSON-like arguments, carried opaquely in a tx."""

    op: str
    args: dict

    def to_bytes(self) -> bytes:
        return codec.encode_fields(self.op.encode("utf-8"), codec.encode_value(self.args))

    @classmethod
    def from_bytes(cls, data: bytes) -> "Call":
        fields = codec.read_fields(data)
        if len(fields) != 2:
            raise codec.EncodingError("call must encode exactly op and args")
        args = codec.decode_value(fields[1])
        if not isinstance(args, dict):
            raise codec.EncodingError("call args must be a map")
        return cls(fields[0].decode("utf-8"), args)


@dataclass(frozen=True)
class Transaction:
    sender: bytes
    nonce: int
    target: bytes | None  # None = contract deployment
    call: bytes
    gas_limit: int
    signature: bytes = b""

    def signing_bytes(self) -> bytes:
        if len(self.sender) != ADDRESS_LEN:
            raise codec.EncodingError("sender must be a 20-byte address")
        if self.target is not None and len(self.target) != ADDRESS_LEN:
            raise codec.EncodingError("target must be a 20-byte address or None")
        return codec.encode_fields(
            self.sender,
            codec.encode_uint(self.nonce),
            self.target if self.target is not None else b"",
            self.call,
            codec.encode_uint(self.gas_limit),
        )

    def to_bytes(self) -> bytes:
        return self.signing_bytes() + codec.encode_field(self.signature)

    @cached_property
    def tx_id(self) -> bytes:
        return sha256(self.to_bytes())

    @classmethod
    def from_bytes(cls, data: bytes) -> "Transaction":
        f = codec.read_fields(data)
        if len(f) != 6:
            raise codec.EncodingError("transaction must encode exactly 6 fields")
        return cls(
            sender=f[0],
            nonce=codec.decode_uint(f[1]),
            target=f[2] if f[2] else None,
            call=f[3],
            gas_limit=codec.decode_uint(f[4]),
            signature=f[5],
        )


def sign_transaction(tx: Transaction, key: KeyPair) -> Transaction:
    if key.address != tx.sender:
        raise KeyMismatchError(
            f"key address {key.address.hex()} does not match sender {tx.sender.hex()}"
        )
    return replace(tx, signature=key.sign(tx.signing_bytes()))


def intrinsic_gas(tx: Transaction, schedule) -> int:
    """Gas charged before execution: base + payload bytes (+ deploy base)."""
    gas = schedule.tx_base + schedule.per_byte_payload * len(tx.call)
    if tx.target is None:
        gas += schedule.contract_deploy_base
    return gas


def verify_transaction(tx: Transaction, state, schedule) -> str | None:
    """None on accept, else one of BAD_SIGNATURE / BAD_NONCE / GAS_TOO_LOW.

    ``state`` needs only ``get_account(address)``; an unknown sender has no
    public key to verify against and is rejected as BAD_SIGNATURE.
    """
    account = state.get_account(tx.sender)
    if account is None:
        return BAD_SIGNATURE
    if len(tx.signature) != SIGNATURE_LEN or not verify_signature(
        account.public_key, tx.signing_bytes(), tx.signature
    ):
        return BAD_SIGNATURE
    if tx.nonce != account.nonce:
        return BAD_NONCE
    if tx.gas_limit < intrinsic_gas(tx, schedule):
        return GAS_TOO_LOW
    return None


@dataclass(frozen=True)
class BlockHeader:
    height: int
    parent_hash: bytes
    tx_root: bytes
    state_root: bytes
    event_root: bytes
    timestamp_ms: int
    proposer: bytes
    signature: bytes = b""

    def signing_bytes(self) -> bytes:
        return codec.encode_fields(
            codec.encode_uint(self.height),
            self.parent_hash,
            self.tx_root,
            self.state_root,
            self.event_root,
            codec.encode_uint(self.timestamp_ms),
            self.proposer,
        )

    def to_bytes(self) -> bytes:
        return self.signing_bytes() + codec.encode_field(self.signature)

    @cached_property
    def block_hash(self) -> bytes:
        return sha256(self.to_bytes())

    @classmethod
    def from_bytes(cls, data: bytes) -> "BlockHeader":
        f = codec.read_fields(data)
        if len(f) != 8:
            raise codec.EncodingError("block header must encode exactly 8 fields")
        return cls(
            height=codec.decode_uint(f[0]),
            parent_hash=f[1],
            tx_root=f[2],
            state_root=f[3],
            event_root=f[4],
            timestamp_ms=codec.decode_uint(f[5]),
            proposer=f[6],
            signature=f[7],
        )


def sign_header(header: BlockHeader, key: KeyPair) -> BlockHeader:
    if key.address != header.proposer:
        raise KeyMismatchError("key does not match header proposer")
    return replace(header, signature=key.sign(header.signing_bytes()))


@dataclass(frozen=True)
class Block:
    header: BlockHeader
    transactions: tuple[Transaction, ...] = ()

    @property
    def height(self) -> int:
        return self.header.height

    @property
    def block_hash(self) -> bytes:
        return self.header.block_hash

    def to_bytes(self) -> bytes:
        return codec.encode_fields(
            self.header.to_bytes(), *(tx.to_bytes() for tx in self.transactions)
        )

    @classmethod
    def from_bytes(cls, data: bytes) -> "Block":
        f = codec.read_fields(data)
        if not f:
            raise codec.EncodingError("empty block encoding")
        header = BlockHeader.from_bytes(f[0])
        return cls(header, tuple(Transaction.from_bytes(raw) for raw in f[1:]))


@dataclass
class Ledger:
    """Ordered, hash-chained block list starting at genesis."""

    blocks: list[Block] = field(default_factory=list)

    @property
    def height(self) -> int:
        return self.blocks[-1].height if self.blocks else -1

    @property
    def tip(self) -> Block:
        return self.blocks[-1]

    def block_at(self, height: int) -> Block | None:
        if 0 <= height < len(self.blocks):
            return self.blocks[height]
        return None

    def append(self, block: Block) -> None:
        self.blocks.append(block)

    def find_tx(self, tx_id: bytes) -> tuple[int, Transaction] | None:
        for block in self.blocks:
            for tx in block.transactions:
                if tx.tx_id == tx_id:
                    return block.height, tx
        return None
