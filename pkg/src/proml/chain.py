"""Block execution and full-chain validation.

A block is valid against its parent when every transaction verifies and
executes to the committed roots: tx_root and event_root recompute from
contents, state_root matches the replayed world state, and the proposer
signature matches the slot schedule. validate_chain replays the whole
ledger from genesis and reports the first failing height.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import engine
from .genesis import Genesis
from .keys import ZERO_ADDRESS, sha256, verify_signature
from .ledger import (
    GENESIS_PARENT,
    Block,
    BlockHeader,
    Ledger,
    Transaction,
    verify_transaction,
)
from .merkle import merkle_root

# validation failure reasons
PARENT_HASH_MISMATCH = "ParentHashMismatch"
TX_ROOT_MISMATCH = "TxRootMismatch"
STATE_ROOT_MISMATCH = "StateRootMismatch"
EVENT_ROOT_MISMATCH = "EventRootMismatch"
BAD_PROPOSER = "BadProposer"
BAD_TIMESTAMP = "BadTimestamp"
BAD_GENESIS = "BadGenesis"
INVALID_TX = "InvalidTx"


@dataclass(frozen=True)
class ValidationResult:
    valid: bool
    height: int | None = None
    reason: str | None = None

    def __bool__(self) -> bool:
        return self.valid


def tx_merkle_root(transactions) -> bytes:
    return merkle_root([tx.tx_id for tx in transactions])


def event_merkle_root(events) -> bytes:
    return merkle_root([sha256(e.to_bytes()) for e in events])


def make_genesis_block(genesis: Genesis, state: engine.WorldState) -> Block:
    header = BlockHeader(
        height=0,
        parent_hash=GENESIS_PARENT,
        tx_root=tx_merkle_root(()),
        state_root=state.state_root(),
        event_root=event_merkle_root(()),
        timestamp_ms=genesis.genesis_time_ms,
        proposer=ZERO_ADDRESS,
        signature=b"",
    )
    return Block(header)


def execute_block_txs(
    world: engine.WorldState,
    transactions: tuple[Transaction, ...],
    genesis: Genesis,
    height: int,
    timestamp_ms: int,
) -> tuple[engine.WorldState, list[engine.Receipt], str | None]:
    """Apply txs in order; returns (state, receipts, first invalid-tx reason)."""
    receipts: list[engine.Receipt] = []
    for tx in transactions:
        reject = verify_transaction(tx, world, genesis.gas_schedule)
        if reject is not None:
            return world, receipts, f"{INVALID_TX}:{reject}"
        world, receipt = engine.apply_transaction(world, tx, genesis, height, timestamp_ms)
        receipts.append(receipt)
    return world, receipts, None


def slot_for_timestamp(genesis: Genesis, timestamp_ms: int) -> int | None:
    """Slot index when the timestamp sits exactly on a slot boundary."""
    delta = timestamp_ms - genesis.genesis_time_ms
    if delta < 0 or delta % genesis.block_interval_ms != 0:
        return None
    return delta // genesis.block_interval_ms


def validate_block(
    block: Block,
    parent: BlockHeader,
    parent_world: engine.WorldState,
    genesis: Genesis,
) -> tuple[engine.WorldState, list[engine.Receipt]] | ValidationResult:
    """Full single-block validation against its parent state. Returns the
    post-state and receipts on success, a ValidationResult on failure.

    Failures report the height being validated (parent height + 1), which
    stays truthful even when the block's own height field lies."""
    h = parent.height + 1

    def bad(reason: str) -> ValidationResult:
        return ValidationResult(False, h, reason)

    if block.header.parent_hash != parent.block_hash or block.height != h:
        return bad(PARENT_HASH_MISMATCH)
    if block.header.timestamp_ms <= parent.timestamp_ms:
        return bad(BAD_TIMESTAMP)
    slot = slot_for_timestamp(genesis, block.header.timestamp_ms)
    if slot is None:
        return bad(BAD_TIMESTAMP)
    expected = genesis.validators[slot % len(genesis.validators)]
    if block.header.proposer != expected.address:
        return bad(BAD_PROPOSER)
    if not verify_signature(
        expected.public_key, block.header.signing_bytes(), block.header.signature
    ):
        return bad(BAD_PROPOSER)
    if block.header.tx_root != tx_merkle_root(block.transactions):
        return bad(TX_ROOT_MISMATCH)

    world, receipts, tx_error = execute_block_txs(
        parent_world.clone(), block.transactions, genesis, h, block.header.timestamp_ms
    )
    if tx_error is not None:
        return bad(tx_error)
    events = [e for r in receipts for e in r.events]
    if block.header.event_root != event_merkle_root(events):
        return bad(EVENT_ROOT_MISMATCH)
    if block.header.state_root != world.state_root():
        return bad(STATE_ROOT_MISMATCH)
    return world, receipts


def validate_chain(ledger: Ledger, genesis: Genesis) -> ValidationResult:
    """Replay the entire ledger from genesis; any tampering with content or
    order surfaces as the first failing height."""
    if not ledger.blocks:
        return ValidationResult(False, None, BAD_GENESIS)
    world = engine.build_genesis_state(genesis)
    expected_genesis = make_genesis_block(genesis, world)
    g = ledger.blocks[0]
    if (
        g.height != 0
        or g.header.parent_hash != GENESIS_PARENT
        or g.transactions
        or g.header.to_bytes() != expected_genesis.header.to_bytes()
    ):
        return ValidationResult(False, 0, BAD_GENESIS)
    parent = g.header
    for block in ledger.blocks[1:]:
        outcome = validate_block(block, parent, world, genesis)
        if isinstance(outcome, ValidationResult):
            return outcome
        world, _ = outcome
        parent = block.header
    return ValidationResult(True)
