"""Round-robin proof-of-authority block production.

Wall-clock slots: slot k spans [genesis + k*interval, genesis + (k+1)*interval);
validators[k mod n] may produce exactly one block per slot, timestamped at
the slot boundary. Empty blocks are produced on schedule so confirmation
depth keeps advancing. A proposer only seals transactions that arrived at
least ``proposal_cutoff_ms`` before its slot boundary, leaving itself
execution and signing margin.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import chain, engine
from .genesis import Genesis
from .keys import KeyPair
from .ledger import (
    Block,
    BlockHeader,
    Ledger,
    Transaction,
    sign_header,
    verify_transaction,
)

ACCEPT_WRONG_PROPOSER = "WrongProposer"
ACCEPT_BAD_PARENT = "BadParent"
ACCEPT_INVALID_CONTENTS = "InvalidContents"

# fraction of a block interval a tx must precede the slot boundary by
PROPOSAL_CUTOFF_FRACTION = 0.15


class ConfigError(Exception):
    pass


class NotYourSlot(Exception):
    pass


class UnknownParent(Exception):
    pass


@dataclass(frozen=True)
class ValidatorSet:
    validators: tuple[bytes, ...]
    block_interval_ms: int

    def __post_init__(self):
        if not self.validators:
            raise ConfigError("validator set must be non-empty")
        if len(set(self.validators)) != len(self.validators):
            raise ConfigError("duplicate validators")

    @classmethod
    def from_genesis(cls, genesis: Genesis) -> "ValidatorSet":
        return cls(tuple(v.address for v in genesis.validators), genesis.block_interval_ms)


def proposer_for_slot(vset: ValidatorSet, slot: int) -> bytes:
    if slot < 0:
        raise ConfigError("slot must be non-negative")
    return vset.validators[slot % len(vset.validators)]


def slot_start_ms(genesis: Genesis, slot: int) -> int:
    return genesis.genesis_time_ms + slot * genesis.block_interval_ms

def current_slot(genesis: Genesis, now_ms: int) -> int:
    return max(0, (now_ms - genesis.genesis_time_ms) // genesis.block_interval_ms)


def proposal_cutoff_ms(genesis: Genesis) -> int:
    return max(1, int(genesis.block_interval_ms * PROPOSAL_CUTOFF_FRACTION))


@dataclass(frozen=True)
class Confirmation:
    tx_id: bytes
    inclusion_height: int
    confirmations: int  # tip_height - inclusion_height + 1, never decreasing


def find_confirmation(tx_id: bytes, ledger: Ledger) -> Confirmation | None:
    found = ledger.find_tx(tx_id)
    if found is None:
        return None
    height, _ = found
    return Confirmation(tx_id, height, ledger.height - height + 1)


def confirmations_of(tx_id: bytes, ledger: Ledger) -> int:
    """0 when not included, else tip_height - inclusion_height + 1."""
    found = find_confirmation(tx_id, ledger)
    return found.confirmations if found else 0


@dataclass
class ProposalResult:
    block: Block
    world: engine.WorldState
    receipts: list[engine.Receipt]
    rejected: list[tuple[Transaction, str]]  # dropped txs with reasons


def propose_block(
    pending: list[Transaction],
    parent: BlockHeader,
    parent_world: engine.WorldState,
    slot: int,
    key: KeyPair,
    genesis: Genesis,
) -> ProposalResult:
    """Build and sign the block for ``slot`` on top of ``parent``.

    Pending transactions are tried in the given (arrival) order; ones that
    fail verification against the evolving state are dropped into the
    reject log rather than aborting the block.
    """
    vset = ValidatorSet.from_genesis(genesis)
    scheduled = proposer_for_slot(vset, slot)
    if key.address != scheduled:
        raise NotYourSlot(f"slot {slot} belongs to {scheduled.hex()}")
    timestamp_ms = slot_start_ms(genesis, slot)
    if timestamp_ms <= parent.timestamp_ms:
        raise NotYourSlot(f"slot {slot} does not come after the parent block")

    height = parent.height + 1
    world = parent_world.clone()
    included: list[Transaction] = []
    receipts: list[engine.Receipt] = []
    rejected: list[tuple[Transaction, str]] = []
    for tx in pending:
        reject = verify_transaction(tx, world, genesis.gas_schedule)
        if reject is not None:
            rejected.append((tx, reject))
            continue
        world, receipt = engine.apply_transaction(world, tx, genesis, height, timestamp_ms)
        included.append(tx)
        receipts.append(receipt)

    events = [e for r in receipts for e in r.events]
    header = BlockHeader(
        height=height,
        parent_hash=parent.block_hash,
        tx_root=chain.tx_merkle_root(included),
        state_root=world.state_root(),
        event_root=chain.event_merkle_root(events),
        timestamp_ms=timestamp_ms,
        proposer=key.address,
    )
    signed = sign_header(header, key)
    return ProposalResult(Block(signed, tuple(included)), world, receipts, rejected)


@dataclass
class AcceptResult:
    accepted: bool
    reason: str | None = None
    world: engine.WorldState | None = None
    receipts: list[engine.Receipt] | None = None


def accept_block(
    block: Block,
    tip: BlockHeader,
    tip_world: engine.WorldState,
    genesis: Genesis,
) -> AcceptResult:
    """Admit a gossiped block on top of the local tip.

    Rejections: WrongProposer (signature or schedule), BadParent (including
    duplicate delivery), InvalidContents (roots or transactions)."""
    if block.header.parent_hash != tip.block_hash or block.height != tip.height + 1:
        return AcceptResult(False, ACCEPT_BAD_PARENT)
    outcome = chain.validate_block(block, tip, tip_world, genesis)
    if isinstance(outcome, chain.ValidationResult):
        if outcome.reason in (chain.BAD_PROPOSER, chain.BAD_TIMESTAMP):
            return AcceptResult(False, ACCEPT_WRONG_PROPOSER)
        return AcceptResult(False, ACCEPT_INVALID_CONTENTS)
    world, receipts = outcome
    return AcceptResult(True, None, world, receipts)
