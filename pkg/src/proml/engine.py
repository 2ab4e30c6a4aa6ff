"""Deterministic state transition: world state, execution, gas, receipts.

Applying a transaction is a pure function of (state, tx, block context):
repeated application yields byte-identical state roots and receipts on
every node. Reverted transactions keep only the sender nonce bump and are
still included on-chain with a receipt, because failed activities are
still provenance.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import codec, contracts
from .genesis import GasSchedule, Genesis
from .keys import ZERO_ADDRESS, sha256
from .ledger import Account, Call, Transaction, intrinsic_gas

# revert reasons owned by the engine (contract-level reasons live in contracts.py)
REVERT_OUT_OF_GAS = "OutOfGas"
REVERT_NO_SUCH_CONTRACT = "NoSuchContract"
REVERT_NO_SUCH_METHOD = contracts.REVERT_NO_SUCH_METHOD

STATUS_SUCCESS = "success"
STATUS_REVERTED = "reverted"


@dataclass(frozen=True)
class Event:
    emitter: bytes
    name: str
    fields: tuple[tuple[str, object], ...]  # frozen field order per event name
    block_height: int
    tx_id: bytes

    @property
    def payload_bytes(self) -> bytes:
        return codec.encode_value([[k, v] for k, v in self.fields])

    def to_bytes(self) -> bytes:
        return codec.encode_fields(
            self.emitter,
            self.name.encode("utf-8"),
            self.payload_bytes,
            codec.encode_uint(self.block_height),
            self.tx_id,
        )

    def to_json(self) -> dict:
        payload = {}
        for key, value in self.fields:
            payload[key] = value.hex() if isinstance(value, bytes) else value
        return {
            "emitter": self.emitter.hex(),
            "name": self.name,
            "payload": payload,
            "block_height": self.block_height,
            "tx_id": self.tx_id.hex(),
        }

    @classmethod
    def from_bytes(cls, data: bytes) -> "Event":
        f = codec.read_fields(data)
        if len(f) != 5:
            raise codec.EncodingError("event must encode exactly 5 fields")
        pairs = codec.decode_value(f[2])
        return cls(
            emitter=f[0],
            name=f[1].decode("utf-8"),
            fields=tuple((k, v) for k, v in pairs),
            block_height=codec.decode_uint(f[3]),
            tx_id=f[4],
        )


@dataclass(frozen=True)
class Receipt:
    tx_id: bytes
    status: str
    reason: str | None
    gas_used: int
    events: tuple[Event, ...] = ()
    new_contract: bytes | None = None
    result: dict = field(default_factory=dict)

    @property
    def success(self) -> bool:
        return self.status == STATUS_SUCCESS

    def to_json(self) -> dict:
        return {
            "tx_id": self.tx_id.hex(),
            "status": self.status,
            "reason": self.reason,
            "gas_used": self.gas_used,
            "events": [e.to_json() for e in self.events],
            "new_contract": self.new_contract.hex() if self.new_contract else None,
            "result": self.result,
        }

    def to_bytes(self) -> bytes:
        return codec.encode_fields(
            self.tx_id,
            self.status.encode("utf-8"),
            (self.reason or "").encode("utf-8"),
            codec.encode_uint(self.gas_used),
            codec.encode_fields(*(e.to_bytes() for e in self.events)),
            self.new_contract or b"",
            codec.encode_value(self.result),
        )

    @classmethod
    def from_bytes(cls, data: bytes) -> "Receipt":
        f = codec.read_fields(data)
        if len(f) != 7:
            raise codec.EncodingError("receipt must encode exactly 7 fields")
        return cls(
            tx_id=f[0],
            status=f[1].decode("utf-8"),
            reason=f[2].decode("utf-8") or None,
            gas_used=codec.decode_uint(f[3]),
            events=tuple(Event.from_bytes(raw) for raw in codec.read_fields(f[4])),
            new_contract=f[5] or None,
            result=codec.decode_value(f[6]),
        )


class WorldState:
    """Replicated state: accounts, contract instances, deployment counter."""

    def __init__(self):
        self.accounts: dict[bytes, Account] = {}
        self.contracts: dict[bytes, contracts.ContractInstance] = {}
        self.next_contract_seq: int = 0

    def clone(self) -> "WorldState":
        out = WorldState()
        out.accounts = {a: acct.clone() for a, acct in self.accounts.items()}
        out.contracts = {a: inst.clone() for a, inst in self.contracts.items()}
        out.next_contract_seq = self.next_contract_seq
        return out

    def get_account(self, address: bytes) -> Account | None:
        return self.accounts.get(address)

    def get_contract(self, address: bytes) -> contracts.ContractInstance | None:
        return self.contracts.get(address)

    def registry(self) -> contracts.ContractInstance | None:
        for inst in self.contracts.values():
            if inst.kind == contracts.KIND_REGISTRY:
                return inst
        return None

    def state_root(self) -> bytes:
        """SHA-256 of the canonical encoding of sorted-by-address contents."""
        parts = [codec.encode_uint(self.next_contract_seq)]
        for address in sorted(self.accounts):
            acct = self.accounts[address]
            parts.append(
                codec.encode_fields(
                    acct.address, acct.public_key, codec.encode_uint(acct.nonce)
                )
            )
        for address in sorted(self.contracts):
            parts.append(self.contracts[address].to_bytes())
        return sha256(codec.encode_fields(*parts))


def build_genesis_state(genesis: Genesis) -> WorldState:
    """Accounts for every allowlisted participant plus the registry contract,
    deployed system-side from the zero address at nonce 0."""
    world = WorldState()
    for p in genesis.participants:
        world.accounts[p.address] = Account(p.address, p.public_key, nonce=0)
    registry_addr = contracts.contract_address(ZERO_ADDRESS, 0)
    world.contracts[registry_addr] = contracts.ContractInstance(
        registry_addr, contracts.KIND_REGISTRY, contracts.RegistryState()
    )
    world.next_contract_seq = 1
    return world


def charge_gas(
    schedule: GasSchedule,
    payload_bytes: int,
    deployed: bool,
    storage_bytes_written: int,
    event_payload_sizes: list[int],
) -> int:
    """Pure gas arithmetic over the schedule; see GasSchedule for the rates."""
    if payload_bytes < 0 or storage_bytes_written < 0 or any(s < 0 for s in event_payload_sizes):
        raise ValueError("byte counts must be non-negative")
    gas = schedule.tx_base + schedule.per_byte_payload * payload_bytes
    if deployed:
        gas += schedule.contract_deploy_base
    gas += schedule.per_byte_storage_written * storage_bytes_written
    for size in event_payload_sizes:
        gas += schedule.event_base + schedule.per_byte_event * size
    return gas


def _reverted(state: WorldState, tx: Transaction, reason: str, gas_used: int) -> tuple[WorldState, Receipt]:
    rolled = state.clone()
    rolled.accounts[tx.sender].nonce += 1
    return rolled, Receipt(tx.tx_id, STATUS_REVERTED, reason, gas_used)


def apply_transaction(
    state: WorldState,
    tx: Transaction,
    genesis: Genesis,
    block_height: int,
    timestamp_ms: int,
) -> tuple[WorldState, Receipt]:
    """Execute one verified transaction; returns (new state, receipt).

    The caller must have run verify_transaction first. Gas is settled after
    execution: if the total exceeds tx.gas_limit the transaction reverts
    as OutOfGas with the whole limit consumed.
    """
    schedule = genesis.gas_schedule
    base_gas = intrinsic_gas(tx, schedule)
    work = state.clone()
    work.accounts[tx.sender].nonce += 1

    ctx = contracts.ExecContext(
        sender=tx.sender,
        tx_nonce=tx.nonce,
        tx_id=tx.tx_id,
        block_height=block_height,
        timestamp_ms=timestamp_ms,
        max_payload_bytes=genesis.max_payload_bytes,
    )

    try:
        try:
            call = Call.from_bytes(tx.call)
        except codec.EncodingError:
            raise contracts.Revert(REVERT_NO_SUCH_METHOD) from None

        if tx.target is None:
            if call.op != "deploy_contract":
                raise contracts.Revert(REVERT_NO_SUCH_METHOD)
            outcome = contracts.execute_deploy(
                work, call.args.get("kind"), call.args.get("init") or {}, ctx
            )
        else:
            inst = work.get_contract(tx.target)
            if inst is None:
                raise contracts.Revert(REVERT_NO_SUCH_CONTRACT)
            outcome = contracts.execute_call(work, inst, call.op, call.args, ctx)
    except contracts.Revert as rv:
        return _reverted(state, tx, rv.reason, base_gas)

    events = tuple(
        Event(emitter, name, fields, block_height, tx.tx_id)
        for emitter, name, fields in outcome.events
    )
    gas_used = charge_gas(
        schedule,
        payload_bytes=len(tx.call),
        deployed=outcome.new_contract is not None,
        storage_bytes_written=sum(len(w) for w in outcome.writes),
        event_payload_sizes=[len(e.payload_bytes) for e in events],
    )
    if gas_used > tx.gas_limit:
        return _reverted(state, tx, REVERT_OUT_OF_GAS, tx.gas_limit)

    receipt = Receipt(
        tx_id=tx.tx_id,
        status=STATUS_SUCCESS,
        reason=None,
        gas_used=gas_used,
        events=events,
        new_contract=outcome.new_contract,
        result=outcome.result,
    )
    return work, receipt


def deploy_contract(
    state: WorldState,
    tx: Transaction,
    genesis: Genesis,
    block_height: int,
    timestamp_ms: int,
) -> tuple[WorldState, Receipt]:
    """Deployment entry point (tx.target must be NULL); same contract as
    apply_transaction, which it delegates to."""
    if tx.target is not None:
        raise ValueError("deploy_contract requires target=NULL")
    return apply_transaction(state, tx, genesis, block_height, timestamp_ms)


def make_call_tx(
    sender: bytes,
    nonce: int,
    target: bytes | None,
    op: str,
    args: dict,
    gas_limit: int,
) -> Transaction:
    """Unsigned transaction carrying an encoded contract call."""
    return Transaction(
        sender=sender,
        nonce=nonce,
        target=target,
        call=Call(op, args).to_bytes(),
        gas_limit=gas_limit,
    )
