"""Asset-as-a-state-machine contract templates.

Three native contract kinds run inside the execution engine:

* ``ProMLRegistry`` — factory + index: deploys asset contracts, keeps
  append-only address lists and a per-participant lookup map, and emits
  registration events;
* ``DatasetContract`` — stage machine Registered -> Published, with an
  optional ancestor link to the dataset it was derived from;
* ``ModelContract`` — linear stage machine over the seven workflow
  activities (SelectData ... Deploy) plus publication.

Every call appends a provenance record whose participant is always the
transaction sender; out-of-order activities are recorded without
advancing the stage (failed actions are still provenance). The legality
table lives in :func:`legal_transition` so an alternative workflow order
can replace it without touching the record-keeping.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import codec
from .keys import ADDRESS_LEN, sha256
from .store import ContentId

KIND_REGISTRY = "ProMLRegistry"
KIND_DATASET = "DatasetContract"
KIND_MODEL = "ModelContract"

MODEL_ACTIVITIES = (
    "SelectData",
    "PreprocessData",
    "EngineerFeatures",
    "Train",
    "Evaluate",
    "Validate",
    "Deploy",
)
ACTIVITY_REGISTER = "Register"
ACTIVITY_PUBLISH = "Publish"
ALL_ACTIVITIES = MODEL_ACTIVITIES + (ACTIVITY_REGISTER, ACTIVITY_PUBLISH)

MODEL_STAGES = (
    "Registered",
    "DataSelected",
    "Preprocessed",
    "FeaturesEngineered",
    "Trained",
    "Evaluated",
    "Validated",
    "Deployed",
    "Published",
)
DATASET_STAGES = ("Registered", "Published")

# Frozen wire contract: these names and payload field orders are consumed
# by event subscribers and the client SDK.
EVENT_DATASET_REGISTERED = "DatasetRegistered"
EVENT_MODEL_REGISTERED = "ModelRegistered"
EVENT_STAGE_ADVANCED = "StageAdvanced"
EVENT_OUT_OF_ORDER = "OutOfOrderActivity"
EVENT_ASSET_PUBLISHED = "AssetPublished"

# Revert reasons
REVERT_BAD_INIT = "BadInit"
REVERT_UNKNOWN_ANCESTOR = "UnknownAncestor"
REVERT_NO_SUCH_METHOD = "NoSuchMethod"
REVERT_NOT_OWNER = "NotOwner"
REVERT_BAD_ANCHOR = "BadAnchor"
REVERT_PAYLOAD_TOO_LARGE = "PayloadTooLarge"


class Revert(Exception):
    """Abort the current call; the engine rolls state back to the nonce bump."""

    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


def contract_address(deployer: bytes, nonce: int) -> bytes:
    """Low 20 bytes of SHA-256(deployer address || deployer nonce)."""
    return sha256(deployer + codec.encode_uint(nonce))[-ADDRESS_LEN:]


def legal_transition(kind: str, stage: str, activity: str) -> str | None:
    """Next stage when ``activity`` is the legal successor of ``stage``,
    else None. The agreed workflow is the fixed linear order above."""
    if activity == ACTIVITY_PUBLISH:
        if kind == KIND_DATASET and stage in ("Registered", "Published"):
            return "Published"
        if kind == KIND_MODEL and stage in ("Deployed", "Published"):
            return "Published"
        return None
    if kind != KIND_MODEL or activity not in MODEL_ACTIVITIES:
        return None
    idx = MODEL_ACTIVITIES.index(activity)
    if stage == MODEL_STAGES[idx]:
        return MODEL_STAGES[idx + 1]
    return None


@dataclass(frozen=True)
class ProvenanceRecord:
    participant: bytes  # always the verified tx sender
    activity: str
    inputs: dict
    outputs: dict
    params: dict
    block_height: int
    timestamp_ms: int
    tx_id: bytes
    accepted_transition: bool

    def to_bytes(self) -> bytes:
        return codec.encode_fields(
            self.participant,
            self.activity.encode("utf-8"),
            codec.encode_value(self.inputs),
            codec.encode_value(self.outputs),
            codec.encode_value(self.params),
            codec.encode_uint(self.block_height),
            codec.encode_uint(self.timestamp_ms),
            self.tx_id,
            b"\x01" if self.accepted_transition else b"\x00",
        )

    def to_json(self) -> dict:
        return {
            "participant": self.participant.hex(),
            "activity": self.activity,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "params": self.params,
            "block_height": self.block_height,
            "timestamp_ms": self.timestamp_ms,
            "tx_id": self.tx_id.hex(),
            "accepted_transition": self.accepted_transition,
        }


def _encode_anchor(anchor: ContentId | None) -> bytes:
    if anchor is None:
        return b""
    return codec.encode_fields(anchor.hash, codec.encode_uint(anchor.size))


@dataclass
class DatasetState:
    owner: bytes
    metadata: dict
    ancestor: bytes | None = None
    stage: str = "Registered"
    history: list[ProvenanceRecord] = field(default_factory=list)
    artifact_anchor: ContentId | None = None

    def clone(self) -> "DatasetState":
        return DatasetState(
            self.owner, dict(self.metadata), self.ancestor, self.stage,
            list(self.history), self.artifact_anchor,
        )

    def to_bytes(self) -> bytes:
        return codec.encode_fields(
            self.owner,
            codec.encode_value(self.metadata),
            self.ancestor or b"",
            self.stage.encode("utf-8"),
            codec.encode_fields(*(r.to_bytes() for r in self.history)),
            _encode_anchor(self.artifact_anchor),
        )


@dataclass
class ModelState:
    owner: bytes
    metadata: dict
    stage: str = "Registered"
    history: list[ProvenanceRecord] = field(default_factory=list)
    artifact_anchor: ContentId | None = None

    def clone(self) -> "ModelState":
        return ModelState(
            self.owner, dict(self.metadata), self.stage,
            list(self.history), self.artifact_anchor,
        )

    def to_bytes(self) -> bytes:
        return codec.encode_fields(
            self.owner,
            codec.encode_value(self.metadata),
            self.stage.encode("utf-8"),
            codec.encode_fields(*(r.to_bytes() for r in self.history)),
            _encode_anchor(self.artifact_anchor),
        )


@dataclass
class RegistryState:
    dataset_addresses: list[bytes] = field(default_factory=list)
    model_addresses: list[bytes] = field(default_factory=list)
    by_participant: dict[bytes, list[bytes]] = field(default_factory=dict)

    def clone(self) -> "RegistryState":
        return RegistryState(
            list(self.dataset_addresses),
            list(self.model_addresses),
            {k: list(v) for k, v in self.by_participant.items()},
        )

    def to_bytes(self) -> bytes:
        return codec.encode_fields(
            codec.encode_fields(*self.dataset_addresses),
            codec.encode_fields(*self.model_addresses),
            codec.encode_fields(
                *(
                    codec.encode_fields(owner, *assets)
                    for owner, assets in sorted(self.by_participant.items())
                )
            ),
        )

    def knows_dataset(self, address: bytes) -> bool:
        return address in self.dataset_addresses

    def index_asset(self, owner: bytes, address: bytes, kind: str) -> bytes:
        """Append a freshly deployed asset; returns the bytes written."""
        if kind == KIND_DATASET:
            self.dataset_addresses.append(address)
        else:
            self.model_addresses.append(address)
        self.by_participant.setdefault(owner, []).append(address)
        return codec.encode_fields(address, owner)


@dataclass
class ContractInstance:
    address: bytes
    kind: str
    storage: DatasetState | ModelState | RegistryState

    def clone(self) -> "ContractInstance":
        return ContractInstance(self.address, self.kind, self.storage.clone())

    def to_bytes(self) -> bytes:
        return codec.encode_fields(
            self.address, self.kind.encode("utf-8"), self.storage.to_bytes()
        )


@dataclass(frozen=True)
class ExecContext:
    """Per-transaction facts the contracts may rely on."""

    sender: bytes
    tx_nonce: int
    tx_id: bytes
    block_height: int
    timestamp_ms: int
    max_payload_bytes: int


@dataclass
class CallOutcome:
    # (emitter, event name, ordered payload fields)
    events: list[tuple[bytes, str, tuple[tuple[str, object], ...]]] = field(default_factory=list)
    writes: list[bytes] = field(default_factory=list)
    new_contract: bytes | None = None
    result: dict = field(default_factory=dict)


def _require_metadata(args: dict) -> dict:
    metadata = args.get("metadata")
    if not isinstance(metadata, dict):
        raise Revert(REVERT_BAD_INIT)
    name = metadata.get("name")
    if not isinstance(name, str) or not name:
        raise Revert(REVERT_BAD_INIT)
    return metadata


def _parse_address(value, reason: str) -> bytes:
    if isinstance(value, str):
        try:
            value = bytes.fromhex(value)
        except ValueError:
            raise Revert(reason) from None
    if not isinstance(value, bytes) or len(value) != ADDRESS_LEN:
        raise Revert(reason)
    return value


def _parse_anchor(value) -> ContentId:
    if not isinstance(value, dict):
        raise Revert(REVERT_BAD_ANCHOR)
    try:
        anchor = ContentId.from_json(value)
    except (KeyError, ValueError, TypeError):
        raise Revert(REVERT_BAD_ANCHOR) from None
    if len(anchor.hash) != 32 or anchor.hash == b"\x00" * 32 or anchor.size <= 0:
        raise Revert(REVERT_BAD_ANCHOR)
    return anchor


def _payload_sections(args: dict) -> tuple[dict, dict, dict, int]:
    inputs = args.get("inputs") or {}
    outputs = args.get("outputs") or {}
    params = args.get("params") or {}
    for section in (inputs, outputs, params):
        if not isinstance(section, dict):
            raise Revert(REVERT_NO_SUCH_METHOD)
    size = sum(
        len(codec.encode_value(s)) for s in (inputs, outputs, params)
    )
    return inputs, outputs, params, size


def _find_registry(world) -> ContractInstance | None:
    for inst in world.contracts.values():
        if inst.kind == KIND_REGISTRY:
            return inst
    return None


def _deploy_asset(world, registry: ContractInstance, kind: str, args: dict,
                  ctx: ExecContext, out: CallOutcome) -> bytes:
    """Shared factory path for register_dataset / register_model."""
    metadata = _require_metadata(args)
    address = contract_address(ctx.sender, ctx.tx_nonce)
    if address in world.contracts:
        raise Revert(REVERT_BAD_INIT)

    if kind == KIND_DATASET:
        ancestor = args.get("ancestor")
        if ancestor is not None:
            ancestor = _parse_address(ancestor, REVERT_UNKNOWN_ANCESTOR)
            if not registry.storage.knows_dataset(ancestor):
                raise Revert(REVERT_UNKNOWN_ANCESTOR)
        anchor = _parse_anchor(args["anchor"]) if args.get("anchor") is not None else None
        record = ProvenanceRecord(
            participant=ctx.sender,
            activity=ACTIVITY_REGISTER,
            inputs={"ancestor": ancestor.hex()} if ancestor else {},
            outputs={"asset": address.hex()},
            params={},
            block_height=ctx.block_height,
            timestamp_ms=ctx.timestamp_ms,
            tx_id=ctx.tx_id,
            accepted_transition=True,
        )
        storage = DatasetState(
            owner=ctx.sender, metadata=dict(metadata), ancestor=ancestor,
            history=[record], artifact_anchor=anchor,
        )
        event = (
            registry.address,
            EVENT_DATASET_REGISTERED,
            (
                ("asset", address),
                ("owner", ctx.sender),
                ("name", metadata["name"]),
                ("ancestor", ancestor),
            ),
        )
    else:
        storage = ModelState(owner=ctx.sender, metadata=dict(metadata))
        event = (
            registry.address,
            EVENT_MODEL_REGISTERED,
            (("asset", address), ("owner", ctx.sender), ("name", metadata["name"])),
        )

    world.contracts[address] = ContractInstance(address, kind, storage)
    world.next_contract_seq += 1
    registry_delta = registry.storage.index_asset(ctx.sender, address, kind)
    out.writes.append(storage.to_bytes())
    out.writes.append(registry_delta)
    out.events.append(event)
    out.new_contract = address
    out.result = {"asset": address.hex()}
    return address


def _record_activity(inst: ContractInstance, args: dict, ctx: ExecContext,
                     out: CallOutcome) -> None:
    if inst.kind != KIND_MODEL:
        raise Revert(REVERT_NO_SUCH_METHOD)
    activity = args.get("activity")
    if activity not in MODEL_ACTIVITIES:
        raise Revert(REVERT_NO_SUCH_METHOD)
    inputs, outputs, params, size = _payload_sections(args)
    if size > ctx.max_payload_bytes:
        # size check wins over the legality check
        raise Revert(REVERT_PAYLOAD_TOO_LARGE)
    state: ModelState = inst.storage
    next_stage = legal_transition(inst.kind, state.stage, activity)
    record = ProvenanceRecord(
        participant=ctx.sender,
        activity=activity,
        inputs=inputs,
        outputs=outputs,
        params=params,
        block_height=ctx.block_height,
        timestamp_ms=ctx.timestamp_ms,
        tx_id=ctx.tx_id,
        accepted_transition=next_stage is not None,
    )
    state.history.append(record)
    out.writes.append(record.to_bytes())
    if next_stage is not None:
        previous = state.stage
        state.stage = next_stage
        out.events.append(
            (
                inst.address,
                EVENT_STAGE_ADVANCED,
                (
                    ("asset", inst.address),
                    ("activity", activity),
                    ("from_stage", previous),
                    ("to_stage", next_stage),
                ),
            )
        )
    else:
        out.events.append(
            (
                inst.address,
                EVENT_OUT_OF_ORDER,
                (("asset", inst.address), ("activity", activity), ("stage", state.stage)),
            )
        )
    out.result = {"accepted_transition": next_stage is not None}


def _publish(inst: ContractInstance, args: dict, ctx: ExecContext,
             out: CallOutcome) -> None:
    if inst.kind not in (KIND_DATASET, KIND_MODEL):
        raise Revert(REVERT_NO_SUCH_METHOD)
    state = inst.storage
    if ctx.sender != state.owner:
        raise Revert(REVERT_NOT_OWNER)
    anchor = _parse_anchor(args.get("anchor"))
    next_stage = legal_transition(inst.kind, state.stage, ACTIVITY_PUBLISH)
    record = ProvenanceRecord(
        participant=ctx.sender,
        activity=ACTIVITY_PUBLISH,
        inputs={},
        outputs={"anchor_hash": anchor.hex, "anchor_size": anchor.size},
        params={},
        block_height=ctx.block_height,
        timestamp_ms=ctx.timestamp_ms,
        tx_id=ctx.tx_id,
        accepted_transition=next_stage is not None,
    )
    state.history.append(record)
    out.writes.append(record.to_bytes())
    if next_stage is not None:
        state.stage = next_stage
        state.artifact_anchor = anchor
        out.writes.append(_encode_anchor(anchor))
        out.events.append(
            (
                inst.address,
                EVENT_ASSET_PUBLISHED,
                (
                    ("asset", inst.address),
                    ("anchor_hash", anchor.hash),
                    ("anchor_size", anchor.size),
                ),
            )
        )
    else:
        # premature publication is recorded but does not set the anchor
        out.events.append(
            (
                inst.address,
                EVENT_OUT_OF_ORDER,
                (("asset", inst.address), ("activity", ACTIVITY_PUBLISH), ("stage", state.stage)),
            )
        )
    out.result = {"accepted_transition": next_stage is not None, "anchor": anchor.to_json()}


def execute_call(world, inst: ContractInstance, op: str, args: dict,
                 ctx: ExecContext) -> CallOutcome:
    """Dispatch one contract call. Raises Revert on any contract-level error."""
    out = CallOutcome()
    if inst.kind == KIND_REGISTRY and op == "register_dataset":
        _deploy_asset(world, inst, KIND_DATASET, args, ctx, out)
    elif inst.kind == KIND_REGISTRY and op == "register_model":
        _deploy_asset(world, inst, KIND_MODEL, args, ctx, out)
    elif op == "record_activity":
        _record_activity(inst, args, ctx, out)
    elif op == "publish":
        _publish(inst, args, ctx, out)
    else:
        raise Revert(REVERT_NO_SUCH_METHOD)
    return out


def execute_deploy(world, kind, init: dict, ctx: ExecContext) -> CallOutcome:
    """Direct deployment (tx.target = NULL). Asset kinds still register with
    the chain's single registry so every asset stays reachable from it."""
    out = CallOutcome()
    if kind == KIND_REGISTRY:
        if _find_registry(world) is not None:
            raise Revert(REVERT_BAD_INIT)
        address = contract_address(ctx.sender, ctx.tx_nonce)
        storage = RegistryState()
        world.contracts[address] = ContractInstance(address, KIND_REGISTRY, storage)
        world.next_contract_seq += 1
        out.writes.append(storage.to_bytes())
        out.new_contract = address
        out.result = {"asset": address.hex()}
        return out
    if kind in (KIND_DATASET, KIND_MODEL):
        registry = _find_registry(world)
        if registry is None:
            raise Revert(REVERT_BAD_INIT)
        _deploy_asset(world, registry, kind, init, ctx, out)
        return out
    raise Revert(REVERT_BAD_INIT)
