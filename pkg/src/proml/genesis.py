"""Genesis file: the shared network constitution every node loads at boot.

JSON schema (all hashes/addresses hex, times integer unix ms):

    {
      "chain_id": "proml-local",
      "genesis_time_unix_ms": 1700000000000,
      "block_interval_seconds": 13,
      "validators": [{"address": "...", "public_key": "..."}, ...],
      "participants": [{"address": "...", "public_key": "..."}, ...],
      "gas_schedule": {"tx_base": 21000, "per_byte_payload": 16,
                       "contract_deploy_base": 32000,
                       "per_byte_storage_written": 640,
                       "event_base": 375, "per_byte_event": 8},
      "max_payload_bytes": 8192,
      "replication_factor": 2
    }

Validators take block-production turns in list order; participants are the
transaction-sender allowlist (validators must appear in both).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .keys import address_from_pubkey


class GenesisError(Exception):
    """Malformed or inconsistent genesis file."""


@dataclass(frozen=True)
class GasSchedule:
    tx_base: int = 21000
    per_byte_payload: int = 16
    contract_deploy_base: int = 32000
    per_byte_storage_written: int = 640
    event_base: int = 375
    per_byte_event: int = 8

    def __post_init__(self):
        for name, value in self.__dict__.items():
            if not isinstance(value, int) or value <= 0:
                raise GenesisError(f"gas schedule entry {name} must be a positive int")

    def to_json(self) -> dict:
        return dict(self.__dict__)


@dataclass(frozen=True)
class Participant:
    address: bytes
    public_key: bytes

    def to_json(self) -> dict:
        return {"address": self.address.hex(), "public_key": self.public_key.hex()}


def _parse_participant(entry: dict) -> Participant:
    try:
        address = bytes.fromhex(entry["address"])
        public_key = bytes.fromhex(entry["public_key"])
    except (KeyError, ValueError) as exc:
        raise GenesisError(f"bad participant entry: {entry!r}") from exc
    if address_from_pubkey(public_key) != address:
        raise GenesisError(f"address {entry['address']} does not match its public key")
    return Participant(address, public_key)


@dataclass(frozen=True)
class Genesis:
    chain_id: str
    genesis_time_ms: int
    block_interval_ms: int
    validators: tuple[Participant, ...]
    participants: tuple[Participant, ...]
    gas_schedule: GasSchedule = field(default_factory=GasSchedule)
    max_payload_bytes: int = 8192
    replication_factor: int = 2

    def __post_init__(self):
        if not self.validators:
            raise GenesisError("validator set must be non-empty")
        addrs = [v.address for v in self.validators]
        if len(set(addrs)) != len(addrs):
            raise GenesisError("duplicate validator addresses")
        known = {p.address for p in self.participants}
        for v in self.validators:
            if v.address not in known:
                raise GenesisError("every validator must also be a participant")
        if self.block_interval_ms <= 0:
            raise GenesisError("block interval must be positive")

    @property
    def block_interval_seconds(self) -> float:
        return self.block_interval_ms / 1000.0

    def participant_pubkey(self, address: bytes) -> bytes | None:
        for p in self.participants:
            if p.address == address:
                return p.public_key
        return None

    def to_json(self) -> dict:
        return {
            "chain_id": self.chain_id,
            "genesis_time_unix_ms": self.genesis_time_ms,
            "block_interval_seconds": self.block_interval_ms / 1000.0,
            "validators": [v.to_json() for v in self.validators],
            "participants": [p.to_json() for p in self.participants],
            "gas_schedule": self.gas_schedule.to_json(),
            "max_payload_bytes": self.max_payload_bytes,
            "replication_factor": self.replication_factor,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "Genesis":
        try:
            interval_ms = round(float(doc["block_interval_seconds"]) * 1000)
            return cls(
                chain_id=str(doc["chain_id"]),
                genesis_time_ms=int(doc["genesis_time_unix_ms"]),
                block_interval_ms=interval_ms,
                validators=tuple(_parse_participant(v) for v in doc["validators"]),
                participants=tuple(_parse_participant(p) for p in doc["participants"]),
                gas_schedule=GasSchedule(**doc.get("gas_schedule", {})),
                max_payload_bytes=int(doc.get("max_payload_bytes", 8192)),
                replication_factor=int(doc.get("replication_factor", 2)),
            )
        except GenesisError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise GenesisError(f"malformed genesis document: {exc}") from exc

    @classmethod
    def load(cls, path: str | Path) -> "Genesis":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json(json.load(fh))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2) + "\n", encoding="utf-8")
