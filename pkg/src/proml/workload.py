"""Frozen benchmark workload: ten operations that register and update a
dataset pair and a model, with payloads captured once from an
intrusion-detection training run and committed as fixtures so gas numbers
reproduce without retraining.

Placeholders ``$D1`` / ``$D2`` / ``$MODEL`` in the fixture stand for asset
addresses that only exist at run time; resolve() substitutes them.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

UPDATE_LABELS = tuple(f"ML2-{i}" for i in range(1, 8))
REGISTRATION_LABELS = ("D1", "D2", "ML1")
ALL_LABELS = REGISTRATION_LABELS + UPDATE_LABELS


@dataclass(frozen=True)
class WorkloadOp:
    label: str
    role: str  # which participant identity submits it
    kind: str  # CaptureRequest kind
    metadata: dict | None = None
    ancestor: str | None = None  # "$D1" placeholder or hex address
    asset: str | None = None     # "$MODEL" placeholder or hex address
    activity: str | None = None
    payload: dict | None = None


def load_workload() -> list[WorkloadOp]:
    raw = resources.files("proml").joinpath("fixtures/workload.json").read_text("utf-8")
    doc = json.loads(raw)
    ops = []
    for entry in doc["ops"]:
        ops.append(
            WorkloadOp(
                label=entry["label"],
                role=entry["role"],
                kind=entry["kind"],
                metadata=entry.get("metadata"),
                ancestor=entry.get("ancestor"),
                asset=entry.get("asset"),
                activity=entry.get("activity"),
                payload=entry.get("payload"),
            )
        )
    if [op.label for op in ops] != list(ALL_LABELS):
        raise ValueError("workload fixture does not carry the ten expected ops")
    return ops


def _subst(value, mapping: dict[str, str]):
    if isinstance(value, str) and value in mapping:
        return mapping[value]
    if isinstance(value, dict):
        return {k: _subst(v, mapping) for k, v in value.items()}
    if isinstance(value, list):
        return [_subst(v, mapping) for v in value]
    return value


def resolve(op: WorkloadOp, addresses: dict[str, str]) -> WorkloadOp:
    """Replace $D1/$D2/$MODEL placeholders with actual hex addresses."""
    return WorkloadOp(
        label=op.label,
        role=op.role,
        kind=op.kind,
        metadata=_subst(op.metadata, addresses) if op.metadata else op.metadata,
        ancestor=_subst(op.ancestor, addresses) if op.ancestor else op.ancestor,
        asset=_subst(op.asset, addresses) if op.asset else op.asset,
        activity=op.activity,
        payload=_subst(op.payload, addresses) if op.payload else op.payload,
    )
