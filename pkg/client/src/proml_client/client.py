"""SDK for recording ML provenance from training scripts.

One function per workflow activity plus registration and publication
helpers, all delegating to a trusted node's HTTP API. The node signs
transactions with the participant's key; this client never holds or
accepts key material.

Payloads are transmitted exactly as supplied: whatever inputs/outputs/
params the caller passes is what leaves the process, and omitted sections
are simply absent. Request bodies are canonical JSON (sorted keys, no
whitespace) so recorded requests are byte-reproducible.

    client = ProMLClient("http://127.0.0.1:8545")
    dataset = client.register_dataset({"name": "kdd-labelled"}, ancestor=raw)
    model = client.register_model({"name": "intrusion-detector"})
    client.log_train(model, inputs={"dataset": dataset}, params={"epochs": 10})
    tx, anchor = client.publish(model, "model.bin")
"""

from __future__ import annotations

import base64
import hashlib
import json
import time
from dataclasses import dataclass
from pathlib import Path

import requests

__version__ = "0.1.0"
USER_AGENT = f"proml-client/{__version__}"

# canonical order of the model workflow; one log_* function each
WORKFLOW_ACTIVITIES = (
    "SelectData",
    "PreprocessData",
    "EngineerFeatures",
    "Train",
    "Evaluate",
    "Validate",
    "Deploy",
)


class ProMLClientError(Exception):
    """Base error for SDK failures."""


class NodeRejectedError(ProMLClientError):
    """The node answered with a 4xx/5xx status."""

    def __init__(self, status: int, reason: str):
        super().__init__(f"node answered {status}: {reason}")
        self.status = status
        self.reason = reason


class InclusionTimeout(ProMLClientError):
    pass


class IntegrityError(ProMLClientError):
    """The node's reported content anchor does not match the local bytes."""


@dataclass(frozen=True)
class ContentRef:
    """Hash anchor of an off-chain payload (sha256 hex + byte count)."""

    hash: str
    size: int

    @classmethod
    def for_file(cls, path: str | Path) -> "ContentRef":
        data = Path(path).read_bytes()
        return cls(hashlib.sha256(data).hexdigest(), len(data))


def canonical_body(doc: dict) -> bytes:
    return json.dumps(doc, sort_keys=True, separators=(",", ":")).encode("utf-8")


class ProMLClient:
    """One instance per training process; not shared across threads."""

    def __init__(
        self,
        node_url: str,
        timeout: float = 30.0,
        wait_for_inclusion: bool = True,
        inclusion_timeout: float = 180.0,
        poll_interval: float = 0.5,
        retries: int = 3,
        backoff_base: float = 0.5,
        session: requests.Session | None = None,
    ):
        self.node_url = node_url.rstrip("/")
        self.timeout = timeout
        self.wait_for_inclusion = wait_for_inclusion
        self.inclusion_timeout = inclusion_timeout
        self.poll_interval = poll_interval
        self.retries = retries
        self.backoff_base = backoff_base
        self._session = session or requests.Session()
        self.registered_assets: list[str] = []

    # ------------------------------------------------------------------

    def _request(self, method: str, path: str, doc: dict | None = None) -> dict:
        headers = {"X-ProML-Client": USER_AGENT}
        body = None
        if doc is not None:
            body = canonical_body(doc)
            headers["Content-Type"] = "application/json"
        last_exc: Exception | None = None
        for attempt in range(self.retries):
            try:
                resp = self._session.request(
                    method,
                    f"{self.node_url}{path}",
                    data=body,
                    headers=headers,
                    timeout=self.timeout,
                )
            except requests.RequestException as exc:
                last_exc = exc
                if attempt + 1 < self.retries:
                    time.sleep(self.backoff_base * (2**attempt))
                continue
            if resp.status_code >= 400:
                try:
                    reason = resp.json().get("error", resp.text)
                except ValueError:
                    reason = resp.text
                raise NodeRejectedError(resp.status_code, reason)
            return resp.json()
        raise ProMLClientError(
            f"node unreachable after {self.retries} attempts: {last_exc}"
        ) from last_exc

    def _capture(self, doc: dict) -> dict:
        return self._request("POST", "/v1/provenance", doc)

    # ------------------------------------------------------------------
    # registration
    # ------------------------------------------------------------------

    def _register(self, doc: dict, wait: bool | None) -> str:
        out = self._capture(doc)
        asset = out["asset"]
        if self.wait_for_inclusion if wait is None else wait:
            status = self.wait_for(out["tx_id"])
            receipt = status["receipt"]
            if receipt["status"] != "success":
                raise NodeRejectedError(409, f"registration reverted: {receipt['reason']}")
        self.registered_assets.append(asset)
        return asset

    def register_dataset(
        self,
        metadata: dict,
        ancestor: str | None = None,
        file: str | Path | None = None,
        wait: bool | None = None,
    ) -> str:
        """Creates the dataset's on-chain representative; returns its address.

        Blocks until inclusion by default so the address is safe to use in
        later calls; pass wait=False for fire-and-forget."""
        doc: dict = {"kind": "RegisterDataset", "metadata": metadata}
        if ancestor is not None:
            doc["ancestor"] = ancestor
        if file is not None:
            doc["inline_blob"] = base64.b64encode(Path(file).read_bytes()).decode()
        return self._register(doc, wait)

    def register_model(self, metadata: dict, wait: bool | None = None) -> str:
        return self._register({"kind": "RegisterModel", "metadata": metadata}, wait)

    # ------------------------------------------------------------------
    # workflow activity logging (asynchronous: returns the tx id at once)
    # ------------------------------------------------------------------

    def _log(self, activity: str, asset: str, inputs, outputs, params) -> str:
        payload = {}
        if inputs is not None:
            payload["inputs"] = inputs
        if outputs is not None:
            payload["outputs"] = outputs
        if params is not None:
            payload["params"] = params
        doc = {
            "kind": "RecordActivity",
            "asset": asset,
            "activity": activity,
            "payload": payload,
        }
        return self._capture(doc)["tx_id"]

    def log_select_data(self, asset, inputs=None, outputs=None, params=None) -> str:
        return self._log("SelectData", asset, inputs, outputs, params)

    def log_preprocess(self, asset, inputs=None, outputs=None, params=None) -> str:
        return self._log("PreprocessData", asset, inputs, outputs, params)

    def log_engineer_features(self, asset, inputs=None, outputs=None, params=None) -> str:
        return self._log("EngineerFeatures", asset, inputs, outputs, params)

    def log_train(self, asset, inputs=None, outputs=None, params=None) -> str:
        return self._log("Train", asset, inputs, outputs, params)

    def log_evaluate(self, asset, inputs=None, outputs=None, params=None) -> str:
        return self._log("Evaluate", asset, inputs, outputs, params)

    def log_validate(self, asset, inputs=None, outputs=None, params=None) -> str:
        return self._log("Validate", asset, inputs, outputs, params)

    def log_deploy(self, asset, inputs=None, outputs=None, params=None) -> str:
        return self._log("Deploy", asset, inputs, outputs, params)

    # ------------------------------------------------------------------
    # publication with end-to-end integrity
    # ------------------------------------------------------------------

    def publish(self, asset: str, file_path: str | Path) -> tuple[str, ContentRef]:
        """Streams the artifact to the node's off-chain store and anchors it
        on-chain. The anchor the node reports must equal the locally
        computed hash, otherwise IntegrityError."""
        data = Path(file_path).read_bytes()
        local = ContentRef(hashlib.sha256(data).hexdigest(), len(data))
        doc = {
            "kind": "Publish",
            "asset": asset,
            "inline_blob": base64.b64encode(data).decode(),
        }
        out = self._capture(doc)
        status = self.wait_for(out["tx_id"])
        receipt = status["receipt"]
        if receipt["status"] != "success":
            raise NodeRejectedError(409, f"publish reverted: {receipt['reason']}")
        anchor = receipt["result"].get("anchor") or {}
        remote = ContentRef(anchor.get("hash", ""), int(anchor.get("size", -1)))
        if remote != local:
            raise IntegrityError(
                f"node anchored {remote.hash}/{remote.size}, "
                f"local bytes are {local.hash}/{local.size}"
            )
        return out["tx_id"], remote

    # ------------------------------------------------------------------
    # status polling
    # ------------------------------------------------------------------

    def tx_status(self, tx_id: str) -> dict:
        """Inclusion, confirmations, receipt, and (for activity records) the
        accepted_transition flag. Out-of-order activities are not errors."""
        return self._request("GET", f"/v1/tx/{tx_id}")

    def wait_for(self, tx_id: str, timeout: float | None = None) -> dict:
        deadline = time.monotonic() + (timeout if timeout is not None else self.inclusion_timeout)
        while time.monotonic() < deadline:
            status = self.tx_status(tx_id)
            if status.get("included"):
                return status
            time.sleep(self.poll_interval)
        raise InclusionTimeout(f"{tx_id} not included within the timeout")
