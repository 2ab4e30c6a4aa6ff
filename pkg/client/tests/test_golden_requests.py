"""The seven log_* functions must produce byte-exact CaptureRequests.

Golden files were written from the independent builder below (which
follows the node API's documented CaptureRequest schema, not the client
code) and committed; both the builder and the SDK must keep reproducing
them byte for byte.
"""

import json
from pathlib import Path

import pytest

from proml_client import ProMLClient

GOLDEN_DIR = Path(__file__).parent / "golden"

ASSET = "ab" * 20
DATASET = "cd" * 20

# (golden file stem, client method name, kwargs)
LOG_CASES = [
    ("log_select_data", "log_select_data",
     dict(inputs={"dataset": DATASET}, params={"split": "stratified", "seed": 7})),
    ("log_preprocess", "log_preprocess",
     dict(inputs={"dataset": DATASET}, params={"normalisation": "zscore"})),
    ("log_engineer_features", "log_engineer_features",
     dict(inputs={"dataset": DATASET}, outputs={"feature_count": 118})),
    ("log_train", "log_train",
     dict(inputs={"dataset": DATASET}, outputs={"train_accuracy": 0.98},
          params={"epochs": 10, "lr": 0.001})),
    ("log_evaluate", "log_evaluate",
     dict(outputs={"accuracy": 0.92, "f1": 0.9})),
    ("log_validate", "log_validate",
     dict(outputs={"passed": True}, params={"min_accuracy": 0.9})),
    ("log_deploy", "log_deploy",
     dict(params={"environment": "staging"})),
]

ACTIVITY_BY_METHOD = {
    "log_select_data": "SelectData",
    "log_preprocess": "PreprocessData",
    "log_engineer_features": "EngineerFeatures",
    "log_train": "Train",
    "log_evaluate": "Evaluate",
    "log_validate": "Validate",
    "log_deploy": "Deploy",
}


def independent_request_bytes(method: str, kwargs: dict) -> bytes:
    """CaptureRequest built straight from the documented API schema."""
    payload = {}
    for section in ("inputs", "outputs", "params"):
        if kwargs.get(section) is not None:
            payload[section] = kwargs[section]
    doc = {
        "kind": "RecordActivity",
        "asset": ASSET,
        "activity": ACTIVITY_BY_METHOD[method],
        "payload": payload,
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()


@pytest.mark.parametrize("stem,method,kwargs", LOG_CASES, ids=[c[0] for c in LOG_CASES])
def test_log_call_matches_golden_request(stub, stem, method, kwargs):
    golden = (GOLDEN_DIR / f"{stem}.json").read_bytes()
    assert independent_request_bytes(method, kwargs) == golden

    client = ProMLClient(stub.url, wait_for_inclusion=False)
    tx_id = getattr(client, method)(ASSET, **kwargs)
    assert len(tx_id) == 64

    posts = stub.posts()
    assert len(posts) == 1
    _, path, body, headers = posts[0]
    assert path == "/v1/provenance"
    assert body == golden
    assert headers.get("X-Proml-Client", headers.get("X-ProML-Client")).startswith("proml-client/")


def test_payload_carries_only_supplied_sections(stub):
    client = ProMLClient(stub.url, wait_for_inclusion=False)
    client.log_deploy(ASSET, params={"environment": "staging"})
    body = json.loads(stub.posts()[0][2])
    assert set(body["payload"].keys()) == {"params"}


def test_log_calls_never_touch_the_status_endpoint(stub):
    """log_* is fire-and-forget: no polling unless the caller asks."""
    client = ProMLClient(stub.url)
    client.log_train(ASSET, params={"epochs": 1})
    assert all(r[0] == "POST" for r in stub.recorded)
