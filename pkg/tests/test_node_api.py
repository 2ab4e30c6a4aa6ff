"""Single-node and small-network integration through the real HTTP API and
real TCP gossip, at sub-second block intervals."""

import base64
import json
import time

import pytest
import requests

from proml.clock import WallClock
from proml.node import Node, canonical_activity
from proml.store import ContentId
from proml.testnet import build_testnet

PASS = "test-pass"


def wait_for(predicate, timeout=20.0, interval=0.05, message="condition"):
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        value = predicate()
        if value:
            return value
        time.sleep(interval)
    raise AssertionError(f"timed out waiting for {message}")


@pytest.fixture
def network(tmp_path):
    genesis, configs, keys = build_testnet(
        tmp_path, n_validators=3, block_interval_s=0.25, passphrase=PASS
    )
    nodes = [Node(c, PASS, clock=WallClock()) for c in configs]
    for n in nodes:
        n.start()
    yield nodes
    for n in nodes:
        n.stop()


def url(node, path):
    return f"http://{node.config.api_listen}{path}"


def post_capture(node, doc):
    return requests.post(url(node, "/v1/provenance"), json=doc, timeout=10)


def get_status(node, tx_id):
    return requests.get(url(node, f"/v1/tx/{tx_id}"), timeout=10).json()


def wait_included(node, tx_id, timeout=20.0):
    return wait_for(
        lambda: (s := get_status(node, tx_id))["included"] and s,
        timeout=timeout,
        message=f"inclusion of {tx_id[:8]}",
    )


def test_register_record_publish_flow(network):
    a, b, c = network

    r = post_capture(a, {"kind": "RegisterDataset", "metadata": {"name": "kdd-raw"}})
    assert r.status_code == 202
    doc = r.json()
    assert len(doc["asset"]) == 40 and doc["status_url"].endswith(doc["tx_id"])
    d1 = doc["asset"]
    status = wait_included(a, doc["tx_id"])
    assert status["receipt"]["status"] == "success"
    assert status["receipt"]["new_contract"] == d1

    # ancestor link registered via a different node
    r = post_capture(a, {"kind": "RegisterDataset",
                         "metadata": {"name": "kdd-labelled"}, "ancestor": d1})
    d2 = r.json()["asset"]
    wait_included(a, r.json()["tx_id"])

    r = post_capture(b, {"kind": "RegisterModel", "metadata": {"name": "clf"}})
    model = r.json()["asset"]
    wait_included(b, r.json()["tx_id"])

    r = post_capture(b, {"kind": "RecordActivity", "asset": model, "activity": "select-data",
                         "payload": {"inputs": {"dataset": d2}, "params": {"seed": 1}}})
    assert r.status_code == 202
    status = wait_included(b, r.json()["tx_id"])
    assert status["accepted_transition"] is True

    # out-of-order activity is included but does not advance the stage
    r = post_capture(b, {"kind": "RecordActivity", "asset": model, "activity": "deploy"})
    status = wait_included(b, r.json()["tx_id"])
    assert status["accepted_transition"] is False

    for act in ("preprocess-data", "engineer-features", "train", "evaluate", "validate", "deploy"):
        r = post_capture(b, {"kind": "RecordActivity", "asset": model, "activity": act})
        status = wait_included(b, r.json()["tx_id"])
        assert status["accepted_transition"] is True, act

    blob = b"\x01\x02weights" * 50
    r = post_capture(b, {"kind": "Publish", "asset": model,
                         "inline_blob": base64.b64encode(blob).decode()})
    status = wait_included(b, r.json()["tx_id"])
    assert status["accepted_transition"] is True

    # every node converges on the same asset view
    def views_agree():
        views = [requests.get(url(n, f"/v1/assets/{model}"), timeout=10) for n in network]
        if any(v.status_code != 200 for v in views):
            return False
        docs = [v.json() for v in views]
        return all(d == docs[0] for d in docs) and docs[0]["stage"] == "Published" and docs[0]

    view = wait_for(views_agree, message="asset view convergence")
    assert view["artifact_anchor"] == ContentId.for_blob(blob).to_json()

    history = requests.get(url(c, f"/v1/assets/{model}/history"), timeout=10).json()["history"]
    assert len(history) == 9  # 7 activities + out-of-order deploy + publish
    assert [h["accepted_transition"] for h in history].count(False) == 1

    # blob retrievable from a node that never stored it (peer fetch with verification)
    anchor = view["artifact_anchor"]
    got = requests.get(url(c, f"/v1/blobs/{anchor['hash']}?size={anchor['size']}"), timeout=10)
    assert got.status_code == 200 and got.content == blob


def test_capture_request_validation(network):
    a = network[0]
    assert post_capture(a, {"kind": "RecordActivity", "activity": "train"}).status_code == 400
    assert post_capture(a, {"kind": "RegisterDataset", "metadata": {"name": "x"},
                            "asset": "ab" * 20}).status_code == 400
    assert post_capture(a, {"kind": "Bogus"}).status_code == 400
    assert post_capture(a, {"kind": "RecordActivity", "asset": "ab" * 20,
                            "activity": "no-such-step"}).status_code == 400
    assert post_capture(a, {"kind": "Publish", "asset": "ab" * 20}).status_code == 400
    r = requests.post(url(a, "/v1/provenance"), data=b"not json",
                      headers={"Content-Type": "application/json"}, timeout=10)
    assert r.status_code == 400


def test_tx_endpoint_unknown_and_confirmations(network):
    a = network[0]
    unknown = get_status(a, "00" * 32)
    assert unknown == {"included": False, "confirmations": 0}

    r = post_capture(a, {"kind": "RegisterModel", "metadata": {"name": "m"}})
    tx_id = r.json()["tx_id"]
    status = wait_included(a, tx_id)
    h = status["height"]
    wait_for(lambda: get_status(a, tx_id)["confirmations"] >= 12, timeout=30,
             message="12 confirmations")
    tip = requests.get(url(a, "/v1/status"), timeout=10).json()["height"]
    assert get_status(a, tx_id)["confirmations"] == tip - h + 1


def test_events_long_poll_sees_publication(network):
    a, b, _ = network
    from_h = requests.get(url(b, "/v1/status"), timeout=10).json()["height"] + 1
    r = post_capture(a, {"kind": "RegisterDataset", "metadata": {"name": "d"}})
    assert r.status_code == 202
    out = requests.get(url(b, f"/v1/events?from_height={from_h}&timeout_ms=15000"),
                       timeout=30).json()
    names = [e["name"] for e in out["events"]]
    assert "DatasetRegistered" in names


def test_assets_participant_filter(network):
    a = network[0]
    r = post_capture(a, {"kind": "RegisterModel", "metadata": {"name": "mine"}})
    asset = r.json()["asset"]
    wait_included(a, r.json()["tx_id"])
    mine = requests.get(
        url(a, f"/v1/assets?participant={a.address.hex()}"), timeout=10
    ).json()["assets"]
    assert asset in mine
    other = requests.get(
        url(a, f"/v1/assets?participant={'ee' * 20}"), timeout=10
    ).json()["assets"]
    assert other == []


def test_activity_name_normalisation():
    assert canonical_activity("train") == "Train"
    assert canonical_activity("select-data") == "SelectData"
    assert canonical_activity("SelectData") == "SelectData"
    assert canonical_activity("engineer_features") == "EngineerFeatures"
    assert canonical_activity("frobnicate") is None


def test_gossip_from_unknown_identity_dropped(network):
    a = network[0]
    from proml import p2p
    from proml.keys import KeyPair
    from proml.p2p import Peer

    stranger = KeyPair.from_seed(b"\xee" * 32)
    target = Peer(a.address, "127.0.0.1", int(a.config.p2p_listen.split(":")[1]))
    # a valid-looking tx from an unlisted identity must not enter the pool
    from proml import engine
    from proml.ledger import sign_transaction

    tx = sign_transaction(
        engine.make_call_tx(stranger.address, 0, None, "deploy_contract",
                            {"kind": "ProMLRegistry", "init": {}}, 5_000_000),
        stranger,
    )
    p2p.send_message(target, stranger.address, p2p.MSG_TX, tx.to_bytes())
    time.sleep(0.5)
    assert tx.tx_id not in a.pool
