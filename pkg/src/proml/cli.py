"""proml: operator CLI for ad-hoc provenance capture, auditing, and the
benchmark harness. Thin mapping onto the node HTTP API; exit code 1 on API
errors, 2 on verification mismatch."""

from __future__ import annotations

import base64
import json
import sys
import time
from pathlib import Path

import click
import requests

from . import bench as bench_mod
from .store import ContentId


class ApiFailure(click.ClickException):
    exit_code = 1


def _request(method: str, node: str, path: str, **kwargs):
    try:
        resp = requests.request(method, f"{node}{path}", timeout=kwargs.pop("timeout", 30), **kwargs)
    except requests.RequestException as exc:
        raise ApiFailure(f"cannot reach node {node}: {exc}") from exc
    if resp.status_code >= 400:
        try:
            reason = resp.json().get("error", resp.text)
        except ValueError:
            reason = resp.text
        raise ApiFailure(f"node answered {resp.status_code}: {reason}")
    return resp


def _wait_included(node: str, tx_id: str, timeout_s: float, poll_s: float = 0.5) -> dict:
    deadline = time.monotonic() + timeout_s
    while time.monotonic() < deadline:
        doc = _request("GET", node, f"/v1/tx/{tx_id}").json()
        if doc.get("included"):
            return doc
        time.sleep(poll_s)
    raise ApiFailure(f"transaction {tx_id} not included within {timeout_s:.0f}s")


def _json_option(value: str | None, file_value: str | None, what: str) -> dict:
    if value and file_value:
        raise ApiFailure(f"give --{what} or --{what}-file, not both")
    raw = value
    if file_value:
        raw = Path(file_value).read_text(encoding="utf-8")
    if not raw:
        return {}
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ApiFailure(f"--{what}: invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ApiFailure(f"--{what} must be a JSON object")
    return doc


@click.group()
def main() -> None:
    """Provenance operations against a running node (--node URL)."""


node_option = click.option("--node", required=True, help="Node API base URL, e.g. http://127.0.0.1:8545")
wait_option = click.option("--wait/--no-wait", default=True, show_default=True,
                           help="Wait for block inclusion before printing the result.")
timeout_option = click.option("--timeout", default=120.0, show_default=True,
                              help="Inclusion wait timeout in seconds.")


def _register(node: str, kind: str, metadata: dict, ancestor: str | None,
              file_path: str | None, wait: bool, timeout: float) -> None:
    doc: dict = {"kind": kind, "metadata": metadata}
    if ancestor:
        doc["ancestor"] = ancestor
    if file_path:
        doc["inline_blob"] = base64.b64encode(Path(file_path).read_bytes()).decode()
    out = _request("POST", node, "/v1/provenance", json=doc).json()
    if wait:
        status = _wait_included(node, out["tx_id"], timeout)
        receipt = status["receipt"]
        if receipt["status"] != "success":
            raise ApiFailure(f"registration reverted: {receipt['reason']}")
    click.echo(json.dumps({"asset": out["asset"], "tx_id": out["tx_id"]}))


@main.command("register-dataset")
@node_option
@click.option("--name", help="Dataset name (or use --metadata-file).")
@click.option("--metadata-file", type=click.Path(exists=True), help="Full metadata JSON file.")
@click.option("--ancestor", help="Address of the dataset this one derives from.")
@click.option("--file", "file_path", type=click.Path(exists=True),
              help="Payload to offload to the content store as the anchor.")
@wait_option
@timeout_option
def register_dataset(node, name, metadata_file, ancestor, file_path, wait, timeout):
    """Create the on-chain representative of a dataset."""
    metadata = _json_option(None, metadata_file, "metadata") if metadata_file else {}
    if name:
        metadata["name"] = name
    _register(node, "RegisterDataset", metadata, ancestor, file_path, wait, timeout)


@main.command("register-model")
@node_option
@click.option("--name", help="Model name (or use --metadata-file).")
@click.option("--metadata-file", type=click.Path(exists=True))
@wait_option
@timeout_option
def register_model(node, name, metadata_file, wait, timeout):
    """Create the on-chain representative of a model."""
    metadata = _json_option(None, metadata_file, "metadata") if metadata_file else {}
    if name:
        metadata["name"] = name
    _register(node, "RegisterModel", metadata, None, None, wait, timeout)


@main.command("record")
@node_option
@click.option("--asset", required=True, help="Asset contract address (hex).")
@click.option("--activity", required=True,
              help="Workflow activity, e.g. train, select-data, deploy.")
@click.option("--inputs", help="Inline JSON object.")
@click.option("--inputs-file", type=click.Path(exists=True))
@click.option("--outputs", help="Inline JSON object.")
@click.option("--outputs-file", type=click.Path(exists=True))
@click.option("--params", help="Inline JSON object.")
@click.option("--params-file", type=click.Path(exists=True))
def record(node, asset, activity, inputs, inputs_file, outputs, outputs_file, params, params_file):
    """Record one workflow activity on an asset; prints the tx id."""
    doc = {
        "kind": "RecordActivity",
        "asset": asset,
        "activity": activity,
        "payload": {
            "inputs": _json_option(inputs, inputs_file, "inputs"),
            "outputs": _json_option(outputs, outputs_file, "outputs"),
            "params": _json_option(params, params_file, "params"),
        },
    }
    out = _request("POST", node, "/v1/provenance", json=doc).json()
    click.echo(out["tx_id"])


@main.command("publish")
@node_option
@click.option("--asset", required=True)
@click.option("--file", "file_path", required=True, type=click.Path(exists=True),
              help="Artifact to offload; its hash becomes the on-chain anchor.")
@timeout_option
def publish(node, asset, file_path, timeout):
    """Publish an asset's payload to the off-chain store and anchor it."""
    blob = Path(file_path).read_bytes()
    doc = {"kind": "Publish", "asset": asset,
           "inline_blob": base64.b64encode(blob).decode()}
    out = _request("POST", node, "/v1/provenance", json=doc).json()
    status = _wait_included(node, out["tx_id"], timeout)
    receipt = status["receipt"]
    if receipt["status"] != "success":
        raise ApiFailure(f"publish reverted: {receipt['reason']}")
    anchor = receipt["result"].get("anchor", {})
    click.echo(json.dumps({"tx_id": out["tx_id"], "anchor": anchor,
                           "accepted_transition": status.get("accepted_transition")}))


@main.command("history")
@node_option
@click.option("--asset", required=True)
def history(node, asset):
    """Full provenance history plus the asset's current on-chain state."""
    view = _request("GET", node, f"/v1/assets/{asset}").json()
    records = _request("GET", node, f"/v1/assets/{asset}/history").json()["history"]
    click.echo(json.dumps({**view, "history": records}, indent=2))


@main.command("verify")
@node_option
@click.option("--asset", required=True)
@click.option("--file", "file_path", required=True, type=click.Path(exists=True))
def verify(node, asset, file_path):
    """Compare a local file against the asset's on-chain anchor.

    Exit codes: 0 match, 2 mismatch, 1 API/usage error."""
    view = _request("GET", node, f"/v1/assets/{asset}").json()
    anchor = view.get("artifact_anchor")
    if not anchor:
        raise ApiFailure("asset has no published anchor to verify against")
    blob = Path(file_path).read_bytes()
    local = ContentId.for_blob(blob)
    if local.hex == anchor["hash"] and local.size == int(anchor["size"]):
        click.echo("match")
        return
    click.echo(
        f"mismatch: local sha256={local.hex} size={local.size}, "
        f"on-chain sha256={anchor['hash']} size={anchor['size']}"
    )
    sys.exit(2)


# ---------------------------------------------------------------------------
# benchmark
# ---------------------------------------------------------------------------


@main.group()
def bench() -> None:
    """Reproduce the ten-operation workload benchmark."""


@bench.command("run")
@click.option("--node", help="Node API URL used for every role.")
@click.option("--admin-node", help="Node of the dataset administrator (D1, D2).")
@click.option("--developer-node", help="Node of the model developer (ML1, ML2-*).")
@click.option("--replications", default=10, show_default=True)
@click.option("--inter-op-delay", default=10.0, show_default=True,
              help="Seconds between operation submissions.")
@click.option("--timeout", default=600.0, show_default=True,
              help="Per-op inclusion timeout in seconds.")
@click.option("--out", "out_path", required=True, type=click.Path(),
              help="CSV output path.")
def bench_run(node, admin_node, developer_node, replications, inter_op_delay, timeout, out_path):
    """Run the workload and write one CSV row per op per replication."""
    admin = admin_node or node
    developer = developer_node or node
    if not admin or not developer:
        raise ApiFailure("give --node, or both --admin-node and --developer-node")
    try:
        rows = bench_mod.run_bench(
            admin, developer,
            replications=replications,
            inter_op_delay_s=inter_op_delay,
            inclusion_timeout_s=timeout,
            progress=lambda msg: click.echo(msg, err=True),
        )
    except bench_mod.BenchError as exc:
        raise ApiFailure(str(exc)) from exc
    bench_mod.write_csv(rows, out_path)
    click.echo(f"wrote {len(rows)} rows to {out_path}")
    click.echo(bench_mod.render_markdown(bench_mod.summarize(rows)))


@bench.command("report")
@click.option("--in", "in_path", required=True, type=click.Path(exists=True))
@click.option("--plot-dir", type=click.Path(), help="Also write latency/gas PNGs here.")
def bench_report(in_path, plot_dir):
    """Summarise a bench CSV (means/stddev per op and confirmation level)."""
    try:
        rows = bench_mod.read_csv(in_path)
        click.echo(bench_mod.render_markdown(bench_mod.summarize(rows)))
        if plot_dir:
            for path in bench_mod.write_plots(rows, plot_dir):
                click.echo(f"wrote {path}")
    except bench_mod.BenchError as exc:
        raise ApiFailure(str(exc)) from exc


# ---------------------------------------------------------------------------
# local network scaffolding
# ---------------------------------------------------------------------------


@main.group()
def testnet() -> None:
    """Local development network scaffolding."""


@testnet.command("init")
@click.option("--nodes", default=5, show_default=True, help="Validator count.")
@click.option("--observers", default=0, show_default=True)
@click.option("--block-interval", default=13.0, show_default=True)
@click.option("--passphrase", default="proml-dev", show_default=True)
@click.option("--out", "out_dir", required=True, type=click.Path())
def testnet_init(nodes, observers, block_interval, passphrase, out_dir):
    """Generate genesis.json plus per-node wallets and configs."""
    from .testnet import build_testnet

    genesis, configs, _ = build_testnet(
        out_dir, n_validators=nodes, n_observers=observers,
        block_interval_s=block_interval, passphrase=passphrase,
    )
    click.echo(f"genesis {genesis.chain_id} written under {out_dir}")
    for i, config in enumerate(configs):
        click.echo(f"  node{i}: promld --config {out_dir}/node{i}/config.json "
                   f"(api {config.api_listen}, {config.role})")


if __name__ == "__main__":
    main()
