"""Benchmark harness: replay the frozen ten-operation workload against a
running network, track each transaction to one, six, and twelve
confirmations, and report latency and gas.

Latency at confirmation level x is t_x - t_0: from the submission
timestamp (client clock at the 202 response) to the timestamp of the
block that provides the x-th confirmation (chain clock). Both clocks run
on the same host in desk-scale runs, so skew is negligible; noted as a
measurement caveat.
"""

from __future__ import annotations

import csv
import statistics
from dataclasses import dataclass, field
from pathlib import Path

import requests

from .clock import WallClock
from .workload import ALL_LABELS, REGISTRATION_LABELS, UPDATE_LABELS, load_workload, resolve

CSV_COLUMNS = (
    "op_label",
    "replication",
    "submit_unix_ms",
    "t1_unix_ms",
    "t6_unix_ms",
    "t12_unix_ms",
    "gas_used",
    "tx_id",
    "status",
)

CONFIRMATION_LEVELS = (1, 6, 12)


class BenchError(Exception):
    pass


@dataclass
class BenchRow:
    op_label: str
    replication: int
    submit_unix_ms: int
    t1_unix_ms: int | None = None
    t6_unix_ms: int | None = None
    t12_unix_ms: int | None = None
    gas_used: int | None = None
    tx_id: str = ""
    status: str = "pending"
    inclusion_height: int | None = None
    node_url: str = ""

    def latency_s(self, level: int) -> float | None:
        t = {1: self.t1_unix_ms, 6: self.t6_unix_ms, 12: self.t12_unix_ms}[level]
        if t is None:
            return None
        return (t - self.submit_unix_ms) / 1000.0


def capture_doc(op) -> dict:
    """CaptureRequest body for one workload op (placeholders already resolved)."""
    if op.kind == "RegisterDataset":
        doc = {"kind": op.kind, "metadata": op.metadata}
        if op.ancestor:
            doc["ancestor"] = op.ancestor
        return doc
    if op.kind == "RegisterModel":
        return {"kind": op.kind, "metadata": op.metadata}
    return {
        "kind": "RecordActivity",
        "asset": op.asset,
        "activity": op.activity,
        "payload": op.payload or {},
    }


def run_bench(
    admin_url: str,
    developer_url: str,
    replications: int = 10,
    inter_op_delay_s: float = 10.0,
    clock=None,
    inclusion_timeout_s: float = 600.0,
    poll_interval_s: float = 0.5,
    progress=None,
) -> list[BenchRow]:
    """Submit the workload `replications` times with fixed inter-op delays,
    then resolve confirmation times from block timestamps."""
    clock = clock if clock is not None else WallClock()
    session = requests.Session()
    ops = load_workload()
    rows: list[BenchRow] = []

    def say(msg: str) -> None:
        if progress:
            progress(msg)

    for replication in range(replications):
        addresses: dict[str, str] = {}
        for op in ops:
            node_url = admin_url if op.role == "admin" else developer_url
            resolved = resolve(op, addresses)
            doc = capture_doc(resolved)
            submit_ms = clock.now_ms()
            row = BenchRow(op.label, replication, submit_ms, node_url=node_url)
            try:
                resp = session.post(f"{node_url}/v1/provenance", json=doc, timeout=30)
                if resp.status_code != 202:
                    raise BenchError(f"{op.label}: node said {resp.status_code} {resp.text}")
                body = resp.json()
                row.tx_id = body["tx_id"]
                if body.get("asset"):
                    placeholder = {"D1": "$D1", "D2": "$D2", "ML1": "$MODEL"}.get(op.label)
                    if placeholder:
                        addresses[placeholder] = body["asset"]
            except (OSError, requests.RequestException) as exc:
                row.status = "failed"
                say(f"submit {op.label} rep {replication}: {exc}")
            rows.append(row)
            say(f"rep {replication} {op.label} submitted tx={row.tx_id[:10]}")
            clock.sleep_ms(inter_op_delay_s * 1000)

    _resolve_confirmations(session, rows, clock, inclusion_timeout_s, poll_interval_s, say)
    return rows


def _resolve_confirmations(session, rows, clock, timeout_s, poll_s, say) -> None:
    block_times: dict[tuple[str, int], int] = {}

    def block_timestamp(node_url: str, height: int) -> int | None:
        key = (node_url, height)
        if key not in block_times:
            r = session.get(f"{node_url}/v1/blocks/{height}", timeout=30)
            if r.status_code != 200:
                return None
            block_times[key] = r.json()["timestamp_ms"]
        return block_times[key]

    for row in rows:
        if row.status == "failed":
            continue
        # resolution happens after all submissions; the hang timeout runs
        # from when this row's resolution starts
        deadline = clock.now_ms() + timeout_s * 1000
        while clock.now_ms() < deadline:
            r = session.get(f"{row.node_url}/v1/tx/{row.tx_id}", timeout=30)
            doc = r.json()
            if doc.get("included"):
                row.inclusion_height = doc["height"]
                row.gas_used = doc["receipt"]["gas_used"]
                break
            clock.sleep_ms(poll_s * 1000)
        if row.inclusion_height is None:
            row.status = "failed"
            say(f"{row.op_label} rep {row.replication} never included; marked failed")
            continue
        # wait for the 12th confirmation, then read the slot timestamps
        target = row.inclusion_height + max(CONFIRMATION_LEVELS) - 1
        while clock.now_ms() < deadline:
            r = session.get(f"{row.node_url}/v1/status", timeout=30)
            if r.json()["height"] >= target:
                break
            clock.sleep_ms(poll_s * 1000)
        t = {}
        for level in CONFIRMATION_LEVELS:
            ts = block_timestamp(row.node_url, row.inclusion_height + level - 1)
            if ts is None:
                break
            t[level] = ts
        if len(t) != len(CONFIRMATION_LEVELS):
            row.status = "failed"
            continue
        row.t1_unix_ms, row.t6_unix_ms, row.t12_unix_ms = t[1], t[6], t[12]
        row.status = "ok"


def write_csv(rows: list[BenchRow], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for row in rows:
            writer.writerow(
                [
                    row.op_label,
                    row.replication,
                    row.submit_unix_ms,
                    row.t1_unix_ms if row.t1_unix_ms is not None else "",
                    row.t6_unix_ms if row.t6_unix_ms is not None else "",
                    row.t12_unix_ms if row.t12_unix_ms is not None else "",
                    row.gas_used if row.gas_used is not None else "",
                    row.tx_id,
                    row.status,
                ]
            )


def read_csv(path: str | Path) -> list[BenchRow]:
    """Raises BenchError naming the first malformed row."""
    rows: list[BenchRow] = []
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise BenchError("empty CSV: no header row") from None
        if tuple(header) != CSV_COLUMNS:
            raise BenchError(f"row 1: header must be {','.join(CSV_COLUMNS)}")
        for lineno, record in enumerate(reader, start=2):
            if not record:
                continue
            try:
                if len(record) != len(CSV_COLUMNS):
                    raise ValueError("wrong column count")
                opt = lambda s: int(s) if s else None
                rows.append(
                    BenchRow(
                        op_label=record[0],
                        replication=int(record[1]),
                        submit_unix_ms=int(record[2]),
                        t1_unix_ms=opt(record[3]),
                        t6_unix_ms=opt(record[4]),
                        t12_unix_ms=opt(record[5]),
                        gas_used=opt(record[6]),
                        tx_id=record[7],
                        status=record[8],
                    )
                )
            except (ValueError, IndexError) as exc:
                raise BenchError(f"row {lineno}: {exc}") from exc
    if not rows:
        raise BenchError("empty CSV: no data rows")
    return rows


@dataclass
class OpStats:
    op_label: str
    n: int
    latency_mean_s: dict[int, float] = field(default_factory=dict)
    latency_stdev_s: dict[int, float] = field(default_factory=dict)
    gas_mean: float = 0.0
    gas_stdev: float = 0.0


@dataclass
class BenchSummary:
    per_op: list[OpStats]
    level_means_s: dict[int, float]
    update_gas_mean: float
    registration_gas_means: dict[str, float]
    failed_rows: int


def summarize(rows: list[BenchRow]) -> BenchSummary:
    ok = [r for r in rows if r.status == "ok"]
    if not ok:
        raise BenchError("no successful rows to summarise")
    per_op = []
    for label in ALL_LABELS:
        mine = [r for r in ok if r.op_label == label]
        if not mine:
            continue
        stats = OpStats(label, len(mine))
        for level in CONFIRMATION_LEVELS:
            lat = [r.latency_s(level) for r in mine]
            stats.latency_mean_s[level] = statistics.fmean(lat)
            stats.latency_stdev_s[level] = statistics.pstdev(lat) if len(lat) > 1 else 0.0
        gas = [r.gas_used for r in mine]
        stats.gas_mean = statistics.fmean(gas)
        stats.gas_stdev = statistics.pstdev(gas) if len(gas) > 1 else 0.0
        per_op.append(stats)
    level_means = {
        level: statistics.fmean(r.latency_s(level) for r in ok)
        for level in CONFIRMATION_LEVELS
    }
    updates = [r.gas_used for r in ok if r.op_label in UPDATE_LABELS]
    registrations = {
        label: statistics.fmean(r.gas_used for r in ok if r.op_label == label)
        for label in REGISTRATION_LABELS
        if any(r.op_label == label for r in ok)
    }
    return BenchSummary(
        per_op=per_op,
        level_means_s=level_means,
        update_gas_mean=statistics.fmean(updates) if updates else 0.0,
        registration_gas_means=registrations,
        failed_rows=len(rows) - len(ok),
    )


def render_markdown(summary: BenchSummary) -> str:
    lines = ["# Benchmark report", ""]
    lines.append("| op | n | L@1 mean s | L@6 mean s | L@12 mean s | gas mean | gas stdev |")
    lines.append("|----|---|-----------|-----------|------------|----------|-----------|")
    for s in summary.per_op:
        lines.append(
            f"| {s.op_label} | {s.n} "
            f"| {s.latency_mean_s[1]:.2f} | {s.latency_mean_s[6]:.2f} "
            f"| {s.latency_mean_s[12]:.2f} | {s.gas_mean:.0f} | {s.gas_stdev:.0f} |"
        )
    lines.append("")
    for level in CONFIRMATION_LEVELS:
        lines.append(f"- mean L@{level}: {summary.level_means_s[level]:.2f} s")
    lines.append(f"- mean update gas (ML2-*): {summary.update_gas_mean:.0f}")
    for label, gas in summary.registration_gas_means.items():
        lines.append(f"- mean {label} registration gas: {gas:.0f}")
    if summary.failed_rows:
        lines.append(f"- failed rows excluded: {summary.failed_rows}")
    lines.append("")
    ranked = sorted(summary.per_op, key=lambda s: s.gas_mean, reverse=True)
    lines.append(
        "Most expensive ops by gas: " + ", ".join(s.op_label for s in ranked[:3])
    )
    return "\n".join(lines)


def write_plots(rows: list[BenchRow], out_dir: str | Path) -> list[Path]:
    """Latency and gas bar charts; requires matplotlib (plots extra)."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    summary = summarize(rows)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    labels = [s.op_label for s in summary.per_op]
    written = []

    fig, ax = plt.subplots(figsize=(10, 4))
    width = 0.27
    for i, level in enumerate(CONFIRMATION_LEVELS):
        xs = [j + (i - 1) * width for j in range(len(labels))]
        ax.bar(xs, [s.latency_mean_s[level] for s in summary.per_op], width,
               label=f"L@{level}")
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=45, ha="right")
    ax.set_ylabel("seconds")
    ax.set_title("Mean latency per operation and confirmation level")
    ax.legend()
    fig.tight_layout()
    latency_path = out / "latency.png"
    fig.savefig(latency_path)
    plt.close(fig)
    written.append(latency_path)

    fig, ax = plt.subplots(figsize=(10, 4))
    ax.bar(labels, [s.gas_mean for s in summary.per_op])
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=45, ha="right")
    ax.set_ylabel("gas units")
    ax.set_title("Mean gas per operation")
    fig.tight_layout()
    gas_path = out / "gas.png"
    fig.savefig(gas_path)
    plt.close(fig)
    written.append(gas_path)
    return written
