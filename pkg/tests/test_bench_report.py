"""Bench CSV parsing and summary math, checked against hand-computed means."""

import pytest

from proml import bench
from proml.bench import BenchRow, BenchError


def make_row(label, rep, submit, t1, t6, t12, gas, status="ok"):
    return BenchRow(label, rep, submit, t1, t6, t12, gas, tx_id="ab" * 32, status=status)


def test_summary_reproduces_hand_computed_means():
    # three rows for one op: latencies L@1 = 2s, 4s, 6s -> mean 4s
    rows = [
        make_row("ML2-1", 0, 1000, 3000, 10000, 20000, 100),
        make_row("ML2-1", 1, 1000, 5000, 12000, 22000, 100),
        make_row("ML2-1", 2, 1000, 7000, 14000, 24000, 130),
    ]
    summary = bench.summarize(rows)
    op = summary.per_op[0]
    assert op.op_label == "ML2-1" and op.n == 3
    assert op.latency_mean_s[1] == pytest.approx(4.0)
    assert op.latency_mean_s[6] == pytest.approx((9 + 11 + 13) / 3)
    assert op.latency_mean_s[12] == pytest.approx(21.0)
    assert op.gas_mean == pytest.approx(110.0)
    assert summary.level_means_s[1] == pytest.approx(4.0)
    assert summary.update_gas_mean == pytest.approx(110.0)


def test_latency_ordering_invariant_in_fixture_rows():
    rows = [
        make_row("D1", 0, 0, 5000, 30000, 80000, 900000),
        make_row("ML2-4", 0, 0, 7000, 40000, 90000, 280000),
    ]
    for row in rows:
        assert row.latency_s(1) <= row.latency_s(6) <= row.latency_s(12)


def test_csv_roundtrip(tmp_path):
    rows = [
        make_row("D1", 0, 1000, 2000, 7000, 15000, 990000),
        make_row("ML2-3", 1, 5000, None, None, None, None, status="failed"),
    ]
    path = tmp_path / "bench.csv"
    bench.write_csv(rows, path)
    back = bench.read_csv(path)
    assert back[0].op_label == "D1" and back[0].t12_unix_ms == 15000
    assert back[1].status == "failed" and back[1].t1_unix_ms is None


def test_empty_csv_is_an_error(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text("")
    with pytest.raises(BenchError):
        bench.read_csv(path)


def test_malformed_row_reported_with_number(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text(
        ",".join(bench.CSV_COLUMNS)
        + "\nD1,0,1000,2000,7000,15000,990000,ab,ok\nD2,zero,1000,,,,,x,ok\n"
    )
    with pytest.raises(BenchError, match="row 3"):
        bench.read_csv(path)


def test_summary_requires_ok_rows():
    rows = [make_row("D1", 0, 0, None, None, None, None, status="failed")]
    with pytest.raises(BenchError):
        bench.summarize(rows)


def test_workload_fixture_shape():
    from proml.workload import ALL_LABELS, load_workload

    ops = load_workload()
    assert [op.label for op in ops] == list(ALL_LABELS)
    assert ops[0].kind == "RegisterDataset" and ops[1].ancestor == "$D1"
    assert ops[2].kind == "RegisterModel"
    assert [op.activity for op in ops[3:]] == [
        "SelectData", "PreprocessData", "EngineerFeatures", "Train",
        "Evaluate", "Validate", "Deploy",
    ]
