"""
Output and CLI tests.
Result tables, sentinels, manifests, SVG charts and the command-line
exit codes, all written into temporary directories.
"""
import sys, os
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import json
import math
import tempfile
from pathlib import Path

import pytest

import main as cli
from simulation.config import EstimatorSpec, SimConfig, parse_estimators
from simulation.engine import EfficiencyRow, EfficiencyTable
from environment.data import EstimatorId
from utils.errors import DomainError, MalformedTable
from utils.helpers import THREADS_ENV, format_value, parse_grid, parse_value
from visualization.plot import collect_series, plot_table, series_label
from visualization.report import (
    RISK_COLUMNS,
    TABLE_COLUMNS,
    RunManifest,
    numeric_column,
    read_table,
    write_table,
)

DESIGN = "n=30;p=5;k=5;r=0"


def sample_table(design: str = DESIGN) -> EfficiencyTable:
    lse = EstimatorSpec(EstimatorId.LSE)
    re = EstimatorSpec(EstimatorId.RE)
    pte = EstimatorSpec(EstimatorId.PTE, alpha=0.05)
    return EfficiencyTable([
        EfficiencyRow(design, 0.0, lse, 2.5, 1.0),
        EfficiencyRow(design, 0.0, re, 0.0, math.inf),
        EfficiencyRow(design, 0.0, pte, 1.25, 2.0),
        EfficiencyRow(design, 1.0, lse, 2.5, 1.0),
        EfficiencyRow(design, 1.0, re, 5.0, 0.5),
        EfficiencyRow(design, 1.0, pte, math.nan, math.nan),
    ])


def test_values_and_grids():
    print("=== Value Format Tests ===")
    assert format_value(math.inf) == "Inf"
    assert format_value(-math.inf) == "-Inf"
    assert format_value(math.nan) == "NA"
    assert format_value(0.0) == "0"
    assert format_value(1.0 / 3.0) == "0.3333333333"
    assert parse_value("Inf") == math.inf
    assert math.isnan(parse_value("NA"))
    assert parse_value("2.5") == 2.5

    assert len(parse_grid("default")) == 23
    assert parse_grid("0:3") == (0.0, 1.0, 2.0, 3.0)
    assert parse_grid("0:1:0.25") == (0.0, 0.25, 0.5, 0.75, 1.0)
    assert parse_grid("0, 0.5") == (0.0, 0.5)
    for bad in ("3:1", "a,b", "-1", "0:1:0", "1:2:3:4"):
        with pytest.raises(DomainError):
            parse_grid(bad)
    print("  Value format tests PASSED")


def test_table_round_trip():
    print("=== Table File Tests ===")
    with tempfile.TemporaryDirectory() as tmp:
        path = write_table(sample_table(), Path(tmp) / "out" / "table.csv")
        lines = path.read_text(encoding="utf-8").splitlines()
        assert lines[0] == ",".join(TABLE_COLUMNS)
        assert lines[1] == f"0,LSE,,2.5,1,{DESIGN}"
        assert lines[2] == f"0,RE,,0,Inf,{DESIGN}"
        assert lines[3] == f"0,PTE,alpha=0.05,1.25,2,{DESIGN}"
        assert lines[6] == f"1,PTE,alpha=0.05,NA,NA,{DESIGN}"

        frame = read_table(path)
        assert list(frame.columns) == TABLE_COLUMNS
        assert frame["rel_eff"].tolist() == ["1", "Inf", "2", "1", "0.5", "NA"]
        values = numeric_column(frame, "rel_eff")
        assert math.isinf(values[1]) and math.isnan(values[5])
    print("  Table file tests PASSED")


def test_malformed_tables():
    print("=== Malformed Table Tests ===")
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        with pytest.raises(MalformedTable):
            read_table(tmp / "missing.csv")

        (tmp / "empty.csv").write_text("", encoding="utf-8")
        with pytest.raises(MalformedTable):
            read_table(tmp / "empty.csv")

        (tmp / "short.csv").write_text("delta2,estimator\n0,LSE\n", encoding="utf-8")
        with pytest.raises(MalformedTable):
            read_table(tmp / "short.csv")

        (tmp / "header.csv").write_text(",".join(TABLE_COLUMNS) + "\n", encoding="utf-8")
        with pytest.raises(MalformedTable):
            read_table(tmp / "header.csv")

        (tmp / "text.csv").write_text(",".join(TABLE_COLUMNS) + "\n0,LSE,,x,y,n=1\n",
                                      encoding="utf-8")
        with pytest.raises(MalformedTable):
            numeric_column(read_table(tmp / "text.csv"), "rel_eff")
    print("  Malformed table tests PASSED")


def test_manifest():
    print("=== Manifest Tests ===")
    configs = [SimConfig(n=30, p=5, reps=4, estimators=parse_estimators("lse,rr,lasso"))]
    with tempfile.TemporaryDirectory() as tmp:
        path = RunManifest.for_run(configs, "custom", 1.23456).write(Path(tmp) / "manifest.json")
        manifest = RunManifest.read(path)
        assert manifest.seed == 1
        assert manifest.preset == "custom"
        assert manifest.wall_time_s == 1.235
        assert manifest.configs[0]["estimators"][1] == {"estimator": "RR", "tuning": ""}
        assert "plugin" in manifest.decisions["kappa_rule"]
        assert manifest.decisions["k_default"].startswith("k = p")

        (Path(tmp) / "bad.json").write_text("{not json", encoding="utf-8")
        with pytest.raises(MalformedTable):
            RunManifest.read(Path(tmp) / "bad.json")
    print("  Manifest tests PASSED")


def test_plotting():
    print("=== Plot Tests ===")
    assert series_label("EN", "mix=0.25") == "EN25"
    assert series_label("PTE", "alpha=0.15") == "PTE(0.15)"
    assert series_label("S+", "") == "S+"

    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        table = write_table(sample_table(), tmp / "run" / "table.csv")
        svg = plot_table(table, tmp / "run" / "chart.svg", title="sample")
        text = svg.read_text(encoding="utf-8")
        assert svg.exists() and "<svg" in text
        assert ">Inf<" in text, "off-scale points carry the raw sentinel"

        # finite points are labelled with the CSV string, not a re-rounded number
        odd = EfficiencyTable([
            EfficiencyRow(DESIGN, 0.0, EstimatorSpec(EstimatorId.LSE), 2.5, 1.0),
            EfficiencyRow(DESIGN, 0.0, EstimatorSpec(EstimatorId.S), 0.81, 2.5 / 0.81),
        ])
        odd_path = write_table(odd, tmp / "odd.csv")
        raw = collect_series(read_table(odd_path))["S"][2][0]
        assert raw == "3.086419753"
        odd_text = plot_table(odd_path, tmp / "odd.svg").read_text(encoding="utf-8")
        assert f">{raw}<" in odd_text, "finite label missing from the SVG"

        series = collect_series(read_table(table))
        assert set(series) == {"LSE", "RE", "PTE(0.05)"}
        xs, ys, raw = series["RE"]
        assert xs == [0.0, 1.0] and raw == ["Inf", "0.5"]

        combined = sample_table()
        combined.extend(sample_table("n=30;p=8;k=5;r=0"))
        both = write_table(combined, tmp / "both.csv")
        assert len(collect_series(read_table(both))) == 6
        # along p the two Δ² values become separate series
        by_p = collect_series(read_table(both), x="p")
        assert len(by_p) == 6
        assert all(xs == [5.0, 8.0] for xs, _, _ in by_p.values())
        assert "LSE [k=5;n=30;r=0;delta2=0]" in by_p
        with pytest.raises(DomainError):
            collect_series(read_table(both), x="n")

        # every series NA: nothing to draw
        empty = EfficiencyTable([EfficiencyRow(DESIGN, 0.0, EstimatorSpec(EstimatorId.LSE),
                                               math.nan, math.nan)])
        with pytest.raises(MalformedTable):
            plot_table(write_table(empty, tmp / "na.csv"), tmp / "na.svg")
        with pytest.raises(DomainError):
            plot_table(table, tmp / "cap.svg", y_cap=0.0)
    print("  Plot tests PASSED")


def test_cli_risk():
    print("=== CLI Risk Tests ===")
    with tempfile.TemporaryDirectory() as tmp:
        assert cli.main(["risk", "--p", "10", "--grid", "0:20", "--out", tmp, "--dominance",
                         "--c-inv-eigenvalues", "1,1,1,1,1,1,1,1,1,1"]) == 0
        frame = read_table(Path(tmp) / "risk.csv", required=RISK_COLUMNS)
        assert len(frame) == 21 * 7
        lse = frame[frame["estimator"] == "LSE"]
        assert set(lse["adqr"]) == {"10"}
        stein_origin = frame[(frame["estimator"] == "S") & (frame["delta2"] == "0")]
        assert abs(parse_value(stein_origin["adqr"].iloc[0]) - 2.0) < 1e-8
        re_ten = frame[(frame["estimator"] == "RE") & (frame["delta2"] == "10")]
        assert re_ten["adqr"].iloc[0] == "10"

        report = json.loads((Path(tmp) / "dominance.json").read_text(encoding="utf-8"))
        assert report["re_lse_boundary"] == "10"
        assert report["stein_condition"] is True
        first = report["comparisons"][0]
        assert (first["first"], first["second"]) == ("RE", "LSE")
        assert first["regions"][0] == {"from": "0", "to": "9", "better": "RE"}

        assert cli.main(["risk", "--p", "2", "--grid", "0,1", "--out", tmp]) == 0
        assert cli.main(["risk", "--p", "10", "--grid", "-1", "--out", tmp]) == 2
    print("  CLI risk tests PASSED")


def test_cli_simulate_and_plot():
    print("=== CLI Simulate Tests ===")
    args = ["simulate", "--n", "30", "--p", "5", "--reps", "4", "--grid", "0,1",
            "--estimators", "lse,re,s", "--workers", "1"]
    with tempfile.TemporaryDirectory() as tmp:
        first, second = Path(tmp) / "a", Path(tmp) / "b"
        assert cli.main(args + ["--out", str(first)]) == 0
        assert cli.main(args + ["--out", str(second)]) == 0
        table = first / "table.csv"
        assert table.read_bytes() == (second / "table.csv").read_bytes(), "reruns must match"
        frame = read_table(table)
        assert len(frame) == 6
        assert frame[(frame["estimator"] == "RE") & (frame["delta2"] == "0")]["rel_eff"].iloc[0] == "Inf"
        manifest = RunManifest.read(first / "manifest.json")
        assert manifest.configs[0]["reps"] == 4

        assert cli.main(["plot", "--table", str(table)]) == 0
        assert (first / "plot.svg").exists()
        assert cli.main(["plot", "--table", str(Path(tmp) / "none.csv")]) == 2

        assert cli.main(["simulate", "--n", "4", "--p", "5", "--out", tmp]) == 2
        assert cli.main(["simulate", "--n", "30", "--p", "5", "--reps", "2", "--sigma", "1e-12",
                         "--grid", "0", "--estimators", "lse,s", "--workers", "1",
                         "--out", tmp]) == 3
        with pytest.raises(SystemExit) as info:
            cli.main(["simulate", "--preset", "nonexistent"])
        assert info.value.code == 2
    print("  CLI simulate tests PASSED")


def test_cli_worker_counts():
    print("=== Worker Count Tests ===")
    args = ["simulate", "--preset", "table1", "--reps", "24", "--grid", "0,10"]
    saved = os.environ.pop(THREADS_ENV, None)
    try:
        with tempfile.TemporaryDirectory() as tmp:
            single, pooled = Path(tmp) / "one", Path(tmp) / "four"
            assert cli.main(args + ["--workers", "1", "--out", str(single)]) == 0
            assert cli.main(args + ["--workers", "4", "--out", str(pooled)]) == 0
            table = (single / "table.csv").read_bytes()
            assert table == (pooled / "table.csv").read_bytes(), "table.csv depends on worker count"
            assert len(read_table(single / "table.csv")) == 2 * 13
    finally:
        if saved is not None:
            os.environ[THREADS_ENV] = saved
    print("  Worker count tests PASSED")


def main():
    print("\n" + "=" * 50)
    print("  shrinkbench: Output and CLI Test Suite")
    print("=" * 50 + "\n")

    test_values_and_grids()
    test_table_round_trip()
    test_malformed_tables()
    test_manifest()
    test_plotting()
    test_cli_risk()
    test_cli_simulate_and_plot()
    test_cli_worker_counts()

    print("\n" + "=" * 50)
    print("  ALL TESTS PASSED")
    print("=" * 50 + "\n")


if __name__ == "__main__":
    main()
