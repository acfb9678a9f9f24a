import json
import math
import subprocess
import sys

import numpy as np
import pytest

from betafluct.cli import SCAN_HEADER, main

TWO_PI = 2.0 * math.pi


def _read_csv(path):
    with open(path) as fh:
        lines = fh.read().strip().split("\n")
    return lines[0], [line.split(",") for line in lines[1:]]


def test_oracle_cue_single_point_column(tmp_path, capsys):
    out = str(tmp_path / "oracle")
    rc = main(["oracle-cue", "--n", "1", "--grid", "0:6.2832:8", "--out", out])
    assert rc == 0
    header, rows = _read_csv(out + ".csv")
    assert header == "arc_length,variance"
    assert len(rows) == 8
    for arc_s, var_s in rows:
        p = min(float(arc_s) / TWO_PI, 1.0)
        assert float(var_s) == pytest.approx(p * (1 - p), abs=1e-8)


def test_verify_count_reports_zero_mismatches(capsys):
    rc = main(["verify-count", "--beta", "2", "--n", "64", "--samples", "100", "--seed", "7"])
    captured = capsys.readouterr()
    assert rc == 0
    assert "0 mismatches" in captured.out


def test_scan_cbe_schema_and_reproducibility(tmp_path):
    out1, out2 = str(tmp_path / "a"), str(tmp_path / "b")
    args = ["scan-cbe", "--beta", "2", "--n", "32", "--samples", "600", "--seed", "3",
            "--grid", "geom:1:16:4"]
    assert main(args + ["--out", out1]) == 0
    assert main(args + ["--out", out2]) == 0
    csv1 = open(out1 + ".csv", "rb").read()
    assert csv1 == open(out2 + ".csv", "rb").read()
    header, rows = _read_csv(out1 + ".csv")
    assert header == SCAN_HEADER
    assert len(rows) == 4
    manifest = json.load(open(out1 + ".manifest.json"))
    assert manifest["command"] == "scan-cbe"
    assert manifest["master_seed"] == 3
    assert "duration_s" in manifest and "version" in manifest
    assert manifest["grid"][0] == 1.0


def test_scan_worker_count_does_not_change_bytes(tmp_path):
    args = ["scan-gbe", "--beta", "1", "--n", "24", "--samples", "800", "--seed", "5",
            "--grid", "geom:1:8:3"]
    outputs = []
    for workers in ("1", "4"):
        out = str(tmp_path / f"w{workers}")
        assert main(args + ["--workers", workers, "--out", out]) == 0
        outputs.append(open(out + ".csv", "rb").read())
    assert outputs[0] == outputs[1]


def test_scan_sine_runs(tmp_path):
    out = str(tmp_path / "sine")
    rc = main(["scan-sine", "--beta", "2", "--n", "256", "--samples", "300", "--seed", "2",
               "--grid", "1:9:3", "--out", out])
    assert rc == 0
    header, rows = _read_csv(out + ".csv")
    assert header == SCAN_HEADER
    assert [r[0] for r in rows] == ["sine"] * 3


def test_json_format(tmp_path):
    out = str(tmp_path / "rows")
    rc = main(["scan-cbe", "--n", "16", "--samples", "300", "--seed", "1",
               "--grid", "geom:1:8:3", "--format", "json", "--out", out])
    assert rc == 0
    rows = json.load(open(out + ".json"))
    assert len(rows) == 3
    assert rows[0]["ensemble"] == "cbe"


def test_tail_check_output(tmp_path):
    out = str(tmp_path / "tail")
    rc = main(["tail-check", "--beta", "2", "--n", "20", "--samples", "4000", "--seed", "6",
               "--b-grid", "6,12", "--out", out])
    assert rc == 0
    header, rows = _read_csv(out + ".csv")
    assert header == "b,hits,m,empirical,wilson_hi,bound"
    assert len(rows) == 2
    manifest = json.load(open(out + ".manifest.json"))
    assert "second_moment" in manifest


def test_semicircle_residual_table(capsys):
    rc = main(["semicircle-residual", "--n-grid", "100,1000", "--mu-factors", "0,1,2"])
    captured = capsys.readouterr()
    assert rc == 0
    lines = captured.out.strip().split("\n")
    assert lines[0] == "n,mu,residual"
    assert len(lines) == 7
    for line in lines[1:]:
        assert abs(float(line.split(",")[2])) <= 10.0


def test_sample_commands(tmp_path, capsys):
    for extra in (["--ensemble", "cbe", "--n", "8"],
                  ["--ensemble", "gbe", "--n", "8"],
                  ["--ensemble", "sine", "--n", "128", "--xmax", "5"]):
        rc = main(["sample", "--samples", "2", "--seed", "4"] + extra)
        assert rc == 0
        captured = capsys.readouterr()
        assert len(captured.out.strip().split("\n")) >= 2


def test_usage_errors_exit_2(capsys):
    assert main(["scan-cbe", "--badflag"]) == 2
    assert main(["nonsense-command"]) == 2
    assert main(["scan-cbe", "--beta", "-1", "--samples", "10"]) == 2
    assert main(["scan-cbe", "--grid", "oops"]) == 2
    capsys.readouterr()


def test_cli_entrypoint_subprocess():
    proc = subprocess.run(
        [sys.executable, "-m", "betafluct.cli", "oracle-cue", "--n", "2", "--grid", "0:3:4"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert proc.stdout.startswith("arc_length,variance")
