"""Command-line front end: artifacts, config precedence, exit codes."""

import csv
import json
import math

import pytest

from geodesic_lab import cli


def run_cli(*argv):
    return cli.main(list(argv))


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


# --- artifact shapes --------------------------------------------------------


def test_forms_enumerate_writes_one_row_per_class(tmp_path):
    out = tmp_path / "forms.csv"
    assert run_cli("forms", "enumerate", "--disc", "40", "--out", str(out)) == 0
    rows = read_csv(out)
    assert rows[0] == ["disc", "class_index", "a", "b", "c", "cycle_length"]
    assert len(rows) == 3
    assert [r[0] for r in rows[1:]] == ["40", "40"]


def test_csv_is_rfc4180_crlf(tmp_path):
    out = tmp_path / "forms.csv"
    run_cli("forms", "enumerate", "--disc", "5", "--out", str(out))
    raw = out.read_bytes()
    assert raw.count(b"\r\n") == raw.count(b"\n")
    assert raw.startswith(b"disc,class_index")


def test_cuspmass_above_peak_is_zero(tmp_path):
    out = tmp_path / "mass.csv"
    assert run_cli("stats", "cuspmass", "--disc", "5", "--H", "2", "--out", str(out)) == 0
    rows = read_csv(out)
    assert rows[0] == ["disc", "H", "per_class", "seed", "samples", "mass"]
    assert float(rows[1][5]) == 0.0


def test_volume_rows_echo_parameters(tmp_path):
    out = tmp_path / "vol.csv"
    assert run_cli("stats", "volume", "--discs", "5,8", "--out", str(out)) == 0
    rows = read_csv(out)
    assert [r[0] for r in rows[1:]] == ["5", "8"]
    assert all(float(r[4]) <= 1e-9 for r in rows[1:])
    assert all(r[6] == "1e-09" for r in rows[1:])


def test_components_rows_match_ideals(tmp_path):
    out = tmp_path / "comp.csv"
    assert run_cli("stats", "components", "--disc", "40", "--H", "1.2", "--out", str(out)) == 0
    rows = read_csv(out)
    head = rows[0]
    row = dict(zip(head, rows[1]))
    assert row["match"] == "true"
    assert row["components"] == row["ideal_count"]


def test_geodesics_sample_row_counts(tmp_path):
    out = tmp_path / "s.csv"
    assert run_cli(
        "geodesics", "sample", "--disc", "5", "--per-class", "25", "--seed", "3",
        "--out", str(out),
    ) == 0
    rows = read_csv(out)
    assert len(rows) == 1 + 50  # h(5)=1, two oriented strands
    assert rows[1][:3] == ["5", "25", "3"]


def test_ternary_count_known_value(tmp_path):
    out = tmp_path / "t.csv"
    assert run_cli("ternary", "count", "--form", "1,0,5", "--out", str(out)) == 0
    rows = read_csv(out)
    assert rows[1] == ["1", "0", "5", "2"]


def test_dynamics_cover_json_document(tmp_path):
    out = tmp_path / "cover.json"
    assert run_cli(
        "dynamics", "cover", "--disc", "5", "--N", "8", "--eta", "0.05",
        "--per-class", "150", "--out", str(out),
    ) == 0
    doc = json.loads(out.read_text())
    assert doc["schema"] == 1
    assert doc["parameters"]["seed"] == 0
    assert doc["parameters"]["eta"] == 0.05
    assert doc["cover_size"] >= 1
    assert abs(doc["entropy_estimate"] - math.log(doc["cover_size"]) / 16.0) < 1e-12


def test_dynamics_census_json_document(tmp_path):
    out = tmp_path / "census.json"
    assert run_cli(
        "dynamics", "census", "--disc", "100001", "--N", "6", "--M", "4",
        "--per-class", "200", "--out", str(out),
    ) == 0
    doc = json.loads(out.read_text())
    assert doc["schema"] == 1
    assert doc["within_envelope"] is True
    assert [c["N"] for c in doc["censuses"]] == [2, 4, 6]
    assert all(c["separation_violations"] == 0 for c in doc["censuses"])


def test_plot_writes_svg(tmp_path):
    out = tmp_path / "g.svg"
    assert run_cli(
        "plot", "geodesics", "--disc", "5", "--per-class", "40", "--out", str(out)
    ) == 0
    assert out.read_text().lstrip().startswith("<?xml")


# --- determinism ------------------------------------------------------------


def test_identical_runs_are_byte_identical(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["geodesics", "sample", "--disc", "13", "--per-class", "30", "--seed", "7"]
    assert run_cli(*args, "--out", str(a)) == 0
    assert run_cli(*args, "--out", str(b)) == 0
    assert a.read_bytes() == b.read_bytes()


def test_thread_count_does_not_change_output(tmp_path, monkeypatch):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["stats", "volume", "--discs", "5,8,12,13,17"]
    monkeypatch.setenv("GEODESIC_LAB_THREADS", "4")
    assert run_cli(*args, "--out", str(a)) == 0
    monkeypatch.setenv("GEODESIC_LAB_THREADS", "1")
    assert run_cli(*args, "--out", str(b)) == 0
    assert a.read_bytes() == b.read_bytes()


def test_bad_thread_env_is_usage_error(monkeypatch, tmp_path):
    monkeypatch.setenv("GEODESIC_LAB_THREADS", "many")
    out = tmp_path / "v.csv"
    assert run_cli("stats", "volume", "--discs", "5,8", "--out", str(out)) == 1


# --- config precedence ------------------------------------------------------


def test_config_file_supplies_defaults(tmp_path):
    cfgfile = tmp_path / "run.cfg"
    cfgfile.write_text("per_class = 20\nseed = 5  # comment\n\ndiscs = 5\n")
    out = tmp_path / "s.csv"
    assert run_cli("geodesics", "sample", "--config", str(cfgfile), "--out", str(out)) == 0
    rows = read_csv(out)
    assert len(rows) == 1 + 40
    assert rows[1][1:3] == ["20", "5"]


def test_flags_beat_config_file(tmp_path):
    cfgfile = tmp_path / "run.cfg"
    cfgfile.write_text("per_class = 20\nseed = 5\n")
    out = tmp_path / "s.csv"
    assert run_cli(
        "geodesics", "sample", "--disc", "5", "--per-class", "10",
        "--config", str(cfgfile), "--out", str(out),
    ) == 0
    rows = read_csv(out)
    assert len(rows) == 1 + 20
    assert rows[1][1:3] == ["10", "5"]


def test_unknown_config_key_is_usage_error(tmp_path):
    cfgfile = tmp_path / "run.cfg"
    cfgfile.write_text("per_klass = 20\n")
    assert run_cli("geodesics", "sample", "--disc", "5", "--config", str(cfgfile)) == 1


def test_malformed_config_line_is_usage_error(tmp_path):
    cfgfile = tmp_path / "run.cfg"
    cfgfile.write_text("per_class 20\n")
    assert run_cli("geodesics", "sample", "--disc", "5", "--config", str(cfgfile)) == 1


def test_fundamental_only_filter(tmp_path):
    out = tmp_path / "v.csv"
    assert run_cli(
        "stats", "volume", "--discs", "5,12,13", "--fundamental-only", "--out", str(out)
    ) == 0
    rows = read_csv(out)
    assert [r[0] for r in rows[1:]] == ["5", "13"]


# --- exit codes -------------------------------------------------------------


def test_unknown_subcommand_exits_one():
    assert run_cli("frobnicate") == 1


def test_missing_disc_exits_one():
    assert run_cli("forms", "enumerate") == 1


def test_non_discriminant_exits_one():
    assert run_cli("forms", "enumerate", "--disc", "7") == 1


def test_unwritable_path_exits_one():
    assert run_cli("forms", "enumerate", "--disc", "5", "--out", "/nonexistent/x.csv") == 1


def test_unknown_suite_exits_one():
    assert run_cli("accept", "--suite", "weird") == 1


def test_failed_check_exits_two(tmp_path):
    # tol below the (exactly zero) route gap cannot pass: forces the
    # check-failure path without cooking the data
    out = tmp_path / "v.csv"
    assert run_cli("stats", "volume", "--disc", "5", "--tol", "-1", "--out", str(out)) == 2
    assert out.exists()  # artifact still written before the check verdict


def test_entropy_check_failure_exits_two(tmp_path):
    # a shallow window on a short geodesic overshoots the near-1 cut bound
    out = tmp_path / "e.json"
    code = run_cli(
        "dynamics", "entropy", "--disc", "5", "--N", "2", "--eta", "0.05",
        "--M", "2.05", "--per-class", "150", "--out", str(out),
    )
    assert code == 2
    doc = json.loads(out.read_text())
    assert doc["rows"][0]["margin"] < 0.0
