"""Tests for the shadowlab command line."""

import json

import pytest

from shadowlab.cli import build_parser, main
from shadowlab.config import SCENARIO_SCHEMA, resolve_workers
from shadowlab.errors import EXIT_INVALID_CONFIG, EXIT_OK, EXIT_VIOLATION
from shadowlab.harness.report import read_csv


def test_linear_shadow_command_writes_reports(tmp_path, write_scenario, linear_document, capsys):
    """Test a full linear-shadow run from the command line."""
    config = write_scenario(linear_document)
    out = tmp_path / "out"
    assert main(["linear-shadow", "--config", str(config), "--out", str(out)]) == EXIT_OK
    for suffix in ("csv", "json", "svg"):
        assert (out / f"ledger.{suffix}").exists()
    ledger = read_csv(out / "ledger.csv")
    assert {r.scenario_id for r in ledger} == {"doc-linear"}
    assert "doc-linear" in capsys.readouterr().out


def test_format_flag_limits_outputs(tmp_path, write_scenario, linear_document):
    config = write_scenario(linear_document)
    out = tmp_path / "out"
    assert main(["linear-shadow", "--config", str(config), "--out", str(out), "--format", "json"]) == EXIT_OK
    assert (out / "ledger.json").exists()
    assert not (out / "ledger.csv").exists()


def test_cli_overrides_change_the_scenario_hash(tmp_path, write_scenario, linear_document):
    config = write_scenario(linear_document)
    main(["linear-shadow", "--config", str(config), "--out", str(tmp_path / "a"), "--format", "csv"])
    main(["linear-shadow", "--config", str(config), "--out", str(tmp_path / "b"), "--format", "csv", "--tol", "1e-6"])
    (first,) = {r.scenario_hash for r in read_csv(tmp_path / "a" / "ledger.csv")}
    (second,) = {r.scenario_hash for r in read_csv(tmp_path / "b" / "ledger.csv")}
    assert first != second


def test_invalid_configurations_exit_with_2(tmp_path, write_scenario, linear_document):
    """Test missing files, malformed documents and kind mismatches."""
    out = str(tmp_path / "out")
    assert main(["linear-shadow", "--config", str(tmp_path / "missing.json"), "--out", out]) == EXIT_INVALID_CONFIG
    bad = write_scenario({**linear_document, "dimension": 3}, "bad.json")
    assert main(["linear-shadow", "--config", str(bad), "--out", out]) == EXIT_INVALID_CONFIG
    good = write_scenario(linear_document, "good.json")
    assert main(["capacity", "--config", str(good), "--out", out]) == EXIT_INVALID_CONFIG
    assert main(["linear-shadow", "--config", str(good), "--out", out, "--tol", "-1"]) == EXIT_INVALID_CONFIG


def test_unwritable_output_exits_with_2(tmp_path, write_scenario, linear_document):
    config = write_scenario(linear_document)
    blocker = tmp_path / "blocker"
    blocker.write_text("", encoding="utf-8")
    assert main(["linear-shadow", "--config", str(config), "--out", str(blocker)]) == EXIT_INVALID_CONFIG


def test_parser_requires_a_command():
    with pytest.raises(SystemExit):
        build_parser().parse_args([])
    args = build_parser().parse_args(["verify", "--suite", "linear", "--suite", "wirtinger", "--skip-corpus"])
    assert args.suites == ["linear", "wirtinger"]
    assert args.skip_corpus


def test_verify_with_selected_suites(tmp_path):
    out = tmp_path / "verify"
    code = main(
        ["verify", "--skip-corpus", "--suite", "equality", "--out", str(out), "--format", "json", "--seed", "3"]
    )
    assert code == EXIT_OK
    payload = json.loads((out / "ledger.json").read_text(encoding="utf-8"))
    assert {row["scenario_id"] for row in payload["records"]} == {"verify/equality"}


def test_workers_fall_back_to_environment(monkeypatch):
    monkeypatch.setenv("SHADOWLAB_WORKERS", "3")
    assert resolve_workers(None) == 3
    assert resolve_workers(2) == 2
    assert resolve_workers(0) == 1
    monkeypatch.delenv("SHADOWLAB_WORKERS")
    assert resolve_workers(None) >= 1


@pytest.mark.slow
def test_capacity_mismatch_exits_with_1(tmp_path, write_scenario):
    document = {
        "schema": SCENARIO_SCHEMA,
        "id": "wrong-capacity",
        "kind": "capacity",
        "dimension": 4,
        "body": {"kind": "ball", "radius": 1.0},
        "expected": 3.0,
    }
    config = write_scenario(document)
    assert main(["capacity", "--config", str(config), "--out", str(tmp_path / "out")]) == EXIT_VIOLATION
