"""Scenario loading, experiment runners, the result ledger and reports."""

from shadowlab.harness.acceptance import SUITES, determinism_check, run_verify
from shadowlab.harness.dispatcher import ExperimentDispatcher, run_scenario
from shadowlab.harness.experiments import (
    DichotomyFit,
    R0Map,
    ScalingCheck,
    ScanProfile,
    center_grid,
    fit_dichotomy,
    r0_map,
    r0_refinement,
    scaling_identity,
    shadow_scan,
)
from shadowlab.harness.ledger import CSV_COLUMNS, LedgerRecord, ResultLedger
from shadowlab.harness.report import emit_report, read_csv
from shadowlab.harness.runners import BaseExperimentRunner, default_runners
from shadowlab.harness.scenario import Scenario, load_corpus, load_scenario, parse_scenario

__all__ = [
    "BaseExperimentRunner",
    "CSV_COLUMNS",
    "DichotomyFit",
    "ExperimentDispatcher",
    "LedgerRecord",
    "R0Map",
    "ResultLedger",
    "SUITES",
    "ScalingCheck",
    "ScanProfile",
    "Scenario",
    "center_grid",
    "default_runners",
    "determinism_check",
    "emit_report",
    "fit_dichotomy",
    "load_corpus",
    "load_scenario",
    "parse_scenario",
    "r0_map",
    "r0_refinement",
    "read_csv",
    "run_scenario",
    "run_verify",
    "scaling_identity",
    "shadow_scan",
]
