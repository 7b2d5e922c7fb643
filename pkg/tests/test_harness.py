"""Tests for scenarios, the result ledger, reports, runners and the property suites."""

import importlib.util
import json
from math import pi
from pathlib import Path

import numpy as np
import pytest

from shadowlab.definitions import ExperimentKind
from shadowlab.embeddings.composition import EmbeddingComposition
from shadowlab.embeddings.path import AnalyticPath, PathFactor
from shadowlab.errors import NumericalError, ReportError, ScenarioError
from shadowlab.harness import acceptance
from shadowlab.harness.acceptance import (
    averaging_suite,
    capacity_anchor_suite,
    determinism_check,
    equality_suite,
    linear_random_suite,
    run_verify,
    wirtinger_suite,
)
from shadowlab.harness.dispatcher import ExperimentDispatcher, run_scenario
from shadowlab.harness.experiments import center_grid, fit_dichotomy, r0_map, shadow_scan
from shadowlab.harness.ledger import CSV_COLUMNS, LedgerRecord, ResultLedger
from shadowlab.harness.report import emit_report, read_csv
from shadowlab.harness.runners import LinearShadowRunner, default_runners
from shadowlab.harness.scenario import load_corpus, load_scenario, parse_scenario

CORPUS = Path(__file__).resolve().parent.parent / "scenarios"


def make_record(**changes):
    fields = {
        "scenario_id": "s",
        "scenario_hash": "0" * 64,
        "quantity": "margin",
        "t_or_r": 0.01,
        "value": pi,
        "error": 1e-12,
        "margin": 0.1 + 0.2,
        "passed": True,
    }
    fields.update(changes)
    return LedgerRecord(**fields)


@pytest.mark.parametrize(
    "change",
    [
        {"schema": "shadowlab.scenario/0"},
        {"kind": "volume-scan"},
        {"dimension": 5},
        {"dimension": "4"},
        {"parameters": {"tolerance": -1.0}},
        {"parameters": {"t_grid": [0.1, 0.05]}},
        {"parameters": {"r_grid": [0.0, 0.1]}},
        {"parameters": {"quadrature_order": 2}},
        {"subspace": {"pairs": [0, 1, 2]}},
    ],
)
def test_invalid_scenarios_are_rejected(linear_document, change):
    """Test schema, kind, dimension, tolerance and grid validation."""
    with pytest.raises(ScenarioError):
        parse_scenario({**linear_document, **change})


def test_missing_sections_are_reported(linear_document):
    document = dict(linear_document)
    del document["embedding"]
    with pytest.raises(ScenarioError, match="embedding"):
        parse_scenario(document)


def test_scenario_parameters_and_defaults(linear_document):
    scenario = parse_scenario(linear_document, defaults={"seed": 9})
    assert scenario.kind is ExperimentKind.LINEAR_SHADOW
    assert scenario.seed == 9
    assert scenario.parameters["quadrature_order"] == 24
    own_seed = parse_scenario({**linear_document, "parameters": {"seed": 3}}, defaults={"seed": 9})
    assert own_seed.seed == 3


def test_hash_follows_overrides(linear_document):
    scenario = parse_scenario(linear_document)
    assert scenario.with_overrides({"seed": None, "tolerance": None}) is scenario
    tighter = scenario.with_overrides({"tolerance": 1e-6})
    assert tighter.parameters["tolerance"] == 1e-6
    assert tighter.scenario_hash != scenario.scenario_hash
    assert parse_scenario(linear_document).scenario_hash == scenario.scenario_hash
    with pytest.raises(ScenarioError):
        scenario.with_overrides({"tolerance": 0.0})


def test_load_scenario_reports_unreadable_files(tmp_path):
    with pytest.raises(ScenarioError):
        load_scenario(tmp_path / "missing.json")
    broken = tmp_path / "broken.json"
    broken.write_text("{not json", encoding="utf-8")
    with pytest.raises(ScenarioError):
        load_scenario(broken)


def test_bundled_corpus_is_valid():
    """Test that every bundled scenario parses."""
    scenarios = load_corpus(CORPUS)
    assert len(scenarios) == 11
    assert len({s.scenario_id for s in scenarios}) == len(scenarios)
    assert {s.kind for s in scenarios} == set(ExperimentKind)
    assert [Path(s.source).name for s in scenarios] == sorted(p.name for p in CORPUS.glob("*.json"))


def test_content_id_ignores_wall_time():
    a = make_record(wall_time=0.5)
    b = make_record(wall_time=7.0)
    assert a == b
    assert a.content_id == b.content_id
    assert make_record(value=3.0).content_id != a.content_id
    assert len(a.content_id) == 40


def test_ledger_digest_depends_on_order():
    first, second = make_record(), make_record(t_or_r=0.02)
    assert ResultLedger([first, second]).digest() != ResultLedger([second, first]).digest()
    assert ResultLedger([first, second]).digest() == ResultLedger([first, second]).digest()


def test_ledger_is_append_only():
    ledger = ResultLedger()
    ledger.append(make_record())
    ledger.extend([make_record(passed=False, scenario_id="other")])
    assert len(ledger) == 2
    assert isinstance(ledger.records, tuple)
    assert [r.scenario_id for r in ledger.violations()] == ["other"]
    assert len(ledger.for_scenario("s")) == 1


def test_csv_round_trip_is_bit_exact(tmp_path):
    """Test that CSV re-reads give identical floats and content ids."""
    records = [
        make_record(),
        make_record(t_or_r=1 / 3, value=float(np.nextafter(pi, 4.0)), margin=-1e-17, passed=False),
        make_record(quantity="a_min", oracle_value=2 / 3, oracle_error=1e-9),
    ]
    written = emit_report(records, tmp_path, formats=["csv"])
    reread = read_csv(written["csv"])
    assert list(reread) == records
    assert [r.content_id for r in reread] == [r.content_id for r in records]
    assert reread.digest() == ResultLedger(records).digest()


def test_empty_ledger_writes_header_only(tmp_path):
    written = emit_report(ResultLedger(), tmp_path)
    assert written["csv"].read_text(encoding="utf-8").strip() == ",".join(CSV_COLUMNS)
    assert json.loads(written["json"].read_text(encoding="utf-8"))["records"] == []
    assert written["svg"].exists()


def test_json_and_svg_reports(tmp_path):
    ledger = ResultLedger([make_record(), make_record(t_or_r=0.02, margin=0.4)])
    written = emit_report(ledger, tmp_path / "nested", stem="scan")
    payload = json.loads(written["json"].read_text(encoding="utf-8"))
    assert payload["digest"] == ledger.digest()
    assert payload["records"][0]["content_id"] == ledger.records[0].content_id
    assert written["svg"].name == "scan.svg"
    assert "<svg" in written["svg"].read_text(encoding="utf-8")


def test_report_errors(tmp_path):
    with pytest.raises(ReportError):
        emit_report([make_record()], tmp_path, formats=["xlsx"])
    blocker = tmp_path / "file"
    blocker.write_text("", encoding="utf-8")
    with pytest.raises(ReportError):
        emit_report([make_record()], blocker)
    bad_csv = tmp_path / "bad.csv"
    bad_csv.write_text("a,b\n1,2\n", encoding="utf-8")
    with pytest.raises(ReportError):
        read_csv(bad_csv)


def test_dispatcher_runs_linear_scenario(linear_document):
    """Test routing a linear-shadow scenario through the dispatcher."""
    dispatcher = ExperimentDispatcher()
    records = run_scenario(parse_scenario(linear_document), dispatcher=dispatcher)
    value = next(r for r in records if r.quantity == "value")
    assert value.value == pytest.approx(pi, rel=1e-12)
    assert value.passed
    assert all(r.scenario_id == "doc-linear" for r in dispatcher.ledger)
    rows = dispatcher.summarize()
    assert rows[0][0] == "doc-linear"
    assert rows[0][-1] == "pass"


def test_every_kind_has_a_runner():
    dispatcher = ExperimentDispatcher()
    handled = {kind for caps in dispatcher.runner_capabilities.values() for kind in caps["can_handle"]}
    assert handled == {kind.value for kind in ExperimentKind}
    assert len(default_runners()) == len(ExperimentKind)


def test_runner_rejects_other_kinds_and_caps_history(linear_document):
    runner = LinearShadowRunner()
    scenario = parse_scenario(linear_document)
    for _ in range(12):
        runner.handle_request(scenario)
    assert len(runner.run_history) == 10
    assert runner.run_history[-1]["violations"] == 0
    capacity = parse_scenario(
        {"schema": linear_document["schema"], "kind": "capacity", "dimension": 4, "body": {"kind": "ball"}}
    )
    with pytest.raises(ScenarioError):
        runner.handle_request(capacity)


def test_linear_runner_rejects_nonlinear_embedding(linear_document):
    document = {
        **linear_document,
        "embedding": {
            "factors": [{"kind": "shear_positions", "potential": {"terms": [{"powers": [3, 0], "coeff": 0.2}]}}]
        },
    }
    with pytest.raises(ScenarioError):
        run_scenario(parse_scenario(document))


def test_scenario_domain_radius_must_be_certified(linear_document):
    cubic = {"kind": "shear_positions", "potential": {"terms": [{"powers": [3, 0], "coeff": 0.2}]}}
    document = {**linear_document, "kind": "r0-map", "embedding": {"domain_radius": 100.0, "factors": [cubic]}}
    with pytest.raises(ScenarioError, match="certified radius"):
        parse_scenario(document)
    del document["embedding"]["domain_radius"]
    assert parse_scenario(document).embedding.domain_radius < 1.0


def test_dichotomy_fit_on_quadratic_profile():
    t = np.linspace(0.0, 0.05, 6)
    fit = fit_dichotomy(t, pi + 2.0 * t ** 2, 2.0 * t ** 2)
    assert not fit.trivial
    assert fit.branch == "non-trivial"
    assert fit.derivatives[0] == pytest.approx(0.0, abs=1e-6)
    assert fit.derivatives[1] == pytest.approx(4.0, rel=1e-6)
    assert fit.leading_order == pytest.approx(2.0, rel=1e-6)


def test_dichotomy_fit_on_flat_profile():
    t = np.linspace(0.0, 0.05, 6)
    fit = fit_dichotomy(t, np.full(6, pi), np.zeros(6))
    assert fit.trivial
    assert fit.leading_order is None
    with pytest.raises(ScenarioError):
        fit_dichotomy([0.0], [pi], [0.0])


def test_center_grid_stays_in_the_half_ball():
    centers = center_grid(4, 3, 0.5, 3)
    assert centers.shape == (27, 4)
    assert np.all(np.linalg.norm(centers, axis=1) <= 0.5 + 1e-12)
    np.testing.assert_array_equal(centers[:, 3], 0.0)
    np.testing.assert_array_equal(centers[13], 0.0)


def test_shadow_scan_on_stretch_path_is_trivial(plane_projector_r4):
    """Test that an area-preserving stretch of the target plane keeps the volume at pi."""
    path = AnalyticPath([PathFactor("stretch", 4, rates=np.array([1.0, 0.0]))])
    profile = shadow_scan(path, plane_projector_r4, [0.0, 0.05, 0.1], order=24)
    assert profile.j_invariant
    assert not profile.truncated
    assert profile.t_values == [0.0, 0.05, 0.1]
    assert max(abs(m) for m in profile.margins) <= 1e-8
    assert profile.dichotomy.trivial
    assert profile.oracle == [None, None, None]


def test_r0_map_on_linear_embedding(position_shear_r4, plane_projector_r4):
    phi = EmbeddingComposition.from_matrix(position_shear_r4)
    centers = center_grid(4, 2, 0.5, 2)
    result = r0_map(phi, plane_projector_r4, centers, [0.1, 0.2], order=24, workers=2)
    assert len(result.rows) == 4
    for row, center in zip(result.rows, centers):
        np.testing.assert_array_equal(row.center, center)
        assert row.radii == (0.1, 0.2)
        assert all(m > 0 for m in row.margins)
        assert not row.truncated
    assert result.min_r0 == pytest.approx(0.2)
    assert result.grid_step == pytest.approx(0.1)


def test_r0_map_rejects_centers_outside_the_domain(cubic_embedding_r4, plane_projector_r4):
    with pytest.raises(ScenarioError):
        r0_map(cubic_embedding_r4, plane_projector_r4, np.array([[2.0, 0.0, 0.0, 0.0]]), [0.1], order=24)


def test_cheap_property_suites_pass():
    """Test the linear, equality, Wirtinger and averaging suites at small counts."""
    records = (
        linear_random_suite(7, count=20)
        + equality_suite(7, count=5)
        + wirtinger_suite(7, count=400)
        + averaging_suite(7, count=3)
    )
    assert all(r.passed for r in records), [r.quantity for r in records if not r.passed]
    suites = {"verify/linear", "verify/equality", "verify/wirtinger", "verify/averaging"}
    assert {r.scenario_id for r in records} == suites
    assert len([r for r in records if r.scenario_id == "verify/wirtinger"]) == 4


def test_suites_are_deterministic():
    first = ResultLedger(linear_random_suite(11, count=10))
    assert first.digest() == ResultLedger(linear_random_suite(11, count=10)).digest()
    single = ResultLedger(capacity_anchor_suite(11, radii=(1.0,), workers=1))
    threaded = ResultLedger(capacity_anchor_suite(11, radii=(1.0,), workers=4))
    assert single.digest() == threaded.digest()
    (record,) = determinism_check(11, names=("equality",))
    assert record.quantity == "digest_match"
    assert record.passed


def test_determinism_check_compares_worker_counts(monkeypatch):
    calls = []

    def counting_suite(seed, workers=1):
        calls.append(workers)
        return [acceptance._record("capacity", {"seed": seed}, "ball", 1.0, 0.0, True)]

    monkeypatch.setitem(acceptance.SUITES, "capacity", counting_suite)
    (record,) = determinism_check(3, names=("capacity",), workers=4)
    assert calls == [1, 4]
    assert record.passed
    determinism_check(3, names=("capacity",))
    assert calls[2:] == [1, 2]
    assert "capacity" in acceptance.DETERMINISM_SUITES


def test_run_verify_collects_corpus_and_suites(tmp_path, linear_document, monkeypatch):
    (tmp_path / "linear.json").write_text(json.dumps(linear_document), encoding="utf-8")

    def failing_suite(seed):
        raise NumericalError("orbit search did not close")

    monkeypatch.setitem(acceptance.SUITES, "averaging", failing_suite)
    ledger = run_verify(tmp_path, seed=5, suites=["equality", "averaging"], overrides={"tolerance": 1e-6})
    assert ledger.for_scenario("doc-linear")
    assert all(r.passed for r in ledger.for_scenario("verify/equality"))
    (failure,) = ledger.for_scenario("verify/averaging")
    assert failure.quantity == "numerical_failure"
    assert not failure.passed


def test_run_verify_records_failing_scenarios(tmp_path, linear_document, monkeypatch):
    """Test that a numerical failure in one corpus scenario does not stop the others."""
    (tmp_path / "a.json").write_text(json.dumps(linear_document), encoding="utf-8")
    (tmp_path / "b.json").write_text(json.dumps({**linear_document, "id": "doc-second"}), encoding="utf-8")
    original = LinearShadowRunner._run

    def diverging_run(self, scenario, params, workers):
        if scenario.scenario_id == "doc-linear":
            raise NumericalError("chart diverged")
        return original(self, scenario, params, workers)

    monkeypatch.setattr(LinearShadowRunner, "_run", diverging_run)
    ledger = run_verify(tmp_path, seed=5, suites=[])
    (failure,) = ledger.for_scenario("doc-linear")
    assert failure.quantity == "numerical_failure"
    assert not failure.passed
    assert failure.scenario_hash == parse_scenario(linear_document).scenario_hash
    second = ledger.for_scenario("doc-second")
    assert second and all(r.passed for r in second)


@pytest.mark.slow
def test_bundled_corpus_has_no_violations():
    ledger = run_verify(CORPUS, seed=20240917, suites=[])
    assert len(ledger) > 0
    assert not ledger.violations(), [(r.scenario_id, r.quantity) for r in ledger.violations()]


def load_compare_script():
    path = Path(__file__).resolve().parent.parent / "scripts" / "compare_ledgers.py"
    spec = importlib.util.spec_from_file_location("compare_ledgers", path)
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    return module


def test_compare_ledgers_reports_regressions(tmp_path, capsys):
    """Test the ledger comparison script on a status flip."""
    compare = load_compare_script()
    baseline = [make_record(), make_record(t_or_r=0.02)]
    candidate = [make_record(), make_record(t_or_r=0.02, value=3.0, passed=False)]
    emit_report(baseline, tmp_path / "before", formats=["csv"])
    emit_report(candidate, tmp_path / "after", formats=["csv"])
    changes = compare.compare_ledgers(tmp_path / "before", tmp_path / "after")
    assert len(changes) == 1
    assert changes.loc[0, "t_or_r"] == 0.02
    assert compare.main([str(tmp_path / "before"), str(tmp_path / "after")]) == 1
    assert compare.main([str(tmp_path / "before"), str(tmp_path / "before")]) == 0
    assert "No value or status changes" in capsys.readouterr().out
