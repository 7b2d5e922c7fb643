"""Experiment runners: one specialist per experiment kind, all turning results into ledger records."""

import logging
import time
from abc import ABC, abstractmethod
from math import pi
from typing import Any, Dict, List, Optional

from shadowlab.config import merged
from shadowlab.contact.characteristics import ContactSphere, ConvexBody, a_min_estimate, default_seeds
from shadowlab.contact.comparison import hausdorff_lipschitz_probe, projection_monotonicity
from shadowlab.contact.normal_form import formal_triviality_order, strict_max_check
from shadowlab.core.symplectic import j_invariance_defect, linear_shadow_volume, symplectic_projector
from shadowlab.definitions import (
    CAPACITY_RUNNER,
    DEFORM_ANALYZE_RUNNER,
    LINEAR_SHADOW_RUNNER,
    R0_MAP_RUNNER,
    SHADOW_SCAN_RUNNER,
    RunnerConfig,
)
from shadowlab.embeddings.path import AnalyticPath
from shadowlab.errors import ScenarioError, ShadowLabError, ValidationError
from shadowlab.harness.experiments import R0Map, ScanProfile, center_grid, r0_map, r0_refinement, shadow_scan
from shadowlab.harness.ledger import LedgerRecord
from shadowlab.harness.scenario import Scenario
from shadowlab.shadow.oracle import radial_oracle_volume
from shadowlab.shadow.volume import ShadowVolumeResult, shadow_volume

logger = logging.getLogger(__name__)

# Relative Stokes/oracle disagreement accepted by a cross-checked record
CROSS_CHECK_RTOL = 1e-2


class BaseExperimentRunner(ABC):
    """Base class for all experiment runners."""

    def __init__(self, config: RunnerConfig):
        """Initialize the runner from its configuration."""
        self.config = config
        self.name = config.name
        self.description = config.description
        self.run_history: List[Dict[str, Any]] = []

    def get_capabilities(self) -> Dict[str, Any]:
        """Get the runner's capabilities.

        Returns:
            Dict[str, Any]: Name, description, handled kinds and required scenario sections
        """
        return {
            "name": self.name,
            "description": self.description,
            "can_handle": [self.config.kind.value],
            "requires": list(self.config.requires),
        }

    def remember_run(self, scenario: Scenario, records: List[LedgerRecord], error: Optional[str] = None):
        """Store a run summary in the runner's history."""
        self.run_history.append(
            {
                "scenario_id": scenario.scenario_id,
                "records": len(records),
                "violations": sum(not r.passed for r in records),
                "error": error,
            }
        )
        # Keep only the last 10 runs
        if len(self.run_history) > 10:
            self.run_history = self.run_history[-10:]

    def handle_request(self, scenario: Scenario, workers: int = 1) -> List[LedgerRecord]:
        """Run a scenario and return its ledger records.

        Args:
            scenario: A validated scenario of this runner's kind
            workers: Worker threads for the compute fan-out

        Returns:
            List[LedgerRecord]: Records in deterministic order
        """
        if scenario.kind is not self.config.kind:
            raise ScenarioError(f"{self.name} cannot run a {scenario.kind.value} scenario")
        self._determine_inputs(scenario)
        start = time.perf_counter()
        try:
            records = self._run(scenario, merged(self.config.parameters, scenario.parameters), workers)
        except ShadowLabError as e:
            self.remember_run(scenario, [], str(e))
            raise
        logger.info(f"{self.name} finished {scenario.scenario_id} in {time.perf_counter() - start:.2f}s")
        self.remember_run(scenario, records)
        return records

    def _determine_inputs(self, scenario: Scenario):
        missing = [
            name
            for name in self.config.requires
            if getattr(scenario, name) is None and not (name == "path" and scenario.embedding is not None)
        ]
        if missing:
            raise ScenarioError(f"{scenario.scenario_id}: {self.name} needs {', '.join(missing)}")

    @staticmethod
    def _record(
        scenario: Scenario,
        quantity: str,
        t_or_r: float,
        value: float,
        error: float,
        margin: float,
        passed: bool,
        oracle: Optional[ShadowVolumeResult] = None,
        wall_time: float = 0.0,
        scenario_id: Optional[str] = None,
    ) -> LedgerRecord:
        return LedgerRecord(
            scenario_id=scenario_id or scenario.scenario_id,
            scenario_hash=scenario.scenario_hash,
            quantity=quantity,
            t_or_r=float(t_or_r),
            value=float(value),
            error=float(error),
            margin=float(margin),
            passed=bool(passed),
            oracle_value=None if oracle is None else float(oracle.value),
            oracle_error=None if oracle is None else float(oracle.error_estimate),
            wall_time=wall_time,
        )

    @staticmethod
    def _cross_checked(result: ShadowVolumeResult, oracle: Optional[ShadowVolumeResult], floor: float) -> bool:
        """Both margins clear the floor and the two volumes agree."""
        if result.margin < floor:
            return False
        if oracle is None:
            return True
        agree = abs(result.value - oracle.value) <= CROSS_CHECK_RTOL * abs(result.value)
        return agree and oracle.margin >= floor

    @abstractmethod
    def _run(self, scenario: Scenario, params: Dict[str, Any], workers: int) -> List[LedgerRecord]:
        """Carry out the experiment."""


class LinearShadowRunner(BaseExperimentRunner):
    """Specialist runner for linear shadows and the linear non-squeezing inequality."""

    def __init__(self):
        super().__init__(LINEAR_SHADOW_RUNNER)

    def _run(self, scenario, params, workers):
        phi, V = scenario.embedding, scenario.subspace
        if not phi.is_linear:
            raise ValidationError(f"{scenario.scenario_id}: linear-shadow needs a linear embedding")
        L = phi.linear_matrix()
        k = V.k
        start = time.perf_counter()
        value = linear_shadow_volume(L, V)
        defect = j_invariance_defect(L, V)
        floor = -params["tolerance"] * pi ** k
        records = [
            self._record(
                scenario, "value", 0.0, value, 0.0, value - pi ** k, value - pi ** k >= floor,
                wall_time=time.perf_counter() - start,
            ),
            self._record(scenario, "j_defect", 0.0, defect, 0.0, 0.0, True),
        ]
        if params.get("cross_check"):
            P = symplectic_projector(V)
            start = time.perf_counter()
            result = shadow_volume(phi, P, params.get("quadrature_order"), workers)
            oracle = radial_oracle_volume(phi, P, {"seed": scenario.seed}, workers)
            passed = self._cross_checked(result, oracle, floor)
            records.append(
                self._record(
                    scenario, "margin", 0.0, result.value, result.error_estimate, result.margin, passed,
                    oracle, time.perf_counter() - start,
                )
            )
        return records


class ShadowScanRunner(BaseExperimentRunner):
    """Specialist runner for margin profiles along analytic paths."""

    def __init__(self):
        super().__init__(SHADOW_SCAN_RUNNER)

    def _determine_path(self, scenario: Scenario) -> AnalyticPath:
        """The scenario's path, or the constant path through its embedding."""
        if scenario.path is not None:
            return scenario.path
        phi = scenario.embedding
        if not phi.is_linear:
            return AnalyticPath.from_composition(phi)
        raise ValidationError(f"{scenario.scenario_id}: shadow-scan needs a path or a non-linear embedding")

    def _run(self, scenario, params, workers):
        path = self._determine_path(scenario)
        P = symplectic_projector(scenario.subspace)
        start = time.perf_counter()
        profile = shadow_scan(
            path,
            P,
            params["t_grid"],
            params.get("quadrature_order"),
            workers,
            bool(params.get("cross_check")),
            params["fit_degree"],
            params["trivial_tolerance"],
            {"seed": scenario.seed},
        )
        return self.format_profile(scenario, profile, params, time.perf_counter() - start)

    def format_profile(
        self, scenario: Scenario, profile: ScanProfile, params: Dict[str, Any], wall_time: float = 0.0
    ) -> List[LedgerRecord]:
        """Margin records per traced t, then truncation and dichotomy records."""
        floor = -params["tolerance"] * pi ** profile.k
        records = [
            self._record(
                scenario, "margin", t, result.value, result.error_estimate, result.margin,
                self._cross_checked(result, oracle, floor), oracle, wall_time / max(1, len(profile.t_values)),
            )
            for t, result, oracle in zip(profile.t_values, profile.results, profile.oracle)
        ]
        records.append(self._record(scenario, "j_defect", 0.0, profile.j_defect, 0.0, 0.0, True))
        if profile.truncated:
            at = profile.truncated_at
            records.append(self._record(scenario, "truncated", at, at, 0.0, 0.0, True))

        fit = profile.dichotomy
        if fit is None:
            return records
        for j, derivative in enumerate(fit.derivatives, start=1):
            records.append(
                self._record(
                    scenario, "derivative", j, derivative, 0.0, params["trivial_tolerance"] - abs(derivative), True
                )
            )
        if fit.trivial:
            passed = all(abs(m) <= params["tolerance"] * pi ** profile.k for m in profile.margins)
            leading = 0.0
        else:
            leading = fit.leading_order if fit.leading_order is not None else 0.0
            positive = all(m > 0 for t, m in zip(profile.t_values, profile.margins) if t > 0)
            passed = positive and leading >= 0.9
        records.append(self._record(scenario, "leading_order", 0.0, leading, 0.0, leading - 1.0, passed))
        records.append(self._record(scenario, "trivial_branch", 0.0, float(fit.trivial), 0.0, 0.0, True))
        return records


class R0MapRunner(BaseExperimentRunner):
    """Specialist runner for the rescaled-family margin map f(x, r) and r0(x)."""

    def __init__(self):
        super().__init__(R0_MAP_RUNNER)

    def _run(self, scenario, params, workers):
        phi = scenario.embedding
        P = symplectic_projector(scenario.subspace)
        centers = params["centers"]
        order = params.get("quadrature_order")
        tol = params["tolerance"]
        start = time.perf_counter()
        if params.get("refine"):
            coarse, fine, stable = r0_refinement(
                phi, P, centers["grid"], centers["radius"], centers["axes"], params["r_grid"], order, tol, workers
            )
        else:
            grid = center_grid(phi.dim, centers["grid"], centers["radius"], centers["axes"])
            coarse, fine, stable = r0_map(phi, P, grid, params["r_grid"], order, tol, workers), None, True
        records = self.format_map(scenario, coarse, tol, time.perf_counter() - start)
        if fine is not None:
            records.append(
                self._record(
                    scenario, "min_r0_refined", 0.0, fine.min_r0, coarse.grid_step,
                    fine.min_r0 - coarse.min_r0, stable and fine.min_r0 > 0,
                )
            )
        return records

    def format_map(self, scenario: Scenario, result: R0Map, tol: float, wall_time: float = 0.0) -> List[LedgerRecord]:
        """One margin record per (center, r), one r0 record per center and the minimum over centers."""
        k = scenario.subspace.k
        records: List[LedgerRecord] = []
        for index, row in enumerate(result.rows):
            row_id = f"{scenario.scenario_id}/x{index}"
            for r, margin, error in zip(row.radii, row.margins, row.errors):
                records.append(
                    self._record(
                        scenario, "margin", r, margin + pi ** k, error, margin, margin >= -tol * pi ** k,
                        scenario_id=row_id,
                    )
                )
            records.append(self._record(scenario, "r0", 0.0, row.r0, 0.0, row.r0, row.r0 > 0, scenario_id=row_id))
        records.append(
            self._record(
                scenario, "min_r0", 0.0, result.min_r0, result.grid_step, result.min_r0, result.min_r0 > 0,
                wall_time=wall_time,
            )
        )
        return records


class CapacityRunner(BaseExperimentRunner):
    """Specialist runner for minimal actions, projection monotonicity and the Lipschitz probe."""

    def __init__(self):
        super().__init__(CAPACITY_RUNNER)

    def _run(self, scenario, params, workers):
        body = scenario.body
        tol = params["tolerance"]
        start = time.perf_counter()
        estimate = a_min_estimate(body, workers=workers, random_seeds=params["random_seeds"])
        closure = max(estimate.diagnostics["closure_residuals"])
        if scenario.expected is not None:
            margin = estimate.value - float(scenario.expected)
            passed = abs(margin) <= tol
        else:
            margin, passed = 0.0, True
        records = [
            self._record(
                scenario, "a_min", 0.0, estimate.value, closure, margin, passed, wall_time=time.perf_counter() - start
            )
        ]

        if scenario.subspace is not None and isinstance(body, ConvexBody):
            projection = projection_monotonicity(body, symplectic_projector(scenario.subspace), workers=workers)
            records.append(
                self._record(
                    scenario, "projection_margin", 0.0, projection.capacity_projection, 0.0,
                    projection.margin, projection.margin >= -params.get("projection_tolerance", 1e-3),
                )
            )
        if scenario.other_body is not None:
            probe = hausdorff_lipschitz_probe(body, scenario.other_body, params.get("pinch"), workers=workers)
            records.append(
                self._record(
                    scenario, "lipschitz_ratio", probe.distance, probe.ratio, 0.0,
                    probe.constant - probe.ratio, probe.within_bound,
                )
            )
        return records


class DeformAnalyzeRunner(BaseExperimentRunner):
    """Specialist runner for contact multiplier families: formal triviality and the A_min profile."""

    def __init__(self):
        super().__init__(DEFORM_ANALYZE_RUNNER)

    def _run(self, scenario, params, workers):
        family = scenario.multiplier
        records: List[LedgerRecord] = []
        triviality = formal_triviality_order(family)
        if triviality.trivial:
            records.append(self._record(scenario, "obstruction_order", 0.0, 0.0, 0.0, 0.0, True))
        else:
            opposite = triviality.minimum < 0 < triviality.maximum
            records.append(
                self._record(scenario, "obstruction_order", 0.0, triviality.order, 0.0, 0.0, True)
            )
            records.append(
                self._record(
                    scenario, "obstruction_range", 0.0, triviality.maximum - triviality.minimum, 0.0,
                    min(-triviality.minimum, triviality.maximum), opposite,
                )
            )

        seeds = default_seeds(ContactSphere(family.at(0.0)), params["random_seeds"])
        start = time.perf_counter()
        report = strict_max_check(family, params["t_grid"], seeds, workers)
        wall_time = (time.perf_counter() - start) / len(report.t_values)
        base = report.amin[0]
        for t, amin, bound in zip(report.t_values, report.amin, report.bounds):
            passed = True
            if bound is not None:
                passed = amin <= bound + params["tolerance"]
            if t > 0 and not triviality.trivial:
                passed = passed and amin < base
            records.append(
                self._record(
                    scenario, "a_min", t, amin, 0.0 if bound is None else bound - amin, amin - base, passed,
                    wall_time=wall_time,
                )
            )
        records.append(
            self._record(
                scenario, "strict_max", 0.0, float(report.strict_max), 0.0, 0.0,
                report.strict_max or report.flat or triviality.trivial,
            )
        )
        return records


def default_runners() -> List[BaseExperimentRunner]:
    return [LinearShadowRunner(), ShadowScanRunner(), R0MapRunner(), CapacityRunner(), DeformAnalyzeRunner()]
