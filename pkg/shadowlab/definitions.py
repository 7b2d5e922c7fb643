"""Experiment definitions for the shadowlab harness.

This module defines the experiment kinds a scenario can request and the
configuration of the runner that carries out each of them.
"""

from typing import Any, Dict, List
from dataclasses import dataclass, field
from enum import Enum


class ExperimentKind(Enum):
    """Enum defining the experiments a scenario can request."""

    LINEAR_SHADOW = "linear-shadow"
    SHADOW_SCAN = "shadow-scan"
    R0_MAP = "r0-map"
    CAPACITY = "capacity"
    DEFORM_ANALYZE = "deform-analyze"


@dataclass
class RunnerConfig:
    """Configuration for an individual experiment runner."""

    kind: ExperimentKind
    name: str
    description: str
    requires: List[str]
    parameters: Dict[str, Any] = field(default_factory=dict)
    cross_check: bool = False


# Shadow-volume experiments
LINEAR_SHADOW_RUNNER = RunnerConfig(
    kind=ExperimentKind.LINEAR_SHADOW,
    name="LinearShadowRunner",
    description="Closed-form shadow volume of a linear symplectic map, with its Stokes and oracle cross-checks.",
    requires=["subspace", "embedding"],
    parameters={
        "tolerance": 1e-9,  # relative, against pi^k
        "quadrature_order": 24,
    },
)

SHADOW_SCAN_RUNNER = RunnerConfig(
    kind=ExperimentKind.SHADOW_SCAN,
    name="ShadowScanRunner",
    description="Margin profile of an analytic path traced along a t-grid, with the dichotomy fit.",
    requires=["subspace", "path"],
    parameters={
        "t_grid": [0.0, 0.01, 0.02, 0.03, 0.04, 0.05],
        "tolerance": 1e-3,  # relative to pi^k
        "quadrature_order": 24,
        "fit_degree": 3,
        "trivial_tolerance": 1e-5,
    },
)

R0_MAP_RUNNER = RunnerConfig(
    kind=ExperimentKind.R0_MAP,
    name="R0MapRunner",
    description="Rescaled-family margins f(x, r) over a grid of centers and the r0 estimate per center.",
    requires=["subspace", "embedding"],
    parameters={
        "r_grid": [0.05, 0.1, 0.15, 0.2],
        "centers": {"grid": 3, "radius": 0.5, "axes": 3},
        "tolerance": 1e-3,
        "quadrature_order": 24,
        "refine": False,
    },
)

# Contact and capacity experiments
CAPACITY_RUNNER = RunnerConfig(
    kind=ExperimentKind.CAPACITY,
    name="CapacityRunner",
    description="Minimal action of a convex body, projection monotonicity and the Hausdorff-Lipschitz probe.",
    requires=["body"],
    parameters={
        "tolerance": 1e-4,
        "random_seeds": 16,
    },
)

DEFORM_ANALYZE_RUNNER = RunnerConfig(
    kind=ExperimentKind.DEFORM_ANALYZE,
    name="DeformAnalyzeRunner",
    description="Formal triviality of a contact multiplier family and the strict-maximum check of A_min.",
    requires=["multiplier"],
    parameters={
        "t_grid": [0.02, 0.05, 0.1],
        "tolerance": 1e-3,
        "random_seeds": 4,
    },
)

# Runner groupings
SHADOW_GROUP = [LINEAR_SHADOW_RUNNER, SHADOW_SCAN_RUNNER, R0_MAP_RUNNER]
CONTACT_GROUP = [CAPACITY_RUNNER, DEFORM_ANALYZE_RUNNER]

# Complete runner configuration, keyed by experiment kind
RUNNER_SYSTEM_CONFIG = {config.kind: config for config in SHADOW_GROUP + CONTACT_GROUP}
