"""Shadow boundary continuation, Stokes volumes and the radial oracle."""

from shadowlab.shadow.chart import (
    ChartFrame,
    ShadowBoundaryChart,
    correct_chart,
    residual_operator,
    resample_chart,
    seed_chart,
    seed_family_chart,
    singular_residual,
    trace_chart,
)
from shadowlab.shadow.oracle import radial_function, radial_oracle_volume
from shadowlab.shadow.quadrature import QuadratureRule, sphere_area, sphere_rule
from shadowlab.shadow.volume import (
    ShadowVolumeResult,
    nonsqueezing_margin,
    shadow_volume,
    stokes_volume,
)

__all__ = [
    "ChartFrame",
    "QuadratureRule",
    "ShadowBoundaryChart",
    "ShadowVolumeResult",
    "correct_chart",
    "nonsqueezing_margin",
    "radial_function",
    "radial_oracle_volume",
    "residual_operator",
    "resample_chart",
    "seed_chart",
    "seed_family_chart",
    "shadow_volume",
    "singular_residual",
    "sphere_area",
    "sphere_rule",
    "stokes_volume",
    "trace_chart",
]
