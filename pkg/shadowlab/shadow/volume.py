"""Shadow volumes by Stokes' theorem over the traced shadow boundary."""

import logging
from dataclasses import asdict, dataclass
from math import pi
from typing import Any, Dict, Optional

from shadowlab.config import QUADRATURE_CONFIG, TOLERANCES
from shadowlab.core.symplectic import SymplecticProjector
from shadowlab.embeddings.composition import EmbeddingComposition
from shadowlab.embeddings.path import AnalyticPath
from shadowlab.errors import UnderResolvedError, ValidationError
from shadowlab.shadow.chart import (
    ShadowBoundaryChart,
    pullback_values,
    resample_chart,
    seed_chart,
    seed_family_chart,
    trace_chart,
)
from shadowlab.shadow.quadrature import QuadratureRule, sphere_rule

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ShadowVolumeResult:
    """Integral of omega^k over P phi(B_1), with the rule-comparison error."""

    value: float
    error_estimate: float
    method: str
    k: int
    order: int

    def __post_init__(self):
        if not self.error_estimate >= 0:
            raise ValidationError(f"Negative error estimate {self.error_estimate}")

    @property
    def margin(self) -> float:
        return self.value - pi ** self.k

    def to_dict(self) -> Dict[str, Any]:
        out = asdict(self)
        out["margin"] = self.margin
        return out


def _chart_integral(chart: ShadowBoundaryChart, P: SymplecticProjector) -> float:
    return chart.orientation * chart.rule.integrate(pullback_values(chart, P))


def stokes_volume(
    phi: EmbeddingComposition,
    P: SymplecticProjector,
    chart: ShadowBoundaryChart,
    rule: Optional[QuadratureRule] = None,
    check_resolution: bool = True,
    workers: int = 1,
) -> ShadowVolumeResult:
    """Integrate lambda_0 ^ omega^{k-1} over G = P phi c.

    The value is taken on `rule` (the chart's own rule by default) and the
    error estimate is its distance to the value on the rule of twice the order.
    """
    if chart.residual_max > TOLERANCES["newton"]:
        raise ValidationError(f"Chart residual {chart.residual_max:.3e} exceeds the Newton tolerance")
    if chart.embedding is not phi and chart.embedding.dim != phi.dim:
        raise ValidationError("Chart was traced for an embedding of another dimension")
    rule = chart.rule if rule is None else rule
    if rule is not chart.rule:
        chart = resample_chart(chart, P, rule, workers)

    value = _chart_integral(chart, P)
    fine_rule = rule.refined()
    fine = _chart_integral(resample_chart(chart, P, fine_rule, workers), P)
    error = abs(value - fine)
    logger.debug(f"Stokes volume {value:.12g} at Q={rule.order}, {fine:.12g} at Q={fine_rule.order}")

    if check_resolution and error > 10.0 * TOLERANCES["resolution"] * abs(value):
        raise UnderResolvedError(
            f"Quadrature orders {rule.order} and {fine_rule.order} disagree by {error:.3e} "
            f"on a volume of {value:.6g}"
        )
    return ShadowVolumeResult(value, error, "stokes", rule.k, rule.order)


def shadow_volume(
    phi: EmbeddingComposition,
    P: SymplecticProjector,
    order: Optional[int] = None,
    workers: int = 1,
) -> ShadowVolumeResult:
    """Stokes volume of P phi(B_1), seeding at the linear part and tracing when phi is not linear."""
    order = QUADRATURE_CONFIG["default_order"] if order is None else order
    rule = sphere_rule(P.target.k, order)
    if phi.is_linear:
        chart = seed_chart(phi, P, rule, workers)
    else:
        path = AnalyticPath.from_composition(phi)
        chart = trace_chart(path, P, 1.0, seed_family_chart(path, P, rule, workers), workers=workers)
    return stokes_volume(chart.embedding, P, chart, workers=workers)


def nonsqueezing_margin(
    phi: EmbeddingComposition,
    P: SymplecticProjector,
    order: Optional[int] = None,
    workers: int = 1,
) -> float:
    """Shadow volume minus pi^k; non-negative when the non-squeezing inequality holds."""
    return shadow_volume(phi, P, order, workers).margin
