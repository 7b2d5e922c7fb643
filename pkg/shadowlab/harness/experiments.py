"""Experiment pipelines: margin scans along analytic paths, r0 maps and the rescaling identity."""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from math import factorial, pi
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.polynomial import polynomial as npoly
from tenacity import Retrying, before_sleep_log, retry_if_exception_type, stop_after_attempt
from tqdm import tqdm

from shadowlab.config import CHART_CONFIG, QUADRATURE_CONFIG
from shadowlab.core.symplectic import SymplecticProjector, j_invariance_defect
from shadowlab.embeddings.composition import EmbeddingComposition
from shadowlab.embeddings.path import AnalyticPath, RescaledFamily
from shadowlab.errors import (
    BeyondLocalRegimeError,
    ChartDivergenceError,
    NumericalError,
    ValidationError,
)
from shadowlab.shadow.chart import ShadowBoundaryChart, seed_family_chart, trace_chart
from shadowlab.shadow.oracle import radial_oracle_volume
from shadowlab.shadow.quadrature import sphere_rule
from shadowlab.shadow.volume import ShadowVolumeResult, stokes_volume

logger = logging.getLogger(__name__)

J_INVARIANT_TOL = 1e-8

Family = Union[AnalyticPath, RescaledFamily]


def trace_with_retry(
    family: Family,
    P: SymplecticProjector,
    t: float,
    chart: ShadowBoundaryChart,
    workers: int = 1,
) -> ShadowBoundaryChart:
    """trace_chart, halving the substep after each divergence."""
    base = min(CHART_CONFIG["max_t_step"], max(abs(t - chart.t_value), 1e-12))
    retrying = Retrying(
        retry=retry_if_exception_type(ChartDivergenceError),
        stop=stop_after_attempt(CHART_CONFIG["retry_attempts"] + 1),
        before_sleep=before_sleep_log(logger, logging.DEBUG),
        reraise=True,
    )
    for attempt in retrying:
        with attempt:
            step = base / 2 ** (attempt.retry_state.attempt_number - 1)
            return trace_chart(family, P, t, chart, max_step=step, workers=workers)


# Margin scans along analytic paths


@dataclass(frozen=True)
class DichotomyFit:
    """Polynomial fit of the volume in t: derivatives j! c_j and the leading order of the margin."""

    derivatives: Tuple[float, ...]
    leading_order: Optional[float]
    trivial: bool

    @property
    def branch(self) -> str:
        return "trivial" if self.trivial else "non-trivial"


def fit_dichotomy(
    t_values: Sequence[float],
    volumes: Sequence[float],
    margins: Sequence[float],
    degree: int = 3,
    trivial_tol: float = 1e-5,
) -> DichotomyFit:
    """Least-squares fit of the volume profile; trivial when every fitted derivative is below trivial_tol.

    The leading order is the log-log slope of |margin| over the positive-t samples.
    """
    t = np.asarray(t_values, dtype=float)
    degree = min(degree, t.size - 1)
    if degree < 1:
        raise ValidationError("Dichotomy fit needs at least two traced t values")
    coefficients = npoly.polyfit(t, np.asarray(volumes, dtype=float), degree)
    derivatives = tuple(float(factorial(j) * coefficients[j]) for j in range(1, degree + 1))
    trivial = all(abs(d) <= trivial_tol for d in derivatives)

    leading = None
    size = np.abs(np.asarray(margins, dtype=float))
    tail = (t > 0) & (size > 0)
    if not trivial and tail.sum() >= 2:
        leading = float(npoly.polyfit(np.log(t[tail]), np.log(size[tail]), 1)[1])
    logger.debug(f"Dichotomy fit: derivatives {np.round(derivatives, 8)}, leading order {leading}")
    return DichotomyFit(derivatives, leading, trivial)


@dataclass
class ScanProfile:
    """Stokes volumes along a t-grid, cut at the first chart breakdown."""

    k: int
    j_defect: float
    t_values: List[float] = field(default_factory=list)
    results: List[ShadowVolumeResult] = field(default_factory=list)
    oracle: List[Optional[ShadowVolumeResult]] = field(default_factory=list)
    truncated_at: Optional[float] = None
    dichotomy: Optional[DichotomyFit] = None

    @property
    def margins(self) -> List[float]:
        return [r.margin for r in self.results]

    @property
    def j_invariant(self) -> bool:
        return self.j_defect <= J_INVARIANT_TOL

    @property
    def truncated(self) -> bool:
        return self.truncated_at is not None


def shadow_scan(
    path: AnalyticPath,
    P: SymplecticProjector,
    t_grid: Sequence[float],
    order: Optional[int] = None,
    workers: int = 1,
    cross_check: bool = False,
    fit_degree: int = 3,
    trivial_tol: float = 1e-5,
    oracle_params: Optional[Dict[str, Any]] = None,
) -> ScanProfile:
    """Trace the shadow boundary along t_grid and integrate the volume at every grid point.

    Args:
        path: Analytic path with a linear phi_0
        P: Symplectic projector onto V
        t_grid: Increasing parameter values
        order: Quadrature order of the chart
        workers: Threads for chart correction and the oracle
        cross_check: Also compute the radial oracle volume at every t
        fit_degree: Degree of the dichotomy fit
        trivial_tol: Bound on the fitted derivatives for the trivial branch

    Returns:
        ScanProfile: Volumes per traced t, truncated at a chart breakdown
    """
    order = QUADRATURE_CONFIG["default_order"] if order is None else order
    k = P.target.k
    profile = ScanProfile(k, j_invariance_defect(path.linear_at_zero(), P.target))
    chart = seed_family_chart(path, P, sphere_rule(k, order), workers)
    for t in map(float, t_grid):
        try:
            chart = trace_with_retry(path, P, t, chart, workers)
        except (ChartDivergenceError, BeyondLocalRegimeError) as e:
            profile.truncated_at = t
            logger.warning(f"Shadow boundary chart broke down at t = {t:.6g}, profile truncated: {e}")
            break
        result = stokes_volume(chart.embedding, P, chart, workers=workers)
        oracle = radial_oracle_volume(chart.embedding, P, oracle_params, workers) if cross_check else None
        profile.t_values.append(t)
        profile.results.append(result)
        profile.oracle.append(oracle)
        logger.info(f"t = {t:.4g}: margin {result.margin:.6e} (error {result.error_estimate:.1e})")

    if profile.j_invariant and len(profile.t_values) >= 2:
        volumes = [r.value for r in profile.results]
        profile.dichotomy = fit_dichotomy(profile.t_values, volumes, profile.margins, fit_degree, trivial_tol)
        logger.info(f"phi_0^-1 V is J-invariant; {profile.dichotomy.branch} branch")
    return profile


# r0 maps over compact sets of centers


def center_grid(dim: int, grid: int = 3, radius: float = 0.5, axes: int = 3) -> np.ndarray:
    """grid^axes centers on the first `axes` coordinates, inside the closed ball of the given radius."""
    axes = min(axes, dim)
    side = radius / np.sqrt(axes)
    ticks = np.linspace(-side, side, grid)
    mesh = np.stack(np.meshgrid(*[ticks] * axes, indexing="ij"), axis=-1).reshape(-1, axes)
    centers = np.zeros((mesh.shape[0], dim))
    centers[:, :axes] = mesh
    return centers


@dataclass(frozen=True, eq=False)
class R0Row:
    center: np.ndarray
    radii: Tuple[float, ...]
    margins: Tuple[float, ...]
    errors: Tuple[float, ...]
    r0: float
    truncated: bool


@dataclass(frozen=True, eq=False)
class R0Map:
    rows: Tuple[R0Row, ...]
    r_grid: Tuple[float, ...]

    @property
    def min_r0(self) -> float:
        return min(row.r0 for row in self.rows)

    @property
    def grid_step(self) -> float:
        return float(np.max(np.diff((0.0,) + self.r_grid)))


def _r0_row(
    phi: EmbeddingComposition,
    P: SymplecticProjector,
    center: np.ndarray,
    r_grid: Sequence[float],
    order: int,
    tol: float,
) -> R0Row:
    """Margins f(x, r) along r_grid; r0 is the last r before the first margin below -tol pi^k."""
    k = P.target.k
    family = RescaledFamily(phi, center)
    chart = seed_family_chart(family, P, sphere_rule(k, order))
    radii: List[float] = []
    margins: List[float] = []
    errors: List[float] = []
    truncated = False
    for r in map(float, r_grid):
        if r >= family.defined_up_to:
            truncated = True
            logger.warning(f"r = {r:.4g} exceeds the domain at center {np.round(center, 3)}; row truncated")
            break
        try:
            chart = trace_with_retry(family, P, r, chart)
            result = stokes_volume(chart.embedding, P, chart)
        except NumericalError as e:
            truncated = True
            logger.warning(f"Row at center {np.round(center, 3)} stopped at r = {r:.4g}: {e}")
            break
        radii.append(r)
        margins.append(result.margin)
        errors.append(result.error_estimate)

    r0 = 0.0
    for r, margin in zip(radii, margins):
        if margin < -tol * pi ** k:
            break
        r0 = r
    return R0Row(center, tuple(radii), tuple(margins), tuple(errors), r0, truncated)


def r0_map(
    phi: EmbeddingComposition,
    P: SymplecticProjector,
    centers: np.ndarray,
    r_grid: Sequence[float],
    order: Optional[int] = None,
    tol: float = 1e-3,
    workers: int = 1,
) -> R0Map:
    """r0(x) for every center; rows run in parallel and come back in center order."""
    order = QUADRATURE_CONFIG["default_order"] if order is None else order
    for center in centers:
        if np.linalg.norm(center) >= phi.domain_radius:
            raise ValidationError(f"Center {np.round(center, 4)} lies outside the certified domain")
    work = partial(_r0_row, phi, P, r_grid=tuple(r_grid), order=order, tol=tol)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        rows = list(tqdm(pool.map(work, centers), total=len(centers), desc="r0 map"))
    result = R0Map(tuple(rows), tuple(float(r) for r in r_grid))
    logger.info(f"r0 map over {len(rows)} centers: min r0 = {result.min_r0:.4g}")
    return result


def r0_refinement(
    phi: EmbeddingComposition,
    P: SymplecticProjector,
    grid: int,
    radius: float,
    axes: int,
    r_grid: Sequence[float],
    order: Optional[int] = None,
    tol: float = 1e-3,
    workers: int = 1,
) -> Tuple[R0Map, R0Map, bool]:
    """r0 maps on a grid and on its 2x refinement; stable when min r0 moves by at most one r step."""
    coarse = r0_map(phi, P, center_grid(phi.dim, grid, radius, axes), r_grid, order, tol, workers)
    fine = r0_map(phi, P, center_grid(phi.dim, 2 * grid - 1, radius, axes), r_grid, order, tol, workers)
    stable = abs(coarse.min_r0 - fine.min_r0) <= coarse.grid_step + 1e-12
    return coarse, fine, stable


# Rescaling identity


class BallImage:
    """y -> phi(x + r y) on B_1: parametrizes phi(B_r(x)) for the radial oracle."""

    def __init__(self, phi: EmbeddingComposition, center, r: float):
        self.phi = phi
        self.center = np.asarray(center, dtype=float)
        self.r = float(r)

    @property
    def dim(self) -> int:
        return self.phi.dim

    def eval_batch(self, Y: np.ndarray, check: bool = True) -> np.ndarray:
        return self.phi.eval_batch(self.center + self.r * np.atleast_2d(Y), check=check)

    def jacobian_batch(self, Y: np.ndarray, check: bool = True) -> np.ndarray:
        return self.r * self.phi.jacobian_batch(self.center + self.r * np.atleast_2d(Y), check=check)


@dataclass(frozen=True)
class ScalingCheck:
    r: float
    direct: float
    rescaled: float
    k: int

    @property
    def defect(self) -> float:
        return abs(self.direct - self.r ** (2 * self.k) * self.rescaled)

    @property
    def passed(self) -> bool:
        return self.defect <= 0.01 * self.r ** (2 * self.k) * pi ** self.k


def scaling_identity(
    phi: EmbeddingComposition,
    P: SymplecticProjector,
    center,
    r: float,
    order: Optional[int] = None,
    workers: int = 1,
    oracle_params: Optional[Dict[str, Any]] = None,
) -> ScalingCheck:
    """Vol(P phi(B_r(x))) from the oracle against r^{2k} Vol(P phi_{r,x}(B_1)) from the traced chart."""
    order = QUADRATURE_CONFIG["default_order"] if order is None else order
    k = P.target.k
    family = RescaledFamily(phi, center)
    chart = seed_family_chart(family, P, sphere_rule(k, order), workers)
    chart = trace_with_retry(family, P, float(r), chart, workers)
    rescaled = stokes_volume(chart.embedding, P, chart, workers=workers).value
    direct = radial_oracle_volume(BallImage(phi, center, r), P, oracle_params, workers).value
    check = ScalingCheck(float(r), direct, rescaled, k)
    logger.debug(f"Scaling at r = {r:.4g}: direct {direct:.8g}, rescaled {r ** (2 * k) * rescaled:.8g}")
    return check
