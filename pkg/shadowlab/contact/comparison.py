"""Capacity comparisons: projection monotonicity and the Hausdorff-Lipschitz probe."""

import logging
from dataclasses import dataclass
from math import pi
from typing import Optional, Tuple

import numpy as np
from scipy.optimize import minimize

from shadowlab.config import CONTACT_CONFIG, RUNTIME_CONFIG
from shadowlab.contact.characteristics import ConvexBody, RadialCurveBody, a_min_estimate
from shadowlab.core.sampling import make_rng
from shadowlab.core.symplectic import SymplecticProjector, omega_gram
from shadowlab.errors import ValidationError

logger = logging.getLogger(__name__)


def _symplectic_plane_basis(P: SymplecticProjector) -> np.ndarray:
    """Columns (e, f) of V with omega(e, f) = 1."""
    Q = P.target.orthonormal()
    density = omega_gram(Q)[0, 1]
    return np.column_stack([Q[:, 0], Q[:, 1] / density])


def projected_body(C: ConvexBody, P: SymplecticProjector, samples: Optional[int] = None) -> RadialCurveBody:
    """P C for a projector onto a symplectic plane, in symplectic coordinates of that plane.

    The gauge of P C at u in V is min over w in V^omega of g_C(u + w).
    """
    if P.target.dim != 2:
        raise ValidationError("Projection monotonicity is computed for projections onto a plane")
    samples = CONTACT_CONFIG["loop_samples"] if samples is None else samples
    basis = _symplectic_plane_basis(P)
    W = P.kernel().orthonormal()
    theta = 2.0 * np.pi * np.arange(samples) / samples
    radii = np.empty(samples)
    warm = np.zeros(W.shape[1])
    for j, angle in enumerate(theta):
        u = np.cos(angle) * basis[:, 0] + np.sin(angle) * basis[:, 1]

        def objective(w, u=u):
            y = (u + W @ w)[None, :]
            return float(C.gauge(y)[0]), W.T @ C.gauge_gradient(y)[0]

        result = minimize(objective, warm, jac=True, method="BFGS", options={"gtol": 1e-12})
        warm = result.x
        radii[j] = 1.0 / result.fun
    return RadialCurveBody(radii)


@dataclass(frozen=True)
class ProjectionMargin:
    capacity_projection: float
    capacity_body: float

    @property
    def margin(self) -> float:
        return self.capacity_projection - self.capacity_body


def projection_monotonicity(
    C: ConvexBody,
    P: SymplecticProjector,
    seeds: Optional[np.ndarray] = None,
    workers: int = 1,
) -> ProjectionMargin:
    """c(P C) - c(C); expected to be non-negative.

    The capacity of the planar shadow is its symplectic area, the capacity of C its minimal action.
    """
    c_projection = projected_body(C, P).area()
    c_body = a_min_estimate(C, seeds, workers).value
    logger.info(f"c(PC) = {c_projection:.8g}, c(C) = {c_body:.8g}")
    return ProjectionMargin(c_projection, c_body)


def _unit_directions(dim: int, count: int, rng: np.random.Generator) -> np.ndarray:
    U = rng.normal(size=(count, dim))
    U = U / np.linalg.norm(U, axis=1, keepdims=True)
    return np.vstack([np.eye(dim), -np.eye(dim), U])


def hausdorff_distance(C: ConvexBody, D: ConvexBody, count: int = 512, rng=None) -> float:
    """sup over unit u of |h_C(u) - h_D(u)|: sampled, then refined by BFGS from the best sample."""
    rng = rng if rng is not None else make_rng(RUNTIME_CONFIG["seed"], stream=13)
    U = _unit_directions(C.dim, count, rng)
    gaps = np.abs(C.support(U) - D.support(U))
    best = U[int(np.argmax(gaps))]

    def objective(y):
        u = (y / np.linalg.norm(y))[None, :]
        return -float(abs(C.support(u)[0] - D.support(u)[0]))

    refined = minimize(objective, best, method="BFGS")
    return float(max(gaps.max(), -refined.fun))


def lipschitz_constant(delta: float, Delta: float) -> float:
    """(2 / delta + Delta / delta^2) Delta^2 pi for bodies pinched between B_delta and B_Delta."""
    return (2.0 / delta + Delta / delta ** 2) * Delta ** 2 * pi


@dataclass(frozen=True)
class LipschitzProbe:
    ratio: float
    constant: float
    distance: float
    capacities: Tuple[float, float]

    @property
    def within_bound(self) -> bool:
        return self.ratio <= self.constant


def hausdorff_lipschitz_probe(
    C: ConvexBody,
    D: ConvexBody,
    pinch: Optional[Tuple[float, float]] = None,
    seeds: Optional[np.ndarray] = None,
    workers: int = 1,
) -> LipschitzProbe:
    """|c(C) - c(D)| / d_H(C, D) against the constant of the pinch; 0 when the bodies coincide."""
    delta, Delta = CONTACT_CONFIG["pinch"] if pinch is None else pinch
    C.check_pinch(delta, Delta)
    D.check_pinch(delta, Delta)
    distance = hausdorff_distance(C, D)
    c_C = a_min_estimate(C, seeds, workers).value
    c_D = a_min_estimate(D, seeds, workers).value
    ratio = 0.0 if distance == 0.0 else abs(c_C - c_D) / distance
    constant = lipschitz_constant(delta, Delta)
    logger.info(f"Lipschitz probe: ratio {ratio:.6g} against {constant:.6g} (d_H = {distance:.4g})")
    return LipschitzProbe(ratio, constant, distance, (c_C, c_D))
