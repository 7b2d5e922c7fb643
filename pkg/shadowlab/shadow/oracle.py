"""Independent shadow volume from the radial function of P phi(B_1).

Membership of a point p in the shadow is decided by minimizing |P phi(x) - p|^2
over the closed unit ball from several starts; the radial function along each
quadrature direction is found by bisection on that test.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from math import factorial
from typing import Any, Dict, Optional, Tuple

import numpy as np
from scipy.optimize import minimize

from shadowlab.config import ORACLE_CONFIG, RUNTIME_CONFIG, merged
from shadowlab.core.sampling import make_rng
from shadowlab.core.symplectic import SymplecticProjector, omega_gram, pfaffian
from shadowlab.embeddings.composition import EmbeddingComposition, sample_ball
from shadowlab.errors import NumericalError, OracleConvexityError
from shadowlab.shadow.quadrature import sphere_rule
from shadowlab.shadow.volume import ShadowVolumeResult

logger = logging.getLogger(__name__)


class _MembershipTest:
    """Decides whether a point of V (in orthonormal coordinates) lies in P phi(B_1)."""

    def __init__(self, phi: EmbeddingComposition, P: SymplecticProjector, params: Dict[str, Any]):
        self.phi = phi
        self.frame = P.target.orthonormal()
        self.reduce = self.frame.T @ P.matrix
        self.tol = params["membership_tol"]
        self.starts = params["starts"]

    def image(self, x: np.ndarray) -> np.ndarray:
        return self.phi.eval_batch(x[None, :], check=False)[0] @ self.reduce.T

    def _objective(self, x: np.ndarray, p: np.ndarray) -> Tuple[float, np.ndarray]:
        diff = self.image(x) - p
        D = self.phi.jacobian_batch(x[None, :], check=False)[0]
        return float(diff @ diff), 2.0 * D.T @ (self.reduce.T @ diff)

    def _minimize(self, p: np.ndarray, start: np.ndarray):
        constraint = {"type": "ineq", "fun": lambda x: 1.0 - x @ x, "jac": lambda x: -2.0 * x}
        return minimize(
            self._objective,
            start,
            args=(p,),
            jac=True,
            method="SLSQP",
            constraints=[constraint],
            options={"ftol": 1e-16, "maxiter": 200},
        )

    def __call__(self, p: np.ndarray, warm: np.ndarray, rng: np.random.Generator) -> Tuple[bool, np.ndarray]:
        """(membership, best minimizer); stops at the first start that reaches p."""
        dim = self.phi.dim
        pairs = sample_ball(dim, self.starts // 2, 0.9, rng)
        candidates = [warm] + [s for x in pairs for s in (x, -x)]
        best_value, best_x = np.inf, warm
        for start in candidates[: self.starts]:
            result = self._minimize(p, start)
            x = result.x / max(1.0, np.linalg.norm(result.x))
            value = self._objective(x, p)[0]
            if value < best_value:
                best_value, best_x = value, x
            if best_value <= self.tol:
                return True, best_x
        return False, best_x


def _linearized_radii(phi: EmbeddingComposition, P: SymplecticProjector, directions: np.ndarray) -> np.ndarray:
    """Radial function of the ellipsoid P Dphi(0) B_1 in orthonormal coordinates of V."""
    frame = P.target.orthonormal()
    M = frame.T @ P.matrix @ phi.jacobian_batch(np.zeros((1, phi.dim)), check=False)[0]
    quadric = np.linalg.inv(M @ M.T)
    return 1.0 / np.sqrt(np.einsum("ni,ij,nj->n", directions, quadric, directions))


def _ray_radius(
    test: _MembershipTest,
    center: np.ndarray,
    direction: np.ndarray,
    guess: float,
    params: Dict[str, Any],
    rng: np.random.Generator,
) -> float:
    low_factor, high_factor = params["bracket"]
    low, high = low_factor * guess, high_factor * guess
    warm = np.zeros(test.phi.dim)

    for _ in range(10):
        inside, x = test(center + low * direction, warm, rng)
        if inside:
            warm = x
            break
        low *= 0.5
    else:
        raise NumericalError(f"Bisection could not bracket the boundary along {direction}")
    for _ in range(10):
        inside, _ = test(center + high * direction, warm, rng)
        if not inside:
            break
        low, high = high, 1.5 * high
    else:
        raise NumericalError(f"Bisection could not bracket the boundary along {direction}")

    while high - low > params["bisection_rtol"] * high:
        mid = 0.5 * (low + high)
        inside, x = test(center + mid * direction, warm, rng)
        if inside:
            low, warm = mid, x
        else:
            high = mid
    radius = 0.5 * (low + high)

    # Membership along the ray must switch exactly once, at the boundary.
    for fraction in params["ray_inside"]:
        inside, _ = test(center + fraction * radius * direction, warm, rng)
        if not inside:
            raise OracleConvexityError(
                f"Membership fails at {fraction} r along a ray with boundary radius {radius:.6g}"
            )
    for fraction in params["ray_outside"]:
        inside, _ = test(center + fraction * radius * direction, warm, rng)
        if inside:
            raise OracleConvexityError(
                f"Membership resumes at {fraction} r beyond the boundary radius {radius:.6g}"
            )
    return radius


def radial_function(
    phi: EmbeddingComposition,
    P: SymplecticProjector,
    directions: np.ndarray,
    params: Optional[Dict[str, Any]] = None,
    workers: int = 1,
) -> np.ndarray:
    """Distance from P phi(0) to the shadow boundary along unit directions of V."""
    params = merged(ORACLE_CONFIG, params)
    seed = params.get("seed", RUNTIME_CONFIG["seed"])
    test = _MembershipTest(phi, P, params)
    center = test.image(np.zeros(phi.dim))
    guesses = _linearized_radii(phi, P, directions)

    def work(j: int) -> float:
        return _ray_radius(test, center, directions[j], guesses[j], params, make_rng(seed, stream=j))

    indices = range(len(directions))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return np.array(list(pool.map(work, indices)))
    return np.array([work(j) for j in indices])


def radial_oracle_volume(
    phi: EmbeddingComposition,
    P: SymplecticProjector,
    params: Optional[Dict[str, Any]] = None,
    workers: int = 1,
) -> ShadowVolumeResult:
    """Volume of P phi(B_1) in omega^k from its radial function, refusing non-star-shaped shadows."""
    params = merged(ORACLE_CONFIG, params)
    k = P.target.k
    order = params["order"]
    density = factorial(k) * abs(pfaffian(omega_gram(P.target.orthonormal())))

    def volume(rule_order: int) -> Tuple[float, np.ndarray]:
        rule = sphere_rule(k, rule_order)
        radii = radial_function(phi, P, rule.nodes, params, workers)
        return density * rule.integrate(radii ** (2 * k) / (2 * k)), radii

    value, radii = volume(order)
    coarse, _ = volume(order // 2)
    mean_radius = float(np.mean(radii))
    bias = 2 * k * value * (params["bisection_rtol"] + np.sqrt(params["membership_tol"]) / mean_radius)
    error = abs(value - coarse) + bias
    logger.debug(f"Radial oracle volume {value:.10g} (order {order}), coarse {coarse:.10g}")
    return ShadowVolumeResult(value, error, "radial_oracle", k, order)
