"""Closed characteristics on convex hypersurfaces and the minimal action.

Every surface is the unit level of a function H homogeneous of degree 2 (the
squared gauge for convex bodies, |x|^2 for the multiplier-form sphere). The
flow x' = J grad H parametrizes closed characteristics so that their action
under lambda_s = (1/2) sum (x dy - y dx) equals their period.
"""

import logging
from abc import ABC, abstractmethod
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from math import pi
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from scipy.fft import irfft, rfft, rfftfreq
from scipy.integrate import solve_ivp
from scipy.optimize import least_squares, minimize

from shadowlab.config import CONTACT_CONFIG, RUNTIME_CONFIG, TOLERANCES
from shadowlab.contact.sphere_functions import SphereFunction
from shadowlab.core.sampling import make_rng
from shadowlab.core.symplectic import complex_structure
from shadowlab.errors import IntegrationError, NumericalError, OrbitSearchError, ValidationError

logger = logging.getLogger(__name__)

FLOW_CHUNK = 1.0


class CharacteristicSystem(ABC):
    """A compact hypersurface {H = 1} with a flow tangent to its characteristic line field."""

    def __init__(self, dim: int):
        if dim % 2 != 0 or dim < 2:
            raise ValidationError(f"Phase space dimension must be even, got {dim}")
        self.dim = dim
        self.J = complex_structure(dim // 2)

    @abstractmethod
    def level(self, Y: np.ndarray) -> np.ndarray:
        """Conserved quantity, equal to 1 on the surface."""

    @abstractmethod
    def velocity(self, Y: np.ndarray) -> np.ndarray:
        """Characteristic vector field, row-wise."""

    @abstractmethod
    def retract(self, Y: np.ndarray) -> np.ndarray:
        """Project points back onto the surface."""

    @abstractmethod
    def period_horizon(self) -> float:
        """Upper bound for the time needed by the first return of a minimal orbit."""

    def action_density(self, Y: np.ndarray) -> np.ndarray:
        """lambda_s(velocity) = (1/2) omega(y, v)."""
        V = self.velocity(Y)
        return 0.5 * np.einsum("ni,ni->n", Y @ self.J, V)

    def seed_points(self, random_count: int, rng: np.random.Generator) -> np.ndarray:
        """Surface points over the x_i axes followed by random directions."""
        axes = np.eye(self.dim)[0::2]
        directions = rng.normal(size=(random_count, self.dim))
        return self.retract(np.vstack([axes, directions]))


class ConvexBody(CharacteristicSystem):
    """Convex body {g <= 1} given by its gauge g; the flow uses H = g^2."""

    @abstractmethod
    def gauge(self, Y: np.ndarray) -> np.ndarray:
        """Positively 1-homogeneous gauge function."""

    @abstractmethod
    def gauge_gradient(self, Y: np.ndarray) -> np.ndarray:
        """Gradient of the gauge, row-wise."""

    def level(self, Y):
        return self.gauge(Y) ** 2

    def velocity(self, Y):
        G = 2.0 * self.gauge(Y)[:, None] * self.gauge_gradient(Y)
        return G @ self.J.T

    def retract(self, Y):
        Y = np.atleast_2d(Y)
        return Y / self.gauge(Y)[:, None]

    def radial(self, U: np.ndarray) -> np.ndarray:
        """Distance from the origin to the boundary along unit directions."""
        return 1.0 / self.gauge(U)

    def radii_bounds(self, rng: Optional[np.random.Generator] = None, count: int = 2048):
        """(inner, outer) radii of the body, estimated from sampled directions."""
        rng = rng if rng is not None else make_rng(RUNTIME_CONFIG["seed"], stream=7)
        U = rng.normal(size=(count, self.dim))
        U = np.vstack([U / np.linalg.norm(U, axis=1, keepdims=True), np.eye(self.dim), -np.eye(self.dim)])
        radii = self.radial(U)
        return float(radii.min()), float(radii.max())

    def check_pinch(self, delta: float, Delta: float, rng: Optional[np.random.Generator] = None):
        inner, outer = self.radii_bounds(rng)
        if inner < delta or outer > Delta:
            raise ValidationError(
                f"Body radii [{inner:.4g}, {outer:.4g}] violate the pinch ({delta}, {Delta})"
            )

    def support(self, U: np.ndarray) -> np.ndarray:
        """h(u) = max over the body of <u, y>, by maximizing <u, y> / g(y)."""
        U = np.atleast_2d(U)
        out = np.empty(U.shape[0])
        for i, u in enumerate(U):

            def objective(y, u=u):
                g = self.gauge(y[None, :])[0]
                grad = self.gauge_gradient(y[None, :])[0]
                value = u @ y / g
                return -value, -(u / g - value * grad / g)

            result = minimize(objective, u, jac=True, method="BFGS", options={"gtol": 1e-12})
            out[i] = -result.fun
        return out

    def period_horizon(self) -> float:
        _, outer = self.radii_bounds()
        return 1.1 * pi * outer ** 2


class Ellipsoid(ConvexBody):
    """{y : y^T A y <= 1}."""

    def __init__(self, A):
        A = np.asarray(A, dtype=float)
        super().__init__(A.shape[0])
        if not np.allclose(A, A.T) or np.linalg.eigvalsh(A).min() <= 0:
            raise ValidationError("Ellipsoid matrix must be symmetric positive definite")
        self.A = A
        self.A_inv = np.linalg.inv(A)

    @classmethod
    def from_semi_axes(cls, radii: Sequence[float]) -> "Ellipsoid":
        """{sum |z_j|^2 / r_j^2 <= 1} for one radius per complex coordinate."""
        radii = np.asarray(radii, dtype=float)
        return cls(np.diag(np.repeat(1.0 / radii ** 2, 2)))

    def gauge(self, Y):
        Y = np.atleast_2d(Y)
        return np.sqrt(np.einsum("ni,ij,nj->n", Y, self.A, Y))

    def gauge_gradient(self, Y):
        Y = np.atleast_2d(Y)
        return (Y @ self.A) / self.gauge(Y)[:, None]

    def support(self, U):
        U = np.atleast_2d(U)
        return np.sqrt(np.einsum("ni,ij,nj->n", U, self.A_inv, U))

    def minimal_action(self) -> float:
        """pi over the largest symplectic eigenvalue of A; pi r_min^2 when the axes come in complex pairs."""
        return pi / np.abs(np.linalg.eigvals(self.J @ self.A).imag).max()


class ScaledBall(Ellipsoid):
    """The ball of radius Delta."""

    def __init__(self, radius: float, dim: int = 4):
        if radius <= 0:
            raise ValidationError(f"Ball radius must be positive, got {radius}")
        super().__init__(np.eye(dim) / radius ** 2)
        self.radius = radius


class RadialHypersurface(ConvexBody):
    """The radial lift M = {sqrt(1 + f(x)) x : |x| = 1}."""

    def __init__(self, f: SphereFunction):
        super().__init__(2 * f.m)
        self.f = f
        low = f.extrema()[0]
        if 1.0 + low <= 0:
            raise ValidationError(f"1 + f must be positive on the sphere (min {1.0 + low:.4g})")

    def gauge(self, Y):
        Y = np.atleast_2d(Y)
        r = np.linalg.norm(Y, axis=1)
        return r / np.sqrt(1.0 + self.f(Y / r[:, None]))

    def gauge_gradient(self, Y):
        Y = np.atleast_2d(Y)
        r = np.linalg.norm(Y, axis=1)
        U = Y / r[:, None]
        F = 1.0 + self.f(U)
        grad_f = self.f.gradient(U)
        tangential = grad_f - np.einsum("ni,ni->n", grad_f, U)[:, None] * U
        return U / np.sqrt(F)[:, None] - 0.5 * tangential / F[:, None] ** 1.5


class RadialCurveBody(ConvexBody):
    """Star-shaped planar body whose radial function is interpolated from uniform samples by FFT."""

    def __init__(self, radii: Sequence[float]):
        super().__init__(2)
        radii = np.asarray(radii, dtype=float)
        if np.any(radii <= 0):
            raise ValidationError("Radial samples must be positive")
        self.radii = radii
        self.spectrum = rfft(radii) / radii.size
        self.modes = rfftfreq(radii.size, d=1.0 / radii.size)

    def _series(self, theta: np.ndarray):
        weights = np.where((self.modes == 0) | (2 * self.modes == self.radii.size), 1.0, 2.0)
        phase = np.exp(1j * np.outer(theta, self.modes))
        coefficients = weights * self.spectrum
        value = np.real(phase @ coefficients)
        slope = np.real(phase @ (1j * self.modes * coefficients))
        return value, slope

    def gauge(self, Y):
        Y = np.atleast_2d(Y)
        r, _ = self._series(np.arctan2(Y[:, 1], Y[:, 0]))
        return np.linalg.norm(Y, axis=1) / r

    def gauge_gradient(self, Y):
        Y = np.atleast_2d(Y)
        rho = np.linalg.norm(Y, axis=1)
        theta = np.arctan2(Y[:, 1], Y[:, 0])
        r, dr = self._series(theta)
        e_rho = Y / rho[:, None]
        e_theta = np.column_stack([-e_rho[:, 1], e_rho[:, 0]])
        return e_rho / r[:, None] - (dr / r ** 2)[:, None] * e_theta

    def area(self) -> float:
        """(1/2) integral of r(theta)^2, exact for the interpolant on a doubled grid."""
        theta = 2.0 * pi * np.arange(4 * self.radii.size) / (4 * self.radii.size)
        r, _ = self._series(theta)
        return float(0.5 * np.mean(r ** 2) * 2.0 * pi)


class ContactSphere(CharacteristicSystem):
    """Reeb dynamics of rho lambda_s on the unit sphere: R_rho = 2Jx / rho - J pi_xi grad rho / rho^2."""

    def __init__(self, rho: SphereFunction):
        super().__init__(2 * rho.m)
        self.rho = rho
        low, _, high, _ = rho.extrema()
        if low <= 0:
            raise ValidationError(f"Contact multiplier must be positive (min {low:.4g})")
        self._max = high

    def level(self, Y):
        return np.einsum("ni,ni->n", Y, Y)

    def velocity(self, Y):
        Y = np.atleast_2d(Y)
        JY = Y @ self.J.T
        rho = self.rho(Y)
        grad = self.rho.gradient(Y)
        xi = (
            grad
            - np.einsum("ni,ni->n", grad, Y)[:, None] * Y
            - np.einsum("ni,ni->n", grad, JY)[:, None] * JY
        )
        return 2.0 * JY / rho[:, None] - (xi @ self.J.T) / rho[:, None] ** 2

    def retract(self, Y):
        Y = np.atleast_2d(Y)
        return Y / np.linalg.norm(Y, axis=1, keepdims=True)

    def action_density(self, Y):
        """rho lambda_s(R_rho), identically 1 on the sphere."""
        return self.rho(Y) * super().action_density(Y)

    def period_horizon(self) -> float:
        return 1.1 * pi * self._max


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    points: np.ndarray
    energy_drift: float


@dataclass(frozen=True, eq=False)
class ReebOrbit:
    """A closed characteristic sampled at N points over one period."""

    loop: np.ndarray
    period: float
    action: float
    closure_residual: float
    seed_index: int = -1
    method: str = "return_map"

    def __post_init__(self):
        if not self.action > 0:
            raise ValidationError(f"Closed characteristic with non-positive action {self.action}")


@dataclass(frozen=True, eq=False)
class CapacityEstimate:
    """Minimal action over the orbits found; an upper bound for the true minimum."""

    value: float
    witness: ReebOrbit
    diagnostics: Dict[str, Any] = field(default_factory=dict)
    upper_bound: bool = True

    def __post_init__(self):
        if not self.value > 0:
            raise ValidationError(f"Capacity estimate must be positive, got {self.value}")
        if abs(self.value - self.witness.action) > 1e-9:
            raise ValidationError("Capacity estimate disagrees with its witness action")


def _integrate(system: CharacteristicSystem, x0: np.ndarray, T: float, t_eval: Optional[np.ndarray] = None):
    """Flow from x0 for time T >= 0 in chunks, retracting onto the surface between chunks.

    Returns the end point, the sample times and points requested by t_eval, and the
    largest level drift seen at a chunk end.
    """
    rtol, atol = CONTACT_CONFIG["flow_rtol"], CONTACT_CONFIG["flow_atol"]
    if T < 0:
        raise ValidationError(f"Flow time must be non-negative, got {T}")
    y = np.asarray(x0, dtype=float)
    drift = 0.0
    times: List[np.ndarray] = []
    points: List[np.ndarray] = []
    t0 = 0.0
    while t0 < T:
        t1 = min(t0 + FLOW_CHUNK, T)
        solution = solve_ivp(
            lambda _, z: system.velocity(z[None, :])[0],
            (t0, t1),
            y,
            method="DOP853",
            rtol=rtol,
            atol=atol,
            dense_output=t_eval is not None,
        )
        if not solution.success:
            raise IntegrationError(f"Characteristic flow failed at t = {t0:.6g}: {solution.message}")
        if t_eval is not None:
            upper = t_eval <= t1 if t1 == T else t_eval < t1
            chunk = t_eval[(t_eval >= t0) & upper]
            if chunk.size:
                times.append(chunk)
                points.append(solution.sol(chunk).T)
        end = solution.y[:, -1]
        drift = max(drift, abs(float(system.level(end[None, :])[0]) - 1.0))
        y = system.retract(end[None, :])[0]
        t0 = t1
    if t_eval is None:
        return y, np.zeros(0), np.zeros((0, y.size)), drift
    return y, np.concatenate(times), np.vstack(points), drift


def characteristic_flow(system: CharacteristicSystem, x0, T: float, samples: int = 0) -> Trajectory:
    """Integrate x' = J grad H from a surface point x0 for time T, projecting back onto the surface."""
    x0 = np.asarray(x0, dtype=float)
    if abs(float(system.level(x0[None, :])[0]) - 1.0) > 1e-10:
        raise ValidationError("Initial point is not on the surface")
    t_eval = np.linspace(0.0, T, samples) if samples else None
    end, times, points, drift = _integrate(system, x0, T, t_eval)
    if drift > TOLERANCES["energy_drift"]:
        raise IntegrationError(f"Energy drift {drift:.3e} exceeds {TOLERANCES['energy_drift']:.1e}")
    if not samples:
        times, points = np.array([0.0, T]), np.vstack([x0, end])
    return Trajectory(times, points, drift)


def _first_return(system: CharacteristicSystem, x0: np.ndarray) -> float:
    horizon = system.period_horizon()
    t_eval = np.linspace(0.0, horizon, 1024)
    _, times, points, _ = _integrate(system, x0, horizon, t_eval)
    distance = np.linalg.norm(points - x0, axis=1)
    leave = np.argmax(distance > 0.25 * distance.max())
    return float(times[leave + int(np.argmin(distance[leave:]))])


def _orbit_from(system: CharacteristicSystem, x0: np.ndarray, T: float, seed_index: int, method: str) -> ReebOrbit:
    samples = CONTACT_CONFIG["loop_samples"]
    t_eval = T * np.arange(samples) / samples
    end, _, loop, _ = _integrate(system, x0, T, t_eval)
    closure = float(np.linalg.norm(end - x0))
    action = float(T * np.mean(system.action_density(loop)))
    return ReebOrbit(loop, T, action, closure, seed_index, method)


def _return_map_orbit(system: CharacteristicSystem, seed: np.ndarray, seed_index: int) -> Optional[ReebOrbit]:
    T0 = _first_return(system, seed)
    v0 = system.velocity(seed[None, :])[0]

    def residual(z):
        x, T = z[:-1], z[-1]
        end, *_ = _integrate(system, x, T)
        return np.concatenate([end - x, [system.level(x[None, :])[0] - 1.0, (x - seed) @ v0]])

    result = least_squares(residual, np.append(seed, T0), method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15)
    x, T = result.x[:-1], result.x[-1]
    if T < 0.1 * T0:
        return None
    x = system.retract(x[None, :])[0]
    orbit = _orbit_from(system, x, T, seed_index, "return_map")
    return orbit if orbit.closure_residual <= TOLERANCES["orbit"] else None


def _spectral_derivative(loop: np.ndarray) -> np.ndarray:
    N = loop.shape[0]
    modes = rfftfreq(N, d=1.0 / N)
    spectrum = rfft(loop, axis=0) * (2j * pi * modes)[:, None]
    if N % 2 == 0:
        spectrum[-1] = 0.0
    return irfft(spectrum, n=N, axis=0)


def _collocation_orbit(system: CharacteristicSystem, seed: np.ndarray, seed_index: int) -> Optional[ReebOrbit]:
    """Harmonic balance on N samples of a loop with unknown period, refined by the return map."""
    N = CONTACT_CONFIG["loop_samples"]
    T0 = _first_return(system, seed)
    _, _, initial, _ = _integrate(system, seed, T0, T0 * np.arange(N) / N)
    tangent = _spectral_derivative(initial)
    dim = system.dim

    def residual(z):
        loop, T = z[:-1].reshape(N, dim), z[-1]
        flow = (_spectral_derivative(loop) - T * system.velocity(loop)).ravel()
        return np.concatenate([flow, system.level(loop) - 1.0, [np.sum((loop - initial) * tangent)]])

    result = least_squares(residual, np.append(initial.ravel(), T0), xtol=1e-13, ftol=1e-13)
    loop, T = result.x[:-1].reshape(N, dim), result.x[-1]
    if T < 0.1 * T0:
        return None
    orbit = _orbit_from(system, system.retract(loop[:1])[0], T, seed_index, "collocation")
    if orbit.closure_residual > TOLERANCES["orbit"]:
        return _return_map_orbit(system, orbit.loop[0], seed_index)
    return orbit


def default_seeds(system: CharacteristicSystem, random_seeds: Optional[int] = None) -> np.ndarray:
    count = CONTACT_CONFIG["random_seeds"] if random_seeds is None else random_seeds
    return system.seed_points(count, make_rng(RUNTIME_CONFIG["seed"], stream=11))


def closed_characteristic_search(
    system: CharacteristicSystem,
    seeds: Optional[np.ndarray] = None,
    workers: int = 1,
    random_seeds: Optional[int] = None,
) -> List[ReebOrbit]:
    """Closed characteristics from return-map refinement, with a collocation fallback.

    Orbits are sorted by action, then by seed index.
    """
    seeds = default_seeds(system, random_seeds) if seeds is None else np.atleast_2d(seeds)

    def attempt(index: int) -> Optional[ReebOrbit]:
        try:
            return _return_map_orbit(system, seeds[index], index)
        except (NumericalError, ValueError, np.linalg.LinAlgError) as e:
            logger.debug(f"Seed {index} failed: {e}")
            return None

    indices = range(len(seeds))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            found = list(pool.map(attempt, indices))
    else:
        found = [attempt(i) for i in indices]
    orbits = [orbit for orbit in found if orbit is not None]

    if not orbits:
        logger.warning(f"Return map found no closed characteristic from {len(seeds)} seeds, trying collocation")
        for index in indices:
            try:
                orbit = _collocation_orbit(system, seeds[index], index)
            except (NumericalError, ValueError, np.linalg.LinAlgError):
                orbit = None
            if orbit is not None:
                orbits.append(orbit)
                break
    if not orbits:
        raise OrbitSearchError(f"No closed characteristic found from {len(seeds)} seeds")
    if len(orbits) < len(seeds) / 2:
        logger.warning(f"Only {len(orbits)} of {len(seeds)} seeds closed up; the minimal action is a weak bound")
    return sorted(orbits, key=lambda o: (o.action, o.seed_index))


def a_min_estimate(
    system: CharacteristicSystem,
    seeds: Optional[np.ndarray] = None,
    workers: int = 1,
    random_seeds: Optional[int] = None,
) -> CapacityEstimate:
    """Smallest action among the closed characteristics found; flagged as an upper bound."""
    seeds = default_seeds(system, random_seeds) if seeds is None else np.atleast_2d(seeds)
    orbits = closed_characteristic_search(system, seeds, workers)
    witness = orbits[0]
    diagnostics = {
        "seed_count": len(seeds),
        "orbits_found": len(orbits),
        "closure_residuals": [o.closure_residual for o in orbits],
        "actions": [o.action for o in orbits],
    }
    logger.debug(f"A_min estimate {witness.action:.10g} from {len(orbits)} closed orbits")
    return CapacityEstimate(witness.action, witness, diagnostics)
