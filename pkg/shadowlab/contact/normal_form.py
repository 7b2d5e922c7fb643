"""Contact multipliers rho_t = 1 + sum t^i rho^(i) and their order-by-order normal form.

A reduction at order m flows the sphere for time t^m along the contact vector
field of a Hamiltonian h with R h = avg(rho^(m)) - rho^(m). The pulled-back form
is (rho_t o psi) kappa lambda_s with d(log kappa)/ds = (R h) o psi_s; its Taylor
coefficients in t are read off a Chebyshev fit and refit to sphere polynomials.
"""

import logging
from dataclasses import dataclass, field, replace
from math import factorial, pi
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial import chebyshev
from scipy.integrate import solve_ivp

from shadowlab.config import CONTACT_CONFIG, TOLERANCES
from shadowlab.contact.characteristics import ContactSphere, a_min_estimate
from shadowlab.contact.sphere_functions import (
    SphereFunction,
    cohomological_solve,
    contact_volume,
    fit_sphere_function,
    reeb_average,
)
from shadowlab.core.symplectic import complex_structure
from shadowlab.errors import IntegrationError, NormalFormError, ValidationError
from shadowlab.shadow.quadrature import sphere_rule

logger = logging.getLogger(__name__)

MAX_ORDER = 3


@dataclass(frozen=True, eq=False)
class ContactMultiplier:
    """rho_t = 1 + sum_{i=1..M} t^i rho^(i) multiplying lambda_s on S^{2m-1}."""

    coefficients: Sequence[SphereFunction]
    reduced_through: int = 0
    diagnostics: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        coefficients = tuple(self.coefficients)
        if not 1 <= len(coefficients) <= MAX_ORDER:
            raise ValidationError(f"A multiplier carries 1 to {MAX_ORDER} orders, got {len(coefficients)}")
        if len({c.m for c in coefficients}) != 1:
            raise ValidationError("Multiplier coefficients live on different spheres")
        object.__setattr__(self, "coefficients", coefficients)

    @property
    def m(self) -> int:
        return self.coefficients[0].m

    @property
    def order(self) -> int:
        return len(self.coefficients)

    @classmethod
    def trivial(cls, m: int, order: int = 1) -> "ContactMultiplier":
        return cls([SphereFunction.zero(m)] * order)

    @classmethod
    def from_dict(cls, data: Dict[str, Any], m: int) -> "ContactMultiplier":
        return cls([SphereFunction.from_dict(item, m) for item in data["coefficients"]])

    def to_dict(self) -> Dict[str, Any]:
        return {"coefficients": [c.to_dict() for c in self.coefficients]}

    def at(self, t: float) -> SphereFunction:
        out = SphereFunction.constant(1.0, self.m)
        for i, rho in enumerate(self.coefficients, start=1):
            out = out + rho.scaled(t ** i)
        return out

    def values(self, t: float, X: np.ndarray) -> np.ndarray:
        out = np.ones(X.shape[0])
        for i, rho in enumerate(self.coefficients, start=1):
            out = out + t ** i * rho(X)
        return out

    def is_positive(self, t_max: float) -> bool:
        """rho_t > 0 for |t| <= t_max, by the coefficient bound or else by sampling."""
        bound = sum(t_max ** i * rho.coefficient_bound() for i, rho in enumerate(self.coefficients, start=1))
        if bound < 1.0:
            return True
        nodes = sphere_rule(self.m, CONTACT_CONFIG["sphere_order"]).nodes
        return all(np.all(self.values(t, nodes) > 0) for t in np.linspace(-t_max, t_max, 41))


def _power_matrix(degree: int) -> np.ndarray:
    """Columns are the power-basis coefficients of the Chebyshev polynomials T_0..T_degree."""
    out = np.zeros((degree + 1, degree + 1))
    for j in range(degree + 1):
        unit = np.zeros(degree + 1)
        unit[j] = 1.0
        out[: j + 1, j] = chebyshev.cheb2poly(unit)
    return out


def taylor_coefficients(t_nodes: np.ndarray, values: np.ndarray, window: float, count: int) -> np.ndarray:
    """First `count` Taylor coefficients at t = 0 of samples on Chebyshev nodes in [-window, window]."""
    degree = t_nodes.size - 1
    cheb = chebyshev.chebfit(t_nodes / window, values, degree)
    power = _power_matrix(degree) @ cheb
    scales = window ** -np.arange(degree + 1, dtype=float)
    return (power * (scales[:, None] if power.ndim == 2 else scales))[:count]


def _chebyshev_nodes(window: float, degree: int) -> np.ndarray:
    k = np.arange(degree + 1)
    return window * np.cos(pi * (k + 0.5) / (degree + 1))


class _ContactFlow:
    """Time-s flow of the contact vector field X_h = 2 h Jx + J pi_xi grad h, with log kappa.

    States are recorded at the requested flow times only.
    """

    def __init__(self, h: SphereFunction, X: np.ndarray, s_values: np.ndarray):
        self.h = h
        self.X = X
        self.J = complex_structure(h.m)
        self.states: Dict[float, np.ndarray] = {0.0: np.concatenate([X.ravel(), np.zeros(X.shape[0])])}
        for sign in (1.0, -1.0):
            targets = np.unique(s_values[sign * s_values > 0])
            if targets.size:
                self._solve(targets[::-1] if sign < 0 else targets)

    def _field(self, _, state: np.ndarray) -> np.ndarray:
        N, size = self.X.shape
        Y = state[: N * size].reshape(N, size)
        JY = Y @ self.J.T
        h = self.h(Y)
        grad = self.h.gradient(Y)
        radial = np.einsum("ni,ni->n", grad, Y)
        along = np.einsum("ni,ni->n", grad, JY)
        xi = grad - radial[:, None] * Y - along[:, None] * JY
        velocity = 2.0 * h[:, None] * JY + xi @ self.J.T
        return np.concatenate([velocity.ravel(), 2.0 * along])

    def _solve(self, targets: np.ndarray):
        solution = solve_ivp(
            self._field,
            (0.0, float(targets[-1])),
            self.states[0.0],
            method="DOP853",
            rtol=CONTACT_CONFIG["flow_rtol"],
            atol=CONTACT_CONFIG["flow_atol"],
            t_eval=targets,
        )
        if not solution.success:
            raise IntegrationError(f"Contact flow integration failed: {solution.message}")
        for s, state in zip(targets, solution.y.T):
            self.states[float(s)] = state

    def __call__(self, s: float) -> Tuple[np.ndarray, np.ndarray]:
        """Flowed points and conformal factor kappa at a recorded time s."""
        state = self.states[float(s)]
        N, size = self.X.shape
        Y = state[: N * size].reshape(N, size)
        return Y / np.linalg.norm(Y, axis=1, keepdims=True), np.exp(state[N * size :])


def _check_lower_orders(family: ContactMultiplier, order: int):
    for i in range(1, order):
        if not family.coefficients[i - 1].is_invariant():
            raise NormalFormError(f"Order {i} is not reduced; reduce it before order {order}")


def normal_form_reduce(family: ContactMultiplier, order: int) -> ContactMultiplier:
    """Replace rho^(order) by its fiber average, pushing the remainder into higher orders."""
    if not 1 <= order <= family.order:
        raise NormalFormError(f"Order {order} is outside 1..{family.order}")
    _check_lower_orders(family, order)
    rho = family.coefficients[order - 1]
    average = reeb_average(rho)
    # R = 2Jx doubles the circle derivative
    h = cohomological_solve(rho).scaled(0.5)
    if h.is_zero:
        return replace(family, reduced_through=max(family.reduced_through, order))

    m = family.m
    rule = sphere_rule(m, CONTACT_CONFIG["fit_order"])
    X = rule.nodes
    window = CONTACT_CONFIG["flow_window"]
    t_nodes = _chebyshev_nodes(window, CONTACT_CONFIG["chebyshev_degree"])
    t_check = CONTACT_CONFIG["t_check"]
    flow = _ContactFlow(h, X, np.append(t_nodes, t_check) ** order)

    def pulled_back(t: float) -> np.ndarray:
        Y, kappa = flow(t ** order)
        return family.values(t, Y) * kappa

    samples = np.array([pulled_back(t) for t in t_nodes])
    taylor = taylor_coefficients(t_nodes, samples, window, family.order + 1)

    mismatch = float(np.max(np.abs(taylor[order] - average(X))))
    if mismatch > 1e-6:
        raise NormalFormError(f"Order {order} of the pulled-back multiplier misses its average by {mismatch:.3e}")

    coefficients: List[SphereFunction] = list(family.coefficients[: order - 1]) + [average]
    fit_residual = 0.0
    for i in range(order + 1, family.order + 1):
        fitted, residual = fit_sphere_function(X, taylor[i], m)
        coefficients.append(fitted)
        fit_residual = max(fit_residual, residual)

    before = contact_volume(family.at(t_check))
    after = factorial(m - 1) / 2.0 * rule.integrate(pulled_back(t_check) ** m)
    drift = abs(after - before) / before
    if drift > 1e-6:
        raise NormalFormError(f"Contact volume changed by {drift:.3e} under the reduction")
    logger.debug(f"Reduced order {order}: fit residual {fit_residual:.2e}, volume drift {drift:.2e}")
    diagnostics = dict(family.diagnostics)
    diagnostics[f"order_{order}"] = {
        "average_mismatch": mismatch,
        "fit_residual": fit_residual,
        "volume_drift": drift,
    }
    return ContactMultiplier(coefficients, reduced_through=order, diagnostics=diagnostics)


def constant_volume_normalizer(family: ContactMultiplier, t: float) -> float:
    """c(t) = Vol(S, rho_t lambda_s)^{-1/m}, making c(t) rho_t lambda_s of unit volume."""
    return contact_volume(family.at(t)) ** (-1.0 / family.m)


def volume_normalized(family: ContactMultiplier) -> ContactMultiplier:
    """Multiply rho_t by the series of (Vol(0) / Vol(t))^{1/m}, truncated at the family order."""
    m = family.m
    window = CONTACT_CONFIG["flow_window"]
    t_nodes = _chebyshev_nodes(window, CONTACT_CONFIG["chebyshev_degree"])
    base = contact_volume(family.at(0.0))
    scale = np.array([(base / contact_volume(family.at(t))) ** (1.0 / m) for t in t_nodes])
    series = taylor_coefficients(t_nodes, scale, window, family.order + 1)
    coefficients = []
    for i in range(1, family.order + 1):
        term = family.coefficients[i - 1] + float(series[i])
        for j in range(1, i):
            term = term + family.coefficients[i - j - 1].scaled(float(series[j]))
        coefficients.append(term)
    return ContactMultiplier(coefficients, family.reduced_through, dict(family.diagnostics))


@dataclass(frozen=True, eq=False)
class TrivialityResult:
    """First order with a non-vanishing averaged coefficient, or trivial through `checked`."""

    trivial: bool
    checked: int
    order: Optional[int] = None
    obstruction: Optional[SphereFunction] = None
    minimum: Optional[float] = None
    maximum: Optional[float] = None
    family: Optional[ContactMultiplier] = None


def formal_triviality_order(family: ContactMultiplier, M: Optional[int] = None) -> TrivialityResult:
    """Reduce order by order until an averaged coefficient survives."""
    M = family.order if M is None else M
    if not 1 <= M <= family.order:
        raise NormalFormError(f"Cannot check {M} orders of a family with {family.order}")
    current = volume_normalized(family)
    for order in range(1, M + 1):
        average = reeb_average(current.coefficients[order - 1])
        if average.sup_norm() > TOLERANCES["obstruction"]:
            low, _, high, _ = average.extrema()
            logger.info(f"Obstruction at order {order}: averaged coefficient ranges over [{low:.4g}, {high:.4g}]")
            return TrivialityResult(False, order, order, average, low, high, current)
        current = normal_form_reduce(current, order)
    return TrivialityResult(True, M, family=current)


def amin_upper_bound(rho: SphereFunction, base_amin: float = pi) -> float:
    """(min rho) A_min(base) for a fiber-invariant multiplier; bounds A_min(rho lambda) from above.

    The circle through the minimum of rho is a closed Reeb orbit of rho lambda with that action.
    """
    if not rho.is_invariant():
        raise ValidationError("Upper bound needs a multiplier invariant under the Reeb flow")
    low, argmin, _, _ = rho.extrema()
    if low <= 0:
        raise ValidationError(f"Multiplier must be positive, min is {low:.4g}")
    logger.debug(f"min rho = {low:.10g} at {np.round(argmin, 6)}")
    return low * base_amin


@dataclass(frozen=True)
class StrictMaxReport:
    t_values: Tuple[float, ...]
    amin: Tuple[float, ...]
    bounds: Tuple[Optional[float], ...]
    strict_max: bool
    flat: bool
    leading_order: Optional[float]
    message: str

    @property
    def decrements(self) -> Tuple[float, ...]:
        return tuple(self.amin[0] - a for a in self.amin)


def normalized_multiplier(family: ContactMultiplier, t: float) -> SphereFunction:
    """rho_t scaled so that (S^{2m-1}, rho_t lambda_s) has volume pi^m."""
    return family.at(t).scaled((pi ** family.m / contact_volume(family.at(t))) ** (1.0 / family.m))


def strict_max_check(
    family: ContactMultiplier,
    t_grid: Sequence[float],
    seeds: Optional[np.ndarray] = None,
    workers: int = 1,
) -> StrictMaxReport:
    """A_min along t_grid for the volume-normalized family, against A_min at t = 0."""
    t_values = tuple(sorted({0.0, *map(float, t_grid)}))
    amin: List[float] = []
    bounds: List[Optional[float]] = []
    for t in t_values:
        rho = normalized_multiplier(family, t)
        amin.append(a_min_estimate(ContactSphere(rho), seeds, workers).value)
        bounds.append(amin_upper_bound(rho) if rho.is_invariant() else None)

    base = amin[0]
    positive = [(t, base - a) for t, a in zip(t_values, amin) if t > 0]
    flat = all(abs(d) <= 1e-6 for _, d in positive)
    strict = bool(positive) and all(d > 1e-6 for _, d in positive)
    leading = None
    if strict and len(positive) >= 2:
        ts, ds = np.array(positive).T
        leading = float(np.polyfit(np.log(ts), np.log(ds), 1)[0])
    if flat:
        message = "no strict max detectable"
    elif strict:
        message = f"strict maximum at t = 0 (A_min(0) = {base:.8g})"
    else:
        message = "A_min does not decrease at every grid point"
    logger.info(f"Strict-max check: {message}")
    return StrictMaxReport(t_values, tuple(amin), tuple(bounds), strict, flat, leading, message)
