"""Real polynomial functions on the odd sphere S^{2m-1} in C^m.

A function is stored as Re(sum c_{ab} z^a zbar^b) with z_j = x_j + i y_j taken
from interleaved coordinates. The circle action z -> e^{i theta} z multiplies
z^a zbar^b by e^{i(|a| - |b|) theta}, so averaging along the characteristic
circles and inverting the fiber derivative are coefficient filters.
"""

import logging
from itertools import product
from math import comb, factorial, pi
from typing import Dict, Iterable, Optional, Tuple

import numpy as np
from scipy.optimize import minimize

from shadowlab.config import CONTACT_CONFIG, TOLERANCES
from shadowlab.embeddings.polynomials import Polynomial
from shadowlab.errors import ValidationError
from shadowlab.shadow.quadrature import sphere_rule

logger = logging.getLogger(__name__)

MAX_SPHERE_DEGREE = 6

Term = Tuple[Tuple[int, ...], Tuple[int, ...]]


def _complex_coordinates(X: np.ndarray) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    return X[:, 0::2] + 1j * X[:, 1::2]


def _monomials(Z: np.ndarray, alpha: np.ndarray, beta: np.ndarray) -> np.ndarray:
    """z^a zbar^b for every term (rows) and point (columns)."""
    if alpha.shape[0] == 0:
        return np.zeros((0, Z.shape[0]), dtype=complex)
    top = int(max(alpha.max(initial=0), beta.max(initial=0)))
    powers = np.stack([Z.T ** e for e in range(top + 1)], axis=1)
    conj_powers = np.conj(powers)
    m = Z.shape[1]
    rows = np.arange(m)[None, :]
    return np.prod(powers[rows, alpha], axis=1) * np.prod(conj_powers[rows, beta], axis=1)


def fiber_rotate(X: np.ndarray, theta: float) -> np.ndarray:
    """e^{i theta} x on interleaved coordinates."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    out = np.empty_like(X)
    c, s = np.cos(theta), np.sin(theta)
    out[:, 0::2] = c * X[:, 0::2] - s * X[:, 1::2]
    out[:, 1::2] = s * X[:, 0::2] + c * X[:, 1::2]
    return out


def random_sphere_points(m: int, count: int, rng: np.random.Generator) -> np.ndarray:
    X = rng.normal(size=(count, 2 * m))
    return X / np.linalg.norm(X, axis=1, keepdims=True)


class SphereFunction:
    """Re(sum_t c_t z^{a_t} zbar^{b_t}) restricted to S^{2m-1}."""

    def __init__(self, alpha, beta, coefficients, m: int):
        alpha = np.asarray(alpha, dtype=int).reshape(-1, m)
        beta = np.asarray(beta, dtype=int).reshape(-1, m)
        coefficients = np.asarray(coefficients, dtype=complex).reshape(-1)
        if alpha.shape != beta.shape or alpha.shape[0] != coefficients.shape[0]:
            raise ValidationError("SphereFunction exponents and coefficients disagree in length")
        if np.any(alpha < 0) or np.any(beta < 0):
            raise ValidationError("SphereFunction exponents must be non-negative")
        self.m = m
        self.alpha, self.beta, self.coefficients = _collect(alpha, beta, coefficients)
        if self.degree > MAX_SPHERE_DEGREE:
            raise ValidationError(f"Sphere function degree {self.degree} exceeds {MAX_SPHERE_DEGREE}")

    # Constructors

    @classmethod
    def from_terms(cls, terms: Dict[Term, complex], m: int) -> "SphereFunction":
        if not terms:
            return cls.zero(m)
        keys = list(terms)
        return cls([a for a, _ in keys], [b for _, b in keys], [terms[k] for k in keys], m)

    @classmethod
    def zero(cls, m: int) -> "SphereFunction":
        return cls(np.zeros((0, m)), np.zeros((0, m)), [], m)

    @classmethod
    def constant(cls, value: float, m: int) -> "SphereFunction":
        zeros = (0,) * m
        return cls.from_terms({(zeros, zeros): value}, m)

    @classmethod
    def from_polynomial(cls, poly: Polynomial) -> "SphereFunction":
        """Rewrite a real polynomial in interleaved (x, y) coordinates in z, zbar."""
        if poly.nvars % 2 != 0:
            raise ValidationError("Polynomial must act on interleaved coordinates of C^m")
        m = poly.nvars // 2
        terms: Dict[Term, complex] = {}
        for powers, coeff in poly.terms():
            factors = []
            for j in range(m):
                a, b = powers[2 * j], powers[2 * j + 1]
                options = []
                for p, q in product(range(a + 1), range(b + 1)):
                    weight = comb(a, p) * comb(b, q) * (-1) ** (b - q) / (2 ** a * (2.0j) ** b)
                    options.append((p + q, a - p + b - q, weight))
                factors.append(options)
            for choice in product(*factors):
                alpha = tuple(c[0] for c in choice)
                beta = tuple(c[1] for c in choice)
                weight = coeff * np.prod([c[2] for c in choice])
                terms[(alpha, beta)] = terms.get((alpha, beta), 0.0) + weight
        return cls.from_terms(terms, m)

    @classmethod
    def from_dict(cls, data: Dict, m: int) -> "SphereFunction":
        """Either {"z": [...], "zbar": [...], "re": .., "im": ..} terms or real "powers" terms."""
        items = data.get("terms", [])
        if items and "powers" in items[0]:
            return cls.from_polynomial(Polynomial.from_dict(data, 2 * m))
        terms: Dict[Term, complex] = {}
        for item in items:
            key = (tuple(int(v) for v in item["z"]), tuple(int(v) for v in item["zbar"]))
            terms[key] = terms.get(key, 0.0) + complex(item.get("re", 0.0), item.get("im", 0.0))
        return cls.from_terms(terms, m)

    def to_dict(self) -> Dict:
        return {
            "terms": [
                {"z": a.tolist(), "zbar": b.tolist(), "re": float(c.real), "im": float(c.imag)}
                for a, b, c in zip(self.alpha, self.beta, self.coefficients)
            ]
        }

    # Structure

    @property
    def degree(self) -> int:
        if self.coefficients.size == 0:
            return 0
        return int((self.alpha + self.beta).sum(axis=1).max())

    @property
    def frequencies(self) -> np.ndarray:
        return self.alpha.sum(axis=1) - self.beta.sum(axis=1)

    @property
    def is_zero(self) -> bool:
        return self.coefficients.size == 0

    def is_invariant(self, tol: Optional[float] = None) -> bool:
        """True when no term of non-zero fiber frequency exceeds tol."""
        tol = TOLERANCES["average"] if tol is None else tol
        moving = self.frequencies != 0
        return bool(np.all(np.abs(self.coefficients[moving]) <= tol))

    def coefficient_bound(self) -> float:
        """sup over the sphere is at most the sum of |c|."""
        return float(np.abs(self.coefficients).sum())

    def _filtered(self, mask: np.ndarray, coefficients: Optional[np.ndarray] = None) -> "SphereFunction":
        coefficients = self.coefficients if coefficients is None else coefficients
        return SphereFunction(self.alpha[mask], self.beta[mask], coefficients[mask], self.m)

    # Arithmetic

    def __add__(self, other) -> "SphereFunction":
        if np.isscalar(other):
            other = SphereFunction.constant(other, self.m)
        if other.m != self.m:
            raise ValidationError("Cannot add functions on spheres of different dimension")
        return SphereFunction(
            np.vstack([self.alpha, other.alpha]),
            np.vstack([self.beta, other.beta]),
            np.concatenate([self.coefficients, other.coefficients]),
            self.m,
        )

    __radd__ = __add__

    def __sub__(self, other) -> "SphereFunction":
        if np.isscalar(other):
            return self + (-other)
        return self + other.scaled(-1.0)

    def scaled(self, factor: complex) -> "SphereFunction":
        return SphereFunction(self.alpha, self.beta, self.coefficients * factor, self.m)

    # Evaluation

    def __call__(self, X) -> np.ndarray:
        Z = _complex_coordinates(X)
        if Z.shape[1] != self.m:
            raise ValidationError(f"Points live in C^{Z.shape[1]}, function on S^{2 * self.m - 1}")
        values = self.coefficients @ _monomials(Z, self.alpha, self.beta)
        out = np.real(values)
        return out[0] if np.ndim(X) == 1 else out

    def gradient(self, X) -> np.ndarray:
        """Ambient gradient of the polynomial extension, shape (N, 2m)."""
        Z = _complex_coordinates(X)
        N = Z.shape[0]
        out = np.zeros((N, 2 * self.m))
        for j in range(self.m):
            shift = np.zeros(self.m, dtype=int)
            shift[j] = 1
            dz = self.alpha[:, j] > 0
            dzb = self.beta[:, j] > 0
            g_z = (self.coefficients[dz] * self.alpha[dz, j]) @ _monomials(Z, self.alpha[dz] - shift, self.beta[dz])
            g_zb = (self.coefficients[dzb] * self.beta[dzb, j]) @ _monomials(Z, self.alpha[dzb], self.beta[dzb] - shift)
            out[:, 2 * j] = np.real(g_z + g_zb)
            out[:, 2 * j + 1] = np.real(1j * (g_z - g_zb))
        return out[0] if np.ndim(X) == 1 else out

    def fiber_derivative(self) -> "SphereFunction":
        """d/dtheta f(e^{i theta} x) at theta = 0."""
        return SphereFunction(self.alpha, self.beta, 1j * self.frequencies * self.coefficients, self.m)

    def mean(self) -> float:
        """Exact average over S^{2m-1}: only |z^a|^2 terms survive, with integral 2 pi^m a! / (m-1+|a|)!."""
        total = 0.0
        for a, b, c in zip(self.alpha, self.beta, self.coefficients):
            if np.array_equal(a, b):
                weight = np.prod([factorial(int(v)) for v in a]) / factorial(self.m - 1 + int(a.sum()))
                total += c.real * 2.0 * pi ** self.m * weight
        area = 2.0 * pi ** self.m / factorial(self.m - 1)
        return float(total / area)

    def extrema(self, order: Optional[int] = None) -> Tuple[float, np.ndarray, float, np.ndarray]:
        """(min, argmin, max, argmax) from a quadrature grid, polished on the sphere by BFGS."""
        order = CONTACT_CONFIG["sphere_order"] if order is None else order
        nodes = sphere_rule(self.m, order).nodes
        values = self(nodes)

        def polish(start: np.ndarray, sign: float) -> Tuple[float, np.ndarray]:
            def objective(y):
                norm = np.linalg.norm(y)
                u = y / norm
                grad = self.gradient(u)
                return sign * float(self(u)), sign * (grad - (grad @ u) * u) / norm

            result = minimize(objective, start, jac=True, method="BFGS", options={"gtol": 1e-12})
            u = result.x / np.linalg.norm(result.x)
            return float(self(u)), u

        low, argmin = polish(nodes[int(np.argmin(values))], 1.0)
        high, argmax = polish(nodes[int(np.argmax(values))], -1.0)
        return min(low, float(values.min())), argmin, max(high, float(values.max())), argmax

    def sup_norm(self, order: Optional[int] = None) -> float:
        if self.is_zero:
            return 0.0
        low, _, high, _ = self.extrema(order)
        return max(abs(low), abs(high))

    def __repr__(self) -> str:
        return f"SphereFunction(m={self.m}, terms={self.coefficients.size}, degree={self.degree})"


def _collect(alpha: np.ndarray, beta: np.ndarray, coefficients: np.ndarray):
    if coefficients.size == 0:
        return alpha, beta, coefficients
    keys = np.hstack([alpha, beta])
    unique, inverse = np.unique(keys, axis=0, return_inverse=True)
    summed = np.zeros(unique.shape[0], dtype=complex)
    np.add.at(summed, inverse.reshape(-1), coefficients)
    keep = summed != 0
    m = alpha.shape[1]
    return unique[keep, :m], unique[keep, m:], summed[keep]


def reeb_average(rho: SphereFunction) -> SphereFunction:
    """Average of rho over the circles x -> e^{i theta} x: keep the frequency-zero terms."""
    return rho._filtered(rho.frequencies == 0)


def cohomological_solve(rho: SphereFunction) -> SphereFunction:
    """h with d/dtheta h(e^{i theta} x) = reeb_average(rho) - rho and zero fiber mean.

    A term c z^a zbar^b of frequency nu is answered by i c / nu.
    """
    nu = rho.frequencies
    moving = nu != 0
    coefficients = np.zeros_like(rho.coefficients)
    coefficients[moving] = 1j * rho.coefficients[moving] / nu[moving]
    return rho._filtered(moving, coefficients)


def monomial_basis(m: int, degree: int = MAX_SPHERE_DEGREE) -> Iterable[Term]:
    for powers in product(range(degree + 1), repeat=2 * m):
        if sum(powers) <= degree:
            yield tuple(powers[:m]), tuple(powers[m:])


def fit_sphere_function(X: np.ndarray, values: np.ndarray, m: int, degree: int = MAX_SPHERE_DEGREE):
    """Least-squares SphereFunction of the given degree through samples; returns (function, max residual)."""
    basis = list(monomial_basis(m, degree))
    alpha = np.array([a for a, _ in basis], dtype=int)
    beta = np.array([b for _, b in basis], dtype=int)
    M = _monomials(_complex_coordinates(X), alpha, beta).T
    design = np.hstack([M.real, M.imag])
    solution, *_ = np.linalg.lstsq(design, values, rcond=None)
    size = len(basis)
    fitted = SphereFunction(alpha, beta, solution[:size] - 1j * solution[size:], m)
    residual = float(np.max(np.abs(design @ solution - values)))
    return fitted, residual


def contact_volume(rho: SphereFunction, order: Optional[int] = None) -> float:
    """Volume of (S^{2m-1}, rho lambda): integral of rho^m (m-1)!/2 d sigma."""
    order = CONTACT_CONFIG["sphere_order"] if order is None else order
    rule = sphere_rule(rho.m, order)
    values = rho(rule.nodes)
    if np.any(values <= 0):
        raise ValidationError(f"Multiplier is non-positive on the sphere (min {values.min():.4g})")
    return factorial(rho.m - 1) / 2.0 * rule.integrate(values ** rho.m)
