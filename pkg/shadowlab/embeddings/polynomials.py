"""Sparse real polynomials in several variables with exact derivatives and re-centering."""

from functools import cached_property
from itertools import product
from math import comb, factorial
from typing import Dict, Iterable, List, Tuple

import numpy as np

from shadowlab.errors import ValidationError

MAX_DEGREE = 6


class Polynomial:
    """sum_b c_b x^b, stored as an exponent matrix (terms x variables) and coefficients."""

    def __init__(self, exponents, coefficients, nvars: int = None):
        exponents = np.asarray(exponents, dtype=int)
        coefficients = np.asarray(coefficients, dtype=float)
        if exponents.size == 0:
            if nvars is None:
                raise ValidationError("nvars is required for an empty polynomial")
            exponents = np.zeros((0, nvars), dtype=int)
            coefficients = np.zeros(0)
        if exponents.ndim != 2 or exponents.shape[0] != coefficients.shape[0]:
            raise ValidationError(
                f"Exponent matrix {exponents.shape} does not match {coefficients.shape[0]} coefficients"
            )
        if (exponents < 0).any():
            raise ValidationError("Exponents must be non-negative")
        self.exponents, self.coefficients = _collect(exponents, coefficients)
        self.nvars = exponents.shape[1]

    @classmethod
    def from_terms(cls, terms: Dict[Tuple[int, ...], float], nvars: int) -> "Polynomial":
        if not terms:
            return cls.zero(nvars)
        exps = np.array(list(terms.keys()), dtype=int).reshape(-1, nvars)
        return cls(exps, np.array(list(terms.values()), dtype=float), nvars)

    @classmethod
    def zero(cls, nvars: int) -> "Polynomial":
        return cls(np.zeros((0, nvars), dtype=int), np.zeros(0), nvars)

    @classmethod
    def from_dict(cls, data: Dict, nvars: int) -> "Polynomial":
        """Parse {"terms": [{"powers": [...], "coeff": c}, ...]}."""
        terms: Dict[Tuple[int, ...], float] = {}
        for term in data.get("terms", []):
            powers = tuple(int(p) for p in term["powers"])
            if len(powers) != nvars:
                raise ValidationError(f"Term {powers} has {len(powers)} powers, expected {nvars}")
            terms[powers] = terms.get(powers, 0.0) + float(term["coeff"])
        return cls.from_terms(terms, nvars)

    def to_dict(self) -> Dict:
        return {
            "terms": [
                {"powers": [int(p) for p in powers], "coeff": float(c)}
                for powers, c in zip(self.exponents, self.coefficients)
            ]
        }

    @property
    def degree(self) -> int:
        if len(self.coefficients) == 0:
            return 0
        return int(self.exponents.sum(axis=1).max())

    @property
    def is_zero(self) -> bool:
        return len(self.coefficients) == 0

    def terms(self) -> Iterable[Tuple[Tuple[int, ...], float]]:
        for powers, c in zip(self.exponents, self.coefficients):
            yield tuple(int(p) for p in powers), float(c)

    def __call__(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        single = X.ndim == 1
        X = np.atleast_2d(X)
        if len(self.coefficients) == 0:
            values = np.zeros(X.shape[0])
        else:
            monomials = np.prod(X[:, None, :] ** self.exponents[None, :, :], axis=2)
            values = monomials @ self.coefficients
        return values[0] if single else values

    def __add__(self, other: "Polynomial") -> "Polynomial":
        return Polynomial(
            np.vstack([self.exponents, other.exponents]),
            np.concatenate([self.coefficients, other.coefficients]),
            self.nvars,
        )

    def scaled(self, factor: float) -> "Polynomial":
        return Polynomial(self.exponents, self.coefficients * factor, self.nvars)

    def derivative(self, j: int) -> "Polynomial":
        """Exact partial derivative in variable j."""
        mask = self.exponents[:, j] > 0
        exps = self.exponents[mask].copy()
        coeffs = self.coefficients[mask] * exps[:, j]
        exps[:, j] -= 1
        return Polynomial(exps, coeffs, self.nvars)

    @cached_property
    def _gradient_polys(self) -> List["Polynomial"]:
        return [self.derivative(j) for j in range(self.nvars)]

    @cached_property
    def _hessian_polys(self) -> List[List["Polynomial"]]:
        return [[g.derivative(l) for l in range(self.nvars)] for g in self._gradient_polys]

    @cached_property
    def _third_polys(self) -> List[List[List["Polynomial"]]]:
        return [[[h.derivative(m) for m in range(self.nvars)] for h in row] for row in self._hessian_polys]

    def gradient(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.stack([g(X) for g in self._gradient_polys], axis=-1)

    def hessian(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        out = np.empty((X.shape[0], self.nvars, self.nvars))
        for j in range(self.nvars):
            for l in range(j, self.nvars):
                out[:, j, l] = self._hessian_polys[j][l](X)
                out[:, l, j] = out[:, j, l]
        return out

    def third_contract(self, X, w) -> np.ndarray:
        """T(X)[w] = sum_m w_m d^3 g / dx_i dx_j dx_m, one symmetric matrix per point."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        w = np.atleast_2d(np.asarray(w, dtype=float))
        out = np.zeros((X.shape[0], self.nvars, self.nvars))
        if self.degree < 3:
            return out
        for i in range(self.nvars):
            for j in range(i, self.nvars):
                acc = np.zeros(X.shape[0])
                for m in range(self.nvars):
                    poly = self._third_polys[i][j][m]
                    if not poly.is_zero:
                        acc += w[:, m] * poly(X)
                out[:, i, j] = acc
                out[:, j, i] = acc
        return out

    def taylor_at(self, center) -> "Polynomial":
        """Polynomial h -> g(center + h), by binomial expansion of every monomial."""
        center = np.asarray(center, dtype=float)
        terms: Dict[Tuple[int, ...], float] = {}
        for powers, c in self.terms():
            expansions = [
                [(b, comb(a, b) * center[j] ** (a - b)) for b in range(a + 1)]
                for j, a in enumerate(powers)
            ]
            for combo in product(*expansions):
                key = tuple(b for b, _ in combo)
                value = c * np.prod([f for _, f in combo])
                terms[key] = terms.get(key, 0.0) + value
        return Polynomial.from_terms(terms, self.nvars)

    def rescaled_remainder(self, r: float, drop_below: int = 2) -> "Polynomial":
        """sum_{|b| >= drop_below} c_b r^{|b| - drop_below} x^b."""
        orders = self.exponents.sum(axis=1)
        mask = orders >= drop_below
        coeffs = self.coefficients[mask] * float(r) ** (orders[mask] - drop_below)
        return Polynomial(self.exponents[mask], coeffs, self.nvars)

    def taylor_coefficient(self, powers: Tuple[int, ...], center) -> float:
        """d^b g(center) / b!, used to cross-check `taylor_at`."""
        poly = self
        for j, a in enumerate(powers):
            for _ in range(a):
                poly = poly.derivative(j)
        denom = np.prod([factorial(a) for a in powers])
        return float(poly(np.asarray(center, dtype=float))) / denom

    def __repr__(self) -> str:
        return f"Polynomial(nvars={self.nvars}, terms={len(self.coefficients)}, degree={self.degree})"


def _collect(exponents: np.ndarray, coefficients: np.ndarray):
    """Merge duplicate exponent rows and drop exact zeros."""
    if exponents.shape[0] == 0:
        return exponents, coefficients
    unique, inverse = np.unique(exponents, axis=0, return_inverse=True)
    summed = np.zeros(unique.shape[0])
    np.add.at(summed, np.ravel(inverse), coefficients)
    keep = summed != 0.0
    return unique[keep], summed[keep]


def check_degree(poly: Polynomial, cap: int = MAX_DEGREE) -> Polynomial:
    if poly.degree > cap:
        raise ValidationError(f"Polynomial degree {poly.degree} exceeds the cap {cap}")
    return poly
