"""Embeddings as ordered compositions of primitive factors."""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import scipy.linalg as la

from shadowlab.core.symplectic import omega_matrix
from shadowlab.embeddings.primitives import PrimitiveKind, PrimitiveMap
from shadowlab.errors import ValidationError

logger = logging.getLogger(__name__)

MAX_FACTORS = 8
DOMAIN_SLACK = 1e-9


@dataclass(frozen=True, eq=False)
class EmbeddingComposition:
    """phi = f_m o ... o f_1 restricted to the ball of radius `domain_radius`."""

    factors: Sequence[PrimitiveMap]
    domain_radius: float = np.inf
    max_factors: int = field(default=MAX_FACTORS, compare=False)

    def __post_init__(self):
        factors = tuple(self.factors)
        if not factors:
            raise ValidationError("An embedding needs at least one factor")
        if len(factors) > self.max_factors:
            raise ValidationError(f"{len(factors)} factors exceed the cap of {self.max_factors}")
        dims = {f.dim for f in factors}
        if len(dims) != 1:
            raise ValidationError(f"Factors act on different dimensions: {sorted(dims)}")
        if not self.domain_radius > 0:
            raise ValidationError(f"Domain radius must be positive, got {self.domain_radius}")
        object.__setattr__(self, "factors", factors)

    @property
    def dim(self) -> int:
        return self.factors[0].dim

    @property
    def is_linear(self) -> bool:
        return all(f.is_linear for f in self.factors)

    @property
    def is_affine(self) -> bool:
        """Constant Jacobian: every factor is linear up to a translation."""
        return all(f.is_affine_linear for f in self.factors)

    @classmethod
    def identity(cls, dim: int) -> "EmbeddingComposition":
        return cls([PrimitiveMap.identity(dim)])

    @classmethod
    def from_matrix(cls, matrix, validate: bool = True) -> "EmbeddingComposition":
        return cls([PrimitiveMap.linear(matrix, validate=validate)])

    @classmethod
    def from_dict(cls, data: Dict[str, Any], dim: int) -> "EmbeddingComposition":
        """Build from a scenario section; the domain radius is certified, or checked against the certified one."""
        phi = cls([PrimitiveMap.from_dict(item, dim) for item in data.get("factors", [])])
        certified = certify_domain_radius(phi)
        radius = data.get("domain_radius")
        if radius is None:
            return phi.with_domain_radius(certified)
        if float(radius) > certified:
            raise ValidationError(
                f"Declared domain radius {float(radius):.6g} exceeds the certified radius {certified:.6g}"
            )
        return phi.with_domain_radius(float(radius))

    def to_dict(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {"factors": [f.to_dict() for f in self.factors]}
        if np.isfinite(self.domain_radius):
            out["domain_radius"] = float(self.domain_radius)
        return out

    def with_domain_radius(self, radius: float) -> "EmbeddingComposition":
        return EmbeddingComposition(self.factors, domain_radius=radius)

    def _check_domain(self, X: np.ndarray):
        if not np.isfinite(self.domain_radius):
            return
        norms = np.linalg.norm(X, axis=1)
        worst = int(np.argmax(norms))
        if norms[worst] > self.domain_radius * (1.0 + DOMAIN_SLACK) + DOMAIN_SLACK:
            raise ValidationError(
                f"Point {worst} with |x| = {norms[worst]:.6g} lies outside the certified domain "
                f"of radius {self.domain_radius:.6g}"
            )

    @staticmethod
    def _batch(x) -> np.ndarray:
        return np.atleast_2d(np.asarray(x, dtype=float))

    def chain(self, X: np.ndarray) -> List[np.ndarray]:
        """Base points x_0 = X, x_i = f_i(x_{i-1})."""
        points = [X]
        for f in self.factors:
            points.append(f.apply(points[-1]))
        return points

    def eval_batch(self, X: np.ndarray, check: bool = True) -> np.ndarray:
        if check:
            self._check_domain(X)
        return self.chain(X)[-1]

    def jacobian_batch(self, X: np.ndarray, check: bool = True) -> np.ndarray:
        if check:
            self._check_domain(X)
        D = None
        current = X
        for f in self.factors:
            Df = f.jacobian(current)
            D = Df if D is None else Df @ D
            current = f.apply(current)
        return D

    def adjoint_inverse_batch(self, X: np.ndarray, W: np.ndarray, check: bool = True) -> np.ndarray:
        """(Dphi(X)^T)^{-1} W = Df_m^{-T} ... Df_1^{-T} W, applied factor by factor."""
        if check:
            self._check_domain(X)
        out = W
        for f, base in zip(self.factors, self.chain(X)[:-1]):
            out = f.adjoint_inverse(base, out)
        return out

    def pairing_hessian_batch(self, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        """Hessian in x of Y . phi(x), by the second-order chain rule and an adjoint sweep."""
        bases = self.chain(X)[:-1]
        partial = []
        D = np.broadcast_to(np.eye(self.dim), (X.shape[0], self.dim, self.dim)).copy()
        for f, base in zip(self.factors, bases):
            partial.append(D)
            D = f.jacobian(base) @ D
        H = np.zeros((X.shape[0], self.dim, self.dim))
        ybar = Y
        for f, base, D_before in zip(reversed(self.factors), reversed(bases), reversed(partial)):
            if f.kind in (PrimitiveKind.SHEAR_POSITIONS, PrimitiveKind.SHEAR_MOMENTA):
                inner = f.hessian_contract(base, ybar)
                H += np.swapaxes(D_before, 1, 2) @ inner @ D_before
            ybar = f.adjoint_apply(base, ybar)
        return H

    # Single-point wrappers

    def eval(self, x) -> np.ndarray:
        X = self._batch(x)
        out = self.eval_batch(X)
        return out[0] if np.ndim(x) == 1 else out

    def jacobian(self, x) -> np.ndarray:
        X = self._batch(x)
        out = self.jacobian_batch(X)
        return out[0] if np.ndim(x) == 1 else out

    def adjoint_inverse_apply(self, x, w) -> np.ndarray:
        X, W = self._batch(x), self._batch(w)
        out = self.adjoint_inverse_batch(X, W)
        return out[0] if np.ndim(x) == 1 else out

    def linear_matrix(self) -> np.ndarray:
        """The matrix of a linear composition."""
        if not self.is_linear:
            raise ValidationError("Composition is not linear")
        return self.jacobian_batch(np.zeros((1, self.dim)), check=False)[0]

    def symplecticity_residual(
        self, sample_count: int = 64, rng: Optional[np.random.Generator] = None
    ) -> float:
        """max ||Dphi^T Omega Dphi - Omega|| over random points of the domain."""
        rng = rng if rng is not None else np.random.Generator(np.random.Philox(0))
        radius = min(self.domain_radius, 1.0)
        X = sample_ball(self.dim, sample_count, radius, rng)
        D = self.jacobian_batch(X, check=False)
        omega = omega_matrix(self.dim // 2)
        residual = np.swapaxes(D, 1, 2) @ omega @ D - omega
        return float(np.max(np.linalg.norm(residual, ord=2, axis=(1, 2))))


def sample_ball(dim: int, count: int, radius: float, rng: np.random.Generator) -> np.ndarray:
    """Uniform samples in the closed ball of the given radius."""
    directions = rng.normal(size=(count, dim))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    radii = radius * rng.uniform(size=count) ** (1.0 / dim)
    return directions * radii[:, None]


def certify_domain_radius(
    phi: EmbeddingComposition,
    rng: Optional[np.random.Generator] = None,
    sample_count: int = 512,
    r_max: float = 4.0,
    shrink: float = 0.85,
) -> float:
    """Largest tested radius R with ||Dphi(x) - Dphi(0)|| <= sigma_min(Dphi(0)) / 2 on B_R samples."""
    if phi.is_affine:
        return np.inf
    rng = rng if rng is not None else np.random.Generator(np.random.Philox(0))
    D0 = phi.jacobian_batch(np.zeros((1, phi.dim)), check=False)[0]
    bound = 0.5 * la.svdvals(D0).min()
    radius = r_max
    while radius > 1e-6:
        X = sample_ball(phi.dim, sample_count, radius, rng)
        shell = X / np.linalg.norm(X, axis=1, keepdims=True) * radius
        D = phi.jacobian_batch(np.vstack([X, shell]), check=False)
        spread = np.max(np.linalg.norm(D - D0, ord=2, axis=(1, 2)))
        if spread <= bound:
            logger.debug(f"Certified domain radius {radius:.4g} (spread {spread:.3e} <= {bound:.3e})")
            return radius
        radius *= shrink
    raise ValidationError("Could not certify any domain radius for the embedding")
