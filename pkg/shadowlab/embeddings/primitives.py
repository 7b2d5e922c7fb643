"""Exactly-symplectic primitive maps with closed-form Jacobians.

Every method works on a batch of points X with shape (N, 2n), interleaved coordinates.
Positions are X[:, 0::2], momenta X[:, 1::2].
"""

from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Any, Dict, Optional

import numpy as np
import scipy.linalg as la

from shadowlab.core.symplectic import symplectic_defect, validate_symplectic
from shadowlab.embeddings.polynomials import Polynomial, check_degree
from shadowlab.errors import ValidationError


class PrimitiveKind(Enum):
    """Kinds of primitive factors."""

    LINEAR = "linear"
    SHEAR_POSITIONS = "shear_positions"
    SHEAR_MOMENTA = "shear_momenta"
    TRANSLATION = "translation"


@dataclass(frozen=True, eq=False)
class PrimitiveMap:
    """One factor of an embedding.

    shear_positions maps (x, y) -> (x, y + grad g(x)); shear_momenta maps
    (x, y) -> (x + grad h(y), y); linear applies a symplectic matrix; translation adds a vector.
    """

    kind: PrimitiveKind
    dim: int
    matrix: Optional[np.ndarray] = None
    potential: Optional[Polynomial] = None
    vector: Optional[np.ndarray] = None
    validate: bool = field(default=True, compare=False)

    def __post_init__(self):
        if self.dim % 2 != 0 or self.dim < 4:
            raise ValidationError(f"Phase space dimension must be even and >= 4, got {self.dim}")
        if self.kind is PrimitiveKind.LINEAR:
            if self.matrix is None:
                raise ValidationError("Linear factor needs a matrix")
            matrix = np.asarray(self.matrix, dtype=float)
            if self.validate:
                matrix = validate_symplectic(matrix)
            if matrix.shape != (self.dim, self.dim):
                raise ValidationError(f"Linear factor must be {self.dim}x{self.dim}, got {matrix.shape}")
            object.__setattr__(self, "matrix", matrix)
        elif self.kind in (PrimitiveKind.SHEAR_POSITIONS, PrimitiveKind.SHEAR_MOMENTA):
            if self.potential is None:
                raise ValidationError(f"{self.kind.value} factor needs a potential")
            if self.potential.nvars != self.dim // 2:
                raise ValidationError(
                    f"Shear potential has {self.potential.nvars} variables, expected {self.dim // 2}"
                )
            check_degree(self.potential)
        elif self.kind is PrimitiveKind.TRANSLATION:
            vector = np.asarray(self.vector, dtype=float)
            if vector.shape != (self.dim,):
                raise ValidationError(f"Translation vector must have length {self.dim}")
            object.__setattr__(self, "vector", vector)

    # Constructors

    @classmethod
    def linear(cls, matrix, validate: bool = True) -> "PrimitiveMap":
        matrix = np.asarray(matrix, dtype=float)
        return cls(PrimitiveKind.LINEAR, matrix.shape[0], matrix=matrix, validate=validate)

    @classmethod
    def shear_positions(cls, potential: Polynomial) -> "PrimitiveMap":
        return cls(PrimitiveKind.SHEAR_POSITIONS, 2 * potential.nvars, potential=potential)

    @classmethod
    def shear_momenta(cls, potential: Polynomial) -> "PrimitiveMap":
        return cls(PrimitiveKind.SHEAR_MOMENTA, 2 * potential.nvars, potential=potential)

    @classmethod
    def translation(cls, vector) -> "PrimitiveMap":
        vector = np.asarray(vector, dtype=float)
        return cls(PrimitiveKind.TRANSLATION, vector.shape[0], vector=vector)

    @classmethod
    def identity(cls, dim: int) -> "PrimitiveMap":
        return cls.linear(np.eye(dim))

    @classmethod
    def from_dict(cls, data: Dict[str, Any], dim: int) -> "PrimitiveMap":
        try:
            kind = PrimitiveKind(data["kind"])
        except (KeyError, ValueError) as e:
            raise ValidationError(f"Unknown primitive factor: {data.get('kind')!r}") from e
        if kind is PrimitiveKind.LINEAR:
            return cls.linear(np.array(data["matrix"], dtype=float))
        if kind is PrimitiveKind.TRANSLATION:
            return cls.translation(np.array(data["vector"], dtype=float))
        potential = Polynomial.from_dict(data["potential"], dim // 2)
        return cls(kind, dim, potential=potential)

    def to_dict(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {"kind": self.kind.value}
        if self.kind is PrimitiveKind.LINEAR:
            out["matrix"] = self.matrix.tolist()
        elif self.kind is PrimitiveKind.TRANSLATION:
            out["vector"] = self.vector.tolist()
        else:
            out["potential"] = self.potential.to_dict()
        return out

    @property
    def is_linear(self) -> bool:
        """True when the factor is a linear map (no translation part)."""
        if self.kind is PrimitiveKind.LINEAR:
            return True
        if self.kind is PrimitiveKind.TRANSLATION:
            return not np.any(self.vector)
        orders = self.potential.exponents.sum(axis=1)
        return bool(np.all(orders == 2)) or self.potential.is_zero

    @property
    def is_affine_linear(self) -> bool:
        if self.kind in (PrimitiveKind.LINEAR, PrimitiveKind.TRANSLATION):
            return True
        orders = self.potential.exponents.sum(axis=1)
        return bool(np.all(orders <= 2))

    @cached_property
    def _lu(self):
        return la.lu_factor(self.matrix)

    # Batch calculus

    def apply(self, X: np.ndarray) -> np.ndarray:
        if self.kind is PrimitiveKind.LINEAR:
            return X @ self.matrix.T
        if self.kind is PrimitiveKind.TRANSLATION:
            return X + self.vector
        out = X.copy()
        if self.kind is PrimitiveKind.SHEAR_POSITIONS:
            out[:, 1::2] += self.potential.gradient(X[:, 0::2])
        else:
            out[:, 0::2] += self.potential.gradient(X[:, 1::2])
        return out

    def jacobian(self, X: np.ndarray) -> np.ndarray:
        N = X.shape[0]
        if self.kind is PrimitiveKind.LINEAR:
            return np.broadcast_to(self.matrix, (N, self.dim, self.dim)).copy()
        out = np.broadcast_to(np.eye(self.dim), (N, self.dim, self.dim)).copy()
        if self.kind is PrimitiveKind.SHEAR_POSITIONS:
            out[:, 1::2, 0::2] += self.potential.hessian(X[:, 0::2])
        elif self.kind is PrimitiveKind.SHEAR_MOMENTA:
            out[:, 0::2, 1::2] += self.potential.hessian(X[:, 1::2])
        return out

    def adjoint_apply(self, X: np.ndarray, W: np.ndarray) -> np.ndarray:
        """Df(X)^T W, row-wise."""
        if self.kind is PrimitiveKind.LINEAR:
            return W @ self.matrix
        if self.kind is PrimitiveKind.TRANSLATION:
            return W.copy()
        out = W.copy()
        if self.kind is PrimitiveKind.SHEAR_POSITIONS:
            H = self.potential.hessian(X[:, 0::2])
            out[:, 0::2] += np.einsum("nij,nj->ni", H, W[:, 1::2])
        else:
            H = self.potential.hessian(X[:, 1::2])
            out[:, 1::2] += np.einsum("nij,nj->ni", H, W[:, 0::2])
        return out

    def adjoint_inverse(self, X: np.ndarray, W: np.ndarray) -> np.ndarray:
        """Df(X)^{-T} W by triangular block elimination, never forming an inverse."""
        if self.kind is PrimitiveKind.LINEAR:
            return la.lu_solve(self._lu, W.T, trans=1).T
        if self.kind is PrimitiveKind.TRANSLATION:
            return W.copy()
        out = W.copy()
        if self.kind is PrimitiveKind.SHEAR_POSITIONS:
            # (a, b) -> (a - H b, b)
            H = self.potential.hessian(X[:, 0::2])
            out[:, 0::2] -= np.einsum("nij,nj->ni", H, W[:, 1::2])
        else:
            # (a, b) -> (a, b - H a)
            H = self.potential.hessian(X[:, 1::2])
            out[:, 1::2] -= np.einsum("nij,nj->ni", H, W[:, 0::2])
        return out

    def hessian_contract(self, X: np.ndarray, Ybar: np.ndarray) -> np.ndarray:
        """Hessian in X of the scalar Ybar . f(X), with Ybar held fixed."""
        N = X.shape[0]
        out = np.zeros((N, self.dim, self.dim))
        if self.kind is PrimitiveKind.SHEAR_POSITIONS:
            out[:, 0::2, 0::2] = self.potential.third_contract(X[:, 0::2], Ybar[:, 1::2])
        elif self.kind is PrimitiveKind.SHEAR_MOMENTA:
            out[:, 1::2, 1::2] = self.potential.third_contract(X[:, 1::2], Ybar[:, 0::2])
        return out

    def recentered(self, base: np.ndarray, r: float) -> "PrimitiveMap":
        """The conjugate y -> (f(base + r y) - f(base)) / r, exact in r including r = 0."""
        if self.kind is PrimitiveKind.LINEAR:
            return self
        if self.kind is PrimitiveKind.TRANSLATION:
            return PrimitiveMap.identity(self.dim)
        center = base[0::2] if self.kind is PrimitiveKind.SHEAR_POSITIONS else base[1::2]
        potential = self.potential.taylor_at(center).rescaled_remainder(r, drop_below=2)
        return PrimitiveMap(self.kind, self.dim, potential=potential)

    def defect(self) -> float:
        if self.kind is PrimitiveKind.LINEAR:
            return symplectic_defect(self.matrix)
        return 0.0
