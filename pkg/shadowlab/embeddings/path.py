"""One-parameter families of embeddings: analytic paths phi_t and rescaled maps phi_{r,x}."""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import scipy.linalg as la

from shadowlab.core.symplectic import omega_matrix, validate_symplectic
from shadowlab.embeddings.composition import EmbeddingComposition
from shadowlab.embeddings.polynomials import Polynomial
from shadowlab.embeddings.primitives import PrimitiveKind, PrimitiveMap
from shadowlab.errors import ValidationError

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class PathFactor:
    """A primitive whose data is polynomial (or exponential-polynomial) in t.

    linear:      L0 expm(sum_i t^i A_i) with Hamiltonian generators A_i
    stretch:     per coordinate pair diag(1 + s_i t, 1 / (1 + s_i t))
    shear_*:     potential sum_j t^j g_j
    translation: vector sum_j t^j v_j
    """

    kind: str
    dim: int
    matrix: Optional[np.ndarray] = None
    generators: Sequence[np.ndarray] = ()
    rates: Optional[np.ndarray] = None
    potentials: Sequence[Polynomial] = ()
    vectors: Sequence[np.ndarray] = ()

    def __post_init__(self):
        if self.kind == "linear":
            L0 = validate_symplectic(self.matrix if self.matrix is not None else np.eye(self.dim))
            object.__setattr__(self, "matrix", L0)
            omega = omega_matrix(self.dim // 2)
            generators = tuple(np.asarray(A, dtype=float) for A in self.generators)
            for i, A in enumerate(generators, start=1):
                if la.norm(A.T @ omega + omega @ A) > 1e-10 * max(1.0, la.norm(A)):
                    raise ValidationError(f"Generator A_{i} is not Hamiltonian (A^T Omega + Omega A != 0)")
            object.__setattr__(self, "generators", generators)
        elif self.kind == "stretch":
            rates = np.asarray(self.rates, dtype=float)
            if rates.shape != (self.dim // 2,):
                raise ValidationError(f"Stretch needs {self.dim // 2} rates, got {rates.shape}")
            object.__setattr__(self, "rates", rates)
        elif self.kind in (PrimitiveKind.SHEAR_POSITIONS.value, PrimitiveKind.SHEAR_MOMENTA.value):
            if not self.potentials:
                raise ValidationError(f"{self.kind} path factor needs coefficient potentials")
            object.__setattr__(self, "potentials", tuple(self.potentials))
        elif self.kind == "translation":
            vectors = tuple(np.asarray(v, dtype=float) for v in self.vectors)
            if not vectors:
                raise ValidationError("translation path factor needs coefficient vectors")
            object.__setattr__(self, "vectors", vectors)
        else:
            raise ValidationError(f"Unknown path factor kind: {self.kind!r}")

    @property
    def t_degree(self) -> int:
        if self.kind == "linear":
            return len(self.generators)
        if self.kind == "stretch":
            return 1
        if self.kind == "translation":
            return len(self.vectors) - 1
        return len(self.potentials) - 1

    def at(self, t: float) -> PrimitiveMap:
        if self.kind == "linear":
            if not self.generators:
                return PrimitiveMap.linear(self.matrix)
            exponent = sum(t ** i * A for i, A in enumerate(self.generators, start=1))
            return PrimitiveMap.linear(self.matrix @ la.expm(exponent))
        if self.kind == "stretch":
            scales = 1.0 + self.rates * t
            if np.any(scales <= 0):
                raise ValidationError(f"Stretch factor degenerates at t = {t}")
            diagonal = np.ravel(np.column_stack([scales, 1.0 / scales]))
            return PrimitiveMap.linear(np.diag(diagonal))
        if self.kind == "translation":
            return PrimitiveMap.translation(sum(t ** j * v for j, v in enumerate(self.vectors)))
        potential = self.potentials[0].scaled(1.0)
        for j, g in enumerate(self.potentials[1:], start=1):
            potential = potential + g.scaled(t ** j)
        return PrimitiveMap(PrimitiveKind(self.kind), self.dim, potential=potential)

    @classmethod
    def from_dict(cls, data: Dict[str, Any], dim: int) -> "PathFactor":
        kind = data.get("kind")
        if kind == "linear":
            return cls(
                kind,
                dim,
                matrix=np.array(data.get("matrix", np.eye(dim)), dtype=float),
                generators=[np.array(A, dtype=float) for A in data.get("generators", [])],
            )
        if kind == "stretch":
            return cls(kind, dim, rates=np.array(data["rates"], dtype=float))
        if kind == "translation":
            return cls(kind, dim, vectors=[np.array(v, dtype=float) for v in data["coefficients"]])
        if kind in (PrimitiveKind.SHEAR_POSITIONS.value, PrimitiveKind.SHEAR_MOMENTA.value):
            potentials = [Polynomial.from_dict(p, dim // 2) for p in data["coefficients"]]
            return cls(kind, dim, potentials=potentials)
        raise ValidationError(f"Unknown path factor kind: {kind!r}")

    def to_dict(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {"kind": self.kind}
        if self.kind == "linear":
            out["matrix"] = self.matrix.tolist()
            out["generators"] = [A.tolist() for A in self.generators]
        elif self.kind == "stretch":
            out["rates"] = self.rates.tolist()
        elif self.kind == "translation":
            out["coefficients"] = [v.tolist() for v in self.vectors]
        else:
            out["coefficients"] = [p.to_dict() for p in self.potentials]
        return out


@dataclass(frozen=True, eq=False)
class AnalyticPath:
    """t -> phi_t on [0, 1], linear at t = 0."""

    factors: Sequence[PathFactor]
    domain_radius: float = 1.0

    def __post_init__(self):
        factors = tuple(self.factors)
        if not factors:
            raise ValidationError("An analytic path needs at least one factor")
        object.__setattr__(self, "factors", factors)
        if not self.at(0.0).is_linear:
            raise ValidationError("Analytic path must be linear at t = 0")

    @property
    def dim(self) -> int:
        return self.factors[0].dim

    def at(self, t: float) -> EmbeddingComposition:
        return EmbeddingComposition([f.at(t) for f in self.factors], domain_radius=self.domain_radius)

    def linear_at_zero(self) -> np.ndarray:
        return self.at(0.0).linear_matrix()

    @classmethod
    def from_dict(cls, data: Dict[str, Any], dim: int) -> "AnalyticPath":
        factors = [PathFactor.from_dict(item, dim) for item in data.get("factors", [])]
        return cls(factors, domain_radius=float(data.get("domain_radius", 1.0)))

    def to_dict(self) -> Dict[str, Any]:
        return {"factors": [f.to_dict() for f in self.factors], "domain_radius": self.domain_radius}

    @classmethod
    def from_composition(cls, phi: EmbeddingComposition) -> "AnalyticPath":
        """Homotopy t -> phi with every shear potential and translation scaled by t."""
        factors: List[PathFactor] = []
        for f in phi.factors:
            if f.kind is PrimitiveKind.LINEAR:
                factors.append(PathFactor("linear", f.dim, matrix=f.matrix))
            elif f.kind is PrimitiveKind.TRANSLATION:
                factors.append(PathFactor("translation", f.dim, vectors=[np.zeros(f.dim), f.vector]))
            else:
                zero = Polynomial.zero(f.dim // 2)
                factors.append(PathFactor(f.kind.value, f.dim, potentials=[zero, f.potential]))
        radius = phi.domain_radius if np.isfinite(phi.domain_radius) else 1.0
        return cls(factors, domain_radius=radius)


def path_at(path: AnalyticPath, t: float) -> EmbeddingComposition:
    """phi_t; at t = 0 the linear factors are collapsed into a single matrix."""
    if not 0.0 <= t <= 1.0:
        raise ValidationError(f"Path parameter t = {t} outside [0, 1]")
    if t == 0.0:
        return EmbeddingComposition.from_matrix(path.linear_at_zero())
    return path.at(t)


@dataclass(frozen=True, eq=False)
class RescaledFamily:
    """r -> phi_{r,x}(y) = (phi(x + r y) - phi(x)) / r, with phi_{0,x} = Dphi(x)."""

    source: EmbeddingComposition
    center: np.ndarray

    def __post_init__(self):
        center = np.asarray(self.center, dtype=float)
        if center.shape != (self.source.dim,):
            raise ValidationError(f"Center must have length {self.source.dim}")
        object.__setattr__(self, "center", center)
        if self.defined_up_to <= 0:
            raise ValidationError(f"Center |x| = {la.norm(center):.4g} is outside the domain")

    @property
    def dim(self) -> int:
        return self.source.dim

    @property
    def defined_up_to(self) -> float:
        """R(x) = domain_radius - |x|."""
        return float(self.source.domain_radius - la.norm(self.center))

    def at(self, r: float) -> EmbeddingComposition:
        if r < 0:
            raise ValidationError(f"Radius must be non-negative, got {r}")
        if r >= self.defined_up_to:
            raise ValidationError(f"r = {r:.4g} reaches R(x) = {self.defined_up_to:.4g}")
        bases = self.source.chain(self.center[None, :])[:-1]
        factors = [f.recentered(base[0], r) for f, base in zip(self.source.factors, bases)]
        radius = self.defined_up_to / r if r > 0 else np.inf
        return EmbeddingComposition(factors, domain_radius=radius)

    def linear_at_zero(self) -> np.ndarray:
        return self.source.jacobian(self.center)


def rescaled_family(phi: EmbeddingComposition, x, r: float) -> EmbeddingComposition:
    """phi_{r,x} realized by exact coefficient rescaling of every factor."""
    return RescaledFamily(phi, np.asarray(x, dtype=float)).at(r)
