"""Linear symplectic algebra on R^{2n} with interleaved coordinates (x1, y1, ..., xn, yn).

The standard form is omega(u, v) = u^T Omega v with Omega = blockdiag([[0, 1], [-1, 0]]),
and the complex structure J(x, y) = (-y, x) satisfies omega(u, v) = <Ju, v>.
Volumes are integrals of omega^k (not omega^k / k!), so the unit 2k-ball has volume pi^k.
"""

import logging
from dataclasses import dataclass, field
from math import factorial, pi
from typing import Optional, Sequence

import numpy as np
import scipy.linalg as la

from shadowlab.config import TOLERANCES
from shadowlab.errors import ValidationError

logger = logging.getLogger(__name__)


def omega_matrix(n: int) -> np.ndarray:
    """Matrix of the standard symplectic form on R^{2n}."""
    return np.kron(np.eye(n), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def complex_structure(n: int) -> np.ndarray:
    """Matrix of J, with J^2 = -I and Omega = J^T."""
    return np.kron(np.eye(n), np.array([[0.0, -1.0], [1.0, 0.0]]))


def _as_vector(u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if u.ndim != 1 or u.size % 2 != 0:
        raise ValidationError(f"Expected a vector of even length, got shape {u.shape}")
    return u


def omega_eval(u, v) -> float:
    """omega_0(u, v) = sum_i (u_{x_i} v_{y_i} - u_{y_i} v_{x_i})."""
    u = _as_vector(u)
    v = _as_vector(v)
    if u.shape != v.shape:
        raise ValidationError(f"Dimension mismatch: {u.size} vs {v.size}")
    return float(u[0::2] @ v[1::2] - u[1::2] @ v[0::2])


def pfaffian(A: np.ndarray) -> float:
    """Pfaffian of a real skew-symmetric matrix via the real Schur form.

    For a skew matrix the Schur form T is block diagonal with 2x2 blocks, so
    Pf(A) = det(Z) * prod(T[2i, 2i+1]).
    """
    A = np.asarray(A, dtype=float)
    if A.shape[0] != A.shape[1]:
        raise ValidationError(f"Pfaffian needs a square matrix, got {A.shape}")
    size = A.shape[0]
    if size == 0:
        return 1.0
    if size % 2 == 1:
        return 0.0
    if size == 2:
        return float(A[0, 1])
    if size == 4:
        return float(A[0, 1] * A[2, 3] - A[0, 2] * A[1, 3] + A[0, 3] * A[1, 2])
    A = 0.5 * (A - A.T)
    t, z = la.schur(A, output="real")
    superdiag = np.diag(t, 1)
    return float(np.prod(superdiag[::2]) * la.det(z))


def pfaffian_batch(A: np.ndarray) -> np.ndarray:
    """Pfaffians of a stack of skew matrices with shape (..., m, m)."""
    size = A.shape[-1]
    if size == 0:
        return np.ones(A.shape[:-2])
    if size == 2:
        return A[..., 0, 1]
    if size == 4:
        return (
            A[..., 0, 1] * A[..., 2, 3]
            - A[..., 0, 2] * A[..., 1, 3]
            + A[..., 0, 3] * A[..., 1, 2]
        )
    flat = A.reshape(-1, size, size)
    return np.array([pfaffian(block) for block in flat]).reshape(A.shape[:-2])


def omega_gram(frame: np.ndarray) -> np.ndarray:
    """Skew Gram matrix [omega(u_i, u_j)] for frame columns (or a stack of frames)."""
    n = frame.shape[-2] // 2
    return np.swapaxes(frame, -1, -2) @ omega_matrix(n) @ frame


def omega_power(*vectors) -> float:
    """omega_0^k(u_1, ..., u_{2k}) = k! * Pf([omega(u_i, u_j)])."""
    if len(vectors) == 1 and np.ndim(vectors[0]) == 2:
        frame = np.asarray(vectors[0], dtype=float)
    else:
        frame = np.column_stack([_as_vector(u) for u in vectors])
    count = frame.shape[1]
    if count % 2 != 0:
        raise ValidationError(f"omega^k needs an even number of vectors, got {count}")
    if count > frame.shape[0]:
        raise ValidationError(f"{count} vectors exceed the dimension {frame.shape[0]}")
    k = count // 2
    return factorial(k) * pfaffian(omega_gram(frame))


def gram_volume(frame: np.ndarray) -> float:
    """Euclidean volume |u_1 ^ ... ^ u_m| of the parallelotope spanned by the columns."""
    gram = frame.T @ frame
    return float(np.sqrt(max(la.det(gram), 0.0)))


def wirtinger_ratio(frame: np.ndarray) -> float:
    """|omega^k / k!| over the Gram volume; at most 1 for every frame."""
    frame = np.asarray(frame, dtype=float)
    k = frame.shape[1] // 2
    volume = gram_volume(frame)
    if volume == 0.0:
        return 0.0
    return abs(omega_power(frame)) / factorial(k) / volume


def primitive_form(points: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    """Evaluate lambda_0 ^ omega_0^{k-1} on 2k-1 tangent vectors at each point.

    points has shape (N, 2n); vectors has shape (N, 2n, 2k-1). lambda_0 = sum x_i dy_i,
    so d(lambda_0 ^ omega^{k-1}) = omega^k.
    """
    count = vectors.shape[-1]
    k = (count + 1) // 2
    # lambda_0 at p applied to v
    lam = np.einsum("ni,nij->nj", points[:, 0::2], vectors[:, 1::2, :])
    if k == 1:
        return lam[:, 0]
    gram = omega_gram(vectors)
    scale = factorial(k - 1)
    total = np.zeros(points.shape[0])
    for i in range(count):
        keep = [j for j in range(count) if j != i]
        minor = gram[:, keep][:, :, keep]
        total += (-1) ** i * lam[:, i] * pfaffian_batch(minor)
    return scale * total


def symplectic_defect(L: np.ndarray) -> float:
    """Relative defect ||L^T Omega L - Omega|| / max(1, ||L||^2)."""
    L = np.asarray(L, dtype=float)
    omega = omega_matrix(L.shape[0] // 2)
    norm = max(1.0, la.norm(L, 2) ** 2)
    return float(la.norm(L.T @ omega @ L - omega, 2) / norm)


def validate_symplectic(L, tol: Optional[float] = None) -> np.ndarray:
    """Return L as an array, rejecting non-square or non-symplectic input."""
    L = np.asarray(L, dtype=float)
    if L.ndim != 2 or L.shape[0] != L.shape[1] or L.shape[0] % 2 != 0:
        raise ValidationError(f"Symplectic matrix must be 2n x 2n, got {L.shape}")
    if L.shape[0] < 4:
        raise ValidationError("Phase space dimension must be at least 4")
    tol = TOLERANCES["symp"] if tol is None else tol
    defect = symplectic_defect(L)
    if defect > tol:
        raise ValidationError(f"Matrix is not symplectic: defect {defect:.3e} > {tol:.1e}")
    return L


def orthonormal_basis(basis: np.ndarray) -> np.ndarray:
    """QR-orthonormalized columns with a positive R diagonal (deterministic signs)."""
    q, r = la.qr(basis, mode="economic")
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return q * signs


@dataclass(frozen=True, eq=False)
class SymplecticSubspace:
    """Subspace V spanned by the columns of `basis` on which omega_0 is nondegenerate."""

    basis: np.ndarray
    tol: float = field(default=TOLERANCES["nd"], compare=False)

    def __post_init__(self):
        basis = np.asarray(self.basis, dtype=float)
        if basis.ndim == 1:
            basis = basis.reshape(-1, 1)
        if basis.ndim != 2 or basis.shape[0] % 2 != 0:
            raise ValidationError(f"Subspace basis must be 2n x m, got {basis.shape}")
        if basis.shape[1] % 2 != 0:
            raise ValidationError(f"Symplectic subspace needs even dimension, got {basis.shape[1]}")
        if basis.shape[1] > 0:
            if np.linalg.matrix_rank(basis) < basis.shape[1]:
                raise ValidationError("Subspace basis is rank deficient")
            det = la.det(omega_gram(orthonormal_basis(basis)))
            if abs(det) <= self.tol:
                raise ValidationError(
                    f"Restriction of omega to V is degenerate: |det| = {abs(det):.3e}"
                )
        object.__setattr__(self, "basis", basis)

    @property
    def ambient_dim(self) -> int:
        return self.basis.shape[0]

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @property
    def k(self) -> int:
        return self.dim // 2

    def orthonormal(self) -> np.ndarray:
        return orthonormal_basis(self.basis)

    def gram(self) -> np.ndarray:
        """Skew Gram matrix Omega_V on the stored basis."""
        return omega_gram(self.basis)

    @classmethod
    def coordinate(cls, n: int, pairs: Sequence[int]) -> "SymplecticSubspace":
        """Span of the coordinate planes (x_i, y_i) for the given 0-based pair indices."""
        eye = np.eye(2 * n)
        columns = []
        for i in pairs:
            columns.extend([eye[:, 2 * i], eye[:, 2 * i + 1]])
        return cls(np.column_stack(columns))


def symplectic_complement(V: SymplecticSubspace) -> SymplecticSubspace:
    """V^omega = {w : omega(v, w) = 0 for all v in V}."""
    if V.dim == 0:
        return SymplecticSubspace(np.eye(V.ambient_dim))
    omega = omega_matrix(V.ambient_dim // 2)
    complement = la.null_space(V.basis.T @ omega)
    if complement.shape[1] == 0:
        complement = np.zeros((V.ambient_dim, 0))
    return SymplecticSubspace(complement)


@dataclass(frozen=True, eq=False)
class SymplecticProjector:
    """Projection onto V along V^omega."""

    matrix: np.ndarray
    target: SymplecticSubspace

    def apply(self, z: np.ndarray) -> np.ndarray:
        return np.asarray(z) @ self.matrix.T

    def kernel(self) -> SymplecticSubspace:
        return symplectic_complement(self.target)

    def idempotence_defect(self) -> float:
        return float(la.norm(self.matrix @ self.matrix - self.matrix, 2))

    def is_orthogonal(self, tol: float = 1e-10) -> bool:
        return bool(la.norm(self.matrix - self.matrix.T, 2) <= tol)


def symplectic_projector(V: SymplecticSubspace) -> SymplecticProjector:
    """Assemble P by solving z = v + w with v in V and w in V^omega."""
    W = symplectic_complement(V)
    size = V.ambient_dim
    if V.dim == size:
        return SymplecticProjector(np.eye(size), V)
    stacked = np.hstack([V.basis, W.basis])
    coefficients = la.solve(stacked, np.eye(size))
    P = V.basis @ coefficients[: V.dim]
    logger.debug(f"Assembled projector onto a {V.dim}-dimensional subspace of R^{size}")
    return SymplecticProjector(P, V)


def linear_shadow_volume(L, V: SymplecticSubspace) -> float:
    """Integral of omega^k over P L(B_1), in closed form.

    With B an orthonormal basis of V and M = B^T P L, the shadow is an ellipsoid in
    B-coordinates and the value is pi^k |Pf(Omega_B)| sqrt(det(M M^T)).
    """
    L = validate_symplectic(L)
    if V.ambient_dim != L.shape[0]:
        raise ValidationError(f"Subspace lives in R^{V.ambient_dim}, matrix acts on R^{L.shape[0]}")
    P = symplectic_projector(V).matrix
    B = V.orthonormal()
    M = B.T @ P @ L
    density = abs(pfaffian(omega_gram(B)))
    return float(pi ** V.k * density * np.sqrt(la.det(M @ M.T)))


def j_invariance_defect(L, V: SymplecticSubspace) -> float:
    """||(I - Q) J Q|| for the orthogonal projector Q onto L^{-1} V."""
    L = validate_symplectic(L)
    U = la.orth(la.solve(L, V.basis))
    Q = U @ U.T
    J = complex_structure(L.shape[0] // 2)
    return float(la.norm((np.eye(L.shape[0]) - Q) @ J @ Q, 2))
