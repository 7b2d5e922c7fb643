"""Shadow boundary extraction and continuation.

The shadow boundary preimage S is the set of unit vectors x at which P Dphi(x)
restricted to the tangent space of the sphere fails to be onto V. Writing
y = (Dphi(x)^T)^{-1} x, this happens exactly when y lies in range(P^T) = J V,
so the residual is F(x) = W^T (I - P^T) y with W an orthonormal basis of V^perp.
For J-invariant V the projector is orthogonal and F reduces to (I - P) y.

Charts are graphs over the linear seed U = L^T J V:
    c(z) = sqrt(1 - |a|^2) E_U z + E_perp a(z),  z in S^{2k-1}.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import List, Optional, Tuple, Union

import numpy as np
import scipy.linalg as la
from scipy.spatial import cKDTree

from shadowlab.config import CHART_CONFIG, QUADRATURE_CONFIG, TOLERANCES
from shadowlab.core.symplectic import (
    SymplecticProjector,
    complex_structure,
    orthonormal_basis,
    primitive_form,
)
from shadowlab.embeddings.composition import EmbeddingComposition
from shadowlab.embeddings.path import AnalyticPath, RescaledFamily, path_at
from shadowlab.errors import BeyondLocalRegimeError, ChartDivergenceError, ValidationError
from shadowlab.shadow.quadrature import QuadratureRule

logger = logging.getLogger(__name__)

Family = Union[AnalyticPath, RescaledFamily]


def residual_operator(P: SymplecticProjector) -> np.ndarray:
    """W^T (I - P^T), a (2n-2k) x 2n matrix."""
    size = P.matrix.shape[0]
    W = la.null_space(P.target.basis.T)
    return W.T @ (np.eye(size) - P.matrix.T)


def singular_residual(phi: EmbeddingComposition, P: SymplecticProjector, x) -> np.ndarray:
    """F(x) = W^T (I - P^T) (Dphi(x)^T)^{-1} x for a unit vector x (or a batch)."""
    X = np.atleast_2d(np.asarray(x, dtype=float))
    norms = np.linalg.norm(X, axis=1)
    if np.any(np.abs(norms - 1.0) > 1e-9):
        raise ValidationError("singular_residual expects unit vectors")
    values = phi.adjoint_inverse_batch(X, X) @ residual_operator(P).T
    return values[0] if np.ndim(x) == 1 else values


@dataclass(frozen=True, eq=False)
class ChartFrame:
    """Orthonormal basis of the seed subspace U and of its orthogonal complement."""

    seed: np.ndarray
    normal: np.ndarray

    @classmethod
    def from_linear(cls, L: np.ndarray, P: SymplecticProjector) -> "ChartFrame":
        J = complex_structure(L.shape[0] // 2)
        seed = orthonormal_basis(L.T @ J @ P.target.orthonormal())
        normal = la.null_space(seed.T)
        return cls(seed, normal)


@dataclass(frozen=True, eq=False)
class ShadowBoundaryChart:
    """c: S^{2k-1} -> unit sphere, sampled at the nodes of `rule`."""

    rule: QuadratureRule
    frame: ChartFrame
    embedding: EmbeddingComposition
    offsets: np.ndarray
    points: np.ndarray
    tangents: np.ndarray
    residual_max: float
    t_value: float
    orientation: float
    newton_iterations: int

    @property
    def unit_defect(self) -> float:
        return float(np.max(np.abs(np.linalg.norm(self.points, axis=1) - 1.0)))


def _adjoint_inverse_columns(phi: EmbeddingComposition, X: np.ndarray, M: np.ndarray) -> np.ndarray:
    """Apply (Dphi(X_n)^T)^{-1} to every column of M_n, shape (N, 2n, c)."""
    N, size, cols = M.shape
    flat = np.swapaxes(M, 1, 2).reshape(N * cols, size)
    solved = phi.adjoint_inverse_batch(np.repeat(X, cols, axis=0), flat, check=False)
    return np.swapaxes(solved.reshape(N, cols, size), 1, 2)


def _chart_points(frame: ChartFrame, Z: np.ndarray, A: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    s = np.sqrt(np.clip(1.0 - np.sum(A * A, axis=1), 0.0, None))
    return s[:, None] * (Z @ frame.seed.T) + A @ frame.normal.T, s


def _residual_and_derivative(phi, Pi, frame, Z, A):
    """F(x(z, a)) and dF/da at every node."""
    X, s = _chart_points(frame, Z, A)
    Y = phi.adjoint_inverse_batch(X, X, check=False)
    F = Y @ Pi.T
    H = phi.pairing_hessian_batch(X, Y)
    base = Z @ frame.seed.T
    dXda = frame.normal[None, :, :] - base[:, :, None] * (A / s[:, None])[:, None, :]
    inner = dXda - H @ dXda
    dFda = Pi @ _adjoint_inverse_columns(phi, X, inner)
    return F, dFda, X, s, Y, H, dXda


def _newton_chunk(phi, Pi, frame, Z, A0, offset, tol, max_iter) -> Tuple[np.ndarray, int]:
    A = A0.copy()
    F, dFda, *_ = _residual_and_derivative(phi, Pi, frame, Z, A)
    norms = np.linalg.norm(F, axis=1)
    iterations = 0
    while np.any(norms > tol):
        if iterations >= max_iter:
            worst = int(np.argmax(norms))
            raise ChartDivergenceError(
                f"Newton did not converge at node {offset + worst} (|F| = {norms[worst]:.3e})",
                node_index=offset + worst,
            )
        iterations += 1
        active = np.nonzero(norms > tol)[0]
        step = np.linalg.solve(dFda[active], -F[active][:, :, None])[:, :, 0]
        damping = np.ones(len(active))
        for _ in range(8):
            trial = A[active] + damping[:, None] * step
            inside = np.sum(trial * trial, axis=1) < 1.0
            candidate = np.where(inside[:, None], trial, A[active])
            F_trial, *_ = _residual_and_derivative(phi, Pi, frame, Z[active], candidate)
            worse = (np.linalg.norm(F_trial, axis=1) > norms[active]) | ~inside
            if not np.any(worse):
                break
            damping = np.where(worse, 0.5 * damping, damping)
        trial = A[active] + damping[:, None] * step
        if np.any(np.sum(trial * trial, axis=1) >= 1.0):
            bad = active[int(np.argmax(np.sum(trial * trial, axis=1)))]
            raise ChartDivergenceError(f"Newton left the unit ball at node {offset + bad}", node_index=offset + bad)
        A[active] = trial
        F_new, dFda_new, *_ = _residual_and_derivative(phi, Pi, frame, Z[active], A[active])
        F[active] = F_new
        dFda[active] = dFda_new
        norms[active] = np.linalg.norm(F_new, axis=1)
        logger.debug(f"Newton iteration {iterations}: {int(np.sum(norms > tol))} nodes above {tol:.1e}")
    return A, iterations


def _tangents(phi, P, Pi, frame, Z, A, E) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Chart points, tangent images Dc[E_j] and the pushed frames P Dphi Dc[E_j]."""
    F, dFda, X, s, Y, H, dXda = _residual_and_derivative(phi, Pi, frame, Z, A)
    size = X.shape[1]
    DF = Pi @ _adjoint_inverse_columns(phi, X, np.eye(size)[None, :, :] - H)
    dz = s[:, None, None] * (frame.seed[None, :, :] @ E)
    a_z = -np.linalg.solve(dFda, DF @ dz)
    tangents = dz + dXda @ a_z
    pushed = P.matrix[None, :, :] @ phi.jacobian_batch(X, check=False) @ tangents
    return X, tangents, pushed


def _correct(
    phi: EmbeddingComposition,
    P: SymplecticProjector,
    frame: ChartFrame,
    rule: QuadratureRule,
    A0: np.ndarray,
    workers: int = 1,
):
    tol = TOLERANCES["newton"]
    max_iter = CHART_CONFIG["max_newton_iterations"]
    chunk = QUADRATURE_CONFIG["chunk_size"]
    Pi = residual_operator(P)
    starts = list(range(0, rule.size, chunk))

    def work(start: int):
        sl = slice(start, min(start + chunk, rule.size))
        A, iterations = _newton_chunk(phi, Pi, frame, rule.nodes[sl], A0[sl], start, tol, max_iter)
        X, tangents, pushed = _tangents(phi, P, Pi, frame, rule.nodes[sl], A, rule.frames[sl])
        gram = np.swapaxes(pushed, 1, 2) @ pushed
        dets = np.linalg.det(gram)
        if np.any(dets < TOLERANCES["rank_loss"]):
            worst = start + int(np.argmin(dets))
            raise BeyondLocalRegimeError(
                f"Shadow boundary chart lost rank at node {worst} (Gram det {dets.min():.3e})"
            )
        residual = np.linalg.norm(phi.adjoint_inverse_batch(X, X, check=False) @ Pi.T, axis=1)
        return A, X, tangents, float(residual.max()), iterations

    if workers > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(work, starts))
    else:
        parts = [work(start) for start in starts]

    A = np.concatenate([p[0] for p in parts])
    X = np.concatenate([p[1] for p in parts])
    tangents = np.concatenate([p[2] for p in parts])
    residual_max = max(p[3] for p in parts)
    iterations = max(p[4] for p in parts)
    return A, X, tangents, residual_max, iterations


def pullback_values(chart: ShadowBoundaryChart, P: SymplecticProjector) -> np.ndarray:
    """(G^* alpha)(E_j) at every node, with G = P phi c and alpha = lambda_0 ^ omega^{k-1}."""
    phi = chart.embedding
    chunk = QUADRATURE_CONFIG["chunk_size"]
    values: List[np.ndarray] = []
    for start in range(0, chart.rule.size, chunk):
        sl = slice(start, min(start + chunk, chart.rule.size))
        X = chart.points[sl]
        G = phi.eval_batch(X, check=False) @ P.matrix.T
        pushed = P.matrix[None, :, :] @ phi.jacobian_batch(X, check=False) @ chart.tangents[sl]
        values.append(primitive_form(G, pushed))
    return np.concatenate(values)


def seed_chart(
    L,
    P: SymplecticProjector,
    rule: QuadratureRule,
    workers: int = 1,
) -> ShadowBoundaryChart:
    """Chart of the linear shadow boundary L^T J V on the unit sphere."""
    phi = L if isinstance(L, EmbeddingComposition) else EmbeddingComposition.from_matrix(L)
    L = phi.linear_matrix()
    if rule.k != P.target.k:
        raise ValidationError(f"Rule on S^{2 * rule.k - 1} does not match dim V = {P.target.dim}")
    frame = ChartFrame.from_linear(L, P)
    A0 = np.zeros((rule.size, frame.normal.shape[1]))
    A, X, tangents, residual_max, iterations = _correct(phi, P, frame, rule, A0, workers)
    chart = ShadowBoundaryChart(rule, frame, phi, A, X, tangents, residual_max, 0.0, 1.0, iterations)
    total = rule.integrate(pullback_values(chart, P))
    orientation = 1.0 if total >= 0 else -1.0
    logger.debug(f"Seed chart on {rule.size} nodes, residual {residual_max:.2e}, orientation {orientation:+.0f}")
    return replace(chart, orientation=orientation)


def _family_at(family: Family, t: float) -> EmbeddingComposition:
    if isinstance(family, AnalyticPath):
        return path_at(family, t)
    return family.at(t)


def seed_family_chart(family: Family, P: SymplecticProjector, rule: QuadratureRule, workers: int = 1):
    """Seed chart at parameter 0 of a path or rescaled family."""
    return seed_chart(family.linear_at_zero(), P, rule, workers)


def correct_chart(
    phi: EmbeddingComposition,
    P: SymplecticProjector,
    t: float,
    prev: ShadowBoundaryChart,
    workers: int = 1,
) -> ShadowBoundaryChart:
    """One Newton correction of `prev` onto the shadow boundary of phi."""
    A, X, tangents, residual_max, iterations = _correct(phi, P, prev.frame, prev.rule, prev.offsets, workers)
    return ShadowBoundaryChart(
        prev.rule, prev.frame, phi, A, X, tangents, residual_max, t, prev.orientation, iterations
    )


def trace_chart(
    family: Family,
    P: SymplecticProjector,
    t: float,
    prev: ShadowBoundaryChart,
    max_step: Optional[float] = None,
    workers: int = 1,
) -> ShadowBoundaryChart:
    """Continue `prev` to parameter t in steps no larger than `max_step`."""
    max_step = CHART_CONFIG["max_t_step"] if max_step is None else max_step
    if t == prev.t_value:
        return prev
    chart = prev
    while chart.t_value != t:
        gap = t - chart.t_value
        step = gap if abs(gap) <= max_step else np.sign(gap) * max_step
        target = t if step == gap else chart.t_value + step
        try:
            chart = correct_chart(_family_at(family, target), P, target, chart, workers)
        except ChartDivergenceError as e:
            e.t_value = target
            raise
        logger.debug(f"Traced chart to t = {target:.6g} ({chart.newton_iterations} Newton iterations)")
    return chart


def resample_chart(
    chart: ShadowBoundaryChart, P: SymplecticProjector, rule: QuadratureRule, workers: int = 1
) -> ShadowBoundaryChart:
    """Move a chart onto another rule, warm-starting every node from its nearest old node."""
    if rule.k != chart.rule.k:
        raise ValidationError("Cannot resample a chart onto a rule of another dimension")
    _, nearest = cKDTree(chart.rule.nodes).query(rule.nodes)
    A0 = chart.offsets[nearest]
    A, X, tangents, residual_max, iterations = _correct(chart.embedding, P, chart.frame, rule, A0, workers)
    return ShadowBoundaryChart(
        rule, chart.frame, chart.embedding, A, X, tangents, residual_max,
        chart.t_value, chart.orientation, iterations,
    )
