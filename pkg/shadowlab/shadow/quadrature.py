"""Quadrature rules on S^1 and S^3 with oriented tangent frames at every node."""

from dataclasses import dataclass
from math import factorial, pi

import numpy as np
from scipy.special import roots_legendre

from shadowlab.errors import ValidationError


def sphere_area(k: int) -> float:
    """Surface measure of S^{2k-1}: 2 pi^k / (k-1)!."""
    return 2.0 * pi ** k / factorial(k - 1)


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Nodes z_j on S^{2k-1} with weights w_j and orthonormal tangent frames E_j.

    Each frame is positively oriented: det[z_j, E_j] > 0.
    """

    k: int
    order: int
    nodes: np.ndarray
    weights: np.ndarray
    frames: np.ndarray
    exactness_degree: int

    @property
    def size(self) -> int:
        return self.nodes.shape[0]

    def refined(self) -> "QuadratureRule":
        return sphere_rule(self.k, 2 * self.order)

    def integrate(self, values: np.ndarray) -> float:
        return float(np.dot(self.weights, values))


def _circle_rule(order: int) -> QuadratureRule:
    theta = 2.0 * pi * np.arange(order) / order
    nodes = np.column_stack([np.cos(theta), np.sin(theta)])
    frames = np.column_stack([-np.sin(theta), np.cos(theta)])[:, :, None]
    weights = np.full(order, 2.0 * pi / order)
    return QuadratureRule(1, order, nodes, weights, frames, exactness_degree=order - 1)


def _hopf_rule(order: int) -> QuadratureRule:
    """Gauss-Legendre in s = sin^2(eta) times uniform grids in the two Hopf angles.

    z = (sqrt(1-s) cos xi1, sqrt(1-s) sin xi1, sqrt(s) cos xi2, sqrt(s) sin xi2) and
    d sigma = (1/2) ds dxi1 dxi2.
    """
    if order % 4 != 0:
        raise ValidationError(f"S^3 rule order must be divisible by 4, got {order}")
    m = order // 4
    n_xi = order // 2
    s_nodes, s_weights = roots_legendre(m)
    s_nodes = 0.5 * (s_nodes + 1.0)
    s_weights = 0.5 * s_weights
    xi = 2.0 * pi * np.arange(n_xi) / n_xi

    S, X1, X2 = np.meshgrid(s_nodes, xi, xi, indexing="ij")
    W = np.broadcast_to(s_weights[:, None, None], S.shape)
    S, X1, X2, W = (a.ravel() for a in (S, X1, X2, W))

    c = np.sqrt(1.0 - S)
    s = np.sqrt(S)
    nodes = np.column_stack([c * np.cos(X1), c * np.sin(X1), s * np.cos(X2), s * np.sin(X2)])
    zeros = np.zeros_like(S)
    e_xi1 = np.column_stack([-np.sin(X1), np.cos(X1), zeros, zeros])
    e_xi2 = np.column_stack([zeros, zeros, -np.sin(X2), np.cos(X2)])
    e_eta = np.column_stack([-s * np.cos(X1), -s * np.sin(X1), c * np.cos(X2), c * np.sin(X2)])
    frames = np.stack([e_xi1, e_xi2, e_eta], axis=-1)

    orientation = np.linalg.det(np.concatenate([nodes[:, :, None], frames], axis=-1))
    frames[orientation < 0, :, 2] *= -1.0

    weights = 0.5 * W * (2.0 * pi / n_xi) ** 2
    return QuadratureRule(2, order, nodes, weights, frames, exactness_degree=n_xi - 1)


def sphere_rule(k: int, order: int) -> QuadratureRule:
    """Rule of the given order on S^{2k-1}, for k in {1, 2}."""
    if order < 4:
        raise ValidationError(f"Quadrature order must be at least 4, got {order}")
    if k == 1:
        return _circle_rule(order)
    if k == 2:
        return _hopf_rule(order)
    raise ValidationError(f"Spherical quadrature is available for k in (1, 2), got k = {k}")
