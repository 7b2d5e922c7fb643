"""Random generation of exactly-symplectic matrices, subspaces and frames.

All draws go through a counter-based Philox generator so that a seed reproduces
the same objects on every platform.
"""

from typing import Optional

import numpy as np
import scipy.linalg as la

from shadowlab.core.symplectic import SymplecticSubspace


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Philox generator for a seed; `stream` selects an independent substream."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(stream)])))


def block_to_interleaved(M: np.ndarray) -> np.ndarray:
    """Convert a matrix in (x_1..x_n, y_1..y_n) ordering to interleaved ordering."""
    n = M.shape[0] // 2
    perm = np.ravel(np.column_stack([np.arange(n), np.arange(n, 2 * n)]))
    return M[np.ix_(perm, perm)]


def _random_symmetric(n: int, rng: np.random.Generator, scale: float) -> np.ndarray:
    A = rng.normal(scale=scale, size=(n, n))
    return 0.5 * (A + A.T)


def position_shear_matrix(S: np.ndarray) -> np.ndarray:
    """(x, y) -> (x, y + S x) for symmetric S."""
    n = S.shape[0]
    block = np.block([[np.eye(n), np.zeros((n, n))], [S, np.eye(n)]])
    return block_to_interleaved(block)


def momentum_shear_matrix(S: np.ndarray) -> np.ndarray:
    """(x, y) -> (x + S y, y) for symmetric S."""
    n = S.shape[0]
    block = np.block([[np.eye(n), S], [np.zeros((n, n)), np.eye(n)]])
    return block_to_interleaved(block)


def unitary_matrix(U: np.ndarray) -> np.ndarray:
    """Real form of a complex unitary U = A + iB acting on z = x + iy; commutes with J."""
    A, B = U.real, U.imag
    block = np.block([[A, -B], [B, A]])
    return block_to_interleaved(block)


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary in its real 2n x 2n form."""
    Z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    Q, R = la.qr(Z)
    phases = np.diag(R) / np.abs(np.diag(R))
    return unitary_matrix(Q * phases)


def random_symplectic(
    n: int, rng: np.random.Generator, factors: int = 5, scale: float = 0.6
) -> np.ndarray:
    """Product of random position shears, momentum shears and unitary rotations."""
    L = np.eye(2 * n)
    for i in range(factors):
        kind = i % 3
        if kind == 0:
            factor = position_shear_matrix(_random_symmetric(n, rng, scale))
        elif kind == 1:
            factor = momentum_shear_matrix(_random_symmetric(n, rng, scale))
        else:
            factor = random_unitary(n, rng)
        L = factor @ L
    return L


def random_symplectic_subspace(
    n: int, k: int, rng: np.random.Generator, S: Optional[np.ndarray] = None
) -> SymplecticSubspace:
    """V = S E_k for a random symplectic S and the first k coordinate planes E_k."""
    if S is None:
        S = random_symplectic(n, rng, factors=4, scale=0.5)
    return SymplecticSubspace(S[:, : 2 * k])


def j_invariant_pair(n: int, k: int, rng: np.random.Generator):
    """(L, V) with L^{-1} V J-invariant: V = S E_k and L = S U^T for a unitary U."""
    S = random_symplectic(n, rng, factors=4, scale=0.5)
    U = random_unitary(n, rng)
    V = SymplecticSubspace(S[:, : 2 * k])
    return S @ U.T, V


def random_frame(dim: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """Gaussian frame of `count` column vectors in R^dim."""
    return rng.normal(size=(dim, count))
