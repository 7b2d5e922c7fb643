"""Tests for the linear symplectic core."""

from math import pi

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from shadowlab.core.sampling import (
    j_invariant_pair,
    make_rng,
    random_frame,
    random_symplectic,
    random_symplectic_subspace,
    random_unitary,
)
from shadowlab.core.symplectic import (
    SymplecticSubspace,
    complex_structure,
    gram_volume,
    j_invariance_defect,
    linear_shadow_volume,
    omega_eval,
    omega_gram,
    omega_matrix,
    omega_power,
    pfaffian,
    symplectic_complement,
    symplectic_defect,
    symplectic_projector,
    validate_symplectic,
    wirtinger_ratio,
)
from shadowlab.errors import ValidationError

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def test_standard_form_on_coordinate_vectors():
    e = np.eye(4)
    assert omega_eval(e[0], e[1]) == 1.0
    assert omega_eval(e[1], e[0]) == -1.0
    assert omega_eval(e[0], e[2]) == 0.0
    J = complex_structure(2)
    np.testing.assert_allclose(J @ J, -np.eye(4))
    np.testing.assert_allclose(omega_matrix(2), J.T)


def test_pfaffian_of_block_forms():
    assert pfaffian(np.array([[0.0, 3.0], [-3.0, 0.0]])) == pytest.approx(3.0)
    assert pfaffian(omega_matrix(3)) == pytest.approx(1.0)


def test_pfaffian_squares_to_determinant(rng):
    A = rng.normal(size=(6, 6))
    A = A - A.T
    assert pfaffian(A) ** 2 == pytest.approx(np.linalg.det(A), rel=1e-10)


def test_omega_power_counts_k_factorial():
    e = np.eye(4)
    assert omega_power(e[0], e[1], e[2], e[3]) == pytest.approx(2.0)
    with pytest.raises(ValidationError):
        omega_power(e[0], e[1], e[2])


def test_wirtinger_equality_on_complex_lines():
    e = np.eye(6)
    frame = np.column_stack([e[0], e[1], e[4], e[5]])
    assert wirtinger_ratio(frame) == pytest.approx(1.0)
    lagrangian = np.column_stack([e[0], e[2]])
    assert wirtinger_ratio(lagrangian) == 0.0


@settings(max_examples=25, deadline=None)
@given(seed=seeds, k=st.sampled_from([1, 2]), n=st.sampled_from([2, 3]))
def test_wirtinger_inequality(seed, k, n):
    frame = random_frame(2 * n, 2 * k, make_rng(seed))
    assert abs(omega_power(frame)) / (1 if k == 1 else 2) <= gram_volume(frame) + 1e-10


def test_random_symplectic_is_exact(rng):
    for n in (2, 3):
        L = random_symplectic(n, rng)
        assert symplectic_defect(L) < 1e-12
        U = random_unitary(n, rng)
        np.testing.assert_allclose(U @ complex_structure(n), complex_structure(n) @ U, atol=1e-12)


def test_validate_symplectic_rejects_bad_matrices():
    with pytest.raises(ValidationError):
        validate_symplectic(np.diag([2.0, 1.0, 1.0, 1.0]))
    with pytest.raises(ValidationError):
        validate_symplectic(np.eye(2))
    with pytest.raises(ValidationError):
        validate_symplectic(np.eye(3))


def test_subspace_rejects_isotropic_and_odd_bases():
    e = np.eye(4)
    with pytest.raises(ValidationError):
        SymplecticSubspace(np.column_stack([e[0], e[2]]))
    with pytest.raises(ValidationError):
        SymplecticSubspace(e[:, :3])


def test_projector_splits_along_symplectic_complement(rng):
    V = random_symplectic_subspace(3, 2, rng)
    P = symplectic_projector(V)
    assert P.idempotence_defect() < 1e-10
    np.testing.assert_allclose(P.matrix @ V.basis, V.basis, atol=1e-10)
    W = symplectic_complement(V)
    assert W.dim == 2
    np.testing.assert_allclose(P.matrix @ W.basis, 0.0, atol=1e-10)
    gram = omega_gram(np.hstack([V.basis, W.basis]))
    np.testing.assert_allclose(gram[:4, 4:], 0.0, atol=1e-10)


def test_coordinate_projector_is_orthogonal():
    P = symplectic_projector(SymplecticSubspace.coordinate(3, [0, 2]))
    assert P.is_orthogonal()
    np.testing.assert_allclose(np.diag(P.matrix), [1, 1, 0, 0, 1, 1])


def test_identity_shadow_is_pi_to_the_k():
    assert linear_shadow_volume(np.eye(6), SymplecticSubspace.coordinate(3, [0, 1])) == pytest.approx(pi ** 2)
    assert linear_shadow_volume(np.eye(4), SymplecticSubspace.coordinate(2, [1])) == pytest.approx(pi)


def test_diagonal_squeeze_keeps_area():
    L = np.diag([2.0, 0.5, 1.0, 1.0])
    V = SymplecticSubspace.coordinate(2, [0])
    assert linear_shadow_volume(L, V) == pytest.approx(pi, rel=1e-12)
    assert j_invariance_defect(L, V) < 1e-12


def test_shear_strictly_exceeds_pi(position_shear_r4):
    V = SymplecticSubspace.coordinate(2, [0])
    assert linear_shadow_volume(position_shear_r4, V) > pi * (1 + 1e-6)
    assert j_invariance_defect(position_shear_r4, V) > 1e-3


@settings(max_examples=40, deadline=None)
@given(seed=seeds)
def test_linear_non_squeezing(seed):
    rng = make_rng(seed)
    L = random_symplectic(3, rng)
    V = random_symplectic_subspace(3, 2, rng)
    assert linear_shadow_volume(L, V) >= pi ** 2 * (1 - 1e-9)


@settings(max_examples=20, deadline=None)
@given(seed=seeds, k=st.sampled_from([1, 2]))
def test_equality_for_j_invariant_preimage(seed, k):
    L, V = j_invariant_pair(3, k, make_rng(seed))
    assert j_invariance_defect(L, V) <= 1e-8
    assert linear_shadow_volume(L, V) == pytest.approx(pi ** k, abs=1e-6)


def test_rng_streams_are_reproducible():
    a = make_rng(7, stream=3).normal(size=5)
    b = make_rng(7, stream=3).normal(size=5)
    c = make_rng(7, stream=4).normal(size=5)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)


def test_omega_eval_expands_the_defining_sum():
    assert omega_eval(np.array([1.0, 2.0, 3.0, 4.0]), np.array([0.0, 1.0, 1.0, 0.0])) == pytest.approx(-3.0)


def test_complement_and_projector_of_a_tilted_plane():
    e = np.eye(4)
    V = SymplecticSubspace(np.column_stack([e[0], e[1] + e[2]]))
    W = symplectic_complement(V)
    expected = np.column_stack([[1.0, 0.0, 0.0, 1.0], [0.0, 0.0, 1.0, 0.0]])
    assert np.linalg.matrix_rank(np.hstack([W.basis, expected]), tol=1e-10) == 2
    z = np.array([0.3, -1.2, 0.7, 2.0])
    P = symplectic_projector(V)
    np.testing.assert_allclose(P.matrix @ z, [0.3 - 2.0, -1.2, -1.2, 0.0], atol=1e-12)
    for v in V.basis.T:
        assert omega_eval(z, v) == pytest.approx(omega_eval(P.matrix @ z, v), abs=1e-12)


def test_j_invariance_defect_of_swap_and_shear():
    V = SymplecticSubspace.coordinate(2, [0])
    swap = np.zeros((4, 4))
    swap[0, 2] = swap[1, 3] = swap[2, 0] = swap[3, 1] = 1.0
    assert j_invariance_defect(swap, V) < 1e-12
    shear = np.eye(4)
    shear[1, 2] = shear[3, 0] = 1.0
    assert j_invariance_defect(shear, V) > 1e-3
    assert linear_shadow_volume(shear, V) > pi


def test_shadow_volume_does_not_depend_on_the_basis(rng):
    L = random_symplectic(3, rng)
    V = random_symplectic_subspace(3, 2, rng)
    mixed = SymplecticSubspace(V.basis @ rng.normal(size=(4, 4)))
    assert linear_shadow_volume(L, mixed) == pytest.approx(linear_shadow_volume(L, V), rel=1e-10)
