"""Tests for sphere functions, Reeb averaging, normal forms and minimal actions."""

from math import pi

import numpy as np
import pytest

from shadowlab.contact.characteristics import (
    ContactSphere,
    Ellipsoid,
    RadialHypersurface,
    ScaledBall,
    a_min_estimate,
    characteristic_flow,
    closed_characteristic_search,
)
from shadowlab.contact.comparison import (
    hausdorff_distance,
    hausdorff_lipschitz_probe,
    lipschitz_constant,
    projected_body,
    projection_monotonicity,
)
from shadowlab.contact.normal_form import (
    ContactMultiplier,
    amin_upper_bound,
    constant_volume_normalizer,
    formal_triviality_order,
    normal_form_reduce,
    strict_max_check,
)
from shadowlab.contact.sphere_functions import (
    SphereFunction,
    cohomological_solve,
    contact_volume,
    fiber_rotate,
    fit_sphere_function,
    monomial_basis,
    random_sphere_points,
    reeb_average,
)
from shadowlab.errors import NormalFormError, ValidationError


def circle_seeds():
    """Seeds on the two coordinate circles and a generic point of S^3."""
    return np.array([[1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0], [0.5, 0.5, 0.5, 0.5]])


@pytest.fixture
def z1_squared_minus_half():
    """|z1|^2 - 1/2 on S^3."""
    return SphereFunction.from_terms({((1, 0), (1, 0)): 1.0, ((0, 0), (0, 0)): -0.5}, 2)


@pytest.fixture
def re_z1_squared():
    """Re(z1^2) on S^3, of fiber frequency 2."""
    return SphereFunction.from_terms({((2, 0), (0, 0)): 1.0}, 2)


def test_sphere_function_evaluates_complex_monomials(rng):
    f = SphereFunction.from_terms({((1, 0), (0, 1)): 1.0 + 2.0j}, 2)
    X = random_sphere_points(2, 5, rng)
    z = X[:, 0::2] + 1j * X[:, 1::2]
    np.testing.assert_allclose(f(X), np.real((1.0 + 2.0j) * z[:, 0] * np.conj(z[:, 1])))


def test_real_polynomial_terms_are_accepted():
    f = SphereFunction.from_dict({"terms": [{"powers": [2, 0, 0, 0], "coeff": 1.0}]}, 2)
    x = np.array([0.6, 0.0, 0.8, 0.0])
    assert f(x) == pytest.approx(0.36)


def test_exact_mean(z1_squared_minus_half, re_z1_squared):
    assert z1_squared_minus_half.mean() == pytest.approx(0.0, abs=1e-15)
    assert re_z1_squared.mean() == 0.0
    assert SphereFunction.constant(2.5, 2).mean() == pytest.approx(2.5)


def test_extrema_of_invariant_function(z1_squared_minus_half):
    low, argmin, high, argmax = z1_squared_minus_half.extrema()
    assert low == pytest.approx(-0.5, abs=1e-8)
    assert high == pytest.approx(0.5, abs=1e-8)
    assert argmax[0] ** 2 + argmax[1] ** 2 == pytest.approx(1.0, abs=1e-6)


def test_reeb_average_keeps_frequency_zero_terms(z1_squared_minus_half, re_z1_squared):
    f = z1_squared_minus_half + re_z1_squared
    assert not f.is_invariant()
    avg = reeb_average(f)
    assert avg.is_invariant()
    X = random_sphere_points(2, 16, np.random.Generator(np.random.Philox(3)))
    np.testing.assert_allclose(avg(X), z1_squared_minus_half(X), atol=1e-14)
    np.testing.assert_allclose(reeb_average(avg)(X), avg(X), atol=1e-14)


def test_reeb_average_is_the_fiber_mean(rng):
    basis = list(monomial_basis(2, 3))
    coefficients = rng.normal(size=len(basis)) + 1j * rng.normal(size=len(basis))
    f = SphereFunction.from_terms(dict(zip(basis, coefficients)), 2)
    X = random_sphere_points(2, 10, rng)
    thetas = 2 * np.pi * np.arange(16) / 16
    fiber_mean = np.mean([f(fiber_rotate(X, theta)) for theta in thetas], axis=0)
    np.testing.assert_allclose(reeb_average(f)(X), fiber_mean, atol=1e-10)
    assert reeb_average(f).mean() == pytest.approx(f.mean(), abs=1e-10)


def test_cohomological_solution_differentiates_back(re_z1_squared, rng):
    f = re_z1_squared + SphereFunction.from_terms({((1, 1), (0, 0)): 0.3j}, 2)
    h = cohomological_solve(f)
    X = random_sphere_points(2, 8, rng)
    eps = 1e-6
    derivative = (h(fiber_rotate(X, eps)) - h(fiber_rotate(X, -eps))) / (2 * eps)
    np.testing.assert_allclose(derivative, reeb_average(f)(X) - f(X), atol=1e-8)
    assert reeb_average(h).is_zero


def test_fit_recovers_sphere_function(z1_squared_minus_half, re_z1_squared, rng):
    f = z1_squared_minus_half + re_z1_squared
    X = random_sphere_points(2, 200, rng)
    fitted, residual = fit_sphere_function(X, f(X), 2, degree=2)
    assert residual < 1e-10
    Y = random_sphere_points(2, 20, rng)
    np.testing.assert_allclose(fitted(Y), f(Y), atol=1e-9)


def test_contact_volume_of_round_sphere():
    assert contact_volume(SphereFunction.constant(1.0, 2)) == pytest.approx(pi ** 2, rel=1e-12)
    assert contact_volume(SphereFunction.constant(1.0, 1)) == pytest.approx(pi, rel=1e-12)
    with pytest.raises(ValidationError):
        contact_volume(SphereFunction.constant(-1.0, 2))


def test_sphere_function_degree_is_capped():
    with pytest.raises(ValidationError):
        SphereFunction.from_terms({((7, 0), (0, 0)): 1.0}, 2)


def test_multiplier_family(z1_squared_minus_half):
    family = ContactMultiplier([z1_squared_minus_half])
    x = np.array([1.0, 0.0, 0.0, 0.0])
    assert family.at(0.2)(x) == pytest.approx(1.1)
    assert family.values(0.2, x[None, :])[0] == pytest.approx(1.1)
    assert family.is_positive(0.5)
    with pytest.raises(ValidationError):
        ContactMultiplier([])


def test_first_order_obstruction(z1_squared_minus_half):
    result = formal_triviality_order(ContactMultiplier([z1_squared_minus_half]))
    assert not result.trivial
    assert result.order == 1
    assert result.minimum == pytest.approx(-0.5, abs=1e-6)
    assert result.maximum == pytest.approx(0.5, abs=1e-6)


def test_upper_bound_for_invariant_multipliers(z1_squared_minus_half, re_z1_squared):
    rho = SphereFunction.constant(1.0, 2) + z1_squared_minus_half.scaled(0.2)
    assert amin_upper_bound(rho) == pytest.approx(0.9 * pi, abs=1e-8)
    with pytest.raises(ValidationError):
        amin_upper_bound(SphereFunction.constant(1.0, 2) + re_z1_squared.scaled(0.1))


def test_ellipsoid_action_from_symplectic_spectrum():
    assert Ellipsoid.from_semi_axes([1.0, 2.0]).minimal_action() == pytest.approx(pi)
    assert ScaledBall(1.3).minimal_action() == pytest.approx(1.69 * pi)


def test_pinch_is_checked():
    ScaledBall(1.0).check_pinch(0.5, 2.0)
    with pytest.raises(ValidationError):
        ScaledBall(3.0).check_pinch(0.5, 2.0)


def test_lipschitz_constant_of_default_pinch():
    assert lipschitz_constant(0.5, 2.0) == pytest.approx(48 * pi)


def test_hausdorff_distance_of_concentric_balls():
    assert hausdorff_distance(ScaledBall(1.0), ScaledBall(1.1), count=64) == pytest.approx(0.1, abs=1e-6)


def test_projected_ball_is_a_disc(plane_projector_r4):
    disc = projected_body(ScaledBall(1.2), plane_projector_r4, samples=64)
    assert disc.area() == pytest.approx(1.44 * pi, rel=1e-6)


@pytest.mark.slow
@pytest.mark.parametrize("radius", [0.7, 1.0, 1.3])
def test_ball_capacity(radius):
    estimate = a_min_estimate(ScaledBall(radius))
    assert estimate.value == pytest.approx(radius ** 2 * pi, abs=1e-4)
    assert estimate.upper_bound


@pytest.mark.slow
def test_ellipsoid_capacity():
    estimate = a_min_estimate(Ellipsoid.from_semi_axes([1.0, 2.0]))
    assert estimate.value == pytest.approx(pi, abs=1e-3)


@pytest.mark.slow
def test_round_contact_sphere_orbits_are_hopf_circles():
    orbits = closed_characteristic_search(ContactSphere(SphereFunction.constant(1.0, 2)), random_seeds=4)
    assert orbits[0].action == pytest.approx(pi, abs=1e-6)
    assert all(o.closure_residual <= 1e-6 for o in orbits)


@pytest.mark.slow
def test_projection_monotonicity_on_toric_body(plane_projector_r4):
    f = SphereFunction.from_terms({((1, 0), (1, 0)): 0.1, ((1, 1), (1, 1)): -0.1}, 2)
    result = projection_monotonicity(RadialHypersurface(f), plane_projector_r4)
    assert result.margin >= -1e-3


@pytest.mark.slow
def test_lipschitz_probe_on_balls():
    probe = hausdorff_lipschitz_probe(ScaledBall(1.0), ScaledBall(1.1))
    assert probe.distance == pytest.approx(0.1, abs=1e-6)
    assert probe.ratio == pytest.approx(2.1 * pi, rel=1e-3)
    assert probe.within_bound


@pytest.mark.slow
def test_strict_max_under_first_order_obstruction(z1_squared_minus_half):
    report = strict_max_check(ContactMultiplier([z1_squared_minus_half]), [0.02, 0.05], circle_seeds())
    assert report.t_values[0] == 0.0
    assert report.amin[0] == pytest.approx(pi, abs=1e-6)
    assert all(a <= b + 1e-6 for a, b in zip(report.amin, report.bounds) if b is not None)
    assert report.strict_max


def test_normal_form_rejects_out_of_range_order(z1_squared_minus_half):
    with pytest.raises(NormalFormError):
        formal_triviality_order(ContactMultiplier([z1_squared_minus_half]), M=2)


def test_averaging_examples(z1_squared_minus_half):
    assert reeb_average(SphereFunction.from_terms({((1, 0), (0, 0)): 1.0}, 2)).is_zero
    assert cohomological_solve(z1_squared_minus_half).is_zero
    assert reeb_average(SphereFunction.constant(1.0, 2)).mean() == pytest.approx(1.0)


def test_constant_volume_normalizer():
    trivial = ContactMultiplier.trivial(2)
    assert constant_volume_normalizer(trivial, 0.0) == pytest.approx(1 / pi, rel=1e-12)
    assert constant_volume_normalizer(trivial, 0.7) == pytest.approx(1 / pi, rel=1e-12)
    doubling = ContactMultiplier([SphereFunction.constant(1.0, 2)])
    assert constant_volume_normalizer(doubling, 1.0) == pytest.approx(0.5 / pi, rel=1e-12)


def test_invariant_order_is_left_alone():
    family = ContactMultiplier([SphereFunction.from_terms({((1, 0), (1, 0)): 1.0}, 2)])
    reduced = normal_form_reduce(family, 1)
    X = random_sphere_points(2, 8, np.random.Generator(np.random.Philox(5)))
    np.testing.assert_allclose(reduced.coefficients[0](X), family.coefficients[0](X))


def test_flow_on_the_round_sphere_conserves_energy():
    x0 = np.array([1.0, 0.0, 0.0, 0.0])
    trajectory = characteristic_flow(ScaledBall(1.0), x0, 50.0)
    assert trajectory.energy_drift <= 1e-9
    assert np.linalg.norm(trajectory.points[-1]) == pytest.approx(1.0, abs=1e-9)
    with pytest.raises(ValidationError):
        characteristic_flow(ScaledBall(1.0), 2 * x0, 1.0)


@pytest.mark.slow
def test_reduction_moves_oscillating_order_upward(re_z1_squared):
    family = ContactMultiplier([re_z1_squared, SphereFunction.constant(0.0, 2)])
    reduced = normal_form_reduce(family, 1)
    assert reduced.coefficients[0].is_zero
    assert reduced.reduced_through == 1
    assert reduced.diagnostics["order_1"]["volume_drift"] <= 1e-6
