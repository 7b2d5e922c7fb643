"""Tests for quadrature rules, shadow boundary charts, Stokes volumes and the radial oracle."""

from math import pi

import numpy as np
import pytest

from shadowlab.config import ORACLE_CONFIG
from shadowlab.core.symplectic import linear_shadow_volume
from shadowlab.embeddings.composition import EmbeddingComposition
from shadowlab.embeddings.path import AnalyticPath, PathFactor
from shadowlab.errors import OracleConvexityError, ValidationError
from shadowlab.shadow.chart import seed_chart, seed_family_chart, singular_residual, trace_chart
from shadowlab.shadow.oracle import _ray_radius, radial_oracle_volume
from shadowlab.shadow.quadrature import sphere_area, sphere_rule
from shadowlab.shadow.volume import nonsqueezing_margin, shadow_volume, stokes_volume


@pytest.mark.parametrize("k,order", [(1, 8), (1, 24), (2, 24), (2, 48)])
def test_rules_integrate_constants(k, order):
    rule = sphere_rule(k, order)
    assert rule.integrate(np.ones(rule.size)) == pytest.approx(sphere_area(k), rel=1e-12)


def test_hopf_rule_integrates_quadratics():
    rule = sphere_rule(2, 24)
    z1 = rule.nodes[:, 0] ** 2 + rule.nodes[:, 1] ** 2
    assert rule.integrate(z1) == pytest.approx(pi ** 2, rel=1e-12)
    assert rule.integrate(rule.nodes[:, 0] * rule.nodes[:, 2]) == pytest.approx(0.0, abs=1e-12)


def test_rule_frames_are_oriented_tangents():
    rule = sphere_rule(2, 16)
    np.testing.assert_allclose(np.einsum("ni,nij->nj", rule.nodes, rule.frames), 0.0, atol=1e-12)
    full = np.concatenate([rule.nodes[:, :, None], rule.frames], axis=-1)
    assert np.all(np.linalg.det(full) > 0)


def test_rule_orders_are_validated():
    with pytest.raises(ValidationError):
        sphere_rule(2, 18)
    with pytest.raises(ValidationError):
        sphere_rule(3, 24)
    with pytest.raises(ValidationError):
        sphere_rule(1, 2)


def test_seed_chart_lies_on_the_shadow_boundary(position_shear_r4, plane_projector_r4):
    chart = seed_chart(position_shear_r4, plane_projector_r4, sphere_rule(1, 24))
    assert chart.residual_max <= 1e-10
    assert chart.unit_defect <= 1e-12
    np.testing.assert_allclose(singular_residual(chart.embedding, plane_projector_r4, chart.points), 0.0, atol=1e-10)


def test_identity_shadow_volume(planes_projector_r6):
    result = shadow_volume(EmbeddingComposition.from_matrix(np.eye(6)), planes_projector_r6, 24)
    assert result.value == pytest.approx(pi ** 2, rel=1e-9)
    assert abs(result.margin) <= 1e-8


def test_linear_stokes_matches_closed_form(position_shear_r4, plane_projector_r4):
    result = shadow_volume(EmbeddingComposition.from_matrix(position_shear_r4), plane_projector_r4, 24)
    expected = linear_shadow_volume(position_shear_r4, plane_projector_r4.target)
    assert result.value == pytest.approx(expected, rel=1e-9)
    assert result.method == "stokes"
    assert result.margin > 0


def test_resampled_rule_agrees(position_shear_r4, plane_projector_r4):
    phi = EmbeddingComposition.from_matrix(position_shear_r4)
    chart = seed_chart(phi, plane_projector_r4, sphere_rule(1, 24))
    fine = stokes_volume(phi, plane_projector_r4, chart, rule=sphere_rule(1, 48))
    coarse = stokes_volume(phi, plane_projector_r4, chart)
    assert fine.value == pytest.approx(coarse.value, rel=1e-9)


def test_shear_path_keeps_non_squeezing(shear_path_r6, planes_projector_r6):
    rule = sphere_rule(2, 24)
    chart = seed_family_chart(shear_path_r6, planes_projector_r6, rule)
    for t in (0.02, 0.05):
        chart = trace_chart(shear_path_r6, planes_projector_r6, t, chart)
        result = stokes_volume(chart.embedding, planes_projector_r6, chart)
        assert result.margin >= -1e-3 * pi ** 2


def test_unitary_path_is_flat(planes_projector_r6):
    A = np.zeros((6, 6))
    A[4, 0], A[5, 1], A[0, 4], A[1, 5] = 1.0, 1.0, -1.0, -1.0
    path = AnalyticPath([PathFactor("linear", 6, generators=[A])])
    chart = seed_family_chart(path, planes_projector_r6, sphere_rule(2, 24))
    chart = trace_chart(path, planes_projector_r6, 0.05, chart)
    result = stokes_volume(chart.embedding, planes_projector_r6, chart)
    assert abs(result.margin) <= 1e-6 * pi ** 2


def test_cubic_embedding_margin_is_non_negative(cubic_embedding_r4, plane_projector_r4):
    assert nonsqueezing_margin(cubic_embedding_r4, plane_projector_r4, 48) >= -1e-3 * pi


@pytest.mark.slow
def test_oracle_agrees_with_closed_form(position_shear_r4, plane_projector_r4):
    phi = EmbeddingComposition.from_matrix(position_shear_r4)
    oracle = radial_oracle_volume(phi, plane_projector_r4, {"seed": 5})
    expected = linear_shadow_volume(position_shear_r4, plane_projector_r4.target)
    assert oracle.method == "radial_oracle"
    assert abs(oracle.value - expected) <= 1e-2 * expected


@pytest.mark.slow
def test_stokes_and_oracle_agree_on_cubic_shear(cubic_embedding_r4, plane_projector_r4):
    stokes = shadow_volume(cubic_embedding_r4, plane_projector_r4, 48)
    oracle = radial_oracle_volume(cubic_embedding_r4, plane_projector_r4, {"seed": 5})
    assert abs(stokes.value - oracle.value) <= 1e-2 * stokes.value


def test_singular_residual_vanishes_on_the_subspace(plane_projector_r4):
    identity = EmbeddingComposition.identity(4)
    e = np.eye(4)
    residual = singular_residual(identity, plane_projector_r4, e[[0, 2]])
    assert np.linalg.norm(residual[0]) <= 1e-14
    assert np.linalg.norm(residual[1]) > 0.5


def test_traced_stretch_chart_stays_in_the_subspace(plane_projector_r4):
    path = AnalyticPath([PathFactor("stretch", 4, rates=np.array([1.0, 0.0]))])
    chart = seed_family_chart(path, plane_projector_r4, sphere_rule(1, 24))
    assert trace_chart(path, plane_projector_r4, 0.0, chart) is chart
    traced = trace_chart(path, plane_projector_r4, 0.1, chart)
    assert traced.residual_max <= 1e-10
    assert traced.unit_defect <= 1e-12
    np.testing.assert_allclose(traced.points[:, 2:], 0.0, atol=1e-8)
    result = stokes_volume(traced.embedding, plane_projector_r4, traced)
    assert result.value == pytest.approx(pi, rel=1e-8)


def test_identity_margin_is_zero(plane_projector_r4):
    assert abs(nonsqueezing_margin(EmbeddingComposition.identity(4), plane_projector_r4)) <= 1e-8


def test_stokes_error_compares_against_the_doubled_rule(cubic_embedding_r4, plane_projector_r4):
    path = AnalyticPath.from_composition(cubic_embedding_r4)
    rule = sphere_rule(1, 24)
    chart = trace_chart(path, plane_projector_r4, 1.0, seed_family_chart(path, plane_projector_r4, rule))
    result = stokes_volume(chart.embedding, plane_projector_r4, chart)
    fine = stokes_volume(chart.embedding, plane_projector_r4, chart, rule=sphere_rule(1, 48), check_resolution=False)
    assert (result.order, fine.order) == (24, 48)
    assert result.error_estimate == pytest.approx(abs(result.value - fine.value), rel=1e-6, abs=1e-13)


class _RadialMembership:
    """Membership decided by the distance to the origin of a plane."""

    def __init__(self, contains):
        self.phi = EmbeddingComposition.identity(2)
        self.contains = contains

    def __call__(self, p, warm, rng):
        return bool(self.contains(float(np.linalg.norm(p)))), warm


@pytest.mark.parametrize(
    "contains,match",
    [
        (lambda r: r <= 1.0 and not 0.4 < r < 0.5, "fails at"),
        (lambda r: r <= 1.0 or 1.2 <= r <= 1.4, "resumes at"),
    ],
    ids=["annulus_hole", "detached_shell"],
)
def test_ray_radius_rejects_non_monotone_membership(contains, match):
    test = _RadialMembership(contains)
    with pytest.raises(OracleConvexityError, match=match):
        _ray_radius(test, np.zeros(2), np.array([1.0, 0.0]), 1.0, ORACLE_CONFIG, np.random.default_rng(0))


def test_ray_radius_finds_the_disk_boundary():
    test = _RadialMembership(lambda r: r <= 1.0)
    radius = _ray_radius(test, np.zeros(2), np.array([1.0, 0.0]), 1.0, ORACLE_CONFIG, np.random.default_rng(0))
    assert radius == pytest.approx(1.0, rel=1e-6)
