"""Tests for grid fields and the discrete geometric operators."""
import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from conftest import EUCLIDEAN, SPHERE, make_grid
from lib import fields as ops
from lib.errors import GeometryError, ShapeError
from lib.fields import AnnulusGrid, ScalarField, VelocityField
from lib.manufactured import stream_function_field
from lib.verification import observed_order


def field_from(g, ur_fn, ut_fn):
    rr, tt = g.mesh()
    return VelocityField(ur_fn(rr, tt), ut_fn(rr, tt))


def test_grid_spacings_and_nodes(flat_grid):
    g = flat_grid
    assert g.shape == (33, 32)
    assert g.hr == pytest.approx(1.0 / 32)
    assert g.r[0] == 1.0 and g.r[-1] == 2.0
    assert g.theta[-1] < 2 * np.pi
    assert AnnulusGrid.from_dict(g.to_dict()) == g


@pytest.mark.parametrize("kwargs", [dict(R=0.5), dict(Nr=7), dict(Ntheta=4)])
def test_invalid_grid(kwargs):
    with pytest.raises(GeometryError):
        make_grid(**kwargs)


def test_refined_grid_halves_spacing(flat_grid):
    fine = flat_grid.refined(2)
    assert fine.hr == pytest.approx(flat_grid.hr / 2)
    assert fine.htheta == pytest.approx(flat_grid.htheta / 2)


def test_shape_mismatch(flat_grid):
    bad = VelocityField(np.zeros((5, 5)), np.zeros((5, 5)))
    with pytest.raises(ShapeError):
        ops.divergence(bad, flat_grid)
    with pytest.raises(ShapeError):
        VelocityField(np.zeros((5, 5)), np.zeros((4, 5)))


def test_zero_field_gives_zero(flat_grid):
    u = VelocityField.zeros(flat_grid)
    for op in (ops.divergence, ops.vorticity, ops.laplacian_normal, ops.laplacian_tangential,
               ops.convection_tangential):
        np.testing.assert_array_equal(op(u, flat_grid).values, 0.0)
    conv = ops.convection_full(u, flat_grid)
    np.testing.assert_array_equal(conv.ur, 0.0)
    np.testing.assert_array_equal(conv.utheta, 0.0)


def test_divergence_of_radial_source(flat_grid):
    g = flat_grid
    u = field_from(g, lambda r, t: 1.0 / r, lambda r, t: 0.0 * r)
    assert np.max(np.abs(ops.divergence(u, g).values)) < 1e-12


def test_divergence_of_tangential_profile_is_zero_inside(flat_grid):
    g = flat_grid
    u = field_from(g, lambda r, t: 0.0 * r, lambda r, t: np.exp(r))
    np.testing.assert_array_equal(ops.divergence(u, g).values[1:-1], 0.0)


def test_vorticity_of_rigid_rotation_euclidean(flat_grid):
    g = flat_grid
    u = field_from(g, lambda r, t: 0.0 * r, lambda r, t: r)
    np.testing.assert_allclose(ops.vorticity(u, g).values, 2.0, atol=1e-12)


def test_laplacian_tangential_example(flat_grid):
    g = flat_grid
    u = field_from(g, lambda r, t: 0.0 * r, lambda r, t: r - 1.0)
    rr, _ = g.mesh()
    expected = -(rr - 1.0) / rr ** 2 + 1.0 / rr
    np.testing.assert_allclose(ops.laplacian_tangential(u, g).values, expected, atol=1e-12)


def test_convection_tangential_example(flat_grid):
    g = flat_grid
    u = field_from(g, lambda r, t: 1.0 + 0.0 * r, lambda r, t: r - 1.0)
    rr, _ = g.mesh()
    np.testing.assert_allclose(ops.convection_tangential(u, g).values, 1.0 + (rr - 1.0) / rr, atol=1e-12)


def test_convection_full_centripetal_term():
    g = make_grid(SPHERE, np.pi / 6, np.pi / 6 + 1.0)
    u = field_from(g, lambda r, t: 0.0 * r, lambda r, t: r ** 2)
    conv = ops.convection_full(u, g)
    np.testing.assert_allclose(conv.ur, -(g.c / g.s) * u.utheta ** 2, rtol=1e-12)
    np.testing.assert_array_equal(conv.utheta, 0.0)


def test_convection_components_share_formula(flat_grid):
    rng = np.random.default_rng(3)
    u = VelocityField(rng.normal(size=flat_grid.shape), rng.normal(size=flat_grid.shape))
    np.testing.assert_array_equal(ops.convection_full(u, flat_grid).utheta,
                                  ops.convection_tangential(u, flat_grid).values)


def test_pressure_gradient_examples(flat_grid):
    g = flat_grid
    rr, tt = g.mesh()
    grad = ops.pressure_gradient(ScalarField(np.full(g.shape, 3.0)), g)
    np.testing.assert_array_equal(grad.ur, 0.0)
    np.testing.assert_array_equal(grad.utheta, 0.0)
    grad = ops.pressure_gradient(ScalarField(rr), g)
    np.testing.assert_allclose(grad.ur, 1.0, atol=1e-12)
    grad = ops.pressure_gradient(ScalarField(np.sin(tt)), g)
    assert np.max(np.abs(grad.utheta - np.cos(tt) / rr)) < g.htheta ** 2


@given(arrays(np.float64, (8, 8), elements=st.floats(-1e3, 1e3)),
       arrays(np.float64, (8, 8), elements=st.floats(-1e3, 1e3)))
def test_hodge_star_squares_to_minus_identity(ur, ut):
    u = VelocityField(ur, ut)
    twice = ops.hodge_star_1form(ops.hodge_star_1form(u))
    np.testing.assert_array_equal(twice.ur, -ur)
    np.testing.assert_array_equal(twice.utheta, -ut)


@given(arrays(np.float64, (8, 8), elements=st.floats(-1e3, 1e3)),
       arrays(np.float64, (8, 8), elements=st.floats(-1e3, 1e3)))
def test_hodge_star_is_pointwise_orthogonal(ur, ut):
    star = ops.hodge_star_1form(VelocityField(ur, ut))
    np.testing.assert_array_equal(star.ur * ur + star.utheta * ut, 0.0)


def test_unknown_laplacian_variant(flat_grid):
    with pytest.raises(ValueError):
        ops.laplacian_normal(VelocityField.zeros(flat_grid), flat_grid, 'spectral')


@pytest.mark.slow
def test_laplacian_variants_agree_on_divergence_free_fields(geometry):
    manifold, delta, R = geometry
    exact = stream_function_field(manifold, delta, R, modes=2, seed=1)
    gaps, hs = [], []
    for Nr, Nt in ((33, 32), (65, 64)):
        g = make_grid(manifold, delta, R, Nr, Nt)
        u = exact.velocity(g)
        gap = ops.laplacian_normal(u, g, 'direct').values - ops.laplacian_normal(u, g, 'divergence_free').values
        gaps.append(ops.interior_max(gap))
        hs.append(g.hr)
    assert gaps[1] < gaps[0]
    assert observed_order(gaps[0], gaps[1], hs[0], hs[1]) > 1.5


@pytest.mark.slow
def test_vector_laplacian_matches_components_for_divergence_free_fields():
    exact = stream_function_field(EUCLIDEAN, 1.0, 2.0, modes=2, seed=2)
    gaps = []
    for Nr, Nt in ((33, 32), (65, 64)):
        g = make_grid(EUCLIDEAN, 1.0, 2.0, Nr, Nt)
        u = exact.velocity(g)
        full = ops.vector_laplacian(u, g)
        gaps.append(max(ops.interior_max(full.utheta - ops.laplacian_tangential(u, g).values),
                        ops.interior_max(full.ur - ops.laplacian_normal(u, g).values)))
    assert gaps[1] < 0.5 * gaps[0]


def test_kinetic_energy_of_rigid_rotation():
    g = make_grid(EUCLIDEAN, 1.0, 2.0, 129, 16)
    u = field_from(g, lambda r, t: 0.0 * r, lambda r, t: 1.0 + 0.0 * r)
    # 0.5 * 2 pi * (R^2 - delta^2) / 2
    assert ops.kinetic_energy(u, g) == pytest.approx(1.5 * np.pi, rel=1e-12)


def test_wall_violation():
    g = make_grid()
    u = VelocityField(np.full(g.shape, 0.5), np.zeros(g.shape), wall="inflow", lambda0=0.5)
    assert u.wall_violation() == 0.0
    u = VelocityField(np.full(g.shape, 0.5), np.zeros(g.shape), wall="noslip")
    assert u.wall_violation() == 0.5
    with pytest.raises(ValueError):
        VelocityField(np.zeros(g.shape), np.zeros(g.shape), wall="slip")
