"""Tests for the symbolic manufactured fields."""
import math

import numpy as np
import pytest

from conftest import EUCLIDEAN, GEOMETRIES, GEOMETRY_IDS, SPHERE, make_grid
from lib.manufactured import (
    SymbolicField,
    axisymmetric_field,
    inflow_stream_field,
    r,
    stream_function,
    stream_function_field,
    symbolic_metric,
    t,
    theta,
)


def vanishes(expr, points=((1.2, 0.3, 0.0), (1.7, 2.1, 0.4))):
    return all(abs(float(expr.subs({r: rr, theta: tt, t: time}))) < 1e-12 for rr, tt, time in points)


def test_symbolic_metric():
    s, c = symbolic_metric(EUCLIDEAN)
    assert s == r and c == 1
    s, c = symbolic_metric(SPHERE)
    assert float(s.subs(r, 0.5)) == pytest.approx(math.sin(0.5))
    assert float(c.subs(r, 0.5)) == pytest.approx(math.cos(0.5))


def test_stream_function_is_seeded():
    assert stream_function(1.0, 2.0, seed=4) == stream_function(1.0, 2.0, seed=4)
    assert stream_function(1.0, 2.0, seed=4) != stream_function(1.0, 2.0, seed=5)
    with pytest.raises(ValueError):
        stream_function(1.0, 2.0, time_factor='growing')


@pytest.mark.parametrize("manifold,delta,R", GEOMETRIES, ids=GEOMETRY_IDS)
def test_stream_field_is_divergence_free(manifold, delta, R):
    g = make_grid(manifold, delta, R, Nr=16, Ntheta=16)
    exact = stream_function_field(manifold, delta, R, seed=2)
    assert np.max(np.abs(exact.scalar('divergence', g).values)) < 1e-12
    u = exact.velocity(g)
    assert u.wall == 'noslip'
    assert u.wall_violation() < 1e-12
    assert np.max(np.abs(u.utheta[-1])) < 1e-12


def test_inflow_field_wall_values():
    delta, R = math.pi / 6, math.pi / 6 + 1.0
    g = make_grid(SPHERE, delta, R, Nr=16, Ntheta=16)
    u = inflow_stream_field(SPHERE, delta, R, 0.5).velocity(g)
    assert u.wall == 'inflow' and u.lambda0 == 0.5
    assert u.wall_violation() < 1e-12


def test_rigid_rotation_operators():
    rotation = SymbolicField.from_strings(EUCLIDEAN, 1.0, 2.0, "0", "r")
    lap_r, lap_t = rotation.vector_laplacian()
    assert vanishes(lap_r) and vanishes(lap_t)
    conv_r, conv_t = rotation.convection()
    assert vanishes(conv_r + r)
    assert vanishes(conv_t)
    assert vanishes(rotation.vorticity() - 2)


def test_from_strings_knows_geometry_names():
    f = SymbolicField.from_strings(EUCLIDEAN, 1.0, 3.0, "0", "(r - delta)*(R - r)*cos(theta)*exp(-t)")
    assert float(f.ut.subs({r: 2.0, theta: 0.0, t: 0.0})) == pytest.approx(1.0)


def test_coriolis_forcing_rotates_velocity():
    f = stream_function_field(SPHERE, math.pi / 6, math.pi / 6 + 1.0, seed=1)
    plain = f.momentum_forcing()
    rotating = f.momentum_forcing(beta=2.0)
    _, c = f.metric
    assert vanishes(rotating[0] - plain[0] + 2 * c * f.ut)
    assert vanishes(rotating[1] - plain[1] - 2 * c * f.ur)


def test_zero_field_needs_no_forcing():
    g = make_grid(EUCLIDEAN, 1.0, 2.0, Nr=16, Ntheta=16)
    zero = SymbolicField.from_strings(EUCLIDEAN, 1.0, 2.0, "0", "0")
    force = zero.forcing_function(g)(0.5)
    assert force.ur.shape == g.shape
    assert not np.any(force.ur) and not np.any(force.utheta)


def test_wall_coefficients_of_axisymmetric_profile():
    f = axisymmetric_field(EUCLIDEAN, 1.0, 2.0, "(r - delta)*(R - r)")
    c = f.wall_coefficients(0.0)
    assert c.k == pytest.approx(1.0)
    assert c.alpha1 == pytest.approx(1.0)
    assert c.alpha2 == pytest.approx(-2.0)
    assert c.alpha3 == pytest.approx(0.0)
    assert c.eta == pytest.approx(0.0)
