"""Tests for the (lambda0, beta) sweep."""
import math

import numpy as np
import pytest

from lib.errors import ConfigError, DomainError, GeometryError
from lib.separation_ode import CoefficientSchedule, OdeGeometry, OdeMode, detect_separation, integrate
from lib.sweep_runner import BASE_COLUMNS, SweepCell, SweepSpec, result_rows, run_cell, run_sweep

NEGATIVE_SHEAR = {'kind': 'constant', 'alpha2': -0.5}


def sphere_spec(**kwargs):
    params = dict(kind='sphere', lambda0=[0.5], beta=[0.0, 4.0], a=[1.0], delta=[1.0],
                  schedule=NEGATIVE_SHEAR, t_end=20.0, dt=0.01)
    params.update(kwargs)
    return SweepSpec(**params)


def test_cells_vary_beta_fastest():
    spec = sphere_spec(lambda0=[0.1, 0.2], beta=[0.0, 1.0, 2.0])
    assert [(c.lambda0, c.beta) for c in spec.cells()] == [
        (0.1, 0.0), (0.1, 1.0), (0.1, 2.0), (0.2, 0.0), (0.2, 1.0), (0.2, 2.0)]
    assert spec.columns == BASE_COLUMNS


def test_geometry_axes_add_columns():
    spec = sphere_spec(delta=[0.8, 1.0])
    assert spec.sweeps_geometry
    assert spec.columns == ('a', 'delta') + BASE_COLUMNS
    assert [c.delta for c in spec.cells()] == [0.8, 0.8, 1.0, 1.0]


def test_euclidean_ignores_curvature_axis():
    spec = SweepSpec('euclidean', lambda0=[0.1], beta=[0.0], a=[1.0, 2.0])
    assert spec.a == (0.0,)
    assert not spec.sweeps_geometry


def test_zero_inflow_matches_plain_ode():
    spec = SweepSpec('euclidean', lambda0=[0.0], beta=[0.0], schedule={'kind': 'constant', 'alpha2': -1.0},
                     t_end=2.0, dt=1e-3)
    result = run_cell(spec, spec.cells()[0])
    plain = integrate(OdeMode.PLAIN, 1.0, CoefficientSchedule.constant(-1.0), OdeGeometry(k=1.0), 2.0, 1e-3)
    assert result.t0 == detect_separation(plain)
    assert result.t0 == pytest.approx(math.log(1.5), abs=1e-6)
    assert result.alpha1_star == -2.0


def test_never_separating_cell():
    results = run_sweep(sphere_spec(), workers=1)
    separating, never = results
    assert separating.separates and separating.t0 < 20.0
    assert not never.separates
    assert never.t0_or_inf == math.inf
    assert never.min_alpha1 > 0.0
    assert never.alpha1_star > 0.0 > separating.alpha1_star

    rows = result_rows(sphere_spec(), results)
    assert rows.shape == (2, 4)
    assert np.isinf(rows[1, 2])
    np.testing.assert_array_equal(rows[:, :2], [[0.5, 0.0], [0.5, 4.0]])


def test_fixed_point_only_for_constant_schedules():
    spec = sphere_spec(beta=[4.0], schedule={'kind': 'polynomial', 'alpha2': [-0.5, 0.01]})
    result = run_sweep(spec, workers=1)[0]
    assert math.isnan(result.alpha1_star)


def test_invalid_cells_rejected_before_running():
    with pytest.raises(DomainError):
        run_sweep(sphere_spec(delta=[1.0, 4.0]), workers=1)
    with pytest.raises(GeometryError):
        run_sweep(SweepSpec('hyperbolic', lambda0=[0.5], beta=[1.0]), workers=1)


def test_large_obstacle_needs_override():
    with pytest.raises(DomainError):
        run_sweep(sphere_spec(delta=[2.0], t_end=1.0), workers=1)
    results = run_sweep(sphere_spec(delta=[2.0], t_end=1.0, allow_large_obstacle=True), workers=1)
    assert len(results) == 2


@pytest.mark.parametrize("axes", [{'lambda0': []}, {'beta': [math.nan]}])
def test_bad_axes(axes):
    params = {'lambda0': [0.1], 'beta': [0.0]}
    params.update(axes)
    with pytest.raises(ConfigError):
        SweepSpec('sphere', **params)


@pytest.mark.slow
def test_pool_matches_serial_order():
    spec = sphere_spec(lambda0=[0.1, 0.5, 1.0], beta=[0.0, 2.0, 4.0, 8.0])
    serial = run_sweep(spec, workers=1)
    pooled = run_sweep(spec, workers=2)
    assert [r.cell for r in pooled] == spec.cells()
    assert [(r.t0, r.alpha1_star, r.min_alpha1) for r in pooled] == \
        [(r.t0, r.alpha1_star, r.min_alpha1) for r in serial]
    assert isinstance(pooled[0].cell, SweepCell)
