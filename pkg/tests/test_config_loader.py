"""Tests for settings files and scenario resolution."""
import json
import math

import pytest

from lib.config_loader import (
    ENV_CONFIG,
    ENV_OUTPUT_DIR,
    ENV_WORKERS,
    ConfigLoader,
    build_ode_run,
    build_solver_config,
    build_sweep_spec,
    config_hash,
    load_config,
    load_scenario,
    scenario_seed,
)
from lib.errors import ConfigError, DomainError, GeometryError
from lib.geometry import ManifoldKind
from lib.ns_solver import OuterKind, WallKind
from lib.separation_ode import OdeMode

ODE_DOC = {
    'command': 'ode',
    'geometry': {'kind': 'euclidean', 'a': 0.0},
    'obstacle': {'delta': 1.0},
    'ode': {'schedule': {'kind': 'constant', 'alpha2': 0.5}},
}


@pytest.fixture
def settings_file(tmp_path):
    path = tmp_path / "config.yaml"
    path.write_text(
        "tolerances:\n  eta: 1.0e-9\n"
        "ode:\n  dt: 0.01\n"
        "verify:\n  levels: 4\n  suites: [ode]\n"
        "sweep:\n  workers: 3\n"
        "output:\n  dir: out_here\n"
    )
    return path


@pytest.fixture
def settings(settings_file, monkeypatch):
    monkeypatch.delenv(ENV_WORKERS, raising=False)
    monkeypatch.delenv(ENV_OUTPUT_DIR, raising=False)
    return ConfigLoader(str(settings_file))


def write_scenario(tmp_path, doc, name="scenario.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc) if not isinstance(doc, str) else doc)
    return path


def test_settings_values(settings):
    tol = settings.get_tolerances()
    assert tol['eta'] == 1e-9
    assert tol['divergence'] == 1e-10
    assert settings.get_ode_defaults() == {'dt': 0.01, 't_end': 10.0, 'alpha1_0': 1.0}
    verify = settings.get_verify_settings()
    assert verify['levels'] == 4 and verify['suites'] == ['ode'] and verify['thresholds'] == {}
    assert settings.get_sweep_workers() == 3
    assert settings.get_output_dir().name == "out_here"


def test_environment_overrides(settings, monkeypatch, tmp_path):
    monkeypatch.setenv(ENV_WORKERS, "1")
    monkeypatch.setenv(ENV_OUTPUT_DIR, str(tmp_path / "elsewhere"))
    assert settings.get_sweep_workers() == 1
    assert settings.get_output_dir() == tmp_path / "elsewhere"


@pytest.mark.parametrize("raw", ["0", "many"])
def test_bad_worker_count(settings, monkeypatch, raw):
    monkeypatch.setenv(ENV_WORKERS, raw)
    with pytest.raises(ConfigError, match="sweep.workers"):
        settings.get_sweep_workers()


def test_missing_and_malformed_settings(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        ConfigLoader(str(tmp_path / "missing.yaml"))
    bad = tmp_path / "bad.yaml"
    bad.write_text("tolerances: [unclosed\n")
    with pytest.raises(ConfigError, match="Malformed"):
        ConfigLoader(str(bad))
    scalar = tmp_path / "scalar.yaml"
    scalar.write_text("just a string\n")
    with pytest.raises(ConfigError, match="mapping"):
        ConfigLoader(str(scalar))


def test_load_scenario(tmp_path):
    assert load_scenario(write_scenario(tmp_path, ODE_DOC)) == ODE_DOC
    with pytest.raises(ConfigError, match="not found"):
        load_scenario(tmp_path / "nope.json")
    with pytest.raises(ConfigError, match="Malformed JSON"):
        load_scenario(write_scenario(tmp_path, '{"geometry": ', "broken.json"))
    with pytest.raises(ConfigError, match="JSON object"):
        load_scenario(write_scenario(tmp_path, [1, 2], "list.json"))
    with pytest.raises(ConfigError, match="colour"):
        load_scenario(write_scenario(tmp_path, {**ODE_DOC, 'colour': 'red'}, "extra.json"))


def test_config_hash_is_canonical():
    reordered = {k: ODE_DOC[k] for k in reversed(list(ODE_DOC))}
    assert config_hash(ODE_DOC, 0) == config_hash(reordered, 0)
    assert config_hash(ODE_DOC, 0) != config_hash(ODE_DOC, 1)
    assert len(config_hash(ODE_DOC, 0)) == 64
    assert 'seed' not in ODE_DOC


def test_config_hash_covers_settings(settings):
    applied = settings.applied_settings()
    assert config_hash(ODE_DOC, 0, applied) != config_hash(ODE_DOC, 0)
    assert config_hash(ODE_DOC, 0, applied) == config_hash(ODE_DOC, 0, settings.applied_settings())
    assert config_hash(ODE_DOC, 0, applied) != config_hash(ODE_DOC, 0, settings.applied_settings(levels=2))


def test_applied_settings(settings):
    applied = settings.applied_settings(levels=2)
    assert set(applied) == {'tolerances', 'ode', 'verify'}
    assert applied['tolerances']['eta'] == 1e-9
    assert applied['ode']['dt'] == 0.01
    assert applied['verify']['levels'] == 2
    assert settings.applied_settings()['verify']['levels'] == 4


def test_load_config_reads_the_environment(settings_file, monkeypatch):
    monkeypatch.setenv(ENV_CONFIG, str(settings_file))
    loader = load_config()
    assert isinstance(loader, ConfigLoader)
    assert loader.get_ode_defaults()['dt'] == 0.01
    scenario = settings_file.parent / "scenario.json"
    scenario.write_text(json.dumps(ODE_DOC))
    assert loader.load_scenario(str(scenario)) == ODE_DOC
    with pytest.raises(ConfigError, match="not found"):
        loader.load_scenario(str(settings_file.parent / "absent.json"))


def test_scenario_seed():
    assert scenario_seed({}) == 0
    assert scenario_seed({'seed': 7}) == 7
    assert scenario_seed({'seed': 7}, override=2) == 2
    with pytest.raises(ConfigError):
        scenario_seed({'seed': -1})
    with pytest.raises(ConfigError):
        scenario_seed({'seed': "3"})


def test_ode_run_defaults_to_plain():
    run = build_ode_run(ODE_DOC, {'dt': 0.02, 't_end': 5.0})
    assert run['mode'] is OdeMode.PLAIN
    assert run['geometry'].k == 1.0
    assert run['dt'] == 0.02 and run['t_end'] == 5.0 and run['alpha1_0'] == 1.0
    assert run['schedule'](3.0) == (0.5, 0.0, 0.0)


def test_ode_run_switches_to_coriolis():
    doc = {**ODE_DOC, 'geometry': {'kind': 'sphere', 'a': 1.0},
           'ode': {'lambda0': 0.5, 'beta': 4.0}}
    run = build_ode_run(doc)
    assert run['mode'] is OdeMode.CORIOLIS
    assert run['geometry'].forcing == pytest.approx(
        2.0 * (math.sin(1.0) - math.cos(1.0) ** 2 / math.sin(1.0)))


@pytest.mark.parametrize("doc,error,match", [
    ({**ODE_DOC, 'ode': {'mode': 'plain', 'lambda0': 0.5}}, ConfigError, "plain"),
    ({**ODE_DOC, 'ode': {'mode': 'implicit'}}, ConfigError, "ode.mode"),
    ({**ODE_DOC, 'ode': {'beta': 1.0}}, GeometryError, "sphere"),
    ({**ODE_DOC, 'ode': {'dt': -1.0}}, ConfigError, "ode.dt"),
    ({**ODE_DOC, 'ode': {'dt': "fast"}}, ConfigError, "ode.dt"),
    ({**ODE_DOC, 'ode': {'alpha1_0': -1.0}}, ConfigError, "ode.alpha1_0"),
    ({**ODE_DOC, 'ode': {'alpha1': 1.0}}, ConfigError, "alpha1"),
    ({**ODE_DOC, 'ode': {'schedule': {'kind': 'spline'}}}, ConfigError, "ode.schedule"),
    ({k: v for k, v in ODE_DOC.items() if k != 'obstacle'}, ConfigError, "obstacle"),
    ({**ODE_DOC, 'geometry': {'kind': 'sphere', 'a': 1.0}, 'obstacle': {'delta': 4.0}}, DomainError, "pi"),
])
def test_invalid_ode_scenarios(doc, error, match):
    with pytest.raises(error, match=match):
        build_ode_run(doc)


SIMULATE_DOC = {
    'geometry': {'kind': 'euclidean', 'a': 0.0},
    'obstacle': {'delta': 1.0},
    'simulate': {'R': 2.0, 'Nr': 16, 'Ntheta': 16, 'dt': 1e-3, 't_end': 1e-2,
                 'outer': {'kind': 'prescribed_tangential', 'mean': 1.0, 'cos': [0.3]}},
}


def test_solver_config():
    cfg = build_solver_config(SIMULATE_DOC, seed=5, tolerances={'divergence': 1e-9})
    assert cfg.grid.shape == (16, 16)
    assert cfg.wall is WallKind.NOSLIP
    assert cfg.outer.kind is OuterKind.PRESCRIBED and cfg.outer.cos == (0.3,)
    assert cfg.initial.kind == 'rest'
    assert cfg.div_tol == 1e-9 and cfg.seed == 5


@pytest.mark.parametrize("update,error", [
    ({'Nr': 16.5}, ConfigError),
    ({'initial': {'kind': 'vortex'}}, ConfigError),
    ({'outer': {'kind': 'sliding'}}, ConfigError),
    ({'beta': 2.0}, GeometryError),
    ({'R': 0.5}, GeometryError),
    ({'viscosity': 0.1}, ConfigError),
    ({'initial': {'kind': 'stream', 'modes': 0}}, ConfigError),
])
def test_invalid_solver_configs(update, error):
    doc = {**SIMULATE_DOC, 'simulate': {**SIMULATE_DOC['simulate'], **update}}
    with pytest.raises(error):
        build_solver_config(doc)


def test_sweep_spec():
    doc = {'geometry': {'kind': 'sphere', 'a': 1.0}, 'obstacle': {'delta': 1.0},
           'sweep': {'lambda0': [0.1, 0.2], 'beta': [0.0, 1.0, 2.0]}}
    spec = build_sweep_spec(doc)
    assert spec.kind is ManifoldKind.SPHERE
    assert spec.a == (1.0,) and spec.delta == (1.0,)
    assert len(spec.cells()) == 6


@pytest.mark.parametrize("sweep,match", [
    ({'beta': [0.0]}, "lambda0"),
    ({'lambda0': [], 'beta': [0.0]}, "sweep.lambda0"),
    ({'lambda0': [0.1], 'beta': [0.0], 't_end': 0.0}, "sweep.t_end"),
    ({'lambda0': [0.1], 'beta': [0.0], 'schedule': {'kind': 'spline'}}, "sweep"),
])
def test_invalid_sweep_specs(sweep, match):
    doc = {'geometry': {'kind': 'sphere', 'a': 1.0}, 'sweep': sweep}
    with pytest.raises(ConfigError, match=match):
        build_sweep_spec(doc)


def test_solver_config_carries_wall_tolerance():
    assert build_solver_config(SIMULATE_DOC).wall_tol == 1e-10
    assert build_solver_config(SIMULATE_DOC, tolerances={'wall': 1e-8}).wall_tol == 1e-8


def test_shipped_scenarios_validate():
    from pathlib import Path

    shipped = sorted((Path(__file__).parent.parent / "scenarios").glob("*.json"))
    assert shipped
    for path in shipped:
        assert isinstance(load_scenario(path), dict)
