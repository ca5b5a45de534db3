"""End-to-end tests of the `separation` command through main()."""
import json
import logging
import math
from pathlib import Path

import numpy as np
import pytest

import separation
from lib.config_loader import (
    ENV_CONFIG, ENV_OUTPUT_DIR, ENV_WORKERS, ConfigLoader, config_hash, load_scenario,
)
from lib.storage import read_csv, read_json

ROOT = Path(__file__).parent.parent
SCENARIOS = ROOT / "scenarios"


@pytest.fixture(autouse=True)
def isolated_settings(monkeypatch):
    monkeypatch.setenv(ENV_CONFIG, str(ROOT / "config.yaml"))
    monkeypatch.setenv(ENV_WORKERS, "1")
    monkeypatch.delenv(ENV_OUTPUT_DIR, raising=False)
    root = logging.getLogger()
    handlers, level = root.handlers[:], root.level
    yield
    root.handlers[:] = handlers
    root.setLevel(level)


def run(command, scenario, out, *extra):
    return separation.main([command, '--config', str(scenario), '--out', str(out), '--quiet', *extra])


def write(tmp_path, doc, name="scenario.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc) if isinstance(doc, dict) else doc)
    return path


def test_ode_constant_schedule(tmp_path):
    assert run('ode', SCENARIOS / "ode_constant.json", tmp_path) == 0
    summary = read_json(tmp_path / "summary.json")
    assert summary['mode'] == 'plain'
    assert summary['alpha1_star'] == pytest.approx(1.4)
    assert summary['alpha1_final'] == pytest.approx(1.4, abs=1e-4)
    assert summary['t0'] is None
    assert summary['classifications']['final']['streamlines'] == 'concaving'

    meta, columns, rows = read_csv(tmp_path / "trace.csv")
    doc = load_scenario(SCENARIOS / "ode_constant.json")
    settings = ConfigLoader(str(ROOT / "config.yaml")).applied_settings()
    assert meta['config_sha256'] == config_hash(doc, 0, settings) == summary['provenance']['config_sha256']
    assert columns == ('t', 'alpha1', 'rhs')
    assert rows[-1, 0] == 10.0 and rows.shape[0] == 10001


def test_ode_crossing_reports_separation(tmp_path):
    assert run('ode', SCENARIOS / "ode_crossing.json", tmp_path) == 0
    summary = read_json(tmp_path / "summary.json")
    assert summary['t0'] == pytest.approx(math.log(1.5), abs=1e-6)
    assert summary['alpha1_star'] == pytest.approx(-2.0)


def test_coriolis_scenario(tmp_path):
    assert run('ode', SCENARIOS / "ode_coriolis.json", tmp_path) == 0
    summary = read_json(tmp_path / "summary.json")
    assert summary['mode'] == 'coriolis'
    assert summary['forcing'] > 0.0
    assert summary['alpha1_star'] is None


def test_seed_override_changes_provenance(tmp_path):
    assert run('ode', SCENARIOS / "ode_constant.json", tmp_path, '--seed', '9') == 0
    meta, _, _ = read_csv(tmp_path / "trace.csv")
    assert meta['seed'] == '9'


def test_settings_change_alters_provenance(tmp_path, monkeypatch):
    assert run('ode', SCENARIOS / "ode_constant.json", tmp_path / "shipped") == 0
    settings = (ROOT / "config.yaml").read_text().replace("dt: 1.0e-3", "dt: 2.0e-3")
    assert "dt: 2.0e-3" in settings
    custom = tmp_path / "config.yaml"
    custom.write_text(settings)
    monkeypatch.setenv(ENV_CONFIG, str(custom))
    assert run('ode', SCENARIOS / "ode_constant.json", tmp_path / "custom") == 0
    shipped, _, _ = read_csv(tmp_path / "shipped" / "trace.csv")
    changed, _, _ = read_csv(tmp_path / "custom" / "trace.csv")
    assert shipped['config_sha256'] != changed['config_sha256']


def test_levels_override_alters_provenance(tmp_path):
    doc = {'command': 'verify', 'verify': {'suites': ['ode']}}
    path = write(tmp_path, doc)
    assert run('verify', path, tmp_path / "two", '--levels', '2') == 0
    assert run('verify', path, tmp_path / "three", '--levels', '3') == 0
    two = read_json(tmp_path / "two" / "verify_report.json")['provenance']['config_sha256']
    three = read_json(tmp_path / "three" / "verify_report.json")['provenance']['config_sha256']
    assert two != three


def test_reruns_are_byte_identical(tmp_path):
    for name in ("a", "b"):
        assert run('ode', SCENARIOS / "ode_crossing.json", tmp_path / name) == 0
    for output in ("trace.csv", "summary.json"):
        assert (tmp_path / "a" / output).read_bytes() == (tmp_path / "b" / output).read_bytes()


@pytest.mark.parametrize("content", ['{"geometry": ', '[]', '{"geometry": {"kind": "euclidean"}, "mystery": 1}'])
def test_malformed_scenarios_exit_1(tmp_path, content):
    assert run('ode', write(tmp_path, content), tmp_path / "out") == 1


def test_missing_scenario_exits_1(tmp_path):
    assert run('ode', tmp_path / "absent.json", tmp_path / "out") == 1


def test_beta_off_sphere_exits_1(tmp_path, capsys):
    doc = load_scenario(SCENARIOS / "ode_constant.json")
    doc['ode'] = {**doc['ode'], 'mode': 'coriolis', 'lambda0': 0.5, 'beta': 2.0}
    assert run('ode', write(tmp_path, doc), tmp_path / "out") == 1
    assert "sphere" in capsys.readouterr().err
    assert not (tmp_path / "out" / "trace.csv").exists()


def test_stiff_step_exits_2(tmp_path):
    doc = load_scenario(SCENARIOS / "ode_constant.json")
    doc['ode'] = {**doc['ode'], 'dt': 2.0}
    assert run('ode', write(tmp_path, doc), tmp_path / "out") == 2


def test_negative_initial_alpha1_exits_1(tmp_path, capsys):
    doc = load_scenario(SCENARIOS / "ode_constant.json")
    doc['ode'] = {**doc['ode'], 'alpha1_0': -1.0}
    assert run('ode', write(tmp_path, doc), tmp_path / "out") == 1
    assert "ode.alpha1_0" in capsys.readouterr().err
    assert not (tmp_path / "out" / "trace.csv").exists()


def test_unknown_simulate_key_exits_1(tmp_path):
    doc = load_scenario(SCENARIOS / "simulate_rest.json")
    doc['simulate'] = {**doc['simulate'], 'viscosity': 0.1}
    assert run('simulate', write(tmp_path, doc), tmp_path / "out") == 1


def test_failed_verification_exits_3(tmp_path):
    assert run('verify', SCENARIOS / "verify_broken.json", tmp_path) == 3
    report = read_json(tmp_path / "verify_report.json")
    assert report['passed'] is False
    assert list(report)[0] == 'provenance'


def test_verify_ode_suite_passes(tmp_path):
    doc = {'command': 'verify', 'verify': {'suites': ['ode'], 'levels': 2}}
    assert run('verify', write(tmp_path, doc), tmp_path / "out") == 0
    assert read_json(tmp_path / "out" / "verify_report.json")['passed'] is True


def test_unknown_suite_exits_1(tmp_path):
    doc = {'verify': {'suites': ['tea_leaves']}}
    assert run('verify', write(tmp_path, doc), tmp_path / "out") == 1


def test_simulate_rest(tmp_path):
    assert run('simulate', SCENARIOS / "simulate_rest.json", tmp_path) == 0
    _, columns, rows = read_csv(tmp_path / "record.csv")
    assert columns == ('t', 'alpha1', 'alpha2', 'alpha3', 'eta', 'rhs', 'residual')
    assert rows.shape == (11, 7)
    assert np.all(rows[:, 1:] == 0.0)
    summary = read_json(tmp_path / "summary.json")
    assert summary['steps'] == 10 and summary['energy_final'] == 0.0


def test_simulate_cfl_violation_exits_2(tmp_path):
    doc = load_scenario(SCENARIOS / "simulate_rest.json")
    doc['simulate'] = {**doc['simulate'], 'dt': 0.05, 't_end': 0.1}
    assert run('simulate', write(tmp_path, doc), tmp_path / "out") == 2


def test_sweep_writes_cells_in_order(tmp_path):
    doc = load_scenario(SCENARIOS / "sweep.json")
    doc['sweep'] = {**doc['sweep'], 'lambda0': [0.5], 'beta': [0.0, 4.0]}
    assert run('sweep', write(tmp_path, doc), tmp_path / "out") == 0
    _, columns, rows = read_csv(tmp_path / "out" / "sweep.csv")
    assert columns == ('lambda0', 'beta', 't0_or_inf', 'alpha1_star')
    np.testing.assert_array_equal(rows[:, 1], [0.0, 4.0])
    assert math.isfinite(rows[0, 2]) and math.isinf(rows[1, 2])
    summary = read_json(tmp_path / "out" / "summary.json")
    assert summary['cells'] == 2 and summary['never_separates'] == 1


@pytest.mark.slow
def test_shipped_verify_scenario_passes(tmp_path):
    assert run('verify', SCENARIOS / "verify.json", tmp_path) == 0
    report = read_json(tmp_path / "verify_report.json")
    assert report['passed'] is True
    assert {c['suite'] for c in report['checks']} == {
        'geometry', 'operators', 'identity', 'coriolis_identity', 'ode'}


@pytest.mark.slow
def test_operators_check_passes(tmp_path):
    assert separation.main(['operators-check', '--out', str(tmp_path), '--quiet']) == 0
    report = read_json(tmp_path / "operators_report.json")
    assert report['passed'] is True and report['suites'] == ['geometry', 'operators']


@pytest.mark.slow
def test_simulate_driven(tmp_path):
    assert run('simulate', SCENARIOS / "simulate_driven.json", tmp_path) == 0
    _, _, rows = read_csv(tmp_path / "record.csv")
    assert np.all(np.isfinite(rows))
    assert np.any(rows[:, 1] != 0.0)
