"""Configuration loader for tool settings and scenario documents."""
import copy
import hashlib
import json
import logging
import os
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, Optional

import jsonschema
import yaml
from dotenv import load_dotenv
from jsonschema.exceptions import best_match

from lib.errors import ConfigError, GeometryError, ScheduleError
from lib.fields import AnnulusGrid
from lib.geometry import ManifoldSpec, ObstacleSpec, check_obstacle
from lib.separation_ode import CoefficientSchedule, OdeGeometry, OdeMode

logger = logging.getLogger(__name__)

ENV_CONFIG = 'SEPARATION_ODE_CONFIG'
ENV_OUTPUT_DIR = 'SEPARATION_ODE_OUTPUT_DIR'
ENV_WORKERS = 'SEPARATION_ODE_WORKERS'

USER_DIR = Path.home() / ".separation_ode"
PACKAGE_DIR = Path(__file__).parent.parent
SCHEMA_PATH = PACKAGE_DIR / "docs" / "config_schema.json"


class ConfigLoader:
    """Handles tool settings from config.yaml and .env, and scenario JSON documents."""

    def __init__(self, config_path: str = None):
        """Initialize the config loader.

        Args:
            config_path: Path to the YAML settings file. Defaults to
                $SEPARATION_ODE_CONFIG, then ~/.separation_ode/config.yaml,
                then the config.yaml shipped next to the package.
        """
        self._load_env()
        if config_path is None:
            config_path = os.getenv(ENV_CONFIG)
        if config_path is None:
            user_config = USER_DIR / "config.yaml"
            config_path = user_config if user_config.exists() else PACKAGE_DIR / "config.yaml"

        self.config_path = Path(config_path)
        self.config = None
        self._load_config()

    def _load_env(self):
        """Load environment overrides from a .env file (user directory first)."""
        for env_path in (USER_DIR / ".env", PACKAGE_DIR / ".env"):
            if env_path.exists():
                load_dotenv(env_path)
                logger.debug("loaded environment from %s", env_path)
                return

    def _load_config(self):
        """Load settings from the YAML file."""
        if not self.config_path.exists():
            raise ConfigError(f"Settings file not found: {self.config_path}")
        try:
            with open(self.config_path, 'r', encoding='utf-8') as f:
                self.config = yaml.safe_load(f) or {}
        except yaml.YAMLError as e:
            raise ConfigError(f"Malformed settings file {self.config_path}: {e}")
        if not isinstance(self.config, dict):
            raise ConfigError(f"Settings file {self.config_path} must hold a mapping")

    def get_tolerances(self) -> Dict[str, float]:
        """Get numerical tolerances.

        Returns:
            Dictionary with 'eta', 'divergence', 'wall' and 'profile_rho'
        """
        defaults = {'eta': 1e-12, 'divergence': 1e-10, 'wall': 1e-10, 'profile_rho': 0.1}
        defaults.update(self.config.get('tolerances', {}) or {})
        return {key: float(value) for key, value in defaults.items()}

    def get_ode_defaults(self) -> Dict[str, float]:
        """Get default integration settings for `ode` scenarios.

        Returns:
            Dictionary with 'dt', 't_end' and 'alpha1_0'
        """
        defaults = {'dt': 1e-3, 't_end': 10.0, 'alpha1_0': 1.0}
        defaults.update(self.config.get('ode', {}) or {})
        return defaults

    def get_verify_settings(self) -> Dict[str, Any]:
        """Get verification defaults.

        Returns:
            Dictionary with 'levels', 'suites' (None means the default set)
            and 'thresholds' overrides
        """
        section = self.config.get('verify', {}) or {}
        return {
            'levels': int(section.get('levels', 3)),
            'suites': section.get('suites'),
            'thresholds': dict(section.get('thresholds', {}) or {}),
        }

    def get_sweep_workers(self) -> Optional[int]:
        """Get the worker count for sweeps; None means one per CPU.

        The environment variable SEPARATION_ODE_WORKERS wins over the file.
        """
        raw = os.getenv(ENV_WORKERS)
        if raw is None:
            raw = (self.config.get('sweep', {}) or {}).get('workers')
        if raw is None:
            return None
        try:
            workers = int(raw)
        except (TypeError, ValueError):
            raise ConfigError(f"sweep.workers must be an integer, got {raw!r}")
        if workers < 1:
            raise ConfigError(f"sweep.workers must be >= 1, got {workers}")
        return workers

    def get_output_dir(self) -> Path:
        """Get the default output directory.

        Returns:
            $SEPARATION_ODE_OUTPUT_DIR, else output.dir from the settings,
            else ./results
        """
        raw = os.getenv(ENV_OUTPUT_DIR) or (self.config.get('output', {}) or {}).get('dir') or "results"
        return Path(raw).expanduser()

    def applied_settings(self, levels: Optional[int] = None) -> Dict[str, Any]:
        """Settings that can change a run's numbers, as resolved right now.

        Worker count and output directory are left out; they never change
        results.

        Args:
            levels: --levels override, replacing verify.levels when given
        """
        verify = self.get_verify_settings()
        if levels is not None:
            verify['levels'] = int(levels)
        return {
            'tolerances': self.get_tolerances(),
            'ode': self.get_ode_defaults(),
            'verify': verify,
        }

    def load_scenario(self, path: str) -> Dict[str, Any]:
        """Load a scenario JSON document and validate it against the schema.

        Args:
            path: Path to the JSON file

        Returns:
            The parsed document

        Raises:
            ConfigError: If the file is missing, not JSON, or fails the schema
        """
        return load_scenario(path)


def load_config(config_path: str = None) -> ConfigLoader:
    """Convenience function to load configuration.

    Args:
        config_path: Path to the YAML settings file

    Returns:
        ConfigLoader instance
    """
    return ConfigLoader(config_path)


@lru_cache(maxsize=1)
def _scenario_validator() -> jsonschema.Draft7Validator:
    try:
        with open(SCHEMA_PATH, 'r', encoding='utf-8') as f:
            schema = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"Cannot read scenario schema {SCHEMA_PATH}: {e}")
    jsonschema.Draft7Validator.check_schema(schema)
    return jsonschema.Draft7Validator(schema)


def validate_scenario(doc: Dict[str, Any]) -> None:
    """Check a scenario against docs/config_schema.json.

    Raises:
        ConfigError: Naming the dotted path of the most relevant violation
    """
    error = best_match(_scenario_validator().iter_errors(doc))
    if error is None:
        return
    where = ".".join(str(part) for part in error.absolute_path) or "scenario"
    raise ConfigError(f"{where}: {error.message}")


def load_scenario(path: str) -> Dict[str, Any]:
    scenario_path = Path(path)
    if not scenario_path.exists():
        raise ConfigError(f"Scenario file not found: {scenario_path}")
    try:
        with open(scenario_path, 'r', encoding='utf-8') as f:
            doc = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"Malformed JSON in {scenario_path}: line {e.lineno}: {e.msg}")
    if not isinstance(doc, dict):
        raise ConfigError(f"Scenario {scenario_path} must be a JSON object")
    validate_scenario(doc)
    return doc


def config_hash(doc: Dict[str, Any], seed: int, settings: Optional[Dict[str, Any]] = None) -> str:
    """SHA-256 of the canonical JSON of the scenario, the seed and the applied settings."""
    payload = {'scenario': copy.deepcopy(doc), 'seed': int(seed), 'settings': settings or {}}
    canonical = json.dumps(payload, sort_keys=True, separators=(',', ':'), ensure_ascii=True)
    return hashlib.sha256(canonical.encode('utf-8')).hexdigest()


# ---------------------------------------------------------------------------
# Section readers. Types and ranges come from the schema; what is left here
# are the rules that tie several fields together.
# ---------------------------------------------------------------------------

def _section(doc: Dict[str, Any], name: str, required: bool = True) -> Dict[str, Any]:
    value = doc.get(name)
    if value is None:
        if required:
            raise ConfigError(f"Scenario is missing the '{name}' section")
        return {}
    return value


def scenario_seed(doc: Dict[str, Any], override: Optional[int] = None) -> int:
    if override is not None:
        return int(override)
    seed = doc.get('seed', 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise ConfigError(f"seed must be a non-negative integer, got {seed!r}")
    return seed


def build_manifold(doc: Dict[str, Any]) -> ManifoldSpec:
    return ManifoldSpec.from_dict(_section(doc, 'geometry'))


def build_obstacle(doc: Dict[str, Any], m: ManifoldSpec) -> ObstacleSpec:
    section = _section(doc, 'obstacle')
    obs = ObstacleSpec(float(section['delta']))
    check_obstacle(m, obs, bool(section.get('allow_large_obstacle', False)))
    return obs


def build_schedule(section: Dict[str, Any], where: str) -> CoefficientSchedule:
    try:
        return CoefficientSchedule.from_dict(section.get('schedule', {'kind': 'constant'}))
    except (ScheduleError, TypeError, ValueError) as e:
        raise ConfigError(f"{where}.schedule: {e}")


def build_ode_run(doc: Dict[str, Any], defaults: Optional[Dict[str, float]] = None) -> Dict[str, Any]:
    """Resolve an `ode` scenario.

    Returns:
        Dictionary with 'mode', 'geometry' (OdeGeometry), 'schedule',
        'alpha1_0', 't_end', 'dt'
    """
    validate_scenario(doc)
    defaults = defaults or {}
    m = build_manifold(doc)
    obs = build_obstacle(doc, m)
    section = _section(doc, 'ode')
    lambda0 = float(section.get('lambda0', 0.0))
    beta = float(section.get('beta', 0.0))
    mode = OdeMode(section.get('mode', 'coriolis' if (lambda0 or beta) else 'plain'))
    if mode is OdeMode.PLAIN and (lambda0 or beta):
        raise ConfigError("ode.mode 'plain' cannot carry lambda0 or beta; use 'coriolis'")
    geom = OdeGeometry.from_manifold(m, obs, lambda0, beta)
    return {
        'mode': mode,
        'geometry': geom,
        'schedule': build_schedule(section, 'ode'),
        'alpha1_0': float(section.get('alpha1_0', defaults.get('alpha1_0', 1.0))),
        't_end': float(section.get('t_end', defaults.get('t_end', 10.0))),
        'dt': float(section.get('dt', defaults.get('dt', 1e-3))),
    }


def build_solver_config(doc: Dict[str, Any], seed: int = 0,
                        tolerances: Optional[Dict[str, float]] = None):
    """Resolve a `simulate` scenario into a SolverConfig."""
    from lib.ns_solver import InitialField, OuterCondition, SolverConfig

    validate_scenario(doc)
    tolerances = tolerances or {}
    m = build_manifold(doc)
    obs = build_obstacle(doc, m)
    section = _section(doc, 'simulate')
    grid = AnnulusGrid(m, obs, float(section['R']), section['Nr'], section['Ntheta'])
    outer_raw = section.get('outer', {})
    initial_raw = section.get('initial', {'kind': 'rest'})

    try:
        return SolverConfig(
            grid=grid,
            dt=float(section['dt']),
            t_end=float(section['t_end']),
            wall=section.get('wall', 'noslip'),
            lambda0=float(section.get('lambda0', 0.0)),
            beta=float(section.get('beta', 0.0)),
            outer=OuterCondition(
                kind=outer_raw.get('kind', 'prescribed_tangential'),
                mean=float(outer_raw.get('mean', 0.0)),
                cos=tuple(outer_raw.get('cos', ())),
                sin=tuple(outer_raw.get('sin', ())),
            ),
            initial=InitialField(initial_raw['kind'],
                                 {k: v for k, v in initial_raw.items() if k != 'kind'}),
            p0_theta_index=section.get('p0_theta_index', 0),
            snapshot_every=section.get('snapshot_every', 0),
            div_tol=float(tolerances.get('divergence', 1e-10)),
            wall_tol=float(tolerances.get('wall', 1e-10)),
            seed=seed,
        )
    except (GeometryError, ConfigError):
        raise
    except (TypeError, ValueError) as e:
        raise ConfigError(f"simulate: {e}")


def build_sweep_spec(doc: Dict[str, Any]):
    """Resolve a `sweep` scenario into a SweepSpec."""
    from lib.sweep_runner import SweepSpec

    validate_scenario(doc)
    geometry = _section(doc, 'geometry')
    section = _section(doc, 'sweep')
    obstacle = _section(doc, 'obstacle', required=False)
    try:
        return SweepSpec(
            kind=geometry.get('kind', 'euclidean'),
            lambda0=section['lambda0'],
            beta=section['beta'],
            a=section.get('a', [geometry.get('a', 1.0)]),
            delta=section.get('delta', [obstacle.get('delta', 1.0)]),
            schedule=section.get('schedule', {'kind': 'constant'}),
            alpha1_0=float(section.get('alpha1_0', 1.0)),
            t_end=float(section.get('t_end', 10.0)),
            dt=float(section.get('dt', 1e-2)),
            allow_large_obstacle=bool(obstacle.get('allow_large_obstacle', False)),
        )
    except ConfigError:
        raise
    except (ScheduleError, TypeError, ValueError) as e:
        raise ConfigError(f"sweep: {e}")
