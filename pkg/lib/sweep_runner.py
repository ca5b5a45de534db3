"""Parameter sweeps over (lambda0, beta), optionally a and delta.

Each cell integrates the Coriolis/inflow ODE from the same schedule and
records the first zero of alpha1 (or +inf when it never separates) and the
asymptotic fixed point. Cells are independent, so they run in a process
pool; results come back in cell order whatever the completion order.
"""
import itertools
import logging
import math
import multiprocessing as mp
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from lib.errors import ConfigError, DegenerateLimitError
from lib.geometry import ManifoldKind, ManifoldSpec, ObstacleSpec, check_obstacle
from lib.separation_ode import (
    CoefficientSchedule,
    OdeGeometry,
    OdeMode,
    asymptotic_fixed_point,
    detect_separation,
    integrate,
)

logger = logging.getLogger(__name__)

_CTX = mp.get_context("spawn")

BASE_COLUMNS = ('lambda0', 'beta', 't0_or_inf', 'alpha1_star')


@dataclass(frozen=True)
class SweepCell:
    a: float
    delta: float
    lambda0: float
    beta: float


@dataclass
class CellResult:
    cell: SweepCell
    t0: Optional[float]
    alpha1_star: float
    min_alpha1: float

    @property
    def separates(self) -> bool:
        return self.t0 is not None

    @property
    def t0_or_inf(self) -> float:
        return math.inf if self.t0 is None else self.t0


def _axis(name: str, values: Any) -> Tuple[float, ...]:
    out = tuple(float(v) for v in np.atleast_1d(np.asarray(values, dtype=float)))
    if not out:
        raise ConfigError(f"Sweep axis {name!r} is empty")
    if not all(math.isfinite(v) for v in out):
        raise ConfigError(f"Sweep axis {name!r} has non-finite values")
    return out


@dataclass
class SweepSpec:
    """Axes plus the ODE settings shared by every cell."""

    kind: ManifoldKind
    lambda0: Sequence[float]
    beta: Sequence[float]
    a: Sequence[float] = (1.0,)
    delta: Sequence[float] = (1.0,)
    schedule: Dict[str, Any] = field(default_factory=lambda: {'kind': 'constant'})
    alpha1_0: float = 1.0
    t_end: float = 10.0
    dt: float = 1e-2
    allow_large_obstacle: bool = False

    def __post_init__(self):
        self.kind = ManifoldKind(self.kind)
        self.lambda0 = _axis('lambda0', self.lambda0)
        self.beta = _axis('beta', self.beta)
        self.a = (0.0,) if self.kind is ManifoldKind.EUCLIDEAN else _axis('a', self.a)
        self.delta = _axis('delta', self.delta)
        CoefficientSchedule.from_dict(self.schedule)

    @property
    def sweeps_geometry(self) -> bool:
        return len(self.a) > 1 or len(self.delta) > 1

    @property
    def columns(self) -> Tuple[str, ...]:
        return (('a', 'delta') if self.sweeps_geometry else ()) + BASE_COLUMNS

    def cells(self) -> List[SweepCell]:
        """Cells in output order: a, delta, lambda0, then beta fastest."""
        return [SweepCell(a, d, lam, b)
                for a, d, lam, b in itertools.product(self.a, self.delta, self.lambda0, self.beta)]

    def geometry(self, cell: SweepCell) -> OdeGeometry:
        m = ManifoldSpec(self.kind, cell.a)
        obs = ObstacleSpec(cell.delta)
        check_obstacle(m, obs, self.allow_large_obstacle)
        return OdeGeometry.from_manifold(m, obs, cell.lambda0, cell.beta)


def run_cell(spec: SweepSpec, cell: SweepCell) -> CellResult:
    geom = spec.geometry(cell)
    sched = CoefficientSchedule.from_dict(spec.schedule)
    trace = integrate(OdeMode.CORIOLIS, spec.alpha1_0, sched, geom, spec.t_end, spec.dt)
    star = math.nan
    if sched.is_constant:
        try:
            star = asymptotic_fixed_point(geom, *sched(0.0))
        except DegenerateLimitError:
            logger.debug("no fixed point for %s", cell)
    return CellResult(cell, detect_separation(trace), star, float(np.min(trace.alpha1)))


def _cell_task(args: Tuple[SweepSpec, SweepCell]) -> CellResult:
    return run_cell(*args)


def run_sweep(spec: SweepSpec, workers: Optional[int] = None) -> List[CellResult]:
    """Run every cell; workers <= 1 runs in-process.

    Returns:
        One CellResult per cell, in SweepSpec.cells() order
    """
    cells = spec.cells()
    # Validate every cell before any work is dispatched.
    for cell in cells:
        spec.geometry(cell)
    if workers is None:
        workers = mp.cpu_count() or 1
    workers = max(1, min(int(workers), len(cells)))
    logger.info("sweeping %d cells on %d worker(s)", len(cells), workers)

    tasks = [(spec, cell) for cell in cells]
    if workers == 1:
        return [_cell_task(task) for task in tasks]
    chunksize = max(1, len(cells) // (8 * workers))
    with ProcessPoolExecutor(max_workers=workers, mp_context=_CTX) as pool:
        return list(pool.map(_cell_task, tasks, chunksize=chunksize))


def result_rows(spec: SweepSpec, results: Sequence[CellResult]) -> np.ndarray:
    """Numeric table matching spec.columns; t0_or_inf is +inf for 'never'."""
    rows = []
    for res in results:
        c = res.cell
        head = [c.a, c.delta] if spec.sweeps_geometry else []
        rows.append(head + [c.lambda0, c.beta, res.t0_or_inf, res.alpha1_star])
    return np.asarray(rows, dtype=float).reshape(len(rows), len(spec.columns))
