"""The scalar separation ODE for the wall shear alpha1(t).

Plain form:     d alpha1/dt = -k^2 alpha1 + 2k alpha2 + alpha3 + 2 eta
Coriolis form:  d alpha1/dt = -k(k + lambda0) alpha1 + (2k - lambda0) alpha2
                              + alpha3 + 2 eta + lambda0 beta (a sin(a delta) - k cos(a delta))

Separation happens at the first t0 with alpha1(t0) = 0.
"""
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Dict, Optional, Tuple

import numpy as np

from lib.errors import (
    DegenerateLimitError,
    GeometryError,
    NonFiniteError,
    PreconditionError,
    ScheduleError,
    StiffnessError,
)
from lib.geometry import ManifoldKind, ManifoldSpec, ObstacleSpec, boundary_curvature_k

logger = logging.getLogger(__name__)

# Absolute band for the "parallel" streamline class.
ETA_TOLERANCE = 1e-12
# Smallness factor for the profile remarks.
PROFILE_RHO = 0.1

SCHEDULE_KEYS = ('alpha2', 'alpha3', 'eta')


def _coriolis_forcing(k: float, lambda0: float, beta: float, a: float, delta: float) -> float:
    if lambda0 == 0.0 or beta == 0.0:
        return 0.0
    return lambda0 * beta * (a * math.sin(a * delta) - k * math.cos(a * delta))


def _reject_offsphere_beta(beta: float, kind: Optional[ManifoldKind], a: float) -> None:
    if beta == 0.0:
        return
    if (kind is not None and ManifoldKind(kind) is not ManifoldKind.SPHERE) or a <= 0.0:
        raise GeometryError(
            "Coriolis parameter beta != 0 is only defined on the sphere"
        )


@dataclass(frozen=True)
class BoundaryCoefficients:
    """ODE inputs at the monitored boundary point.

    When kind is given, k is checked against boundary_curvature_k(a, delta).
    """

    k: float
    alpha1: float = 0.0
    alpha2: float = 0.0
    alpha3: float = 0.0
    eta: float = 0.0
    lambda0: float = 0.0
    beta: float = 0.0
    a: float = 0.0
    delta: Optional[float] = None
    kind: Optional[ManifoldKind] = None

    def __post_init__(self):
        if self.kind is None or self.delta is None:
            return
        expected = boundary_curvature_k(ManifoldSpec(self.kind, self.a), ObstacleSpec(self.delta))
        if not math.isclose(self.k, expected, rel_tol=1e-9, abs_tol=1e-12):
            raise GeometryError(
                f"k = {self.k} inconsistent with geometry (expected {expected})"
            )

    @property
    def forcing(self) -> float:
        """Constant Coriolis/inflow term lambda0 beta (a sin(a delta) - k cos(a delta))."""
        _reject_offsphere_beta(self.beta, self.kind, self.a)
        if self.beta != 0.0 and self.delta is None:
            raise GeometryError("delta is required when beta != 0")
        return _coriolis_forcing(self.k, self.lambda0, self.beta, self.a, self.delta or 0.0)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'k': self.k, 'alpha1': self.alpha1, 'alpha2': self.alpha2,
            'alpha3': self.alpha3, 'eta': self.eta, 'lambda0': self.lambda0,
            'beta': self.beta, 'a': self.a, 'delta': self.delta,
            'kind': None if self.kind is None else ManifoldKind(self.kind).value,
        }


def _plain(k: float, alpha1: float, alpha2: float, alpha3: float, eta: float) -> float:
    return -k * k * alpha1 + 2.0 * k * alpha2 + alpha3 + 2.0 * eta


def _coriolis(k: float, lambda0: float, alpha1: float, alpha2: float, alpha3: float,
              eta: float, forcing: float) -> float:
    return -k * (k + lambda0) * alpha1 + (2.0 * k - lambda0) * alpha2 + alpha3 + 2.0 * eta + forcing


def rhs_plain(c: BoundaryCoefficients) -> float:
    """Right-hand side -k^2 alpha1 + 2k alpha2 + alpha3 + 2 eta."""
    return _plain(c.k, c.alpha1, c.alpha2, c.alpha3, c.eta)


def rhs_coriolis(c: BoundaryCoefficients) -> float:
    """Right-hand side with inflow speed lambda0 and Coriolis parameter beta.

    Equals rhs_plain exactly when lambda0 = beta = 0.

    Raises:
        GeometryError: If beta != 0 off the sphere
    """
    return _coriolis(c.k, c.lambda0, c.alpha1, c.alpha2, c.alpha3, c.eta, c.forcing)


# ---------------------------------------------------------------------------
# Schedules
# ---------------------------------------------------------------------------

class ScheduleKind(str, Enum):
    CONSTANT = "constant"
    POLYNOMIAL = "polynomial"
    SINUSOID = "sinusoid"
    TABLE = "table"


def _sinusoid(spec: Any) -> Callable[[float], float]:
    if isinstance(spec, (int, float)):
        value = float(spec)
        return lambda t: value
    mean = float(spec.get('mean', 0.0))
    amplitude = float(spec.get('amplitude', 0.0))
    omega = float(spec.get('omega', 1.0))
    phase = float(spec.get('phase', 0.0))
    return lambda t: mean + amplitude * math.sin(omega * t + phase)


@dataclass
class CoefficientSchedule:
    """t -> (alpha2, alpha3, eta) from a JSON-style descriptor.

    Descriptors:
        {"kind": "constant", "alpha2": 1.0, "alpha3": 0.0, "eta": 0.0}
        {"kind": "polynomial", "alpha2": [c0, c1, ...], ...}      ascending powers of t
        {"kind": "sinusoid", "alpha2": {"mean", "amplitude", "omega", "phase"}, ...}
        {"kind": "table", "t": [...], "alpha2": [...], "alpha3": [...], "eta": [...]}
    Missing quantities are zero. Tables are linearly interpolated.
    """

    kind: ScheduleKind
    params: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        try:
            self.kind = ScheduleKind(self.kind)
        except ValueError:
            raise ScheduleError(f"Unknown schedule kind {self.kind!r}")
        self._build()

    def _build(self) -> None:
        p = self.params
        self._span = (-math.inf, math.inf)
        if self.kind is ScheduleKind.CONSTANT:
            values = tuple(float(p.get(key, 0.0)) for key in SCHEDULE_KEYS)
            self._fn = lambda t: values
        elif self.kind is ScheduleKind.POLYNOMIAL:
            coeffs = [np.atleast_1d(np.asarray(p.get(key, [0.0]), dtype=float)) for key in SCHEDULE_KEYS]
            self._fn = lambda t: tuple(float(np.polynomial.polynomial.polyval(t, cf)) for cf in coeffs)
        elif self.kind is ScheduleKind.SINUSOID:
            parts = [_sinusoid(p.get(key, 0.0)) for key in SCHEDULE_KEYS]
            self._fn = lambda t: tuple(part(t) for part in parts)
        else:
            if 't' not in p:
                raise ScheduleError("Table schedule needs a 't' column")
            t = np.asarray(p['t'], dtype=float)
            if t.ndim != 1 or t.size < 2 or np.any(np.diff(t) <= 0):
                raise ScheduleError("Table times must be strictly increasing with at least two rows")
            columns = []
            for key in SCHEDULE_KEYS:
                col = np.asarray(p.get(key, np.zeros_like(t)), dtype=float)
                if col.shape != t.shape:
                    raise ScheduleError(f"Table column {key!r} has {col.size} rows, expected {t.size}")
                columns.append(col)
            self._span = (float(t[0]), float(t[-1]))
            self._fn = lambda s: tuple(float(np.interp(s, t, col)) for col in columns)

    @property
    def span(self) -> Tuple[float, float]:
        return self._span

    @property
    def is_constant(self) -> bool:
        return self.kind is ScheduleKind.CONSTANT

    def covers(self, t0: float, t1: float) -> bool:
        lo, hi = self._span
        return lo <= t0 and t1 <= hi

    def __call__(self, t: float) -> Tuple[float, float, float]:
        lo, hi = self._span
        if t < lo or t > hi:
            raise ScheduleError(f"Schedule undefined at t = {t} (span {lo}..{hi})")
        return self._fn(t)

    @classmethod
    def constant(cls, alpha2: float = 0.0, alpha3: float = 0.0, eta: float = 0.0) -> "CoefficientSchedule":
        return cls(ScheduleKind.CONSTANT, {'alpha2': alpha2, 'alpha3': alpha3, 'eta': eta})

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "CoefficientSchedule":
        if 'kind' not in data:
            raise ScheduleError("schedule.kind is required")
        params = {key: value for key, value in data.items() if key != 'kind'}
        return cls(data['kind'], params)

    def to_dict(self) -> Dict[str, Any]:
        out = {'kind': self.kind.value}
        for key, value in self.params.items():
            out[key] = value.tolist() if isinstance(value, np.ndarray) else value
        return out


# ---------------------------------------------------------------------------
# Integration
# ---------------------------------------------------------------------------

class OdeMode(str, Enum):
    PLAIN = "plain"
    CORIOLIS = "coriolis"


@dataclass(frozen=True)
class OdeGeometry:
    """Time-independent ODE parameters (k, a, delta, lambda0, beta)."""

    k: float
    a: float = 0.0
    delta: float = 1.0
    lambda0: float = 0.0
    beta: float = 0.0
    kind: Optional[ManifoldKind] = None

    def __post_init__(self):
        _reject_offsphere_beta(self.beta, self.kind, self.a)

    @classmethod
    def from_manifold(cls, m: ManifoldSpec, obs: ObstacleSpec,
                      lambda0: float = 0.0, beta: float = 0.0) -> "OdeGeometry":
        return cls(k=boundary_curvature_k(m, obs), a=m.a, delta=obs.delta,
                   lambda0=lambda0, beta=beta, kind=m.kind)

    @property
    def forcing(self) -> float:
        return _coriolis_forcing(self.k, self.lambda0, self.beta, self.a, self.delta)

    def decay_rate(self, mode: OdeMode) -> float:
        """Coefficient A in d alpha1/dt = -A alpha1 + ..."""
        if OdeMode(mode) is OdeMode.PLAIN:
            return self.k * self.k
        return self.k * (self.k + self.lambda0)

    def coefficients(self, alpha1: float, alpha2: float, alpha3: float, eta: float) -> BoundaryCoefficients:
        return BoundaryCoefficients(self.k, alpha1, alpha2, alpha3, eta,
                                    self.lambda0, self.beta, self.a, self.delta)


@dataclass
class OdeTrace:
    """Accepted samples of alpha1(t) and the right-hand side at each sample."""

    times: np.ndarray
    alpha1: np.ndarray
    rhs: np.ndarray
    mode: OdeMode

    def __len__(self):
        return len(self.times)

    def rows(self):
        return np.column_stack([self.times, self.alpha1, self.rhs])


def _rhs_function(mode: OdeMode, geom: OdeGeometry,
                  sched: CoefficientSchedule) -> Callable[[float, float], float]:
    if mode is OdeMode.PLAIN:
        def f(t, y):
            a2, a3, eta = sched(t)
            return _plain(geom.k, y, a2, a3, eta)
    else:
        forcing = geom.forcing

        def f(t, y):
            a2, a3, eta = sched(t)
            return _coriolis(geom.k, geom.lambda0, y, a2, a3, eta, forcing)
    return f


def integrate(mode: OdeMode, alpha1_0: float, sched: CoefficientSchedule,
              geom: OdeGeometry, t_end: float, dt: float) -> OdeTrace:
    """Classical fixed-step RK4 from t = 0 to t_end.

    The final step is shortened to land on t_end exactly.

    Raises:
        PreconditionError: If alpha1_0 <= 0, dt <= 0 or t_end <= 0
        StiffnessError: If |A| dt >= 1 for the decay coefficient A
        ScheduleError: If the schedule does not cover [0, t_end]
        NonFiniteError: If alpha1 stops being finite
    """
    mode = OdeMode(mode)
    if not alpha1_0 > 0.0:
        raise PreconditionError(f"Initial wall shear must be positive, got {alpha1_0}")
    if not (dt > 0.0 and t_end > 0.0):
        raise PreconditionError(f"Need dt > 0 and t_end > 0, got dt={dt}, t_end={t_end}")
    rate = geom.decay_rate(mode)
    if abs(rate) * dt >= 1.0:
        raise StiffnessError(f"|decay rate| * dt = {abs(rate) * dt:.3g} >= 1; reduce dt")
    if not sched.covers(0.0, t_end):
        raise ScheduleError(f"Schedule span {sched.span} does not cover [0, {t_end}]")

    f = _rhs_function(mode, geom, sched)
    n = max(1, int(math.ceil(t_end / dt - 1e-9)))
    times = np.empty(n + 1)
    alpha1 = np.empty(n + 1)
    rhs = np.empty(n + 1)

    t, y = 0.0, float(alpha1_0)
    times[0], alpha1[0] = t, y
    for i in range(n):
        h = min(dt, t_end - t) if i < n - 1 else t_end - t
        k1 = f(t, y)
        k2 = f(t + 0.5 * h, y + 0.5 * h * k1)
        k3 = f(t + 0.5 * h, y + 0.5 * h * k2)
        k4 = f(t + h, y + h * k3)
        rhs[i] = k1
        y = y + h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
        t = t_end if i == n - 1 else t + h
        if not math.isfinite(y):
            raise NonFiniteError("alpha1 became non-finite", step=i + 1)
        times[i + 1], alpha1[i + 1] = t, y
    rhs[n] = f(t, y)

    logger.debug("integrated %s ODE: %d steps to t=%g, alpha1=%g", mode.value, n, t, y)
    return OdeTrace(times=times, alpha1=alpha1, rhs=rhs, mode=mode)


def closed_form_alpha1(mode: OdeMode, alpha1_0: float, geom: OdeGeometry,
                       alpha2: float, alpha3: float, eta: float, t):
    """Exact alpha1(t) for a constant schedule."""
    mode = OdeMode(mode)
    rate = geom.decay_rate(mode)
    if mode is OdeMode.PLAIN:
        F = 2.0 * geom.k * alpha2 + alpha3 + 2.0 * eta
    else:
        F = (2.0 * geom.k - geom.lambda0) * alpha2 + alpha3 + 2.0 * eta + geom.forcing
    t = np.asarray(t, dtype=float)
    if rate == 0.0:
        return alpha1_0 + F * t
    star = F / rate
    return star + (alpha1_0 - star) * np.exp(-rate * t)


def detect_separation(tr: OdeTrace) -> Optional[float]:
    """First time alpha1 reaches zero, linearly interpolated; None if it never does."""
    a = np.asarray(tr.alpha1)
    hits = np.nonzero(a <= 0.0)[0]
    if hits.size == 0:
        return None
    i = int(hits[0])
    if a[i] == 0.0 or i == 0:
        return float(tr.times[i])
    t0, t1 = tr.times[i - 1], tr.times[i]
    a0, a1 = a[i - 1], a[i]
    return float(t0 + (t1 - t0) * a0 / (a0 - a1))


def asymptotic_fixed_point(geom: OdeGeometry, alpha2: float, alpha3: float, eta: float) -> float:
    """Long-time limit of alpha1 for constant (alpha2, alpha3, eta).

    Raises:
        DegenerateLimitError: If k(k + lambda0) <= 0
    """
    denom = geom.k * (geom.k + geom.lambda0)
    if denom <= 0.0:
        raise DegenerateLimitError(
            f"k(k + lambda0) = {denom:.6g} <= 0: alpha1 has no finite limit"
        )
    numer = (2.0 * geom.k - geom.lambda0) * alpha2 + alpha3 + 2.0 * eta + geom.forcing
    return numer / denom


# ---------------------------------------------------------------------------
# Classifiers
# ---------------------------------------------------------------------------

class StreamlineClass(str, Enum):
    CONVEXING = "convexing"
    PARALLEL = "parallel"
    CONCAVING = "concaving"


class ProfileClass(str, Enum):
    POISEUILLE = "poiseuille"
    BEFORE_SEPARATION = "before_separation"
    OTHER = "other"


def classify_streamlines(eta: float, tol: float = ETA_TOLERANCE) -> StreamlineClass:
    if eta < -tol:
        return StreamlineClass.CONVEXING
    if eta > tol:
        return StreamlineClass.CONCAVING
    return StreamlineClass.PARALLEL


def classify_profile(c: BoundaryCoefficients, rho: float = PROFILE_RHO) -> ProfileClass:
    """Poiseuille-type or before-separation wall profile, else other.

    "Small compared with" is read as |x| <= rho * max(reference terms).
    """
    if not 0.0 < rho < 1.0:
        raise ValueError(f"rho must lie in (0, 1), got {rho}")
    k = c.k
    if (c.alpha1 > 0.0 and c.alpha2 < 0.0 and -k * k * c.alpha1 + 2.0 * k * c.alpha2 < 0.0
            and abs(c.alpha3) <= rho * max(k * k * abs(c.alpha1), 2.0 * k * abs(c.alpha2))):
        return ProfileClass.POISEUILLE
    kp = max(abs(k), 1.0 / c.delta) if c.delta else abs(k)
    # a flat wall puts no scale on alpha1
    bound = rho * max(abs(c.alpha2) / kp, abs(c.alpha3) / kp ** 2) if kp > 0.0 else math.inf
    if (c.alpha2 > 0.0 and c.alpha3 < 0.0 and 2.0 * k * c.alpha2 + c.alpha3 < 0.0
            and abs(c.alpha1) <= bound):
        return ProfileClass.BEFORE_SEPARATION
    return ProfileClass.OTHER
