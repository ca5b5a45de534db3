"""Near-boundary incompressible Navier-Stokes solver on the annulus delta <= r <= R.

Momentum (unit viscosity, body force f optional):

    u_t = Delta u + 2K u - nabla_u u - beta c(r) *u + f - grad p,   div u = 0

Explicit Heun stepping; each stage is projected onto interior-divergence-free
fields with the wall rows imposed, not solved.
"""
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from lib import poisson
from lib.boundary import IdentityResidual, boundary_identity_residual
from lib.errors import CflError, ConfigError, GeometryError, NonFiniteError
from lib.fields import (
    AnnulusGrid,
    ScalarField,
    VelocityField,
    convection_full,
    convection_tangential,
    hodge_star_1form,
    kinetic_energy,
    laplacian_tangential,
    vector_laplacian,
)
from lib.geometry import ManifoldKind, metric_s, ricci_factor
from lib.manufactured import SymbolicField, axisymmetric_field, stream_function_field
from lib.separation_ode import BoundaryCoefficients
from lib.stencils import centered_time_derivative, d_theta
from lib.verification import observed_order

logger = logging.getLogger(__name__)

ForcingFn = Callable[[float], VelocityField]


class WallKind(str, Enum):
    NOSLIP = "noslip"
    INFLOW = "inflow"


class OuterKind(str, Enum):
    PRESCRIBED = "prescribed_tangential"
    STRESS_FREE = "stress_free"


@dataclass(frozen=True)
class OuterCondition:
    """Outer wall: prescribed U(theta) = mean + sum cos_m cos(m theta) + sum sin_m sin(m theta),
    or stress-free (zero normal derivative of u_theta / s)."""

    kind: OuterKind = OuterKind.PRESCRIBED
    mean: float = 0.0
    cos: Tuple[float, ...] = ()
    sin: Tuple[float, ...] = ()

    def __post_init__(self):
        try:
            object.__setattr__(self, 'kind', OuterKind(self.kind))
        except ValueError:
            raise ConfigError(f"Unknown outer condition {self.kind!r}")
        object.__setattr__(self, 'cos', tuple(float(x) for x in self.cos))
        object.__setattr__(self, 'sin', tuple(float(x) for x in self.sin))

    def velocity(self, theta: np.ndarray) -> np.ndarray:
        u = np.full_like(theta, self.mean, dtype=float)
        for m, amp in enumerate(self.cos, start=1):
            u += amp * np.cos(m * theta)
        for m, amp in enumerate(self.sin, start=1):
            u += amp * np.sin(m * theta)
        return u

    def derivative(self, theta: np.ndarray) -> np.ndarray:
        """dU/dtheta of the prescribed profile."""
        du = np.zeros_like(theta, dtype=float)
        for m, amp in enumerate(self.cos, start=1):
            du -= m * amp * np.sin(m * theta)
        for m, amp in enumerate(self.sin, start=1):
            du += m * amp * np.cos(m * theta)
        return du

    @property
    def is_homogeneous(self) -> bool:
        return self.kind is OuterKind.STRESS_FREE or (
            self.mean == 0.0 and not any(self.cos) and not any(self.sin)
        )


@dataclass(frozen=True)
class InitialField:
    """Initial data descriptor: rest, axisymmetric profile, stream-function modes,
    or the driven field matching the prescribed outer wall."""

    kind: str = "rest"
    params: Dict[str, Any] = field(default_factory=dict, hash=False, compare=False)

    def build(self, g: AnnulusGrid, seed: int = 0) -> Optional[SymbolicField]:
        p = self.params
        if self.kind in ("rest", "driven"):
            return None
        if self.kind == "axisymmetric":
            return axisymmetric_field(g.manifold, g.delta, g.R, p.get('profile'))
        if self.kind == "stream":
            return stream_function_field(
                g.manifold, g.delta, g.R,
                modes=int(p.get('modes', 2)),
                seed=int(p.get('seed', seed)),
                amplitude=float(p.get('amplitude', 0.1)),
            )
        raise ConfigError(f"Unknown initial field kind {self.kind!r}")


@dataclass
class SolverConfig:
    """Everything a run needs; viscosity is fixed at 1."""

    grid: AnnulusGrid
    dt: float
    t_end: float
    wall: WallKind = WallKind.NOSLIP
    lambda0: float = 0.0
    beta: float = 0.0
    outer: OuterCondition = field(default_factory=OuterCondition)
    initial: InitialField = field(default_factory=InitialField)
    p0_theta_index: int = 0
    snapshot_every: int = 0
    div_tol: float = poisson.DIV_TOLERANCE
    wall_tol: float = 1e-10
    max_projection_iterations: int = poisson.MAX_ITERATIONS
    seed: int = 0
    forcing: Optional[ForcingFn] = None
    initial_state: Optional[VelocityField] = None

    viscosity = 1.0

    def __post_init__(self):
        self.wall = WallKind(self.wall)
        if self.wall is WallKind.NOSLIP and self.lambda0 != 0.0:
            raise ConfigError("lambda0 must be 0 for a no-slip wall")
        if self.beta != 0.0 and self.grid.manifold.kind is not ManifoldKind.SPHERE:
            raise GeometryError(
                f"Coriolis parameter beta = {self.beta} requires the sphere, "
                f"got {self.grid.manifold.kind.value}"
            )
        if not (self.dt > 0.0 and self.t_end > 0.0):
            raise ConfigError(f"Need dt > 0 and t_end > 0, got dt={self.dt}, t_end={self.t_end}")
        if self.grid.Nr % 2:
            raise ConfigError(f"Solver grids need an even Nr, got {self.grid.Nr}")
        if not 0 <= self.p0_theta_index < self.grid.Ntheta:
            raise ConfigError(f"p0_theta_index {self.p0_theta_index} outside 0..{self.grid.Ntheta - 1}")

    @property
    def outflow_speed(self) -> float:
        """Outer normal speed carrying the inflow flux: lambda0 s(delta) / s(R)."""
        g = self.grid
        return self.lambda0 * float(metric_s(g.manifold, g.delta)) / float(metric_s(g.manifold, g.R))

    @property
    def wall_label(self) -> str:
        return self.wall.value


@dataclass
class Snapshot:
    t: float
    state: VelocityField
    pressure: ScalarField


@dataclass
class SimulationRecord:
    """Per-step boundary data at p0 plus diagnostics; row 0 is the initial state."""

    times: List[float] = field(default_factory=list)
    coefficients: List[BoundaryCoefficients] = field(default_factory=list)
    rhs_raw: List[float] = field(default_factory=list)
    rhs: List[float] = field(default_factory=list)
    energy: List[float] = field(default_factory=list)
    divergence: List[float] = field(default_factory=list)
    pressure_residual: List[float] = field(default_factory=list)
    residual: np.ndarray = field(default_factory=lambda: np.zeros(0))
    snapshots: List[Snapshot] = field(default_factory=list)
    final_state: Optional[VelocityField] = None

    def append(self, t: float, identity: IdentityResidual, energy: float,
               divergence: float, pressure_residual: float) -> None:
        self.times.append(t)
        self.coefficients.append(identity.coefficients)
        self.rhs_raw.append(identity.raw)
        self.rhs.append(identity.simplified)
        self.energy.append(energy)
        self.divergence.append(divergence)
        self.pressure_residual.append(pressure_residual)

    @property
    def alpha1(self) -> np.ndarray:
        return np.array([c.alpha1 for c in self.coefficients])

    def finish(self) -> None:
        """Fill the ODE residual |d alpha1/dt - rhs| from the recorded series."""
        if len(self.times) >= 3:
            dadt = centered_time_derivative(self.alpha1, self.times)
            self.residual = np.abs(dadt - np.asarray(self.rhs))
        else:
            self.residual = np.zeros(len(self.times))

    def rows(self) -> np.ndarray:
        """Columns t, alpha1, alpha2, alpha3, eta, rhs, residual."""
        c = self.coefficients
        return np.column_stack([
            self.times,
            [x.alpha1 for x in c], [x.alpha2 for x in c],
            [x.alpha3 for x in c], [x.eta for x in c],
            self.rhs, self.residual,
        ])

    def diagnostic_rows(self) -> np.ndarray:
        """Columns t, rhs_raw, energy, max_interior_div, pressure_boundary_residual."""
        return np.column_stack([self.times, self.rhs_raw, self.energy,
                                self.divergence, self.pressure_residual])


def rhs_momentum(state: VelocityField, cfg: SolverConfig, t: float = 0.0) -> VelocityField:
    """Delta u + 2K u - nabla_u u - beta c *u (+ body force)."""
    g = cfg.grid
    lap = vector_laplacian(state, g)
    conv = convection_full(state, g)
    K = ricci_factor(g.manifold)
    fr = lap.ur + 2.0 * K * state.ur - conv.ur
    ft = lap.utheta + 2.0 * K * state.utheta - conv.utheta
    if cfg.beta != 0.0:
        star = hodge_star_1form(state)
        fr = fr - cfg.beta * g.c * star.ur
        ft = ft - cfg.beta * g.c * star.utheta
    if cfg.forcing is not None:
        extra = cfg.forcing(t)
        fr = fr + extra.ur
        ft = ft + extra.utheta
    return VelocityField(fr, ft)


def apply_boundary(state: VelocityField, cfg: SolverConfig) -> VelocityField:
    """Impose the wall and outer conditions on a copy of state."""
    g = cfg.grid
    ur = state.ur.copy()
    ut = state.utheta.copy()
    ur[0] = cfg.lambda0
    ut[0] = 0.0
    ur[-1] = cfg.outflow_speed
    if cfg.outer.kind is OuterKind.PRESCRIBED:
        ut[-1] = cfg.outer.velocity(g.theta)
    else:
        s = g.s[:, 0]
        w2, w3 = ut[-2] / s[-2], ut[-3] / s[-3]
        ut[-1] = s[-1] * (4.0 * w2 - w3) / 3.0
    return VelocityField(ur, ut, cfg.wall_label, cfg.lambda0)


def driven_field(g: AnnulusGrid, outer: OuterCondition) -> VelocityField:
    """Divergence-free field that vanishes to second order at the wall and
    meets the prescribed outer U(theta).

    Stream function psi = -U(theta) phi(r), phi = (r - delta)^2 (r - R) / (R - delta)^2,
    so u_theta = U phi' with phi'(R) = 1 and u_r = -U' phi / s.
    """
    if outer.kind is not OuterKind.PRESCRIBED:
        raise ConfigError("A driven initial field needs a prescribed_tangential outer wall")
    r = g.r[:, None]
    span = (g.R - g.delta) ** 2
    phi = (r - g.delta) ** 2 * (r - g.R) / span
    dphi = (2.0 * (r - g.delta) * (r - g.R) + (r - g.delta) ** 2) / span
    U = outer.velocity(g.theta)[None, :]
    dU = outer.derivative(g.theta)[None, :]
    return VelocityField(-dU * phi / g.s, U * dphi)


def initial_state(cfg: SolverConfig) -> VelocityField:
    """Explicit initial_state as given; otherwise the descriptor field plus the
    radial inflow lambda0 s(delta) / s(r) when lambda0 != 0.

    The driven field is projected once so the first step starts discretely
    divergence-free.
    """
    g = cfg.grid
    if cfg.initial_state is not None:
        return apply_boundary(cfg.initial_state, cfg)
    if cfg.initial.kind == "driven":
        base = driven_field(g, cfg.outer)
    else:
        exact = cfg.initial.build(g, cfg.seed)
        base = VelocityField.zeros(g) if exact is None else exact.velocity(g, 0.0)
    ur = base.ur.copy()
    if cfg.lambda0 != 0.0:
        ur = ur + cfg.lambda0 * float(metric_s(g.manifold, g.delta)) / g.s
    state = apply_boundary(VelocityField(ur, base.utheta), cfg)
    if cfg.initial.kind == "driven":
        state, _ = poisson.project(state, g, cfg.div_tol, cfg.max_projection_iterations)
        state = apply_boundary(state, cfg)
    return state


def check_cfl(state: VelocityField, cfg: SolverConfig, dt: float) -> None:
    """Advective dt <= 0.5 h / max|u| and diffusive dt <= 0.25 h^2."""
    h = cfg.grid.min_spacing
    speed = float(np.max(np.hypot(state.ur, state.utheta)))
    diffusive = 0.25 * h * h
    if dt > diffusive * (1.0 + 1e-12):
        raise CflError(f"dt = {dt:.3e} exceeds the diffusive limit {diffusive:.3e}")
    if speed > 0.0 and dt > 0.5 * h / speed:
        raise CflError(f"dt = {dt:.3e} exceeds the advective limit {0.5 * h / speed:.3e} (max|u| = {speed:.3g})")


def pressure_projection(tentative: VelocityField, cfg: SolverConfig,
                        dt: Optional[float] = None) -> Tuple[VelocityField, ScalarField]:
    """Project onto interior-divergence-free fields.

    Returns the projected field and the pressure increment phi / dt, where the
    projected field is tentative - grad phi.
    """
    dt = cfg.dt if dt is None else dt
    projected, phi = poisson.project(tentative, cfg.grid, cfg.div_tol, cfg.max_projection_iterations)
    return projected, ScalarField(phi.values / dt)


def step(state: VelocityField, cfg: SolverConfig, t: float = 0.0,
         dt: Optional[float] = None) -> Tuple[VelocityField, ScalarField]:
    """One Heun step with projected stages.

    Returns:
        (state at t + dt, pressure p with dt grad p the total projected gradient)
    """
    dt = cfg.dt if dt is None else dt
    check_cfl(state, cfg, dt)
    f0 = rhs_momentum(state, cfg, t)
    stage = apply_boundary(VelocityField(state.ur + dt * f0.ur, state.utheta + dt * f0.utheta), cfg)
    u1, p1 = pressure_projection(stage, cfg, dt)

    f1 = rhs_momentum(u1, cfg, t + dt)
    stage = apply_boundary(VelocityField(0.5 * (state.ur + u1.ur + dt * f1.ur),
                                         0.5 * (state.utheta + u1.utheta + dt * f1.utheta)), cfg)
    u2, p2 = pressure_projection(stage, cfg, dt)
    pressure = ScalarField(0.5 * p1.values + p2.values)
    return u2, pressure


def pressure_boundary_residual(state: VelocityField, pressure: ScalarField, cfg: SolverConfig) -> float:
    """max over theta of |(1/s) d_theta p - P2| at r = delta.

    P2 = g(Delta u, e2) - g(nabla_u u, e2) + 2K u_theta - beta c u_r, the
    tangential wall pressure gradient the momentum equation implies.
    """
    g = cfg.grid
    s0, c0 = float(g.s[0, 0]), float(g.c[0, 0])
    K = ricci_factor(g.manifold)
    target = (laplacian_tangential(state, g).values[0] - convection_tangential(state, g).values[0]
              + 2.0 * K * state.utheta[0] - cfg.beta * c0 * state.ur[0])
    actual = d_theta(pressure.values, g.htheta)[0] / s0
    return float(np.max(np.abs(actual - target)))


def _identity(state: VelocityField, cfg: SolverConfig) -> IdentityResidual:
    return boundary_identity_residual(state, cfg.grid, cfg.p0_theta_index,
                                      lambda0=cfg.lambda0, beta=cfg.beta, wall_tol=cfg.wall_tol)


def run(cfg: SolverConfig) -> SimulationRecord:
    """Step from t = 0 to t_end, recording the boundary data at p0 each step.

    Raises:
        CflError, PoissonError, NonFiniteError: From the stepping
    """
    g = cfg.grid
    state = initial_state(cfg)
    record = SimulationRecord()
    pressure = ScalarField(np.zeros(g.shape))
    record.append(0.0, _identity(state, cfg), kinetic_energy(state, g),
                  poisson.interior_divergence(state, g), 0.0)

    n = max(1, int(math.ceil(cfg.t_end / cfg.dt - 1e-9)))
    t = 0.0
    for i in range(1, n + 1):
        dt = cfg.t_end - t if i == n else cfg.dt
        state, pressure = step(state, cfg, t, dt)
        t = cfg.t_end if i == n else t + dt
        if not (state.is_finite() and pressure.is_finite()):
            raise NonFiniteError("Velocity or pressure became non-finite", step=i)
        record.append(t, _identity(state, cfg), kinetic_energy(state, g),
                      poisson.interior_divergence(state, g),
                      pressure_boundary_residual(state, pressure, cfg))
        if cfg.snapshot_every and i % cfg.snapshot_every == 0:
            record.snapshots.append(Snapshot(t, state.copy(), pressure))
        if i % max(1, n // 10) == 0:
            logger.info("step %d/%d t=%.4g alpha1=%.6g energy=%.6g",
                        i, n, t, record.coefficients[-1].alpha1, record.energy[-1])

    record.final_state = state
    record.finish()
    return record


@dataclass
class MmsLevel:
    Nr: int
    Ntheta: int
    h: float
    dt: float
    error: float


@dataclass
class MmsReport:
    """Errors of the solver against a manufactured exact field per grid level."""

    levels: List[MmsLevel]
    orders: List[float]

    @property
    def order(self) -> float:
        return self.orders[-1] if self.orders else float('nan')


def manufactured_forcing_run(cfg: SolverConfig, exact: SymbolicField,
                             levels: int = 2, factors: Sequence[int] = ()) -> MmsReport:
    """Run the solver with the body force that makes `exact` a solution.

    Each refinement doubles Nr and Ntheta and divides dt by four. The error is
    the max interior velocity error at t_end.
    """
    factors = list(factors) or [2 ** i for i in range(levels)]
    results = []
    for factor in factors:
        base = cfg.grid
        g = AnnulusGrid(base.manifold, base.obstacle, base.R, base.Nr * factor, base.Ntheta * factor)
        level_cfg = SolverConfig(
            grid=g, dt=cfg.dt / factor ** 2, t_end=cfg.t_end, wall=cfg.wall,
            lambda0=cfg.lambda0, beta=cfg.beta, outer=OuterCondition(),
            p0_theta_index=cfg.p0_theta_index * factor, div_tol=cfg.div_tol,
            max_projection_iterations=cfg.max_projection_iterations, wall_tol=cfg.wall_tol,
            forcing=exact.forcing_function(g, cfg.beta),
            initial_state=exact.velocity(g, 0.0),
        )
        record = run(level_cfg)
        truth = exact.velocity(g, cfg.t_end)
        final = record.final_state
        err = max(float(np.max(np.abs(final.ur - truth.ur)[1:-1])),
                  float(np.max(np.abs(final.utheta - truth.utheta)[1:-1])))
        results.append(MmsLevel(g.Nr, g.Ntheta, g.min_spacing, level_cfg.dt, err))
        logger.info("MMS level %dx%d: error %.3e", g.Nr, g.Ntheta, err)

    orders = [observed_order(a.error, b.error, a.h, b.h) for a, b in zip(results, results[1:])]
    return MmsReport(levels=results, orders=orders)
