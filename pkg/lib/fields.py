"""Discrete fields near the obstacle and the coordinate operators acting on them.

All operators are pure: inputs are never mutated. Components are taken in
the orthonormal frame e1 = d/dr, e2 = (1/s) d/dtheta.
"""
import math
from dataclasses import dataclass, field
from typing import Any, Dict

import numpy as np
from scipy.integrate import trapezoid

from lib.errors import GeometryError, ShapeError
from lib.geometry import (
    ManifoldKind,
    ManifoldSpec,
    ObstacleSpec,
    metric_c,
    metric_s,
    ricci_factor,
)
from lib.stencils import d_r, d_theta

WALL_KINDS = ("none", "noslip", "inflow")


@dataclass(frozen=True)
class AnnulusGrid:
    """Collocated grid on delta <= r <= R, periodic in theta."""

    manifold: ManifoldSpec
    obstacle: ObstacleSpec
    R: float
    Nr: int
    Ntheta: int

    def __post_init__(self):
        object.__setattr__(self, 'R', float(self.R))
        if not self.R > self.obstacle.delta:
            raise GeometryError(f"Outer radius R = {self.R} must exceed delta = {self.obstacle.delta}")
        if self.Nr < 8 or self.Ntheta < 8:
            raise GeometryError(f"Grid needs Nr, Ntheta >= 8, got {self.Nr} x {self.Ntheta}")
        if self.manifold.kind is ManifoldKind.SPHERE and self.manifold.a * self.R >= math.pi:
            raise GeometryError("Annulus must stay inside the sphere (a*R < pi)")

    @property
    def shape(self):
        return (self.Nr, self.Ntheta)

    @property
    def delta(self) -> float:
        return self.obstacle.delta

    @property
    def hr(self) -> float:
        return (self.R - self.delta) / (self.Nr - 1)

    @property
    def htheta(self) -> float:
        return 2.0 * math.pi / self.Ntheta

    @property
    def r(self) -> np.ndarray:
        r = self.delta + self.hr * np.arange(self.Nr)
        r[0] = self.delta
        r[-1] = self.R
        return r

    @property
    def theta(self) -> np.ndarray:
        return self.htheta * np.arange(self.Ntheta)

    @property
    def s(self) -> np.ndarray:
        """s_a(r) as a column for broadcasting against (Nr, Ntheta) arrays."""
        return metric_s(self.manifold, self.r)[:, None]

    @property
    def c(self) -> np.ndarray:
        return metric_c(self.manifold, self.r)[:, None]

    @property
    def min_spacing(self) -> float:
        """Smallest physical spacing, used by the stability limits."""
        return min(self.hr, float(self.s[0, 0]) * self.htheta)

    def mesh(self):
        return np.meshgrid(self.r, self.theta, indexing='ij')

    def to_dict(self) -> Dict[str, Any]:
        return {
            'manifold': self.manifold.to_dict(),
            'delta': self.delta,
            'R': self.R,
            'Nr': self.Nr,
            'Ntheta': self.Ntheta,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "AnnulusGrid":
        return cls(
            manifold=ManifoldSpec.from_dict(data['manifold']),
            obstacle=ObstacleSpec(data['delta']),
            R=data['R'],
            Nr=int(data['Nr']),
            Ntheta=int(data['Ntheta']),
        )

    def refined(self, factor: int = 2) -> "AnnulusGrid":
        """Grid with spacings divided by factor (Nr - 1 and Ntheta scaled)."""
        return AnnulusGrid(self.manifold, self.obstacle, self.R,
                           (self.Nr - 1) * factor + 1, self.Ntheta * factor)


@dataclass
class VelocityField:
    """Frame components (u_r, u_theta) sampled on grid nodes.

    wall records the condition the field claims at r = delta:
    "noslip" (u = 0) or "inflow" (u_theta = 0, u_r = lambda0).
    """

    ur: np.ndarray
    utheta: np.ndarray
    wall: str = "none"
    lambda0: float = 0.0

    def __post_init__(self):
        self.ur = np.asarray(self.ur, dtype=float)
        self.utheta = np.asarray(self.utheta, dtype=float)
        if self.ur.shape != self.utheta.shape:
            raise ShapeError(f"Component shapes differ: {self.ur.shape} vs {self.utheta.shape}")
        if self.wall not in WALL_KINDS:
            raise ValueError(f"Unknown wall condition {self.wall!r}")

    def is_finite(self) -> bool:
        return bool(np.isfinite(self.ur).all() and np.isfinite(self.utheta).all())

    def wall_violation(self) -> float:
        """Largest departure from the flagged wall condition (0 when unflagged)."""
        if self.wall == "none":
            return 0.0
        target = self.lambda0 if self.wall == "inflow" else 0.0
        return float(max(np.max(np.abs(self.ur[0] - target)), np.max(np.abs(self.utheta[0]))))

    def copy(self) -> "VelocityField":
        return VelocityField(self.ur.copy(), self.utheta.copy(), self.wall, self.lambda0)

    @classmethod
    def zeros(cls, grid: AnnulusGrid, wall: str = "none") -> "VelocityField":
        return cls(np.zeros(grid.shape), np.zeros(grid.shape), wall)


@dataclass
class ScalarField:
    """Scalar samples on grid nodes (pressure, diagnostics)."""

    values: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)

    def is_finite(self) -> bool:
        return bool(np.isfinite(self.values).all())


def _check(g: AnnulusGrid, *arrays: np.ndarray) -> None:
    for arr in arrays:
        if arr.shape != g.shape:
            raise ShapeError(f"Field shape {arr.shape} does not match grid {g.shape}")


def divergence(f: VelocityField, g: AnnulusGrid) -> ScalarField:
    """(1/s)(d_r(s u_r) + d_theta u_theta)."""
    _check(g, f.ur)
    s = g.s
    return ScalarField((d_r(s * f.ur, g.hr) + d_theta(f.utheta, g.htheta)) / s)


def vorticity(f: VelocityField, g: AnnulusGrid) -> ScalarField:
    """*du = (1/s)(d_r(s u_theta) - d_theta u_r)."""
    _check(g, f.ur)
    s = g.s
    return ScalarField((d_r(s * f.utheta, g.hr) - d_theta(f.ur, g.htheta)) / s)


def hodge_star_1form(f: VelocityField) -> VelocityField:
    """*e1 = e2, *e2 = -e1: (u_r, u_theta) -> (-u_theta, u_r)."""
    return VelocityField(-f.utheta, f.ur.copy())


def laplacian_normal(f: VelocityField, g: AnnulusGrid, variant: str = "direct") -> ScalarField:
    """g(Delta u, e1).

    variant "direct":  (1/s^2)(d2_theta u_r - c d_theta u_theta - s d_r d_theta u_theta)
    variant "divergence_free": the equivalent form for divergence-free fields,
        (1/s^2) d2_theta u_r - (c/s^2) d_theta u_theta - K u_r + 2(c/s) d_r u_r + d2_r u_r
    """
    _check(g, f.ur)
    s, c = g.s, g.c
    ur_tt = d_theta(f.ur, g.htheta, 2)
    ut_t = d_theta(f.utheta, g.htheta)
    if variant == "direct":
        ut_rt = d_r(ut_t, g.hr)
        return ScalarField((ur_tt - c * ut_t - s * ut_rt) / s ** 2)
    if variant == "divergence_free":
        K = ricci_factor(g.manifold)
        return ScalarField((ur_tt - c * ut_t) / s ** 2 - K * f.ur
                           + 2.0 * c / s * d_r(f.ur, g.hr) + d_r(f.ur, g.hr, 2))
    raise ValueError(f"Unknown Laplacian variant {variant!r}")


def laplacian_tangential(f: VelocityField, g: AnnulusGrid) -> ScalarField:
    """g(Delta u, e2) = -u_theta/s^2 + (c/s) d_r u_theta + d2_r u_theta
    + (c/s^2) d_theta u_r - (1/s) d_r d_theta u_r."""
    _check(g, f.ur)
    s, c = g.s, g.c
    ut = f.utheta
    ur_t = d_theta(f.ur, g.htheta)
    return ScalarField(-ut / s ** 2 + c / s * d_r(ut, g.hr) + d_r(ut, g.hr, 2)
                       + c / s ** 2 * ur_t - d_r(ur_t, g.hr) / s)


def vector_laplacian(f: VelocityField, g: AnnulusGrid) -> VelocityField:
    """Hodge Laplacian -(dd* + d*d) on 1-forms, both frame components."""
    _check(g, f.ur)
    s, c = g.s, g.c
    hr, ht = g.hr, g.htheta

    def scalar_part(q):
        return d_r(q, hr, 2) + c / s * d_r(q, hr) + d_theta(q, ht, 2) / s ** 2 - q / s ** 2

    lr = scalar_part(f.ur) - 2.0 * c / s ** 2 * d_theta(f.utheta, ht)
    lt = scalar_part(f.utheta) + 2.0 * c / s ** 2 * d_theta(f.ur, ht)
    return VelocityField(lr, lt)


def convection_tangential(f: VelocityField, g: AnnulusGrid) -> ScalarField:
    """g(nabla_u u, e2) = u_r d_r u_theta + u_theta u_r c/s + (1/s) u_theta d_theta u_theta."""
    return ScalarField(convection_full(f, g).utheta)


def convection_full(f: VelocityField, g: AnnulusGrid) -> VelocityField:
    """Both frame components of nabla_u u from the connection table."""
    _check(g, f.ur)
    s, c = g.s, g.c
    ur, ut = f.ur, f.utheta
    e1 = ur * d_r(ur, g.hr) + ut * d_theta(ur, g.htheta) / s - c / s * ut * ut
    e2 = ur * d_r(ut, g.hr) + ut * ur * c / s + ut * d_theta(ut, g.htheta) / s
    return VelocityField(e1, e2)


def pressure_gradient(p: ScalarField, g: AnnulusGrid) -> VelocityField:
    """grad p = d_r p e1 + (1/s) d_theta p e2."""
    _check(g, p.values)
    return VelocityField(d_r(p.values, g.hr), d_theta(p.values, g.htheta) / g.s)


def pressure_identity_residual(p: ScalarField, g: AnnulusGrid) -> ScalarField:
    """d_r g(grad p, e2) + (c/s) g(grad p, e2) - (1/s) d_theta g(grad p, e1); zero for smooth p."""
    grad = pressure_gradient(p, g)
    s, c = g.s, g.c
    return ScalarField(d_r(grad.utheta, g.hr) + c / s * grad.utheta
                       - d_theta(grad.ur, g.htheta) / s)


def kinetic_energy(f: VelocityField, g: AnnulusGrid) -> float:
    """(1/2) integral of |u|^2 s dr dtheta, trapezoidal in r."""
    _check(g, f.ur)
    density = 0.5 * (f.ur ** 2 + f.utheta ** 2) * g.s
    radial = density.sum(axis=1) * g.htheta
    return float(trapezoid(radial, dx=g.hr))


def interior_max(q: np.ndarray) -> float:
    """Max |q| over rows strictly between the walls."""
    return float(np.max(np.abs(q[1:-1])))

