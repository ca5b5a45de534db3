"""Manufactured velocity fields with exact operator values.

Fields are sympy expressions in (r, theta, t). Divergence-free fields come
from a stream function psi through u_r = (1/s) d_theta psi, u_theta = -d_r psi;
a (r - delta)^2 (R - r)^2 factor makes them vanish on both walls.
"""
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Tuple

import numpy as np
import sympy as sp

from lib.fields import AnnulusGrid, ScalarField, VelocityField
from lib.geometry import (
    ManifoldKind,
    ManifoldSpec,
    ObstacleSpec,
    boundary_curvature_k,
    ricci_factor,
)
from lib.separation_ode import BoundaryCoefficients

r, theta, t = sp.symbols('r theta t', real=True)

TIME_FACTORS = {
    'steady': sp.Integer(1),
    'decay': sp.exp(-t),
    'oscillating': 1 + sp.sin(t) / 2,
}


def symbolic_metric(m: ManifoldSpec) -> Tuple[sp.Expr, sp.Expr]:
    """(s, c) as sympy expressions in r."""
    a = sp.Float(m.a)
    if m.kind is ManifoldKind.SPHERE:
        return sp.sin(a * r) / a, sp.cos(a * r)
    if m.kind is ManifoldKind.HYPERBOLIC:
        return sp.sinh(a * r) / a, sp.cosh(a * r)
    return r, sp.Integer(1)


def _evaluator(expr: sp.Expr) -> Callable:
    fn = sp.lambdify((r, theta, t), expr, 'numpy')

    def evaluate(rr, tt, time=0.0):
        out = np.asarray(fn(rr, tt, time), dtype=float)
        return np.broadcast_to(out, np.broadcast(rr, tt).shape).copy()
    return evaluate


@dataclass
class SymbolicField:
    """Exact velocity field (u_r, u_theta) on an annulus geometry."""

    manifold: ManifoldSpec
    delta: float
    R: float
    ur: sp.Expr
    ut: sp.Expr
    wall: str = "none"
    lambda0: float = 0.0
    _cache: Dict[str, Callable] = field(default_factory=dict, repr=False)

    @classmethod
    def from_strings(cls, manifold: ManifoldSpec, delta: float, R: float,
                     ur: str, ut: str, wall: str = "none", lambda0: float = 0.0) -> "SymbolicField":
        """Parse component expressions written in r, theta, t, delta, R."""
        names = {'r': r, 'theta': theta, 't': t, 'delta': sp.Float(delta), 'R': sp.Float(R)}
        return cls(manifold, delta, R, sp.sympify(ur, locals=names),
                   sp.sympify(ut, locals=names), wall, lambda0)

    @property
    def metric(self) -> Tuple[sp.Expr, sp.Expr]:
        return symbolic_metric(self.manifold)

    # -- exact operators ---------------------------------------------------

    def divergence(self) -> sp.Expr:
        s, _ = self.metric
        return (sp.diff(s * self.ur, r) + sp.diff(self.ut, theta)) / s

    def vorticity(self) -> sp.Expr:
        s, _ = self.metric
        return (sp.diff(s * self.ut, r) - sp.diff(self.ur, theta)) / s

    def laplacian_normal(self) -> sp.Expr:
        s, c = self.metric
        return (sp.diff(self.ur, theta, 2) - c * sp.diff(self.ut, theta)
                - s * sp.diff(self.ut, r, theta)) / s ** 2

    def laplacian_normal_divergence_free(self) -> sp.Expr:
        s, c = self.metric
        K = ricci_factor(self.manifold)
        return ((sp.diff(self.ur, theta, 2) - c * sp.diff(self.ut, theta)) / s ** 2 - K * self.ur
                + 2 * c / s * sp.diff(self.ur, r) + sp.diff(self.ur, r, 2))

    def laplacian_tangential(self) -> sp.Expr:
        s, c = self.metric
        return (-self.ut / s ** 2 + c / s * sp.diff(self.ut, r) + sp.diff(self.ut, r, 2)
                + c / s ** 2 * sp.diff(self.ur, theta) - sp.diff(self.ur, r, theta) / s)

    def vector_laplacian(self) -> Tuple[sp.Expr, sp.Expr]:
        s, c = self.metric

        def scalar_part(q):
            return sp.diff(q, r, 2) + c / s * sp.diff(q, r) + sp.diff(q, theta, 2) / s ** 2 - q / s ** 2

        return (scalar_part(self.ur) - 2 * c / s ** 2 * sp.diff(self.ut, theta),
                scalar_part(self.ut) + 2 * c / s ** 2 * sp.diff(self.ur, theta))

    def convection(self) -> Tuple[sp.Expr, sp.Expr]:
        s, c = self.metric
        ur, ut = self.ur, self.ut
        return (ur * sp.diff(ur, r) + ut * sp.diff(ur, theta) / s - c / s * ut ** 2,
                ur * sp.diff(ut, r) + ut * ur * c / s + ut * sp.diff(ut, theta) / s)

    def momentum_forcing(self, beta: float = 0.0) -> Tuple[sp.Expr, sp.Expr]:
        """Body force that makes this field solve the momentum equation with p = 0."""
        _, c = self.metric
        K = ricci_factor(self.manifold)
        lap = self.vector_laplacian()
        conv = self.convection()
        b = sp.Float(beta)
        fr = sp.diff(self.ur, t) + conv[0] - lap[0] - 2 * K * self.ur - b * c * self.ut
        ft = sp.diff(self.ut, t) + conv[1] - lap[1] - 2 * K * self.ut + b * c * self.ur
        return fr, ft

    # -- numerical evaluation ----------------------------------------------

    def _eval(self, name: str, expr: sp.Expr, g: AnnulusGrid, time: float) -> np.ndarray:
        if name not in self._cache:
            self._cache[name] = _evaluator(expr)
        rr, tt = g.mesh()
        return self._cache[name](rr, tt, time)

    def velocity(self, g: AnnulusGrid, time: float = 0.0) -> VelocityField:
        return VelocityField(self._eval('ur', self.ur, g, time),
                             self._eval('ut', self.ut, g, time),
                             self.wall, self.lambda0)

    def scalar(self, name: str, g: AnnulusGrid, time: float = 0.0) -> ScalarField:
        """Exact scalar operator value on the grid ('divergence', 'vorticity', ...)."""
        return ScalarField(self._eval(name, getattr(self, name)(), g, time))

    def pair(self, name: str, g: AnnulusGrid, time: float = 0.0, **kwargs) -> VelocityField:
        """Exact two-component operator value ('vector_laplacian', 'convection', 'momentum_forcing')."""
        key = name + repr(sorted(kwargs.items()))
        exprs = getattr(self, name)(**kwargs)
        return VelocityField(self._eval(key + ':r', exprs[0], g, time),
                             self._eval(key + ':t', exprs[1], g, time))

    def forcing_function(self, g: AnnulusGrid, beta: float = 0.0) -> Callable[[float], VelocityField]:
        """t -> momentum forcing sampled on g."""
        return lambda time: self.pair('momentum_forcing', g, time, beta=beta)

    def wall_coefficients(self, theta0: float, time: float = 0.0,
                          beta: float = 0.0) -> BoundaryCoefficients:
        """Exact k, alpha1..alpha3 and eta at (delta, theta0)."""
        s, _ = self.metric
        at = {r: self.delta, theta: theta0, t: time}
        alphas = [float(sp.diff(self.ut, r, n).subs(at)) for n in (1, 2, 3)]
        eta = float((sp.diff(self.ut, r, theta, theta) / s ** 2).subs(at))
        return BoundaryCoefficients(
            k=boundary_curvature_k(self.manifold, ObstacleSpec(self.delta)),
            alpha1=alphas[0], alpha2=alphas[1], alpha3=alphas[2], eta=eta,
            lambda0=self.lambda0, beta=beta, a=self.manifold.a,
            delta=self.delta, kind=self.manifold.kind,
        )


def stream_function(delta: float, R: float, modes: int = 2, seed: int = 0,
                    amplitude: float = 1.0, time_factor: str = 'steady') -> sp.Expr:
    """psi = A (r - delta)^2 (R - r)^2 sum_m (a_m cos m theta + b_m sin m theta) T(t)."""
    if time_factor not in TIME_FACTORS:
        raise ValueError(f"Unknown time factor {time_factor!r}; expected one of {sorted(TIME_FACTORS)}")
    rng = np.random.default_rng(seed)
    coeffs = rng.uniform(-1.0, 1.0, size=(modes + 1, 2))
    series = sp.Float(coeffs[0, 0])
    for m in range(1, modes + 1):
        series += sp.Float(coeffs[m, 0]) * sp.cos(m * theta) + sp.Float(coeffs[m, 1]) * sp.sin(m * theta)
    envelope = (r - sp.Float(delta)) ** 2 * (sp.Float(R) - r) ** 2
    return sp.Float(amplitude) * envelope * series * TIME_FACTORS[time_factor]


def stream_function_field(manifold: ManifoldSpec, delta: float, R: float, modes: int = 2,
                          seed: int = 0, amplitude: float = 1.0,
                          time_factor: str = 'steady') -> SymbolicField:
    """Divergence-free field vanishing on both walls, from random stream-function modes."""
    psi = stream_function(delta, R, modes, seed, amplitude, time_factor)
    s, _ = symbolic_metric(manifold)
    return SymbolicField(manifold, delta, R, sp.diff(psi, theta) / s, -sp.diff(psi, r), wall="noslip")


def inflow_stream_field(manifold: ManifoldSpec, delta: float, R: float, lambda0: float,
                        modes: int = 2, seed: int = 0, amplitude: float = 1.0,
                        time_factor: str = 'steady') -> SymbolicField:
    """Stream-function field plus a uniform normal speed lambda0.

    On r = delta: u_theta = 0, u_r = lambda0 and d_r u_r = 0.
    """
    base = stream_function_field(manifold, delta, R, modes, seed, amplitude, time_factor)
    return SymbolicField(manifold, delta, R, base.ur + sp.Float(lambda0), base.ut,
                         wall="inflow", lambda0=lambda0)


def axisymmetric_field(manifold: ManifoldSpec, delta: float, R: float,
                       profile: Optional[str] = None) -> SymbolicField:
    """theta-independent tangential flow; default profile vanishes on both walls."""
    profile = profile or "4*(r - delta)*(R - r)/(R - delta)**2"
    return SymbolicField.from_strings(manifold, delta, R, "0", profile, wall="noslip")
