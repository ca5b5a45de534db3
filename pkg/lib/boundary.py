"""Wall derivatives at r = delta: ODE coefficients and the identity residual."""
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from lib.errors import PreconditionError
from lib.fields import AnnulusGrid, VelocityField, _check, divergence, interior_max
from lib.geometry import boundary_curvature_k, metric_c, metric_s, ricci_factor
from lib.separation_ode import BoundaryCoefficients, rhs_coriolis
from lib.stencils import d_theta, wall_derivative

logger = logging.getLogger(__name__)

JET_ORDER = 3
ANGULAR_ACCURACY = 4


@dataclass(frozen=True)
class WallJet:
    """Mixed derivatives d_r^m d_theta^n of both components along r = delta.

    ur[m, n] and ut[m, n] are arrays over the theta nodes.
    """

    ur: np.ndarray
    ut: np.ndarray


def wall_jet(f: VelocityField, g: AnnulusGrid) -> WallJet:
    """Evaluate the wall jet up to third order in each direction.

    Radial derivatives use the one-sided wall stencils (4th order for first and
    second derivatives, 2nd order for the third), angular ones the periodic
    centered stencils at 4th order.
    """
    _check(g, f.ur)
    n = JET_ORDER + 1
    jets = []
    for q in (f.ur, f.utheta):
        jet = np.empty((n, n, g.Ntheta))
        for k in range(n):
            qt = d_theta(q, g.htheta, k, accuracy=ANGULAR_ACCURACY)
            for m in range(n):
                jet[m, k] = wall_derivative(qt, g.hr, m)
        jets.append(jet)
    return WallJet(ur=jets[0], ut=jets[1])


def _coefficients_from_jet(jet: WallJet, g: AnnulusGrid, j: int,
                           lambda0: float, beta: float) -> BoundaryCoefficients:
    s = float(metric_s(g.manifold, g.delta))
    return BoundaryCoefficients(
        k=boundary_curvature_k(g.manifold, g.obstacle),
        alpha1=float(jet.ut[1, 0, j]),
        alpha2=float(jet.ut[2, 0, j]),
        alpha3=float(jet.ut[3, 0, j]),
        eta=float(jet.ut[1, 2, j]) / s ** 2,
        lambda0=lambda0,
        beta=beta,
        a=g.manifold.a,
        delta=g.delta,
        kind=g.manifold.kind,
    )


def extract_boundary_coefficients(f: VelocityField, g: AnnulusGrid, theta_index: int,
                                  lambda0: float = 0.0, beta: float = 0.0) -> BoundaryCoefficients:
    """Read k, alpha1..alpha3 and eta off the field at (delta, theta_j).

    Args:
        f: Velocity field on g
        g: Grid
        theta_index: Index j of the monitored boundary angle
        lambda0: Inflow speed carried into the result
        beta: Coriolis parameter carried into the result

    Returns:
        BoundaryCoefficients at the monitored point

    Raises:
        StencilError: If Nr is too small for the wall stencils
    """
    return _coefficients_from_jet(wall_jet(f, g), g, theta_index % g.Ntheta, lambda0, beta)


@dataclass(frozen=True)
class IdentityResidual:
    """Both sides of the boundary identity at one wall point.

    raw is the integrand built from field derivatives and the wall pressure
    relation; simplified is the ODE right-hand side from the extracted
    coefficients. wall_laplacian_gap is the discrepancy in replacing
    (1/s) d_theta g(Delta u, e1) by (1/s) d_theta d2_r u_r at the wall.
    """

    raw: float
    simplified: float
    residual: float
    wall_laplacian_gap: float
    coefficients: BoundaryCoefficients


def _check_preconditions(f: VelocityField, g: AnnulusGrid, lambda0: float,
                         div_tol: Optional[float], wall_tol: float) -> None:
    wall_u = max(np.max(np.abs(f.ur[0] - lambda0)), np.max(np.abs(f.utheta[0])))
    if wall_u > wall_tol:
        raise PreconditionError(
            f"Wall condition violated by {wall_u:.3e} (tolerance {wall_tol:.1e})"
        )
    if div_tol is not None:
        # the uniform inflow part is a boundary source and is not checked
        residual = VelocityField(f.ur - lambda0, f.utheta)
        div = interior_max(divergence(residual, g).values)
        if div > div_tol:
            raise PreconditionError(
                f"Interior divergence {div:.3e} exceeds tolerance {div_tol:.1e}"
            )


def boundary_identity_residual(f: VelocityField, g: AnnulusGrid, theta_index: int,
                               lambda0: float = 0.0, beta: float = 0.0,
                               div_tol: Optional[float] = None,
                               wall_tol: float = 1e-10,
                               gap_tol: Optional[float] = None) -> IdentityResidual:
    """Compare the raw wall integrand with the ODE right-hand side at (delta, theta_j).

    The raw integrand is

        d_r g(Delta u, e2) + 2K d_r u_theta - d_r g(nabla_u u, e2)
        - beta d_r(c u_r) + (c/s) P2 - (1/s) d_theta P1

    where P = Delta u - nabla_u u + 2K u - beta c *u is the pressure gradient
    the momentum equation imposes on the wall. The angular convection term is
    differentiated in its divergence-free form, u_theta d_theta u_theta ->
    -u_theta d_r(s u_r). With lambda0 = beta = 0 the simplified side is the
    plain ODE right-hand side.

    Args:
        f: Velocity field, no-slip (lambda0 = 0) or inflow at r = delta
        g: Grid
        theta_index: Monitored angle index
        lambda0: Inflow speed
        beta: Coriolis parameter (sphere only)
        div_tol: Optional bound on the interior divergence
        wall_tol: Bound on the wall-condition violation
        gap_tol: Optional bound on the wall Laplacian substitution gap, checked
            for no-slip fields (lambda0 = 0)

    Returns:
        IdentityResidual with raw, simplified and their difference

    Raises:
        PreconditionError: If the wall condition, divergence or gap bound fails
        GeometryError: If beta != 0 off the sphere
    """
    _check(g, f.ur)
    _check_preconditions(f, g, lambda0, div_tol, wall_tol)
    j = theta_index % g.Ntheta
    jet = wall_jet(f, g)
    coeffs = _coefficients_from_jet(jet, g, j, lambda0, beta)

    U = jet.ur[:, :, j]
    T = jet.ut[:, :, j]
    s = float(metric_s(g.manifold, g.delta))
    c = float(metric_c(g.manifold, g.delta))
    K = ricci_factor(g.manifold)
    dc = -K * s
    d_c_over_s = -1.0 / s ** 2
    d_c_over_s2 = (-K * s ** 2 - 2.0 * c * c) / s ** 3

    lap2 = -T[0, 0] / s ** 2 + c / s * T[1, 0] + T[2, 0] + c / s ** 2 * U[0, 1] - U[1, 1] / s
    lap2_r = (2.0 * c / s ** 3 * T[0, 0] - 2.0 / s ** 2 * T[1, 0] + c / s * T[2, 0] + T[3, 0]
              + d_c_over_s2 * U[0, 1] + 2.0 * c / s ** 2 * U[1, 1] - U[2, 1] / s)
    lap1_t = (U[0, 3] - c * T[0, 2] - s * T[1, 2]) / s ** 2

    conv2 = U[0, 0] * T[1, 0] + T[0, 0] * U[0, 0] * c / s + T[0, 0] * T[0, 1] / s
    div_r_term = c / s * U[0, 0] + U[1, 0]
    div_r_term_r = d_c_over_s * U[0, 0] + c / s * U[1, 0] + U[2, 0]
    conv2_r = (U[1, 0] * T[1, 0] + U[0, 0] * T[2, 0]
               + (T[1, 0] * U[0, 0] + T[0, 0] * U[1, 0]) * c / s
               + T[0, 0] * U[0, 0] * d_c_over_s
               - T[1, 0] * div_r_term - T[0, 0] * div_r_term_r)
    conv1_t = (U[0, 1] * U[1, 0] + U[0, 0] * U[1, 1]
               + (T[0, 1] * U[0, 1] + T[0, 0] * U[0, 2]) / s
               - 2.0 * c / s * T[0, 0] * T[0, 1])

    p2 = lap2 - conv2 + 2.0 * K * T[0, 0] - beta * c * U[0, 0]
    p1_t = lap1_t - conv1_t + 2.0 * K * U[0, 1] + beta * c * T[0, 1]

    raw = (lap2_r + 2.0 * K * T[1, 0] - conv2_r - beta * (dc * U[0, 0] + c * U[1, 0])
           + c / s * p2 - p1_t / s)
    simplified = rhs_coriolis(coeffs)
    gap = (lap1_t - U[2, 1]) / s
    if gap_tol is not None and lambda0 == 0.0 and abs(gap) > gap_tol:
        raise PreconditionError(
            f"Wall Laplacian substitution off by {abs(gap):.3e} at theta_{j} (tolerance {gap_tol:.1e})"
        )

    logger.debug("identity at theta_%d: raw=%.6e simplified=%.6e", j, raw, simplified)
    return IdentityResidual(
        raw=float(raw),
        simplified=float(simplified),
        residual=float(raw - simplified),
        wall_laplacian_gap=float(gap),
        coefficients=coeffs,
    )
