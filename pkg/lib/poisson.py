"""Pressure projection on the collocated annulus grid.

The projection removes the discrete gradient of phi from the interior rows
only, so wall values are never touched. With the centered divergence and
centered gradient the resulting operator acts on every other node in each
direction:

    theta: Fourier modes with eigenvalue -(sin(m h_theta) / h_theta)^2
    r:     a pentadiagonal band per mode, coupling phi_{i-2}, phi_i, phi_{i+2}

The radial system leaves one free value per parity chain. Two closure rows
fix them: a one-sided Neumann row at each wall, or a pin at the outer wall
for modes whose angular eigenvalue vanishes (m = 0 and Nyquist). The mean is
removed afterwards.
"""
import logging
from functools import lru_cache
from typing import List, Tuple

import numpy as np
from scipy.linalg import solve_banded

from lib.errors import GeometryError, PoissonError
from lib.fields import AnnulusGrid, ScalarField, VelocityField, divergence, interior_max
from lib.stencils import d_theta

logger = logging.getLogger(__name__)

DIV_TOLERANCE = 1e-10
MAX_ITERATIONS = 5


def _mode_eigenvalues(g: AnnulusGrid) -> np.ndarray:
    m = np.arange(g.Ntheta // 2 + 1)
    return (np.sin(m * g.htheta) / g.htheta) ** 2


@lru_cache(maxsize=16)
def _mode_bands(g: AnnulusGrid) -> Tuple[np.ndarray, ...]:
    """Banded (2, 2) matrices, one per rfft mode, in solve_banded layout."""
    if g.Nr % 2:
        raise GeometryError(f"Projection needs an even radial count, got Nr = {g.Nr}")
    n = g.Nr
    s = g.s[:, 0]
    w = 1.0 / (4.0 * g.hr ** 2)
    bands = []
    for lam in _mode_eigenvalues(g):
        ab = np.zeros((5, n))

        def put(i, j, value):
            ab[2 + i - j, j] += value

        put(0, 0, -3.0 * w)
        put(0, 1, 4.0 * w)
        put(0, 2, -1.0 * w)
        for i in range(1, n - 1):
            if i + 1 <= n - 2:
                up = s[i + 1] * w / s[i]
                put(i, i + 2, up)
                put(i, i, -up)
            if i - 1 >= 1:
                down = s[i - 1] * w / s[i]
                put(i, i - 2, down)
                put(i, i, -down)
            put(i, i, -lam / s[i] ** 2)
        if lam < 1e-12 * w:
            put(n - 1, n - 1, 1.0)
        else:
            put(n - 1, n - 3, 1.0 * w)
            put(n - 1, n - 2, -4.0 * w)
            put(n - 1, n - 1, 3.0 * w)
        ab.setflags(write=False)
        bands.append(ab)
    return tuple(bands)


def solve_potential(rhs: np.ndarray, g: AnnulusGrid) -> np.ndarray:
    """Solve the interior projection operator L phi = rhs (rows 1..Nr-2).

    Rows 0 and Nr-1 of rhs are ignored. The result has zero mean.
    """
    bands = _mode_bands(g)
    rhs_hat = np.fft.rfft(rhs, axis=1)
    rhs_hat[0] = 0.0
    rhs_hat[-1] = 0.0
    phi_hat = np.empty_like(rhs_hat)
    for m, ab in enumerate(bands):
        phi_hat[:, m] = solve_banded((2, 2), ab, rhs_hat[:, m])
    phi = np.fft.irfft(phi_hat, n=g.Ntheta, axis=1)
    return phi - phi.mean()


def subtract_gradient(f: VelocityField, phi: np.ndarray, g: AnnulusGrid) -> VelocityField:
    """u - grad phi on interior rows; wall rows are copied unchanged."""
    ur = f.ur.copy()
    ut = f.utheta.copy()
    ur[1:-1] -= (phi[2:] - phi[:-2]) / (2.0 * g.hr)
    ut[1:-1] -= d_theta(phi, g.htheta)[1:-1] / g.s[1:-1]
    return VelocityField(ur, ut, f.wall, f.lambda0)


def interior_divergence(f: VelocityField, g: AnnulusGrid) -> float:
    return interior_max(divergence(f, g).values)


def project(f: VelocityField, g: AnnulusGrid, tol: float = DIV_TOLERANCE,
            max_iterations: int = MAX_ITERATIONS) -> Tuple[VelocityField, ScalarField]:
    """Make f discretely divergence-free at interior nodes.

    Args:
        f: Field to project (finite)
        g: Grid with even Nr
        tol: Bound on max |div| over interior rows
        max_iterations: Defect-correction passes before giving up

    Returns:
        (projected field, potential phi) with projected = f - grad phi

    Raises:
        PoissonError: If the divergence stays above tol
    """
    if not f.is_finite():
        raise PoissonError("Cannot project a non-finite field")
    phi = np.zeros(g.shape)
    out = f
    div = interior_divergence(out, g)
    history: List[float] = [div]
    for _ in range(max_iterations):
        if div < tol:
            break
        correction = solve_potential(divergence(out, g).values, g)
        phi += correction
        out = subtract_gradient(out, correction, g)
        div = interior_divergence(out, g)
        history.append(div)
    if div >= tol:
        raise PoissonError(
            f"Projection stalled at interior divergence {div:.3e} "
            f"after {max_iterations} passes (tolerance {tol:.1e})"
        )
    logger.debug("projection divergence history: %s", ", ".join(f"{d:.2e}" for d in history))
    return out, ScalarField(phi)
