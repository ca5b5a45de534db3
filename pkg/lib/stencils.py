"""Finite-difference stencils on the (r, theta) annulus arrays.

Arrays are indexed [i_r, j_theta]. The radial axis is bounded (one-sided
stencils at both ends), the angular axis is periodic.
"""
from functools import lru_cache
from math import factorial
from typing import Sequence, Tuple

import numpy as np

from lib.errors import StencilError

# Accuracy used for wall derivatives of order 1, 2, 3.
WALL_ACCURACY = {1: 4, 2: 4, 3: 2}


@lru_cache(maxsize=None)
def fd_weights(offsets: Tuple[int, ...], order: int) -> np.ndarray:
    """Weights w with sum_k w_k f(x + o_k h) = h^order f^(order)(x) + O(h^(n-order)).

    Solves the Taylor (Vandermonde) system for the given integer offsets.
    """
    n = len(offsets)
    if order >= n:
        raise StencilError(f"{n} points cannot resolve derivative order {order}")
    o = np.asarray(offsets, dtype=float)
    A = np.array([o ** p / factorial(p) for p in range(n)])
    rhs = np.zeros(n)
    rhs[order] = 1.0
    w = np.linalg.solve(A, rhs)
    w.setflags(write=False)
    return w


def one_sided(q: np.ndarray, h: float, order: int, accuracy: int,
              at_end: bool = False) -> np.ndarray:
    """One-sided derivative along axis 0 at the first (or last) row.

    Args:
        q: Array with the radial direction on axis 0
        h: Radial spacing
        order: Derivative order
        accuracy: Formal order of accuracy
        at_end: Evaluate at the last row instead of the first

    Returns:
        Array with axis 0 removed
    """
    npts = order + accuracy
    if q.shape[0] < npts:
        raise StencilError(
            f"Need {npts} radial points for a derivative of order {order} "
            f"at accuracy {accuracy}, grid has {q.shape[0]}"
        )
    if at_end:
        w = fd_weights(tuple(-k for k in range(npts)), order)
        rows = q[::-1][:npts]
    else:
        w = fd_weights(tuple(range(npts)), order)
        rows = q[:npts]
    return np.tensordot(w, rows, axes=(0, 0)) / h ** order


def d_r(q: np.ndarray, h: float, order: int = 1) -> np.ndarray:
    """Radial derivative: centered 2nd order inside, one-sided 2nd order at both ends."""
    out = np.empty_like(q, dtype=float)
    if order == 1:
        out[1:-1] = (q[2:] - q[:-2]) / (2.0 * h)
    elif order == 2:
        out[1:-1] = (q[2:] - 2.0 * q[1:-1] + q[:-2]) / (h * h)
    else:
        raise StencilError(f"d_r supports orders 1 and 2, got {order}")
    out[0] = one_sided(q, h, order, 2)
    out[-1] = one_sided(q, h, order, 2, at_end=True)
    return out


def _shift_pair(q: np.ndarray, k: int, sign: float) -> np.ndarray:
    """q(theta + k h) + sign q(theta - k h)."""
    return np.roll(q, -k, axis=1) + sign * np.roll(q, k, axis=1)


def d_theta(q: np.ndarray, h: float, order: int = 1, accuracy: int = 2) -> np.ndarray:
    """Periodic centered angular derivative along axis 1, at accuracy 2 or 4.

    Written as sums of symmetric differences, so constants map to exact zeros.
    """
    if order == 0:
        return np.asarray(q, dtype=float)
    if order not in (1, 2, 3):
        raise StencilError(f"d_theta supports orders 0 to 3, got {order}")
    if accuracy not in (2, 4):
        raise StencilError(f"d_theta supports accuracy 2 or 4, got {accuracy}")
    q = np.asarray(q, dtype=float)
    if order == 2:
        second = [_shift_pair(q, k, 1.0) - 2.0 * q for k in (1, 2)]
        if accuracy == 2:
            return second[0] / (h * h)
        return (16.0 * second[0] - second[1]) / (12.0 * h * h)
    odd = [_shift_pair(q, k, -1.0) for k in (1, 2, 3)]
    if order == 1:
        if accuracy == 2:
            return odd[0] / (2.0 * h)
        return (8.0 * odd[0] - odd[1]) / (12.0 * h)
    if accuracy == 2:
        return (odd[1] - 2.0 * odd[0]) / (2.0 * h ** 3)
    return (-odd[2] + 8.0 * odd[1] - 13.0 * odd[0]) / (8.0 * h ** 3)


def wall_derivative(q: np.ndarray, h: float, order: int) -> np.ndarray:
    """Radial derivative at r = delta with the wall accuracy table."""
    if order == 0:
        return np.asarray(q[0], dtype=float)
    return one_sided(q, h, order, WALL_ACCURACY[order])


def centered_time_derivative(values: Sequence[float], times: Sequence[float]) -> np.ndarray:
    """d/dt of a recorded series: centered inside, one-sided 2nd order at the ends."""
    values = np.asarray(values, dtype=float)
    times = np.asarray(times, dtype=float)
    if values.size < 3:
        raise StencilError("Need at least three samples for a time derivative")
    return np.gradient(values, times, edge_order=2)
