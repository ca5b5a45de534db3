"""Metric quantities on S^2(a^2), H^2(-a^2) and R^2 in normal polar coordinates."""
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, Union

import numpy as np

from lib.errors import DomainError, GeometryError

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]


class ManifoldKind(str, Enum):
    """Model surface; the value is the string used in config files."""

    SPHERE = "sphere"
    HYPERBOLIC = "hyperbolic"
    EUCLIDEAN = "euclidean"


@dataclass(frozen=True)
class ManifoldSpec:
    """Geometry kind and curvature scale a (1/length)."""

    kind: ManifoldKind
    a: float = 0.0

    def __post_init__(self):
        try:
            kind = ManifoldKind(self.kind)
        except ValueError:
            raise GeometryError(
                f"Unknown manifold kind {self.kind!r}; "
                "expected 'sphere', 'hyperbolic' or 'euclidean'"
            )
        object.__setattr__(self, 'kind', kind)
        object.__setattr__(self, 'a', float(self.a))

        if not math.isfinite(self.a):
            raise GeometryError(f"Curvature scale must be finite, got {self.a}")
        if kind is ManifoldKind.EUCLIDEAN and self.a != 0.0:
            raise GeometryError("Euclidean geometry requires a = 0")
        if kind is not ManifoldKind.EUCLIDEAN and self.a <= 0.0:
            raise GeometryError(f"{kind.value} geometry requires a > 0, got {self.a}")

    @property
    def sign(self) -> int:
        """Upper sign (+1) on the sphere, lower (-1) on the hyperbolic plane."""
        return {ManifoldKind.SPHERE: 1, ManifoldKind.HYPERBOLIC: -1}.get(self.kind, 0)

    def to_dict(self) -> Dict[str, Any]:
        return {'kind': self.kind.value, 'a': self.a}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ManifoldSpec":
        if 'kind' not in data:
            raise GeometryError("geometry.kind is required")
        return cls(kind=data['kind'], a=data.get('a', 0.0))


@dataclass(frozen=True)
class ObstacleSpec:
    """Geodesic disk K of radius delta around the base point."""

    delta: float

    def __post_init__(self):
        object.__setattr__(self, 'delta', float(self.delta))
        if not (math.isfinite(self.delta) and self.delta > 0.0):
            raise GeometryError(f"Obstacle radius must be positive, got {self.delta}")


def metric_s(m: ManifoldSpec, r: ArrayLike) -> ArrayLike:
    """Warping function s_a(r): sin(ar)/a, sinh(ar)/a or r."""
    if m.kind is ManifoldKind.SPHERE:
        return np.sin(m.a * r) / m.a
    if m.kind is ManifoldKind.HYPERBOLIC:
        return np.sinh(m.a * r) / m.a
    return r * 1.0


def metric_c(m: ManifoldSpec, r: ArrayLike) -> ArrayLike:
    """Derivative c_a(r) = d s_a / dr: cos(ar), cosh(ar) or 1."""
    if m.kind is ManifoldKind.SPHERE:
        return np.cos(m.a * r)
    if m.kind is ManifoldKind.HYPERBOLIC:
        return np.cosh(m.a * r)
    return np.ones_like(r, dtype=float) if isinstance(r, np.ndarray) else 1.0


def ricci_factor(m: ManifoldSpec) -> float:
    """Signed Ricci factor K with Ric(u) = K u: +a^2, -a^2 or 0.

    Also the Gauss curvature, so c' = -K s and c^2 + K s^2 = 1.
    """
    return m.sign * m.a * m.a


def check_obstacle(m: ManifoldSpec, obs: ObstacleSpec,
                   allow_large_obstacle: bool = False) -> bool:
    """Validate the obstacle against the manifold.

    Args:
        m: Manifold
        obs: Obstacle
        allow_large_obstacle: Accept a*delta >= pi/2 on the sphere (k <= 0)

    Returns:
        True when the k <= 0 warning state applies

    Raises:
        DomainError: If the obstacle swallows the sphere or k <= 0 without override
    """
    if m.kind is not ManifoldKind.SPHERE:
        return False

    ad = m.a * obs.delta
    if ad >= math.pi:
        raise DomainError(f"a*delta = {ad:.6g} >= pi: obstacle covers the sphere")
    if ad >= math.pi / 2:
        if not allow_large_obstacle:
            raise DomainError(
                f"a*delta = {ad:.6g} >= pi/2 gives k <= 0; "
                "set allow_large_obstacle to proceed"
            )
        logger.warning("a*delta = %.6g >= pi/2: boundary curvature k <= 0", ad)
        return True
    return False


def boundary_curvature_k(m: ManifoldSpec, obs: ObstacleSpec) -> float:
    """Combined curvature k = c_a(delta) / s_a(delta).

    Raises:
        DomainError: If s_a(delta) = 0
    """
    s = float(metric_s(m, obs.delta))
    if m.kind is ManifoldKind.SPHERE and m.a * obs.delta >= math.pi:
        raise DomainError("s_a(delta) = 0 on the sphere with a*delta = pi")
    if s == 0.0:
        raise DomainError("s_a(delta) = 0")
    return float(metric_c(m, obs.delta)) / s
