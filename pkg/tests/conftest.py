"""Shared fixtures: small grids on the three geometries."""
import math
import sys
from pathlib import Path

import pytest

# Add repo root to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from lib.fields import AnnulusGrid
from lib.geometry import ManifoldSpec, ObstacleSpec

EUCLIDEAN = ManifoldSpec('euclidean', 0.0)
SPHERE = ManifoldSpec('sphere', 1.0)
HYPERBOLIC = ManifoldSpec('hyperbolic', 1.0)

# (manifold, delta, R) used across the operator tests
GEOMETRIES = [
    (EUCLIDEAN, 1.0, 2.0),
    (SPHERE, math.pi / 6, math.pi / 6 + 1.0),
    (HYPERBOLIC, 1.0, 2.0),
]
GEOMETRY_IDS = ['euclidean', 'sphere', 'hyperbolic']


def make_grid(manifold=EUCLIDEAN, delta=1.0, R=2.0, Nr=33, Ntheta=32) -> AnnulusGrid:
    return AnnulusGrid(manifold, ObstacleSpec(delta), R, Nr, Ntheta)


@pytest.fixture
def flat_grid() -> AnnulusGrid:
    return make_grid()


@pytest.fixture(params=GEOMETRIES, ids=GEOMETRY_IDS)
def geometry(request):
    return request.param
