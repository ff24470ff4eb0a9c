import numpy as np
import pytest

from curvforge.curvmodels import CircleRegion, FixedPoints, GrowthConfig, SquareRegion

# -----------------------------
#  shared growth configs
# -----------------------------

def make_dense_config(seed: int = 0, max_nodes: int = 400) -> GrowthConfig:
    """Small square world where attraction reaches past the kill radius, so trees branch."""
    return GrowthConfig(
        bound=SquareRegion(origin=(0.0, 0.0), side=200.0),
        obstacles=[CircleRegion(center=(150.0, 150.0), radius=(15.0, 25.0))],
        roots=FixedPoints(points=[(100.0, 100.0), (20.0, 180.0)]),
        attractor_grid=40,
        jitter=2.0,
        attraction_distance=30.0,
        kill_distance=5.0,
        segment_length=5.0,
        max_nodes=max_nodes,
        seed=seed,
    )


@pytest.fixture
def dense_config():
    """Factory for branching growth configs"""
    return make_dense_config


@pytest.fixture
def mask_rng():
    """Fixed generator for random test masks"""
    return np.random.default_rng(20240611)
