import numpy as np
import pytest
from hypothesis import HealthCheck, settings, strategies as st

from lerw3d.lattice import NEIGHBORS, LatticePath

settings.register_profile(
    "default", deadline=None, max_examples=60,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large])
settings.load_profile("default")


def walk_from_dirs(dirs, start=(0, 0, 0), mesh=0) -> LatticePath:
    steps = NEIGHBORS[np.asarray(dirs, dtype=np.int64)] if len(dirs) else np.zeros((0, 3), np.int64)
    pts = np.vstack([np.array([start], dtype=np.int64), np.array(start) + np.cumsum(steps, axis=0)])
    return LatticePath(pts, mesh)


# sequences of direction indices, i.e. random nearest-neighbour walks
walks = st.lists(st.integers(0, 5), min_size=0, max_size=400).map(walk_from_dirs)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
