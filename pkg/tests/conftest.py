import numpy as np
import pytest

from pairspace.core import MassVector, SystemState


def random_system(rng, n, min_sep=0.2):
    """Barycentric random state with masses in [0.5, 2] and no close pairs."""
    while True:
        pos = rng.normal(size=(n, 3))
        d = np.linalg.norm(pos[:, None] - pos[None], axis=-1)
        if d[np.triu_indices(n, 1)].min() > min_sep:
            break
    mv = MassVector(rng.uniform(0.5, 2.0, n))
    return mv, SystemState.create(mv, pos, rng.normal(size=(n, 3)))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
