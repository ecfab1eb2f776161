import numpy as np
import pytest

from arwlab import Configuration, Topology


@pytest.fixture
def ring5():
    return Topology("torus", 5, 1)


@pytest.fixture
def grid3():
    return Topology("torus", 3, 2)


def config_from(topology, values):
    """Build a Configuration from a plain list in site-index order."""
    state = np.asarray(values, dtype=np.int64)
    assert state.shape == (topology.n_sites,)
    return Configuration(state)
