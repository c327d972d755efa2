import time

import pytest

from gnngrammar import graph as G
from gnngrammar import spectral


@pytest.fixture(scope="session")
def grid30():
    """The 900-node grid, its normalized-Laplacian decomposition and the seconds that took."""
    g = G.grid(30, 30)
    start = time.perf_counter()
    d = spectral.decompose_laplacian(g, normalized=True)
    return g, d, time.perf_counter() - start
