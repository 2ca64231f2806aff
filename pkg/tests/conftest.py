import numpy as np
import pytest

from synthgrid.geo import GeoPoint
from synthgrid.ingest import LineRecord
from synthgrid.mixture import GmmModel


def line(id_, *coords, voltage=None):
    return LineRecord(id_, tuple(GeoPoint(*c) for c in coords), voltage)


@pytest.fixture
def four_component_model():
    """Known mixture used by round-trip style tests."""
    return GmmModel(
        weights=[0.4, 0.3, 0.2, 0.1],
        means=[[0, 0], [300, 50], [100, 350], [-250, 200]],
        covariances=[
            [[3600, 800], [800, 1600]],
            [[2500, 0], [0, 2500]],
            [[1600, -600], [-600, 4900]],
            [[900, 0], [0, 900]],
        ],
    )


def random_connected_edges(n, extra, rng):
    """Random spanning tree plus ``extra`` distinct chords."""
    edges = {(int(rng.integers(i)), i) for i in range(1, n)}
    while len(edges) < n - 1 + extra:
        u, v = sorted(rng.choice(n, 2, replace=False).tolist())
        edges.add((u, v))
    return np.array(sorted(edges))
