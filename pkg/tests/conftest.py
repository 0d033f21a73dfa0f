import os

import pytest

from embclust.embedding import make_embedding

from .synthetic import make_blobs


@pytest.fixture
def three_blobs():
    centers = [[0.0, 0.0, 0.0], [20.0, 0.0, 0.0], [0.0, 20.0, 0.0]]
    x, y = make_blobs(60, centers, seed=3)
    return make_embedding(x), y


@pytest.fixture
def benchmark_dir():
    """Data directory of EMBCLUST_ROOT; slow tests skip without it."""
    root = os.environ.get("EMBCLUST_ROOT")
    if not root or not os.path.isdir(os.path.join(root, "data")):
        pytest.skip("EMBCLUST_ROOT/data not available")
    return os.path.join(root, "data")
