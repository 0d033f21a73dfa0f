import numpy as np


def make_blobs(n_per_blob, centers, scale=1.0, seed=0):
    """Isotropic Gaussian blobs; returns (features, labels)."""
    rng = np.random.default_rng(seed)
    centers = np.asarray(centers, dtype=np.float64)
    x = np.concatenate([c + scale * rng.standard_normal((n_per_blob, centers.shape[1])) for c in centers])
    y = np.repeat(np.arange(centers.shape[0]), n_per_blob)
    return x, y
