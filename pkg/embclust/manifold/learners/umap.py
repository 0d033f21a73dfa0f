"""
umap.py: fuzzy-graph embedding. kNN graph, per-node calibration, probabilistic
union, spectral initialisation and edge-sampled layout optimisation.
"""
import logging
from typing import NamedTuple, Optional, Tuple

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg
from scipy.optimize import curve_fit

from ...embedding import Embedding, make_embedding, manifold_provenance
from ...exceptions import ConfigError, EmbclustError
from ..layout import optimize_layout
from ..neighbors import NeighborGraph, knn_graph
from .base_learner import ManifoldLearner

log = logging.getLogger(__name__)

BISECTION_STEPS = 64
SMOOTH_K_TOLERANCE = 1e-5
MIN_K_DIST_SCALE = 1e-3
AB_GRID_POINTS = 300
# smallest achievable rms on the offset-exponential target: about 0.024 at min_dist=0, 0.031 at min_dist=0.99
MAX_AB_RMS = 0.05
DENSE_EIGEN_LIMIT = 2000
INIT_RANGE = 10.0


class CurveFitError(EmbclustError):
    def __init__(self, residual: float, detail: str = ""):
        super().__init__(
            f"curve fit did not converge (rms residual {residual:.4g}, bound MAX_AB_RMS={MAX_AB_RMS}; "
            f"the best fit at min_dist=0 leaves about 0.024) {detail}".strip()
        )
        self.residual = residual


class UmapConfig(NamedTuple):
    n_neighbors: int = 20
    min_dist: float = 0.0
    n_components: Optional[int] = None
    n_epochs: Optional[int] = None
    learning_rate: float = 1.0
    negative_sample_rate: int = 5
    repulsion_strength: float = 1.0
    spread: float = 1.0
    seed: int = 0
    knn_mode: str = "auto"
    parallel: bool = False

    def epochs_for(self, n: int) -> int:
        if self.n_epochs is not None:
            return self.n_epochs
        return 500 if n < 10000 else 200


def smooth_knn_dist(distances: np.ndarray, k: int) -> Tuple[np.ndarray, np.ndarray]:
    """Per-node rho (nearest-neighbour distance) and sigma solved by bisection so that
    sum_j exp(-max(0, d_ij - rho_i) / sigma_i) = log2(k)."""
    target = np.log2(k)
    n = distances.shape[0]
    rho = distances[:, 0].copy()
    shifted = np.maximum(distances - rho[:, None], 0.0)
    lo = np.zeros(n)
    hi = np.full(n, np.inf)
    mid = np.ones(n)
    active = np.ones(n, dtype=bool)
    for _ in range(BISECTION_STEPS):
        psum = np.exp(-shifted[active] / mid[active, None]).sum(axis=1)
        rows = np.flatnonzero(active)
        done = np.abs(psum - target) < SMOOTH_K_TOLERANCE
        too_wide = (psum > target) & ~done
        too_narrow = (psum < target) & ~done
        hi[rows[too_wide]] = mid[rows[too_wide]]
        lo[rows[too_narrow]] = mid[rows[too_narrow]]
        unbounded = np.isinf(hi)
        bisect = np.zeros(n, dtype=bool)
        bisect[rows] = too_wide | too_narrow
        mid = np.where(bisect & unbounded, mid * 2.0, mid)
        mid = np.where(bisect & ~unbounded, (lo + hi) / 2.0, mid)
        active[rows[done]] = False
        if not active.any():
            break
    sigma = mid
    # floor degenerate bandwidths, e.g. when all neighbours sit at distance rho
    mean_all = distances.mean()
    floor = np.where(rho > 0.0, MIN_K_DIST_SCALE * distances.mean(axis=1), MIN_K_DIST_SCALE * mean_all)
    sigma = np.maximum(sigma, floor)
    return sigma, rho


def membership_strengths(graph: NeighborGraph, sigma: np.ndarray, rho: np.ndarray) -> scipy.sparse.csr_matrix:
    """Directed memberships w_ij = exp(-max(0, d_ij - rho_i) / sigma_i)."""
    shifted = np.maximum(graph.distances - rho[:, None], 0.0)
    sigma = np.where(sigma > 0.0, sigma, 1.0)
    vals = np.exp(-shifted / sigma[:, None])
    rows = np.repeat(np.arange(graph.n), graph.k)
    directed = scipy.sparse.csr_matrix(
        (vals.ravel(), (rows, graph.indices.ravel())), shape=(graph.n, graph.n)
    )
    directed.eliminate_zeros()
    return directed


def fuzzy_union(directed: scipy.sparse.csr_matrix) -> scipy.sparse.csr_matrix:
    """Probabilistic t-conorm w = a + b - a*b of the directed memberships and their transpose."""
    transpose = directed.T.tocsr()
    product = directed.multiply(transpose)
    union = (directed + transpose - product).tocsr()
    union.data = np.clip(union.data, 0.0, 1.0)
    # a membership of exactly 1 on either side stays 1 after the union
    saturated = directed.maximum(transpose).tocsr()
    saturated.data = np.where(saturated.data >= 1.0, 1.0, 0.0)
    union = union.maximum(saturated).tocsr()
    union.eliminate_zeros()
    return union


def fuzzy_simplicial_set(emb: Embedding, cfg: UmapConfig, n_jobs: int = 1) -> NeighborGraph:
    graph = knn_graph(emb, cfg.n_neighbors, mode=cfg.knn_mode, seed=cfg.seed, n_jobs=n_jobs)
    sigma, rho = smooth_knn_dist(graph.distances, cfg.n_neighbors)
    weights = fuzzy_union(membership_strengths(graph, sigma, rho))
    return graph._replace(weights=weights)


def _fit_ab_with_residual(min_dist: float, spread: float) -> Tuple[float, float, float]:
    if not spread > 0 or min_dist < 0:
        raise ConfigError(f"need spread > 0 and min_dist >= 0, got {spread}, {min_dist}")

    def curve(x, a, b):
        return 1.0 / (1.0 + a * x ** (2 * b))

    xv = np.linspace(0.0, 3.0 * spread, AB_GRID_POINTS + 1)[1:]
    yv = np.where(xv <= min_dist, 1.0, np.exp(-(xv - min_dist) / spread))
    try:
        params, _ = curve_fit(curve, xv, yv, p0=(1.0, 1.0), maxfev=10000)
    except RuntimeError as e:
        log.error(f"Curve fit failed for min_dist={min_dist}, spread={spread}")
        raise CurveFitError(float("nan"), str(e))
    a, b = float(params[0]), float(params[1])
    residual = float(np.sqrt(np.mean((curve(xv, a, b) - yv) ** 2)))
    if not (np.isfinite(a) and np.isfinite(b)) or residual > MAX_AB_RMS:
        log.error(f"Curve fit residual {residual:.4g} for min_dist={min_dist}, spread={spread}")
        raise CurveFitError(residual)
    return a, b, residual


def fit_ab(min_dist: float, spread: float) -> Tuple[float, float]:
    """Fit (a, b) so that 1 / (1 + a d^(2b)) approximates the offset exponential decay."""
    a, b, residual = _fit_ab_with_residual(min_dist, spread)
    log.debug(f"Fitted a={a:.4f}, b={b:.4f} (rms {residual:.4f})")
    return a, b


def spectral_layout(weights: scipy.sparse.csr_matrix, dim: int) -> Optional[np.ndarray]:
    """Eigenvectors 1..dim of the symmetric normalised Laplacian; None when the solver fails."""
    n = weights.shape[0]
    if dim + 1 >= n:
        return None
    degrees = np.asarray(weights.sum(axis=0)).ravel()
    inv_sqrt = scipy.sparse.diags(1.0 / np.sqrt(degrees))
    laplacian = scipy.sparse.identity(n, format="csr") - inv_sqrt @ weights @ inv_sqrt
    k = dim + 1
    try:
        if n <= DENSE_EIGEN_LIMIT:
            eigenvalues, eigenvectors = scipy.linalg.eigh(
                laplacian.toarray(), subset_by_index=[0, k - 1]
            )
        else:
            num_lanczos_vectors = max(2 * k + 1, int(np.sqrt(n)))
            eigenvalues, eigenvectors = scipy.sparse.linalg.eigsh(
                laplacian,
                k,
                which="SM",
                ncv=num_lanczos_vectors,
                tol=1e-4,
                v0=np.ones(n),
                maxiter=n * 5,
            )
    except (scipy.sparse.linalg.ArpackError, np.linalg.LinAlgError) as e:
        log.warning(f"Spectral initialisation failed ({e}); using random initialisation")
        return None
    order = np.argsort(eigenvalues)[1:k]
    return eigenvectors[:, order]


def noisy_scale_coords(coords: np.ndarray, rng: np.random.Generator, max_coord=10.0, noise=0.0001):
    expansion = max_coord / np.abs(coords).max()
    coords = coords * expansion
    return coords + rng.normal(scale=noise, size=coords.shape)


class UmapLearner(ManifoldLearner):
    """Uniform manifold approximation: fuzzy graph plus stochastic layout."""

    name = "umap"
    config_type = UmapConfig

    def validate(self, n: int) -> None:
        cfg = self.config
        problems = []
        if not 2 <= cfg.n_neighbors < n:
            problems.append(f"n_neighbors must satisfy 2 <= k < n, got {cfg.n_neighbors} (n={n})")
        if cfg.min_dist < 0:
            problems.append(f"min_dist must be >= 0, got {cfg.min_dist}")
        if cfg.n_epochs is not None and cfg.n_epochs < 1:
            problems.append(f"n_epochs must be >= 1, got {cfg.n_epochs}")
        if cfg.n_components is None or cfg.n_components < 1:
            problems.append(f"n_components must be resolved to >= 1, got {cfg.n_components}")
        if problems:
            log.error("Invalid UMAP configuration: " + "; ".join(problems))
            raise ConfigError("; ".join(problems))

    def fit(self, emb: Embedding, n_jobs: int = 1) -> Embedding:
        cfg = self.config
        self.validate(emb.n)
        n_epochs = cfg.epochs_for(emb.n)
        rng = np.random.default_rng(cfg.seed)

        graph = fuzzy_simplicial_set(emb, cfg, n_jobs=n_jobs)
        weights = graph.weights.copy()
        weights.data[weights.data < (weights.data.max() / float(n_epochs))] = 0.0
        weights.eliminate_zeros()

        a, b = fit_ab(cfg.min_dist, cfg.spread)
        initial = spectral_layout(weights, cfg.n_components)
        if initial is None:
            init_kind = "random"
            coords = rng.uniform(-INIT_RANGE, INIT_RANGE, size=(emb.n, cfg.n_components))
        else:
            init_kind = "spectral"
            coords = noisy_scale_coords(initial, rng)
        coords = np.ascontiguousarray(coords, dtype=np.float64)

        edges = weights.tocoo()
        rng_states = rng.integers(16, 2 ** 31, size=(emb.n, 3), dtype=np.int64)
        log.info(
            f"UMAP: n={emb.n}, k={cfg.n_neighbors}, m={cfg.n_components}, "
            f"{edges.nnz} edges, {n_epochs} epochs, {init_kind} init, a={a:.3f}, b={b:.3f}"
        )
        optimize_layout(
            coords,
            edges.row.astype(np.int64),
            edges.col.astype(np.int64),
            edges.data.astype(np.float64),
            n_epochs,
            a,
            b,
            rng_states,
            gamma=cfg.repulsion_strength,
            initial_alpha=cfg.learning_rate,
            negative_sample_rate=float(cfg.negative_sample_rate),
            parallel=cfg.parallel,
        )
        return make_embedding(
            coords,
            manifold_provenance(self.name),
            {"a": a, "b": b, "n_epochs": n_epochs, "init": init_kind, "edges": int(edges.nnz)},
        )


def umap_fit(emb: Embedding, cfg: UmapConfig) -> Embedding:
    return UmapLearner(cfg).fit(emb)
