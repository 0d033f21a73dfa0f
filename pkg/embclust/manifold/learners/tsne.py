"""
tsne.py: exact t-distributed stochastic neighbour embedding.
"""
import logging
from typing import NamedTuple, Optional

import numpy as np
from scipy.spatial.distance import pdist, squareform

from ...embedding import Embedding, make_embedding, manifold_provenance
from ...exceptions import ConfigError
from .base_learner import ManifoldLearner

log = logging.getLogger(__name__)

PERPLEXITY_TOL = 1e-3
PERPLEXITY_STEPS = 50
MIN_GAIN = 0.01
EPSILON = 1e-12


class PerplexityError(ConfigError):
    pass


class TsneConfig(NamedTuple):
    perplexity: float = 30.0
    n_components: Optional[int] = None
    n_iter: int = 1000
    early_exaggeration: float = 12.0
    exaggeration_iters: int = 250
    learning_rate: float = 200.0
    momentum: float = 0.5
    final_momentum: float = 0.8
    momentum_switch_iter: int = 250
    seed: int = 0
    max_samples: Optional[int] = 20000


def _row_affinities(sq_dists: np.ndarray, beta: np.ndarray) -> np.ndarray:
    """Gaussian conditionals for a block of rows; self entries are excluded by +inf distance."""
    logits = -sq_dists * beta[:, None]
    logits -= logits.max(axis=1, keepdims=True)
    p = np.exp(logits)
    return p / p.sum(axis=1, keepdims=True)


def row_perplexities(conditional: np.ndarray) -> np.ndarray:
    """exp of the Shannon entropy (natural log) of each conditional row."""
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(conditional > 0.0, conditional * np.log(conditional), 0.0)
    return np.exp(-terms.sum(axis=1))


def conditional_probabilities(sq_dists: np.ndarray, perplexity: float) -> np.ndarray:
    """p_{j|i} with a per-row precision found by bisection to match the perplexity."""
    n = sq_dists.shape[0]
    sq = sq_dists.copy()
    np.fill_diagonal(sq, np.inf)
    finite = np.where(np.isfinite(sq), sq, np.nan)
    scale = np.nanmedian(np.where(finite > 0, finite, np.nan), axis=1)
    beta = 1.0 / np.where(np.isfinite(scale) & (scale > 0), scale, 1.0)
    lo = np.zeros(n)
    hi = np.full(n, np.inf)
    active = np.ones(n, dtype=bool)
    for _ in range(PERPLEXITY_STEPS):
        rows = np.flatnonzero(active)
        realized = row_perplexities(_row_affinities(sq[rows], beta[rows]))
        done = np.abs(realized - perplexity) < PERPLEXITY_TOL
        # too many effective neighbours means the kernel is too wide
        wide = (realized > perplexity) & ~done
        narrow = (realized < perplexity) & ~done
        lo[rows[wide]] = beta[rows[wide]]
        hi[rows[narrow]] = beta[rows[narrow]]
        grow = rows[wide]
        beta[grow] = np.where(np.isinf(hi[grow]), beta[grow] * 2.0, (lo[grow] + hi[grow]) / 2.0)
        shrink = rows[narrow]
        beta[shrink] = (lo[shrink] + hi[shrink]) / 2.0
        active[rows[done]] = False
        if not active.any():
            break
    if active.any():
        log.warning(f"t-SNE: {int(active.sum())} rows did not reach perplexity {perplexity}")
    return _row_affinities(sq, beta)


def joint_probabilities(x: np.ndarray, perplexity: float) -> np.ndarray:
    """Symmetric P = (P_cond + P_cond^T) / 2n."""
    n = x.shape[0]
    conditional = conditional_probabilities(squareform(pdist(x, "sqeuclidean")), perplexity)
    return (conditional + conditional.T) / (2.0 * n)


def kl_divergence(p: np.ndarray, y: np.ndarray) -> float:
    q = _student_t(y)
    q /= q.sum()
    mask = p > 0
    return float(np.sum(p[mask] * np.log(p[mask] / np.maximum(q[mask], EPSILON))))


def _student_t(y: np.ndarray) -> np.ndarray:
    num = 1.0 / (1.0 + squareform(pdist(y, "sqeuclidean")))
    np.fill_diagonal(num, 0.0)
    return num


class TsneLearner(ManifoldLearner):
    """Exact O(n²) t-SNE with early exaggeration, momentum and adaptive gains."""

    name = "tsne"
    config_type = TsneConfig

    def validate(self, n: int) -> None:
        cfg = self.config
        if not 1 < cfg.perplexity < n:
            log.error(f"Perplexity {cfg.perplexity} invalid for n={n}")
            raise PerplexityError(f"perplexity must satisfy 1 < perplexity < n, got {cfg.perplexity} (n={n})")
        if cfg.n_iter < 250:
            raise ConfigError(f"n_iter must be >= 250, got {cfg.n_iter}")
        if cfg.n_components is None or cfg.n_components < 1:
            raise ConfigError(f"n_components must be resolved to >= 1, got {cfg.n_components}")
        self.guard(n, cfg.max_samples)

    def fit(self, emb: Embedding, n_jobs: int = 1) -> Embedding:
        cfg = self.config
        self.validate(emb.n)
        n, m = emb.n, cfg.n_components
        p = joint_probabilities(emb.coords, cfg.perplexity)
        rng = np.random.default_rng(cfg.seed)
        y = rng.normal(0.0, 1e-4, size=(n, m))
        update = np.zeros_like(y)
        gains = np.ones_like(y)
        kl_history = {}
        log.info(f"t-SNE: n={n}, m={m}, perplexity={cfg.perplexity}, {cfg.n_iter} iterations")

        for it in range(cfg.n_iter):
            exaggeration = cfg.early_exaggeration if it < cfg.exaggeration_iters else 1.0
            momentum = cfg.momentum if it < cfg.momentum_switch_iter else cfg.final_momentum
            num = _student_t(y)
            q = np.maximum(num / num.sum(), EPSILON)
            pq = (exaggeration * p - q) * num
            grad = 4.0 * (pq.sum(axis=1)[:, None] * y - pq @ y)

            same_sign = (grad > 0) == (update > 0)
            gains = np.where(same_sign, gains * 0.8, gains + 0.2)
            np.clip(gains, MIN_GAIN, np.inf, out=gains)
            update = momentum * update - cfg.learning_rate * gains * grad
            y = y + update
            y -= y.mean(axis=0)

            if it + 1 == cfg.exaggeration_iters or it + 1 == cfg.n_iter or (it + 1) % 100 == 0:
                kl_history[it + 1] = kl_divergence(p, y)
                log.debug(f"t-SNE iteration {it + 1}: KL {kl_history[it + 1]:.5f}")

        return make_embedding(
            y,
            manifold_provenance(self.name),
            {
                "kl_post_exaggeration": kl_history.get(cfg.exaggeration_iters),
                "kl_final": kl_history[cfg.n_iter],
                "kl_history": {str(k): v for k, v in kl_history.items()},
            },
        )


def tsne_fit(emb: Embedding, cfg: TsneConfig) -> Embedding:
    return TsneLearner(cfg).fit(emb)
