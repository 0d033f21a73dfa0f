"""
layout.py: stochastic attraction/repulsion optimizer for the fuzzy-graph layout.

The epoch kernel is compiled twice: a sequential variant that is bit-reproducible
and a parallel variant where concurrent coordinate updates race without locks.
"""
import logging

import numba
import numpy as np

from ..exceptions import EmbclustError

log = logging.getLogger(__name__)

GRAD_CLIP = 4.0


@numba.njit()
def clip(val):
    if val > GRAD_CLIP:
        return GRAD_CLIP
    if val < -GRAD_CLIP:
        return -GRAD_CLIP
    return val


@numba.njit()
def rdist(x, y):
    result = 0.0
    for i in range(x.shape[0]):
        diff = x[i] - y[i]
        result += diff * diff
    return result


@numba.njit()
def tau_rand_int(state):
    """Tausworthe-style generator over three 32-bit lanes stored in an int64 array."""
    state[0] = (((state[0] & 4294967294) << 12) & 0xFFFFFFFF) ^ (
        (((state[0] << 13) & 0xFFFFFFFF) ^ state[0]) >> 19
    )
    state[1] = (((state[1] & 4294967288) << 4) & 0xFFFFFFFF) ^ (
        (((state[1] << 2) & 0xFFFFFFFF) ^ state[1]) >> 25
    )
    state[2] = (((state[2] & 4294967280) << 17) & 0xFFFFFFFF) ^ (
        (((state[2] << 3) & 0xFFFFFFFF) ^ state[2]) >> 11
    )
    return state[0] ^ state[1] ^ state[2]


def _single_epoch(
    embedding,
    head,
    tail,
    n_vertices,
    epochs_per_sample,
    a,
    b,
    rng_states,
    gamma,
    dim,
    alpha,
    epochs_per_negative_sample,
    epoch_of_next_negative_sample,
    epoch_of_next_sample,
    n,
):
    for i in numba.prange(epochs_per_sample.shape[0]):
        if epoch_of_next_sample[i] > n:
            continue
        j = head[i]
        k = tail[i]
        current = embedding[j]
        other = embedding[k]

        dist_squared = rdist(current, other)
        if dist_squared > 0.0:
            grad_coeff = -2.0 * a * b * pow(dist_squared, b - 1.0)
            grad_coeff /= a * pow(dist_squared, b) + 1.0
        else:
            grad_coeff = 0.0

        for d in range(dim):
            grad_d = clip(grad_coeff * (current[d] - other[d]))
            current[d] += grad_d * alpha
            other[d] += -grad_d * alpha

        epoch_of_next_sample[i] += epochs_per_sample[i]

        n_neg_samples = int(
            (n - epoch_of_next_negative_sample[i]) / epochs_per_negative_sample[i]
        )
        for p in range(n_neg_samples):
            k = tau_rand_int(rng_states[j]) % n_vertices
            other = embedding[k]
            dist_squared = rdist(current, other)
            if dist_squared > 0.0:
                grad_coeff = 2.0 * gamma * b
                grad_coeff /= (0.001 + dist_squared) * (a * pow(dist_squared, b) + 1)
            elif j == k:
                continue
            else:
                grad_coeff = 0.0

            for d in range(dim):
                if grad_coeff > 0.0:
                    grad_d = clip(grad_coeff * (current[d] - other[d]))
                else:
                    grad_d = 0.0
                current[d] += grad_d * alpha

        epoch_of_next_negative_sample[i] += n_neg_samples * epochs_per_negative_sample[i]


_epoch_sequential = numba.njit(fastmath=False)(_single_epoch)
_epoch_parallel = numba.njit(fastmath=False, parallel=True)(_single_epoch)


class LayoutDiverged(EmbclustError):
    def __init__(self, epoch: int, bad_rows: int):
        super().__init__(f"layout diverged: {bad_rows} rows became non-finite at epoch {epoch}")
        self.epoch = epoch
        self.bad_rows = bad_rows


def make_epochs_per_sample(weights: np.ndarray, n_epochs: int) -> np.ndarray:
    """Epochs between samples of each edge: max_w / w, edges never sampled get -1."""
    result = -1.0 * np.ones(weights.shape[0], dtype=np.float64)
    n_samples = n_epochs * (weights / weights.max())
    result[n_samples > 0] = float(n_epochs) / np.float64(n_samples[n_samples > 0])
    return result


def optimize_layout(
    embedding: np.ndarray,
    head: np.ndarray,
    tail: np.ndarray,
    weights: np.ndarray,
    n_epochs: int,
    a: float,
    b: float,
    rng_states: np.ndarray,
    gamma: float = 1.0,
    initial_alpha: float = 1.0,
    negative_sample_rate: float = 5.0,
    parallel: bool = False,
) -> np.ndarray:
    """Run n_epochs of edge-sampled SGD in place; the learning rate decays linearly to 0."""
    epochs_per_sample = make_epochs_per_sample(weights, n_epochs)
    epochs_per_negative_sample = epochs_per_sample / negative_sample_rate
    epoch_of_next_negative_sample = epochs_per_negative_sample.copy()
    epoch_of_next_sample = epochs_per_sample.copy()
    dim = embedding.shape[1]
    n_vertices = embedding.shape[0]
    epoch_fn = _epoch_parallel if parallel else _epoch_sequential
    check_every = max(1, n_epochs // 10)

    alpha = initial_alpha
    for n in range(n_epochs):
        epoch_fn(
            embedding,
            head,
            tail,
            n_vertices,
            epochs_per_sample,
            a,
            b,
            rng_states,
            gamma,
            dim,
            alpha,
            epochs_per_negative_sample,
            epoch_of_next_negative_sample,
            epoch_of_next_sample,
            n,
        )
        alpha = initial_alpha * (1.0 - (float(n + 1) / float(n_epochs)))
        if (n + 1) % check_every == 0 or n + 1 == n_epochs:
            bad = ~np.isfinite(embedding).all(axis=1)
            if bad.any():
                log.error(f"Layout produced NaN rows at epoch {n + 1}")
                raise LayoutDiverged(n + 1, int(bad.sum()))
            log.debug(f"layout epoch {n + 1}/{n_epochs}")
    return embedding
