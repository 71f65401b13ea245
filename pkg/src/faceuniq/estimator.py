"""Average-norm KL-divergence estimator between genuine and impostor sample sets.

For a genuine set G and impostor set I, every genuine sample g contributes
``log(delta_g(I) / delta_g(G))`` where ``delta_g(S)`` is the mean Euclidean
distance from g to the members of S other than g itself. The subsampled form
averages this over ``n`` random draws of ``r + 1`` genuine and ``r`` impostor
samples, so the count-correction term vanishes.

All logarithms are natural; values are in nats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np
from scipy.spatial.distance import cdist

from faceuniq.streams import MASK64, stream

DEFAULT_EPSILON = 1e-12
ITERATION_BUDGET = 100


@dataclass(frozen=True)
class EstimatorParams:
    r: int
    n: int
    seed: int = 0
    epsilon: float = DEFAULT_EPSILON

    def __post_init__(self) -> None:
        if self.r < 1:
            raise ValueError(f"r must be >= 1, got {self.r}")
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be > 0, got {self.epsilon}")
        if not 0 <= self.seed <= MASK64:
            raise ValueError("seed must be an unsigned 64-bit integer")


@dataclass(frozen=True)
class DivergenceValue:
    value: float
    genuine_count: int
    impostor_count: int
    params_used: EstimatorParams | None = None
    floored_terms: int = 0

    def __float__(self) -> float:
        return self.value


def default_params(g_size: int, i_size: int, seed: int = 0, epsilon: float = DEFAULT_EPSILON) -> EstimatorParams:
    """Use all genuine data: ``r = min(|G|-1, |I|)``, ``n = ceil(100 / r)``."""
    if g_size < 2:
        raise ValueError(f"genuine set needs at least 2 samples, got {g_size}")
    if i_size < 1:
        raise ValueError("impostor set is empty")
    r = min(g_size - 1, i_size)
    return EstimatorParams(r=r, n=-(-ITERATION_BUDGET // r), seed=seed, epsilon=epsilon)


def resolve_params(
    g_size: int,
    i_size: int,
    seed: int,
    r: int | None = None,
    n: int | None = None,
    epsilon: float = DEFAULT_EPSILON,
) -> EstimatorParams:
    """Defaults, with optional overrides clamped to ``r <= min(|G|-1, |I|)``.

    When only ``r`` is overridden, ``n`` follows the ``ceil(100 / r)`` rule
    for the clamped ``r``.
    """
    base = default_params(g_size, i_size, seed, epsilon)
    if r is None and n is None:
        return base
    r_eff = base.r if r is None else max(1, min(r, base.r))
    n_eff = -(-ITERATION_BUDGET // r_eff) if n is None else n
    return replace(base, r=r_eff, n=n_eff)


def mean_norm(s, S, exclude: int | None = None) -> float:
    """Mean Euclidean distance from ``s`` to the rows of ``S``.

    ``exclude`` is the row index of ``s`` within ``S`` when ``s`` is a member;
    only that record is dropped, even if other rows hold an identical vector.
    """
    S = np.atleast_2d(np.asarray(S, dtype=np.float64))
    s = np.asarray(s, dtype=np.float64).reshape(1, -1)
    d = cdist(s, S)[0]
    if exclude is not None:
        d = np.delete(d, exclude)
    if d.size == 0:
        raise ValueError("degenerate genuine set")
    return float(d.mean())


def _log_ratio_sum(G: np.ndarray, I: np.ndarray, epsilon: float) -> tuple[float, int]:
    """Sum over g in G of log(max(delta_g(I), eps) / max(delta_g(G), eps))."""
    m = len(G)
    d_gen = cdist(G, G).sum(axis=1) / (m - 1)
    d_imp = cdist(G, I).mean(axis=1)
    floored = int((d_gen < epsilon).sum() + (d_imp < epsilon).sum())
    ratio = np.maximum(d_imp, epsilon) / np.maximum(d_gen, epsilon)
    return float(np.log(ratio).sum()), floored


def kl_avg_norm(G, I, epsilon: float = DEFAULT_EPSILON) -> DivergenceValue:
    """Full-set estimate, including the ``log(|I| / (|G|-1))`` count correction."""
    G = np.atleast_2d(np.asarray(G, dtype=np.float64))
    I = np.atleast_2d(np.asarray(I, dtype=np.float64))
    if len(G) < 2:
        raise ValueError(f"genuine set needs at least 2 samples, got {len(G)}")
    if I.size == 0:
        raise ValueError("impostor set is empty")
    total, floored = _log_ratio_sum(G, I, epsilon)
    value = total / len(G) + math.log(len(I) / (len(G) - 1))
    return DivergenceValue(value, len(G), len(I), None, floored)


def draw_subsets(params: EstimatorParams, g_size: int, i_size: int, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Row indices of the genuine and impostor subsets for iteration ``k``.

    Sets that are used in full (``r + 1 == |G|`` or ``r == |I|``) are returned
    as ``arange`` without consuming randomness. Indices are sorted.
    """
    r = params.r
    if r + 1 > g_size:
        raise ValueError(f"r + 1 = {r + 1} exceeds genuine set size {g_size}")
    if r > i_size:
        raise ValueError(f"r = {r} exceeds impostor set size {i_size}")
    rng = stream(params.seed, k)
    if r + 1 == g_size:
        g_idx = np.arange(g_size)
    else:
        g_idx = np.sort(rng.choice(g_size, r + 1, replace=False))
    if r == i_size:
        i_idx = np.arange(i_size)
    else:
        i_idx = np.sort(rng.choice(i_size, r, replace=False))
    return g_idx, i_idx


def subsampled(
    G: np.ndarray,
    i_size: int,
    fetch_impostors: Callable[[np.ndarray], np.ndarray],
    params: EstimatorParams,
) -> DivergenceValue:
    """Subsampled estimate over an impostor pool accessed by index.

    ``fetch_impostors`` maps sorted pool indices to an ``(r, D)`` array, which
    lets callers score against a pool without materialising it.
    """
    total = 0.0
    floored = 0
    for k in range(params.n):
        g_idx, i_idx = draw_subsets(params, len(G), i_size, k)
        s, f = _log_ratio_sum(G[g_idx], fetch_impostors(i_idx), params.epsilon)
        total += s
        floored += f
    value = total / (params.n * (params.r + 1))
    return DivergenceValue(value, len(G), i_size, params, floored)


def kl_subsampled(G, I, params: EstimatorParams) -> DivergenceValue:
    """Mean over ``params.n`` draws of the estimate on ``r + 1`` genuine vs ``r`` impostor samples.

    Iteration ``k`` draws from the stream ``(params.seed, k)``, so the result is
    a pure function of the inputs and ``params``.
    """
    G = np.atleast_2d(np.asarray(G, dtype=np.float64))
    I = np.atleast_2d(np.asarray(I, dtype=np.float64))
    return subsampled(G, len(I), I.__getitem__, params)
