"""Deterministic Lloyd K-means with k-means++ seeding.

Rolled by hand instead of pulling in a clustering library so that runs are
bit-reproducible from an explicit Generator: restarts, tie breaking (lowest
index wins) and the empty-cluster fix (relocate to the farthest point) are
all fixed, and nothing depends on thread count.
"""

from __future__ import annotations

import numpy as np


def _plusplus_init(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = x.shape[0]
    centers = np.empty((k, x.shape[1]))
    centers[0] = x[rng.integers(n)]
    d2 = np.sum((x - centers[0]) ** 2, axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total > 0:
            u = rng.random() * total
            idx = int(np.searchsorted(np.cumsum(d2), u, side="right"))
            idx = min(idx, n - 1)
        else:
            idx = int(rng.integers(n))  # all remaining points coincide
        centers[j] = x[idx]
        d2 = np.minimum(d2, np.sum((x - centers[j]) ** 2, axis=1))
    return centers


def _lloyd(x: np.ndarray, centers: np.ndarray, max_iter: int):
    n, k = x.shape[0], centers.shape[0]
    labels = np.full(n, -1)
    for _ in range(max_iter):
        d2 = ((x[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new_labels = d2.argmin(axis=1)
        for j in range(k):
            members = new_labels == j
            if not members.any():
                # relocate an empty cluster to the globally worst-fit point
                worst = int(d2[np.arange(n), new_labels].argmax())
                centers[j] = x[worst]
                new_labels[worst] = j
            else:
                centers[j] = x[members].mean(axis=0)
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
    sse = float(((x - centers[labels]) ** 2).sum())
    return labels, centers, sse


def kmeans(x: np.ndarray, k: int, rng: np.random.Generator,
           n_init: int = 5, max_iter: int = 100):
    """Cluster rows of ``x`` into ``k`` groups; best SSE over restarts.

    Returns ``(labels, centers, sse)`` with 0-based labels.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 2:
        raise ValueError("x must be 2-D")
    n = x.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    if k == 1:
        center = x.mean(axis=0, keepdims=True)
        return np.zeros(n, dtype=np.int64), center, float(((x - center) ** 2).sum())
    best = None
    for _ in range(n_init):
        labels, centers, sse = _lloyd(x, _plusplus_init(x, k, rng), max_iter)
        if best is None or sse < best[2]:
            best = (labels, centers, sse)
    return best
