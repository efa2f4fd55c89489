"""Partition agreement metrics: contingency table, adjusted Rand index and
the optimal-matching misclassification rate."""

from __future__ import annotations

import math

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import InvalidLabel, LengthMismatch


def _check_pair(a, b):
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    if a.ndim != 1 or b.ndim != 1:
        raise InvalidLabel("label vectors must be 1-D")
    if a.shape[0] != b.shape[0]:
        raise LengthMismatch(f"lengths differ: {a.shape[0]} vs {b.shape[0]}")
    if a.shape[0] == 0:
        raise InvalidLabel("empty label vectors")
    if a.min() < 1 or b.min() < 1:
        raise InvalidLabel("labels must be >= 1")
    return a, b


def contingency(a, b) -> np.ndarray:
    """Cross-tabulation: entry (g, h) counts observations with a=g+1, b=h+1."""
    a, b = _check_pair(a, b)
    ga, gb = int(a.max()), int(b.max())
    flat = (a - 1) * gb + (b - 1)
    return np.bincount(flat, minlength=ga * gb).reshape(ga, gb)


def adjusted_rand(a, b) -> float:
    """Hubert-Arabie adjusted Rand index; 1 means identical partitions, 0 is
    the chance level.  Invariant to relabeling either argument."""
    a, b = _check_pair(a, b)
    n = a.shape[0]
    if n < 2:
        raise InvalidLabel("need at least two observations")
    table = contingency(a, b)
    sum_cells = sum(math.comb(int(c), 2) for c in table.ravel())
    sum_rows = sum(math.comb(int(c), 2) for c in table.sum(axis=1))
    sum_cols = sum(math.comb(int(c), 2) for c in table.sum(axis=0))
    pairs = math.comb(n, 2)
    expected = sum_rows * sum_cols / pairs
    max_index = 0.5 * (sum_rows + sum_cols)
    if max_index == expected:
        # both partitions trivial (all-one-cluster or all-singletons)
        return 1.0 if sum_cells == expected else 0.0
    return float((sum_cells - expected) / (max_index - expected))


def misclassification_rate(est, truth) -> float:
    """Smallest error fraction over injective matchings of estimated labels
    to true labels, found by optimal assignment on the contingency table.
    With unequal label counts the matching is injective from the smaller
    side and points of unmatched clusters all count as errors."""
    est, truth = _check_pair(est, truth)
    table = contingency(est, truth)
    rows, cols = linear_sum_assignment(-table)
    matched = int(table[rows, cols].sum())
    return float((est.shape[0] - matched) / est.shape[0])
