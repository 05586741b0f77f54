"""k-distance profiles and an automatic Eps pick read from them."""

from __future__ import annotations

import heapq

import numpy as np
from scipy.spatial import cKDTree

from .distance import alpha_distance_filtered
from .index import GlobalTree
from .model import Dataset


def k_distances(dataset: Dataset, k: int, alpha: float, tree: GlobalTree | None = None) -> dict[str, float]:
    """Alpha-distance from every object to its k-th nearest other object.

    Candidates are visited in order of box min distance, which lower-bounds
    the alpha-distance, so the scan stops once no remaining candidate can
    beat the current k-th best.
    """
    n = len(dataset)
    if not 1 <= k < n:
        raise ValueError(f"k must lie in [1, {n - 1}] for {n} objects, got {k}")
    tree = GlobalTree(dataset) if tree is None else tree
    lo = tree.lo[: n]
    hi = tree.hi[: n]
    out = {}
    for i, oid in enumerate(tree.ids):
        gap = np.maximum(0.0, np.maximum(lo - hi[i], lo[i] - hi))
        bound = np.sqrt((gap * gap).sum(axis=1))
        bound[i] = np.inf
        order = np.argsort(bound, kind="stable")
        best: list[float] = []  # max-heap of the k smallest distances, negated
        for j in order[: n - 1]:
            if len(best) == k and bound[j] > -best[0]:
                break
            d = alpha_distance_filtered(tree.local_trees[i], tree.local_trees[j], alpha)
            if len(best) < k:
                heapq.heappush(best, -d)
            elif d < -best[0]:
                heapq.heapreplace(best, -d)
        out[oid] = -best[0]
    return out


def point_k_distances(points: np.ndarray, k: int) -> np.ndarray:
    """Euclidean distance from every point to its k-th nearest other point."""
    n = len(points)
    if not 1 <= k < n:
        raise ValueError(f"k must lie in [1, {n - 1}] for {n} points, got {k}")
    d, _ = cKDTree(points).query(points, k=k + 1)
    return d[:, k]


def suggest_eps(values, fence: float = 1.5) -> float:
    """Eps read off a k-distance profile.

    k-distances above the upper Tukey fence ``Q3 + fence * IQR`` are taken
    as noise; Eps is the largest k-distance that remains, so every
    non-noise object is core.
    """
    y = np.sort(np.asarray(values, dtype=np.float64))
    if len(y) == 0:
        raise ValueError("no values")
    q1, q3 = np.percentile(y, [25, 75])
    limit = q3 + fence * (q3 - q1)
    return float(y[y <= limit][-1])
