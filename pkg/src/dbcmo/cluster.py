"""Density-based clustering of multi-valued objects plus two baselines.

All three algorithms share one expansion loop and differ only in how they
decide that two objects are neighbors:

* ``dbcmo``: alpha-approximation neighbors found through the global tree;
* ``fdbscan``: fraction of within-Eps pairs among per-object Monte-Carlo samples;
* ``expdbscan``: plain DBSCAN on each object's weighted mean.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .index import GlobalTree
from .model import Dataset
from .neighborhood import PruneStats, QueryParams, all_neighborhoods, get_neighborhood, worker_count

NOISE = -1
_UNCLASSIFIED = -2


@dataclass(frozen=True)
class ClusterParams:
    min_obs: int
    query: QueryParams

    def __post_init__(self):
        if int(self.min_obs) < 1:
            raise ValueError("min_obs must be at least 1")


@dataclass(frozen=True)
class BaselineParams:
    sample_count: int = 20
    reachability_probability: float = 0.7
    seed: int = 0

    def __post_init__(self):
        if self.sample_count < 1:
            raise ValueError("sample_count must be at least 1")
        if not (0.0 < self.reachability_probability <= 1.0):
            raise ValueError("reachability_probability must lie in (0, 1]")


@dataclass
class ClusterLabeling:
    labels: dict[str, int]
    core: dict[str, bool]
    stats: PruneStats | None = field(default=None, compare=False)

    @property
    def cluster_count(self) -> int:
        return len({c for c in self.labels.values() if c != NOISE})

    @property
    def noise_count(self) -> int:
        return sum(1 for c in self.labels.values() if c == NOISE)

    def clusters(self) -> dict[int, list[str]]:
        out: dict[int, list[str]] = {}
        for oid, c in self.labels.items():
            if c != NOISE:
                out.setdefault(c, []).append(oid)
        return out

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("id,label,core\n")
            for oid, c in self.labels.items():
                fh.write(f"{oid},{c},{int(self.core[oid])}\n")

    @classmethod
    def from_csv(cls, path) -> "ClusterLabeling":
        labels, core = {}, {}
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().strip()
            if header != "id,label,core":
                raise ValueError(f"{path}: unexpected header {header!r}")
            for line in fh:
                if not line.strip():
                    continue
                oid, c, k = line.rstrip("\n").rsplit(",", 2)
                labels[oid] = int(c)
                core[oid] = k == "1"
        return cls(labels, core)


def expand_clusters(ids: Sequence[str], neighbors: Callable[[str], Iterable[str]], min_obs: int) -> ClusterLabeling:
    """DBSCAN-style expansion over an arbitrary neighbor relation.

    Objects are scanned in the given order and each one's neighborhood is
    requested exactly once. Noise can later be absorbed as a border member;
    a border object stays with the first cluster that claims it.
    """
    rank = {oid: i for i, oid in enumerate(ids)}
    labels = dict.fromkeys(ids, _UNCLASSIFIED)
    core = dict.fromkeys(ids, False)
    next_id = 0

    def ordered(nbrs):
        return sorted(nbrs, key=rank.__getitem__)

    for o in ids:
        if labels[o] != _UNCLASSIFIED:
            continue
        n_o = ordered(neighbors(o))
        if len(n_o) < min_obs:
            labels[o] = NOISE
            continue
        cid = next_id
        next_id += 1
        core[o] = True
        labels[o] = cid
        queue = deque()
        for x in n_o:
            if labels[x] == _UNCLASSIFIED:
                labels[x] = cid
                queue.append(x)
            elif labels[x] == NOISE:
                labels[x] = cid
        while queue:
            q = queue.popleft()
            n_q = ordered(neighbors(q))
            if len(n_q) < min_obs:
                continue
            core[q] = True
            for t in n_q:
                if labels[t] == _UNCLASSIFIED:
                    labels[t] = cid
                    queue.append(t)
                elif labels[t] == NOISE:
                    labels[t] = cid
    return ClusterLabeling(labels, core)


def dbcmo(
    dataset: Dataset,
    params: ClusterParams,
    tree: GlobalTree | None = None,
    workers: int | None = None,
) -> ClusterLabeling:
    """Cluster multi-valued objects by alpha-approximation density reachability.

    Pass a prebuilt ``tree`` to keep tree construction out of timings. With
    more than one worker all neighborhoods are prefetched concurrently; the
    expansion itself is unchanged.
    """
    if len(dataset) == 0:
        raise ValueError("dataset is empty")
    tree = GlobalTree(dataset) if tree is None else tree
    workers = worker_count() if workers is None else workers
    stats = PruneStats()
    if workers > 1:
        cache, stats = all_neighborhoods(tree, params.query, workers=workers)
        neighbors = cache.__getitem__
    else:

        def neighbors(oid):
            nbrs, st = get_neighborhood(tree, oid, params.query)
            stats.__iadd__(st)
            return nbrs

    labeling = expand_clusters(dataset.ids, neighbors, params.min_obs)
    labeling.stats = stats
    return labeling


def sample_objects(dataset: Dataset, sample_count: int, seed: int) -> np.ndarray:
    """Weighted draws with replacement, ``(n_objects, sample_count, d)``."""
    rng = np.random.default_rng(seed)
    out = np.empty((len(dataset), sample_count, dataset.dimensionality))
    for i, obj in enumerate(dataset):
        picks = rng.choice(len(obj), size=sample_count, replace=True, p=obj.weights)
        out[i] = obj.coords[picks]
    return out


def reachability_fractions(samples: np.ndarray, eps: float) -> np.ndarray:
    """Fraction of sample pairs within ``eps`` for every pair of objects."""
    n, s, d = samples.shape
    flat = samples.reshape(n * s, d)
    frac = np.empty((n, n))
    for i in range(n):
        diff = samples[i][:, None, :] - flat[None, :, :]
        sq = np.zeros(diff.shape[:2])
        for k in range(d):
            sq += diff[..., k] * diff[..., k]
        close = (np.sqrt(sq) <= eps).reshape(s, n, s)
        frac[i] = close.sum(axis=(0, 2)) / float(s * s)
    return frac


def fdbscan(dataset: Dataset, min_obs: int, eps: float, baseline: BaselineParams | None = None) -> ClusterLabeling:
    """Sampling baseline: every object is reduced to ``sample_count`` equally weighted draws."""
    if len(dataset) == 0:
        raise ValueError("dataset is empty")
    baseline = baseline or BaselineParams()
    samples = sample_objects(dataset, baseline.sample_count, baseline.seed)
    frac = reachability_fractions(samples, eps)
    ids = dataset.ids
    reachable = frac >= baseline.reachability_probability - 1e-12
    np.fill_diagonal(reachable, True)

    def neighbors(oid):
        return [ids[j] for j in np.nonzero(reachable[dataset.position(oid)])[0]]

    return expand_clusters(ids, neighbors, min_obs)


def expected_points(dataset: Dataset) -> np.ndarray:
    return np.array([obj.weights @ obj.coords for obj in dataset])


def dbscan_points(ids: Sequence[str], points: np.ndarray, min_obs: int, eps: float) -> ClusterLabeling:
    """Classic DBSCAN on points (Euclidean, neighborhoods include the point itself)."""
    kd = cKDTree(points)
    ids = list(ids)

    def neighbors(oid):
        i = rank[oid]
        return [ids[j] for j in kd.query_ball_point(points[i], eps)]

    rank = {oid: i for i, oid in enumerate(ids)}
    return expand_clusters(ids, neighbors, min_obs)


def expdbscan(dataset: Dataset, min_obs: int, eps: float) -> ClusterLabeling:
    """Aggregation baseline: DBSCAN over per-object expected coordinates."""
    if len(dataset) == 0:
        raise ValueError("dataset is empty")
    return dbscan_points(dataset.ids, expected_points(dataset), min_obs, eps)
