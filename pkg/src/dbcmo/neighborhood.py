"""Alpha-approximation Eps-neighborhood retrieval over the global tree.

Each global entry is tested against the query object with up to four rules,
enabled cumulatively by the pruning level:

1. min distance between the query box and the entry box is at least Eps:
   nothing below the entry is a neighbor.
2. max distance is within Eps: everything below the entry is a neighbor.
3. the query's maximal Eps-pruning entries regarding the entry weigh more
   than ``1 - alpha``: nothing below the entry is a neighbor. The pruning
   entries are recorded as removed, leaving a trimmed query tree.
4. (global leaves only) the candidate's maximal Eps-pruning entries against
   the trimmed query box leave too little weight:
   ``(1 - w_candidate) * w_trimmed_query < alpha``.

Leaves that survive get a filtered distance call on the trimmed trees.
The query object is always part of its own neighborhood.
"""

from __future__ import annotations

import os
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import _kernels
from .distance import alpha_distance_filtered
from .index import GlobalTree, LocalTree, RemovalScratch, TreeNode
from .model import Mbb, d_max, d_min

# Rules 3 and 4 only prune when the weight inequality holds by this margin,
# so summation roundoff can never turn a neighbor into a pruned entry.
PRUNE_MARGIN = 1e-9

WORKERS_ENV = "DBCMO_WORKERS"


class PruningLevel(Enum):
    P0 = 0
    P1 = 1
    P1_2 = 2
    P1_3 = 3
    P1_4 = 4

    @classmethod
    def parse(cls, value) -> "PruningLevel":
        if isinstance(value, cls):
            return value
        key = str(value).strip().upper().replace("-", "_")
        try:
            return cls[key]
        except KeyError:
            raise ValueError(f"unknown pruning level {value!r}; expected one of {cls.labels()}") from None

    @classmethod
    def labels(cls) -> list[str]:
        return [m.label for m in cls]

    @property
    def label(self) -> str:
        return self.name.replace("_", "-")


@dataclass(frozen=True)
class QueryParams:
    alpha: float
    eps: float
    pruning: PruningLevel = PruningLevel.P1_4

    def __post_init__(self):
        if not (0.0 < self.alpha <= 1.0):
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha}")
        if not self.eps > 0:
            raise ValueError(f"eps must be positive, got {self.eps}")
        object.__setattr__(self, "pruning", PruningLevel.parse(self.pruning))


@dataclass
class PruneStats:
    rule_hits: list[int] = field(default_factory=lambda: [0, 0, 0, 0])
    distance_calls_saved: int = 0
    distance_calls_made: int = 0
    entries_visited: int = 0

    def __iadd__(self, other: "PruneStats") -> "PruneStats":
        self.rule_hits = [a + b for a, b in zip(self.rule_hits, other.rule_hits)]
        self.distance_calls_saved += other.distance_calls_saved
        self.distance_calls_made += other.distance_calls_made
        self.entries_visited += other.entries_visited
        return self

    def as_row(self) -> dict:
        row = {f"rule{i + 1}_hits": h for i, h in enumerate(self.rule_hits)}
        row.update(
            distance_calls_saved=self.distance_calls_saved,
            distance_calls_made=self.distance_calls_made,
            entries_visited=self.entries_visited,
        )
        return row


def _box(entry) -> Mbb:
    return entry.mbb if isinstance(entry, TreeNode) else entry


def prune_rule1(query_mbb: Mbb, entry, eps: float) -> bool:
    return d_min(query_mbb, _box(entry)) >= eps


def prune_rule2(query_mbb: Mbb, entry, eps: float) -> bool:
    return d_max(query_mbb, _box(entry)) <= eps


def _walk(tree: LocalTree, lo, hi, eps: float, stop: float):
    out = np.empty(tree.n_nodes, dtype=np.int64)
    hit, weight, n = _kernels.pruning_walk(
        tree.lo, tree.hi, tree.child_ptr, tree.child_idx, tree.weight, tree.root,
        np.asarray(lo, dtype=np.float64), np.asarray(hi, dtype=np.float64), float(eps), float(stop), out,
    )
    return bool(hit), float(weight), out[:n]


def maximal_pruning_entries(tree: LocalTree, box: Mbb, eps: float) -> tuple[list[int], float]:
    """All maximal Eps-pruning entries of ``tree`` regarding ``box`` and their total weight."""
    _, weight, ids = _walk(tree, box.lo, box.hi, eps, np.inf)
    return ids.tolist(), weight


def prune_rule3(query_tree: LocalTree, scratch: RemovalScratch, entry, eps: float, alpha: float) -> bool:
    """Rule 3; records the pruning entries found in ``scratch``.

    On a False return, ``scratch`` describes the trimmed query tree.
    """
    box = _box(entry)
    hit, _, ids = _walk(query_tree, box.lo, box.hi, eps, 1.0 - alpha + PRUNE_MARGIN)
    scratch.mark_many(ids, validate=False)
    return hit


def prune_rule4(
    query_tree: LocalTree,
    query_scratch: RemovalScratch,
    candidate: LocalTree,
    candidate_scratch: RemovalScratch,
    eps: float,
    alpha: float,
) -> bool:
    """Rule 4; records the candidate's pruning entries in ``candidate_scratch``.

    Distances are measured against the box of the query's surviving leaves.
    """
    trimmed = query_scratch.trimmed_mbb()
    if trimmed is None:
        return True
    query_weight = query_scratch.trimmed_weight
    target = alpha - PRUNE_MARGIN
    stop = 1.0 - target / query_weight
    hit, weight, ids = _walk(candidate, trimmed[0], trimmed[1], eps, stop)
    candidate_scratch.mark_many(ids, validate=False)
    return hit or (1.0 - weight) * query_weight < target


def get_neighborhood(tree: GlobalTree, object_id: str, params: QueryParams) -> tuple[set[str], PruneStats]:
    try:
        o_pos = tree.dataset.position(object_id)
    except KeyError:
        raise KeyError(f"unknown object id {object_id!r}") from None
    level = params.pruning.value
    alpha, eps = params.alpha, params.eps
    o_tree = tree.local_trees[o_pos]
    o_box = o_tree.mbb(o_tree.root)
    o_scratch = RemovalScratch(o_tree)
    stats = PruneStats()
    result = {object_id}

    def saved(entry: int) -> int:
        n = int(tree.leaf_count[entry])
        if entry == o_pos or tree.is_ancestor(entry, o_pos):
            n -= 1
        return n

    queue = deque([tree.root] if tree.is_leaf(tree.root) else tree.children_of(tree.root).tolist())
    while queue:
        e = queue.popleft()
        stats.entries_visited += 1
        leaf = tree.is_leaf(e)
        if leaf and e == o_pos:
            continue
        box = tree.mbb(e)
        if level >= 1 and prune_rule1(o_box, box, eps):
            stats.rule_hits[0] += 1
            stats.distance_calls_saved += saved(e)
            continue
        if level >= 2 and prune_rule2(o_box, box, eps):
            stats.rule_hits[1] += 1
            stats.distance_calls_saved += saved(e)
            result.update(tree.objects_under(e))
            continue
        if level >= 3 and prune_rule3(o_tree, o_scratch, box, eps, alpha):
            stats.rule_hits[2] += 1
            stats.distance_calls_saved += saved(e)
            o_scratch.reset()
            continue
        if not leaf:
            queue.extend(tree.children_of(e).tolist())
            o_scratch.reset()
            continue
        p_tree = tree.local_trees[e]
        p_scratch = RemovalScratch(p_tree)
        if level >= 4 and prune_rule4(o_tree, o_scratch, p_tree, p_scratch, eps, alpha):
            stats.rule_hits[3] += 1
            stats.distance_calls_saved += 1
        else:
            stats.distance_calls_made += 1
            if alpha_distance_filtered(o_tree, p_tree, alpha, o_scratch, p_scratch) <= eps:
                result.add(p_tree.object_id)
        p_scratch.reset()
        o_scratch.reset()
    return result, stats


def worker_count(default: int = 1) -> int:
    raw = os.environ.get(WORKERS_ENV)
    if not raw:
        return default
    try:
        return max(1, int(raw))
    except ValueError:
        raise ValueError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None


def all_neighborhoods(
    tree: GlobalTree, params: QueryParams, ids=None, workers: int | None = None
) -> tuple[dict[str, set[str]], PruneStats]:
    """Neighborhood of every object (or of ``ids``); queries fan out over threads when workers > 1."""
    ids = list(tree.ids if ids is None else ids)
    workers = worker_count() if workers is None else workers
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(lambda oid: get_neighborhood(tree, oid, params), ids))
    else:
        results = [get_neighborhood(tree, oid, params) for oid in ids]
    total = PruneStats()
    out = {}
    for oid, (nbrs, st) in zip(ids, results):
        out[oid] = nbrs
        total += st
    return out, total
