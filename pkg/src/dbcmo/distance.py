"""Alpha-approximation distance between multi-valued objects.

``d_alpha(p, q)`` is the distance of the first instance pair, in ascending
distance order, at which the running pair weight reaches ``alpha``. Ties on
distance are ordered by (index in p, index in q).

Two routes compute it: :func:`alpha_distance_brute_force` sorts every pair
and serves as the oracle; :func:`alpha_distance_filtered` walks both local
trees level by level, narrowing a lower/upper bound interval and dropping
entry pairs that fall outside it before anything reaches the instance level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels
from ._kernels import REACH_TOL, TRACE_COLS
from .index import LocalTree, RemovalScratch, TreeNode
from .model import MultiValuedObject, d_max, d_min


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not (0.0 < alpha <= 1.0):
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    return alpha


@dataclass(frozen=True)
class InstancePair:
    distance: float
    weight: float
    ids: tuple[int, int]


@dataclass(frozen=True)
class InstancePairList:
    pairs: tuple[InstancePair, ...]

    @property
    def total_weight(self) -> float:
        return math.fsum(p.weight for p in self.pairs)

    def cumulative_weights(self) -> np.ndarray:
        return np.cumsum([p.weight for p in self.pairs])

    def __len__(self) -> int:
        return len(self.pairs)

    def __getitem__(self, i) -> InstancePair:
        return self.pairs[i]


@dataclass(frozen=True)
class EntryPair:
    a: TreeNode
    b: TreeNode
    weight: float
    d_min: float
    d_max: float

    @classmethod
    def of(cls, a: TreeNode, b: TreeNode) -> "EntryPair":
        return cls(a, b, a.weight * b.weight, d_min(a.mbb, b.mbb), d_max(a.mbb, b.mbb))


@dataclass(frozen=True)
class BoundState:
    lower: float
    upper: float
    prev_lower: float
    prev_upper: float
    alpha_residual: float
    theta: float


def _pair_arrays(p: MultiValuedObject, q: MultiValuedObject):
    if p.dim != q.dim:
        raise ValueError(f"dimensionality mismatch: {p.dim} vs {q.dim}")
    diff = p.coords[:, None, :] - q.coords[None, :, :]
    sq = np.zeros(diff.shape[:2])
    for k in range(diff.shape[2]):
        sq += diff[..., k] * diff[..., k]
    dist = np.sqrt(sq).ravel()
    w = np.multiply.outer(p.weights, q.weights).ravel()
    order = np.argsort(dist, kind="stable")
    return dist[order], w[order], order


def instance_pairs(p: MultiValuedObject, q: MultiValuedObject) -> InstancePairList:
    """Every instance pair of ``p`` and ``q`` in the canonical sorted order."""
    dist, w, order = _pair_arrays(p, q)
    nq = len(q)
    return InstancePairList(
        tuple(InstancePair(float(d), float(x), (int(o // nq), int(o % nq))) for d, x, o in zip(dist, w, order))
    )


def alpha_distance_brute_force(p: MultiValuedObject, q: MultiValuedObject, alpha: float) -> float:
    alpha = _check_alpha(alpha)
    dist, w, _ = _pair_arrays(p, q)
    cum = np.cumsum(w)
    hit = np.nonzero(cum >= alpha - REACH_TOL)[0]
    return float(dist[hit[0]] if len(hit) else dist[-1])


def qualifying_weight(p: MultiValuedObject, q: MultiValuedObject, eps: float) -> float:
    """Total weight of instance pairs no farther apart than ``eps``."""
    dist, w, _ = _pair_arrays(p, q)
    return math.fsum(w[dist <= eps])


def update_lower_bound(child_pairs: Sequence[EntryPair], prev_lower: float, alpha: float):
    """Tighten the lower bound from child entry pairs, treated as instance pairs at their min distance.

    Pairs already below ``prev_lower`` only contribute weight (``theta``).
    Returns ``(new_lower, theta, survivors)`` with survivors sorted by min distance.
    """
    if not child_pairs:
        raise ValueError("child_pairs must not be empty")
    alpha = _check_alpha(alpha)
    dmin = np.array([p.d_min for p in child_pairs])
    w = np.array([p.weight for p in child_pairs])
    new_lower, theta = _kernels.lower_bound_scan(dmin, w, float(prev_lower), alpha)
    survivors = sorted((p for p in child_pairs if p.d_min >= prev_lower), key=lambda p: p.d_min)
    return float(new_lower), float(theta), survivors


def update_upper_bound(child_pairs: Sequence[EntryPair], prev_upper: float, alpha: float) -> float:
    """Tighten the upper bound from child entry pairs at their max distance."""
    if not child_pairs:
        raise ValueError("child_pairs must not be empty")
    alpha = _check_alpha(alpha)
    dmax = np.array([p.d_max for p in child_pairs])
    w = np.array([p.weight for p in child_pairs])
    new_upper, reached = _kernels.upper_bound_scan(dmax, w, float(prev_upper), alpha)
    if not reached:
        raise AssertionError("upper bound scan never reached alpha; pairs above the previous bound carried the quantile")
    return float(new_upper)


@dataclass
class FilterTrace:
    """Per-level record of one filtered distance computation."""

    distance: float
    instance_pairs: int
    levels: list[BoundState]
    survivor_weight: list[float]
    theta_total: list[float]
    dropped_total: list[float]
    survivor_count: list[int]


def _tree_args(tree: LocalTree, scratch: RemovalScratch | None):
    w = tree.weight if scratch is None else scratch.effective_weights()
    return tree.lo, tree.hi, tree.child_ptr, tree.child_idx, w, tree.root


_NO_TRACE = np.empty((0, TRACE_COLS))


def _run_filtered(p, q, alpha, p_scratch, q_scratch, trace):
    if p.dim != q.dim:
        raise ValueError(f"dimensionality mismatch: {p.dim} vs {q.dim}")
    return _kernels.alpha_distance_filtered(*_tree_args(p, p_scratch), *_tree_args(q, q_scratch), alpha, trace)


def alpha_distance_filtered(
    p: LocalTree,
    q: LocalTree,
    alpha: float,
    p_scratch: RemovalScratch | None = None,
    q_scratch: RemovalScratch | None = None,
) -> float:
    """Filter/refine alpha-distance over two local trees.

    With scratches, the trees are taken as trimmed: removed subtrees carry
    no weight, and the result is ``inf`` when what remains weighs less than
    ``alpha``.
    """
    alpha = _check_alpha(alpha)
    d, _, _ = _run_filtered(p, q, alpha, p_scratch, q_scratch, _NO_TRACE)
    return float(d)


def alpha_distance_trace(p: LocalTree, q: LocalTree, alpha: float, max_levels: int = 64) -> FilterTrace:
    alpha = _check_alpha(alpha)
    buf = np.full((max_levels, TRACE_COLS), np.nan)
    d, n_inst, n_levels = _run_filtered(p, q, alpha, None, None, buf)
    rows = buf[: min(n_levels, max_levels)]
    init_lower = d_min(p.mbb(p.root), q.mbb(q.root))
    init_upper = d_max(p.mbb(p.root), q.mbb(q.root))
    levels, prev_l, prev_u = [], init_lower, init_upper
    for r in rows:
        levels.append(BoundState(float(r[0]), float(r[1]), prev_l, prev_u, float(r[2]), float(r[3])))
        prev_l, prev_u = float(r[0]), float(r[1])
    return FilterTrace(
        distance=float(d),
        instance_pairs=int(n_inst),
        levels=levels,
        survivor_weight=rows[:, 4].tolist(),
        theta_total=rows[:, 5].tolist(),
        dropped_total=rows[:, 6].tolist(),
        survivor_count=[int(c) for c in rows[:, 7]],
    )


def is_alpha_neighbor(p, q, alpha: float, eps: float, fanout: int | None = None) -> bool:
    """True iff ``d_alpha(p, q) <= eps``. Accepts objects or prebuilt local trees."""
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    if isinstance(p, MultiValuedObject):
        p = LocalTree(p) if fanout is None else LocalTree(p, fanout)
    if isinstance(q, MultiValuedObject):
        q = LocalTree(q) if fanout is None else LocalTree(q, fanout)
    return alpha_distance_filtered(p, q, alpha) <= eps
