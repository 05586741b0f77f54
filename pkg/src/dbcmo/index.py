"""Weight-annotated spatial trees over instances (local) and objects (global).

Trees are bulk loaded with sort-tile-recursive packing and stored as flat
arrays so the numba kernels can walk them. Node ids follow build order:
leaves come first (a local leaf's id is its instance index, a global leaf's
id is the object's dataset position), then each internal level bottom-up.
Children therefore always have smaller ids than their parent.

Removal is never physical. A :class:`RemovalScratch` records logically
removed nodes for one query, leaving the shared tree immutable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from ._kernels import effective_weights
from .model import Dataset, Mbb, ModelError, MultiValuedObject

DEFAULT_FANOUT = 8
MIN_FILL = 3
WEIGHT_TOL = 1e-9


class ScratchError(RuntimeError):
    """Inconsistent logical removal; signals a bug in pruning logic."""


def _int_root_ceil(p: int, k: int) -> int:
    s = max(1, int(round(p ** (1.0 / k))))
    while s ** k < p:
        s += 1
    while s > 1 and (s - 1) ** k >= p:
        s -= 1
    return s


def _str_order(idx: np.ndarray, centers: np.ndarray, fanout: int, axis: int) -> np.ndarray:
    idx = idx[np.argsort(centers[idx, axis], kind="stable")]
    dims = centers.shape[1]
    if axis == dims - 1 or len(idx) <= fanout:
        return idx
    pages = math.ceil(len(idx) / fanout)
    slabs = _int_root_ceil(pages, dims - axis)
    slab_size = fanout * math.ceil(pages / slabs)
    return np.concatenate(
        [_str_order(idx[i : i + slab_size], centers, fanout, axis + 1) for i in range(0, len(idx), slab_size)]
    )


def str_groups(centers: np.ndarray, fanout: int, min_fill: int = MIN_FILL) -> list[np.ndarray]:
    """Pack ``len(centers)`` entries into ``ceil(L / fanout)`` spatially coherent groups.

    Slab sizes are multiples of the fanout, so only the final group can be
    short. When it holds fewer than ``min_fill`` entries it is evened out
    with its predecessor.
    """
    n = len(centers)
    order = _str_order(np.arange(n), centers, fanout, 0)
    n_groups = math.ceil(n / fanout)
    sizes = [fanout] * (n_groups - 1) + [n - fanout * (n_groups - 1)]
    if n_groups > 1 and sizes[-1] < min_fill:
        pair = sizes[-2] + sizes[-1]
        sizes[-2] = math.ceil(pair / 2)
        sizes[-1] = pair - sizes[-2]
    bounds = np.cumsum([0] + sizes)
    return [order[bounds[i] : bounds[i + 1]] for i in range(n_groups)]


class SpatialTree:
    """Flat-array tree shared by :class:`LocalTree` and :class:`GlobalTree`."""

    def __init__(self, lo: np.ndarray, hi: np.ndarray, weights: np.ndarray, fanout: int):
        if fanout < 2:
            raise ValueError("maxFanout must be at least 2")
        n = lo.shape[0]
        if n == 0:
            raise ModelError("cannot build a tree without entries")
        self.fanout = fanout
        self.n_leaves = n
        los, his, ws = list(lo), list(hi), list(weights)
        kids: list[list[int]] = [[] for _ in range(n)]
        heights = [0] * n
        level = list(range(n))
        while len(level) > 1:
            centers = (np.array([los[i] for i in level]) + np.array([his[i] for i in level])) / 2.0
            nxt = []
            for group in str_groups(centers, fanout):
                children = [level[g] for g in group]
                total = 0.0
                for c in children:
                    total += ws[c]
                los.append(np.min([los[c] for c in children], axis=0))
                his.append(np.max([his[c] for c in children], axis=0))
                ws.append(total)
                kids.append(children)
                heights.append(heights[children[0]] + 1)
                nxt.append(len(ws) - 1)
            level = nxt
        self.root = level[0]
        self.lo = np.array(los, dtype=np.float64)
        self.hi = np.array(his, dtype=np.float64)
        self.weight = np.array(ws, dtype=np.float64)
        self.child_ptr = np.zeros(len(ws) + 1, dtype=np.int64)
        self.child_ptr[1:] = np.cumsum([len(k) for k in kids])
        self.child_idx = np.array([c for k in kids for c in k], dtype=np.int64)
        self.parent = np.full(len(ws), -1, dtype=np.int64)
        for p, k in enumerate(kids):
            self.parent[k] = p
        self.height = np.array(heights, dtype=np.int64)
        counts = np.zeros(len(ws), dtype=np.int64)
        counts[:n] = 1
        for p in range(n, len(ws)):
            counts[p] = counts[kids[p]].sum()
        self.leaf_count = counts
        for arr in (self.lo, self.hi, self.weight, self.child_ptr, self.child_idx, self.parent, self.height, counts):
            arr.flags.writeable = False

    @property
    def n_nodes(self) -> int:
        return self.weight.shape[0]

    @property
    def dim(self) -> int:
        return self.lo.shape[1]

    def children_of(self, node_id: int) -> np.ndarray:
        return self.child_idx[self.child_ptr[node_id] : self.child_ptr[node_id + 1]]

    def is_leaf(self, node_id: int) -> bool:
        return self.child_ptr[node_id] == self.child_ptr[node_id + 1]

    def mbb(self, node_id: int) -> Mbb:
        return Mbb(self.lo[node_id], self.hi[node_id])

    def node(self, node_id: int) -> "TreeNode":
        return TreeNode(self, int(node_id))

    @property
    def root_node(self) -> "TreeNode":
        return self.node(self.root)

    def leaves_under(self, node_id: int) -> list[int]:
        out, stack = [], [node_id]
        while stack:
            n = stack.pop()
            if self.is_leaf(n):
                out.append(n)
            else:
                stack.extend(self.children_of(n)[::-1].tolist())
        return sorted(out)

    def is_ancestor(self, anc: int, node_id: int) -> bool:
        p = self.parent[node_id]
        while p >= 0:
            if p == anc:
                return True
            p = self.parent[p]
        return False

    def levels(self) -> list[list[int]]:
        out, level = [], [self.root]
        while level:
            out.append(level)
            level = [int(c) for n in level for c in self.children_of(n)]
        return out

    def _payload_repr(self, node_id: int) -> str:
        return str(node_id)

    def dump(self) -> str:
        """Indented text rendering, one node per line."""
        lines = []

        def walk(n: int, depth: int):
            lo = ",".join(f"{v:.6g}" for v in self.lo[n])
            hi = ",".join(f"{v:.6g}" for v in self.hi[n])
            tag = f" -> {self._payload_repr(n)}" if self.is_leaf(n) else ""
            lines.append(f"{'  ' * depth}node {n} lo=({lo}) hi=({hi}) weight={self.weight[n]:.12g}{tag}")
            for c in self.children_of(n):
                walk(int(c), depth + 1)

        walk(self.root, 0)
        return "\n".join(lines)

    def structure(self) -> tuple:
        """Hashable structural fingerprint used by determinism checks."""
        return (
            self.root,
            self.lo.tobytes(),
            self.hi.tobytes(),
            self.weight.tobytes(),
            self.child_ptr.tobytes(),
            self.child_idx.tobytes(),
        )


class LocalTree(SpatialTree):
    """Tree over the instances of one object; leaf ``i`` holds instance ``i``."""

    def __init__(self, obj: MultiValuedObject, fanout: int = DEFAULT_FANOUT):
        super().__init__(obj.coords, obj.coords, obj.weights, fanout)
        self.object_id = obj.id
        self.obj = obj

    def _payload_repr(self, node_id: int) -> str:
        return f"instance {node_id}"


class GlobalTree(SpatialTree):
    """Tree over object bounding boxes; leaf ``i`` points at the ``i``-th object's local tree.

    Global node weight is the fraction of dataset objects below the node, so
    the root carries 1 like a local root does.
    """

    def __init__(self, dataset: Dataset, fanout: int = DEFAULT_FANOUT, local_fanout: int | None = None):
        if len(dataset) == 0:
            raise ModelError("cannot build a global tree over an empty dataset")
        local_fanout = fanout if local_fanout is None else local_fanout
        self.dataset = dataset
        self.local_trees = [LocalTree(obj, local_fanout) for obj in dataset]
        lo = np.array([t.lo[t.root] for t in self.local_trees])
        hi = np.array([t.hi[t.root] for t in self.local_trees])
        n = len(dataset)
        super().__init__(lo, hi, np.full(n, 1.0 / n), fanout)
        self.object_index = {t.object_id: t for t in self.local_trees}
        self.ids = [t.object_id for t in self.local_trees]

    def object_at(self, leaf_id: int) -> str:
        return self.ids[leaf_id]

    def objects_under(self, node_id: int) -> list[str]:
        return [self.ids[i] for i in self.leaves_under(node_id)]

    def _payload_repr(self, node_id: int) -> str:
        return f"object {self.ids[node_id]}"


@dataclass(frozen=True)
class TreeNode:
    """Read-only view of one node of a :class:`SpatialTree`."""

    tree: SpatialTree
    node_id: int

    @property
    def mbb(self) -> Mbb:
        return self.tree.mbb(self.node_id)

    @property
    def weight(self) -> float:
        return float(self.tree.weight[self.node_id])

    @property
    def is_leaf(self) -> bool:
        return self.tree.is_leaf(self.node_id)

    @property
    def children(self) -> list["TreeNode"]:
        return [TreeNode(self.tree, int(c)) for c in self.tree.children_of(self.node_id)]

    @property
    def payload(self):
        if not self.is_leaf:
            return None
        if isinstance(self.tree, GlobalTree):
            return self.tree.object_at(self.node_id)
        return self.node_id

    def __repr__(self) -> str:
        return f"TreeNode(id={self.node_id}, weight={self.weight:.6g}, leaf={self.is_leaf})"


def build_local_tree(obj: MultiValuedObject, max_fanout: int = DEFAULT_FANOUT) -> LocalTree:
    return LocalTree(obj, max_fanout)


def build_global_tree(dataset: Dataset, max_fanout: int = DEFAULT_FANOUT) -> GlobalTree:
    return GlobalTree(dataset, max_fanout)


class RemovalScratch:
    """Per-query logical removal marks for one local tree.

    ``removed_weight`` is the weight no longer present in the trimmed tree,
    so the trimmed tree weighs ``1 - removed_weight``.
    """

    def __init__(self, tree: LocalTree):
        self.tree = tree
        self.removed: set[int] = set()
        self.removed_weight = 0.0
        self._eff = None

    def __bool__(self) -> bool:
        return bool(self.removed)

    def __contains__(self, node_id: int) -> bool:
        return node_id in self.removed

    @property
    def trimmed_weight(self) -> float:
        return 1.0 - self.removed_weight

    def mark(self, node_id: int) -> None:
        node_id = int(node_id)
        if node_id in self.removed:
            raise ScratchError(f"node {node_id} already marked removed")
        tree = self.tree
        p = tree.parent[node_id]
        while p >= 0:
            if p in self.removed:
                raise ScratchError(f"node {node_id} lies under removed node {p}")
            p = tree.parent[p]
        for r in self.removed:
            if tree.is_ancestor(node_id, r):
                raise ScratchError(f"node {node_id} is an ancestor of removed node {r}")
        self.removed.add(node_id)
        self.removed_weight += float(tree.weight[node_id])
        self._eff = None

    def mark_many(self, node_ids: Iterable[int], validate: bool = True) -> None:
        """Mark several nodes. ``validate=False`` trusts the caller that
        ``node_ids`` is an antichain disjoint from the current marks."""
        if validate:
            for n in node_ids:
                self.mark(n)
            return
        ids = np.asarray(node_ids, dtype=np.int64)
        if len(ids) == 0:
            return
        self.removed.update(ids.tolist())
        self.removed_weight += float(self.tree.weight[ids].sum())
        self._eff = None

    def reset(self) -> None:
        self.removed.clear()
        self.removed_weight = 0.0
        self._eff = None

    def effective_weights(self) -> np.ndarray:
        """Per-node weight still present after trimming (zero for removed subtrees)."""
        if not self.removed:
            return self.tree.weight
        if self._eff is None:
            mask = np.zeros(self.tree.n_nodes, dtype=np.bool_)
            mask[list(self.removed)] = True
            self._eff = effective_weights(self.tree.weight, self.tree.child_ptr, self.tree.child_idx, mask)
        return self._eff

    def alive_leaves(self) -> np.ndarray:
        eff = self.effective_weights()
        return np.nonzero(eff[: self.tree.n_leaves] > 0.0)[0]

    def trimmed_mbb(self) -> tuple[np.ndarray, np.ndarray] | None:
        """Box over the leaves not under any removed node, or None if nothing remains."""
        if not self.removed:
            t = self.tree
            return t.lo[t.root], t.hi[t.root]
        leaves = self.alive_leaves()
        if len(leaves) == 0:
            return None
        pts = self.tree.lo[leaves]
        return pts.min(axis=0), pts.max(axis=0)


def child_entries(node: TreeNode, scratch: RemovalScratch | None = None) -> list[TreeNode]:
    kids = node.children
    if scratch is None or not scratch.removed:
        return kids
    return [k for k in kids if k.node_id not in scratch.removed]


def mark_removed(scratch: RemovalScratch, node: TreeNode | int) -> RemovalScratch:
    scratch.mark(node.node_id if isinstance(node, TreeNode) else node)
    return scratch


def reset_scratch(scratch: RemovalScratch) -> RemovalScratch:
    scratch.reset()
    return scratch
