"""Core domain types: instances, multi-valued objects, datasets and boxes."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

WEIGHT_SUM_TOL = 1e-9


class ModelError(ValueError):
    """Raised when a type invariant is violated."""


def _as_vector(values, name: str) -> np.ndarray:
    arr = np.array(values, dtype=np.float64)
    if arr.ndim != 1:
        raise ModelError(f"{name} must be a 1-d vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ModelError(f"{name} contains non-finite values")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class Instance:
    coords: np.ndarray
    weight: float

    def __post_init__(self):
        object.__setattr__(self, "coords", _as_vector(self.coords, "coords"))
        w = float(self.weight)
        if not (0.0 < w <= 1.0):
            raise ModelError(f"instance weight must lie in (0, 1], got {w}")
        object.__setattr__(self, "weight", w)

    @property
    def dim(self) -> int:
        return self.coords.shape[0]


class MultiValuedObject:
    """An object described by weighted instances whose weights sum to 1.

    Instances are stored column-wise: ``coords`` is an ``(n, d)`` array and
    ``weights`` an ``(n,)`` array, both read-only. File order is kept.
    """

    __slots__ = ("id", "coords", "weights")

    def __init__(self, id: str, coords, weights):
        coords = np.array(coords, dtype=np.float64)
        weights = np.array(weights, dtype=np.float64)
        if coords.ndim != 2 or coords.shape[0] == 0:
            raise ModelError(f"object {id!r}: needs a non-empty (n, d) coordinate array")
        if weights.shape != (coords.shape[0],):
            raise ModelError(f"object {id!r}: one weight per instance required")
        if not (np.all(np.isfinite(coords)) and np.all(np.isfinite(weights))):
            raise ModelError(f"object {id!r}: non-finite values")
        if np.any(weights <= 0.0) or np.any(weights > 1.0):
            raise ModelError(f"object {id!r}: instance weights must lie in (0, 1]")
        total = math.fsum(weights)
        if abs(total - 1.0) > WEIGHT_SUM_TOL:
            raise ModelError(f"object {id!r}: weights sum to {total!r}, expected 1")
        coords.flags.writeable = False
        weights.flags.writeable = False
        self.id = str(id)
        self.coords = coords
        self.weights = weights

    @classmethod
    def from_instances(cls, id: str, instances: Sequence[Instance]) -> "MultiValuedObject":
        if not instances:
            raise ModelError(f"object {id!r}: no instances")
        dims = {inst.dim for inst in instances}
        if len(dims) != 1:
            raise ModelError(f"object {id!r}: ragged instance dimensionality {sorted(dims)}")
        return cls(id, [inst.coords for inst in instances], [inst.weight for inst in instances])

    @property
    def dim(self) -> int:
        return self.coords.shape[1]

    @property
    def instances(self) -> list[Instance]:
        return [Instance(c, w) for c, w in zip(self.coords, self.weights)]

    def __len__(self) -> int:
        return self.coords.shape[0]

    def __repr__(self) -> str:
        return f"MultiValuedObject(id={self.id!r}, n={len(self)}, d={self.dim})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, MultiValuedObject):
            return NotImplemented
        return (
            self.id == other.id
            and np.array_equal(self.coords, other.coords)
            and np.array_equal(self.weights, other.weights)
        )

    __hash__ = None


@dataclass(frozen=True)
class Dataset:
    dimensionality: int
    objects: tuple[MultiValuedObject, ...]
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        objects = tuple(self.objects)
        object.__setattr__(self, "objects", objects)
        if self.dimensionality < 1:
            raise ModelError("dimensionality must be positive")
        index = {}
        for pos, obj in enumerate(objects):
            if obj.dim != self.dimensionality:
                raise ModelError(
                    f"object {obj.id!r} has dimensionality {obj.dim}, dataset expects {self.dimensionality}"
                )
            if obj.id in index:
                raise ModelError(f"duplicate object id {obj.id!r}")
            index[obj.id] = pos
        object.__setattr__(self, "_index", index)

    @classmethod
    def from_objects(cls, objects: Iterable[MultiValuedObject]) -> "Dataset":
        objects = tuple(objects)
        if not objects:
            raise ModelError("cannot infer dimensionality of an empty dataset")
        return cls(objects[0].dim, objects)

    def __len__(self) -> int:
        return len(self.objects)

    def __iter__(self) -> Iterator[MultiValuedObject]:
        return iter(self.objects)

    def __getitem__(self, object_id: str) -> MultiValuedObject:
        return self.objects[self._index[object_id]]

    def __contains__(self, object_id) -> bool:
        return object_id in self._index

    @property
    def ids(self) -> list[str]:
        return [o.id for o in self.objects]

    def position(self, object_id: str) -> int:
        return self._index[object_id]


@dataclass(frozen=True)
class Mbb:
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = _as_vector(self.lo, "lo")
        hi = _as_vector(self.hi, "hi")
        if lo.shape != hi.shape:
            raise ModelError("lo and hi must have the same length")
        if np.any(lo > hi):
            raise ModelError("mbb requires lo <= hi on every axis")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self) -> int:
        return self.lo.shape[0]

    def contains(self, other: "Mbb") -> bool:
        return bool(np.all(self.lo <= other.lo) and np.all(other.hi <= self.hi))

    def contains_point(self, point) -> bool:
        point = np.asarray(point, dtype=np.float64)
        return bool(np.all(self.lo <= point) and np.all(point <= self.hi))


def _check_dims(a: np.ndarray, b: np.ndarray):
    if a.shape != b.shape:
        raise ModelError(f"dimensionality mismatch: {a.shape[0]} vs {b.shape[0]}")


def _sum_squares(diffs: np.ndarray) -> float:
    # Sequential per-axis accumulation; every distance in the package uses this order.
    total = 0.0
    for t in diffs:
        total += t * t
    return total


def euclidean_distance(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    _check_dims(a, b)
    return math.sqrt(_sum_squares((a - b).tolist()))


def mbb_of(instances) -> Mbb:
    """Bounding box of a list of :class:`Instance`, an object, or an ``(n, d)`` array."""
    if isinstance(instances, MultiValuedObject):
        pts = instances.coords
    elif isinstance(instances, np.ndarray):
        pts = instances
    else:
        instances = list(instances)
        if not instances:
            raise ModelError("mbb of an empty instance list")
        pts = np.array([inst.coords if isinstance(inst, Instance) else inst for inst in instances], dtype=np.float64)
    if pts.ndim != 2 or pts.shape[0] == 0:
        raise ModelError("mbb of an empty instance list")
    return Mbb(pts.min(axis=0), pts.max(axis=0))


def d_min(a: Mbb, b: Mbb) -> float:
    _check_dims(a.lo, b.lo)
    gaps = np.maximum(0.0, np.maximum(a.lo - b.hi, b.lo - a.hi))
    return math.sqrt(_sum_squares(gaps.tolist()))


def d_max(a: Mbb, b: Mbb) -> float:
    _check_dims(a.lo, b.lo)
    spans = np.maximum(np.abs(a.hi - b.lo), np.abs(b.hi - a.lo))
    return math.sqrt(_sum_squares(spans.tolist()))
