"""Synthetic multi-valued datasets with ground-truth labels.

Two generators:

* :func:`generate_mvo_dataset` turns labeled seed points into objects. Each
  seed becomes an object whose instances are scattered inside a ball around
  it; the ball radius is the distance to the seed's k-th nearest seed.
* :func:`generate_scale_dataset` builds the four-cell dataset used for
  scalability runs, with a free choice of object count, instance cap and
  dimensionality.

Both are fully determined by their seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.spatial import cKDTree

from .fileio import NOISE_LABEL
from .model import Dataset, MultiValuedObject

DISTRIBUTIONS = ("uniform", "gaussian", "inverse_gaussian", "mixture_gaussian")


class GeneratorError(ValueError):
    pass


@dataclass(frozen=True)
class BimodalWeights:
    """Equal-probability mixture of two normals; the second numbers are standard deviations."""

    means: tuple[float, float] = (30.0, 60.0)
    stds: tuple[float, float] = (10.0, 30.0)
    mix: tuple[float, float] = (0.5, 0.5)

    def __post_init__(self):
        if not math.isclose(sum(self.mix), 1.0, abs_tol=1e-12):
            raise GeneratorError("mixture weights must sum to 1")
        if min(self.stds) <= 0:
            raise GeneratorError("standard deviations must be positive")

    def draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        out = np.empty(n)
        filled = 0
        while filled < n:
            need = n - filled
            comp = rng.choice(2, size=need, p=self.mix)
            vals = rng.normal(np.take(self.means, comp), np.take(self.stds, comp))
            # negative or zero draws are redrawn rather than clamped
            vals = vals[vals > 0.0]
            out[filled : filled + len(vals)] = vals
            filled += len(vals)
        return out / out.sum()


@dataclass(frozen=True)
class MvoGenConfig:
    seed_points: np.ndarray
    labels: tuple[str, ...]
    k_range: tuple[int, int] = (3, 7)
    instance_range: tuple[int, int] = (30, 100)
    distributions: dict[str, str] | None = None
    weights: BimodalWeights = field(default_factory=BimodalWeights)
    domain: tuple[float, float] = (0.0, 1000.0)
    seed: int = 0
    id_prefix: str = "o"

    def __post_init__(self):
        pts = np.asarray(self.seed_points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] < 1:
            raise GeneratorError("seed_points must be an (n, d) array")
        object.__setattr__(self, "seed_points", pts)
        object.__setattr__(self, "labels", tuple(str(x) for x in self.labels))
        if len(self.labels) != len(pts):
            raise GeneratorError("one label per seed point is required")
        for name, (a, b) in (("k_range", self.k_range), ("instance_range", self.instance_range)):
            if a < 1 or b < a:
                raise GeneratorError(f"{name} must be a non-empty range of positive integers, got {(a, b)}")
        if self.domain[1] <= self.domain[0]:
            raise GeneratorError("domain must have positive extent")
        if self.distributions is not None:
            bad = set(self.distributions.values()) - set(DISTRIBUTIONS)
            if bad:
                raise GeneratorError(f"unknown distribution(s) {sorted(bad)}")

    def distribution_of(self) -> dict[str, str]:
        """Distribution per label; unspecified clusters cycle through all four in sorted label order."""
        chosen = dict(self.distributions or {})
        clusters = sorted({x for x in self.labels if x != NOISE_LABEL and x not in chosen})
        for i, lab in enumerate(clusters):
            chosen[lab] = DISTRIBUTIONS[i % len(DISTRIBUTIONS)]
        chosen.setdefault(NOISE_LABEL, "uniform")
        return chosen


def _directions(rng, n, d):
    v = rng.normal(size=(n, d))
    norms = np.linalg.norm(v, axis=1)
    norms[norms == 0.0] = 1.0
    return v / norms[:, None]


def _truncated(rng, n, draw):
    """Collect ``n`` rows from ``draw(m)`` keeping only rows inside the unit ball."""
    parts, have = [], 0
    while have < n:
        pts = draw(max(2 * (n - have), 8))
        pts = pts[np.einsum("ij,ij->i", pts, pts) <= 1.0]
        parts.append(pts)
        have += len(pts)
    return np.concatenate(parts)[:n]


def sample_ball(rng: np.random.Generator, kind: str, n: int, d: int) -> np.ndarray:
    """``n`` points in the closed unit ball of dimension ``d`` under one of the four distributions."""
    if kind == "uniform":
        return _directions(rng, n, d) * rng.uniform(0.0, 1.0, n)[:, None] ** (1.0 / d)
    if kind == "gaussian":
        return _truncated(rng, n, lambda m: rng.normal(0.0, 1.0 / 3.0, (m, d)))
    if kind == "inverse_gaussian":
        # radial density peaks at the boundary and decays inward
        g = np.abs(rng.normal(0.0, 1.0 / 3.0, 4 * n))
        g = g[g < 1.0]
        while len(g) < n:
            extra = np.abs(rng.normal(0.0, 1.0 / 3.0, n))
            g = np.concatenate([g, extra[extra < 1.0]])
        return _directions(rng, n, d) * (1.0 - g[:n])[:, None]
    if kind == "mixture_gaussian":
        axis = _directions(rng, 1, d)[0] * 0.5

        def draw(m):
            side = np.where(rng.uniform(size=m) < 0.5, 1.0, -1.0)
            return side[:, None] * axis + rng.normal(0.0, 0.25, (m, d))

        return _truncated(rng, n, draw)
    raise GeneratorError(f"unknown distribution {kind!r}")


def _rescale(blocks: list[np.ndarray], domain: tuple[float, float]) -> list[np.ndarray]:
    """One uniform scale and shift that fits every coordinate into ``domain``.

    Uniform scaling keeps balls round and distances proportional.
    """
    allpts = np.concatenate(blocks)
    lo = allpts.min(axis=0)
    span = float((allpts.max(axis=0) - lo).max())
    scale = (domain[1] - domain[0]) / span if span > 0 else 1.0
    out = []
    for b in blocks:
        x = domain[0] + (b - lo) * scale
        out.append(np.clip(x, domain[0], domain[1]))
    return out


def generate_mvo_dataset(config: MvoGenConfig) -> tuple[Dataset, dict[str, str]]:
    seeds = config.seed_points
    n, d = seeds.shape
    k_lo, k_hi = config.k_range
    if n < k_hi + 1:
        raise GeneratorError(f"need at least {k_hi + 1} seed points, got {n}")
    rng = np.random.default_rng(config.seed)
    dist_of = config.distribution_of()
    nn_dist, _ = cKDTree(seeds).query(seeds, k=k_hi + 1)
    width = len(str(n - 1))
    blocks, weights, ids = [], [], []
    for i in range(n):
        k = int(rng.integers(k_lo, k_hi + 1))
        radius = float(nn_dist[i, k])
        m = int(rng.integers(config.instance_range[0], config.instance_range[1] + 1))
        pts = seeds[i] + radius * sample_ball(rng, dist_of[config.labels[i]], m, d)
        blocks.append(pts)
        weights.append(config.weights.draw(rng, m))
        ids.append(f"{config.id_prefix}{i:0{width}d}")
    blocks = _rescale(blocks, config.domain)
    objects = [MultiValuedObject(oid, pts, w) for oid, pts, w in zip(ids, blocks, weights)]
    return Dataset.from_objects(objects), dict(zip(ids, config.labels))


@dataclass(frozen=True)
class ScaleGenConfig:
    n_objects: int = 2000
    max_instances: int = 100
    dims: int = 2
    seed: int = 0
    domain: float = 1000.0
    object_radius: float = 10.0

    def __post_init__(self):
        if self.n_objects < 4:
            raise GeneratorError("n_objects must be at least 4 (one object per cell)")
        if self.max_instances < 1:
            raise GeneratorError("max_instances must be at least 1")
        if self.dims < 2:
            raise GeneratorError("dims must be at least 2")


def generate_scale_dataset(config: ScaleGenConfig) -> tuple[Dataset, dict[str, str]]:
    """Four equally sized clusters, one per cell of a 2 x 2 split of the first two axes."""
    rng = np.random.default_rng(config.seed)
    L, d = config.domain, config.dims
    half = L / 2.0
    per_cell = [config.n_objects // 4 + (1 if c < config.n_objects % 4 else 0) for c in range(4)]
    width = len(str(config.n_objects - 1))
    objects, labels = [], {}
    idx = 0
    for cell, count in enumerate(per_cell):
        origin = np.array([(cell % 2) * half, (cell // 2) * half])
        cell_mid = origin + half / 2.0
        for _ in range(count):
            center = np.empty(d)
            center[:2] = np.clip(rng.normal(cell_mid, half / 8.0), origin, origin + half)
            if d > 2:
                center[2:] = np.clip(rng.normal(half, L / 8.0, d - 2), 0.0, L)
            m = int(rng.integers(1, config.max_instances + 1))
            pts = center + config.object_radius * sample_ball(rng, "uniform", m, d)
            raw = rng.normal(50.0, 15.0, m)
            while np.any(raw <= 0.0):
                bad = raw <= 0.0
                raw[bad] = rng.normal(50.0, 15.0, int(bad.sum()))
            oid = f"s{idx:0{width}d}"
            objects.append(MultiValuedObject(oid, np.clip(pts, 0.0, L), raw / raw.sum()))
            labels[oid] = str(cell)
            idx += 1
    return Dataset.from_objects(objects), labels
