"""Built-in labeled seed-point layouts for the synthetic benchmarks.

The layouts are regenerated geometrically from a fixed seed and mimic the
shape of the classic 2-d clustering benchmarks of the same names:

* ``aggregation``: 788 points, 7 clusters, two pairs of clusters joined by thin necks;
* ``compound``: 399 points, a blob inside a ring, a concave cluster wrapped in
  sparse noise, and three further blobs;
* ``jain``: 373 points, two interleaved crescents of different density;
* ``twocircles``: 500 points, two rings each holding a blob.

Noise seeds carry the label ``"-1"``.
"""

from __future__ import annotations

import numpy as np

from .fileio import NOISE_LABEL

LAYOUT_SEED = 20240611


class LayoutError(ValueError):
    pass


def _disc(rng, n, center, radius, aspect=1.0, angle=0.0):
    r = radius * np.sqrt(rng.uniform(0, 1, n))
    t = rng.uniform(0, 2 * np.pi, n)
    x = np.c_[r * np.cos(t), aspect * r * np.sin(t)]
    c, s = np.cos(angle), np.sin(angle)
    return x @ np.array([[c, s], [-s, c]]) + center


def _gauss(rng, n, center, sigma, cap):
    out = np.empty((0, 2))
    while len(out) < n:
        x = rng.normal(0.0, sigma, (2 * n, 2))
        out = np.concatenate([out, x[np.linalg.norm(x, axis=1) <= cap]])
    return out[:n] + center


def _arc(rng, n, center, radius, start, stop, jitter):
    t = np.linspace(start, stop, n) + rng.uniform(-0.5, 0.5, n) * (stop - start) / n
    r = radius + rng.uniform(-jitter, jitter, n)
    return np.c_[center[0] + r * np.cos(t), center[1] + r * np.sin(t)]


def _segment(rng, n, a, b, jitter):
    t = np.linspace(0.0, 1.0, n)
    a, b = np.asarray(a, float), np.asarray(b, float)
    return a + t[:, None] * (b - a) + rng.uniform(-jitter, jitter, (n, 2))


def _aggregation(rng):
    # cluster sizes of the classic benchmark: 45 + 170 + 102 + 273 + 34 + 130 + 34 = 788
    parts = [
        _disc(rng, 170, (10.0, 22.0), 5.5, aspect=1.15),
        _disc(rng, 102, (22.0, 23.0), 4.5),
        _disc(rng, 273, (25.0, 8.0), 7.5, aspect=0.75),
        _disc(rng, 130, (34.0, 21.5), 5.0, aspect=1.1),
        _disc(rng, 45, (8.0, 8.0), 3.2),
        _disc(rng, 34, (3.0, 14.0), 2.2),
        _disc(rng, 34, (38.0, 10.0), 2.2),
    ]
    # thin necks between cluster pairs 0-1 and 2-6 keep the density decreasing continuously
    parts[0] = np.concatenate([parts[0][:-4], _segment(rng, 4, (15.2, 22.3), (16.6, 22.7), 0.15)])
    parts[6] = np.concatenate([parts[6][:-3], _segment(rng, 3, (35.0, 10.0), (34.0, 9.3), 0.15)])
    return parts, [str(i) for i in range(7)]


def _compound(rng):
    ring = _arc(rng, 92, (10.0, 10.0), 7.0, 0.0, 2 * np.pi * (1 - 1 / 92), 0.6)
    inner = _disc(rng, 50, (10.0, 10.0), 2.4)
    concave = np.concatenate(
        [
            _arc(rng, 70, (32.0, 10.0), 5.0, 0.3 * np.pi, 1.7 * np.pi, 0.9),
            _disc(rng, 30, (27.5, 10.0), 1.3),
        ]
    )
    blob_a = _disc(rng, 45, (24.0, 26.0), 3.0)
    blob_b = _disc(rng, 38, (8.0, 27.0), 2.8, aspect=0.7)
    blob_c = _disc(rng, 25, (40.0, 26.0), 2.0)
    # sparse noise scattered around the concave cluster, kept clear of it
    noise = []
    while len(noise) < 49:
        p = rng.uniform((22.0, 1.0), (44.0, 19.5))
        if 8.0 <= np.hypot(p[0] - 32.0, p[1] - 10.0) and np.hypot(p[0] - 40.0, p[1] - 26.0) > 6.0:
            if all(np.hypot(*(p - q)) > 1.8 for q in noise):
                noise.append(p)
    parts = [inner, ring, concave, blob_a, blob_b, blob_c, np.array(noise)]
    return parts, ["0", "1", "2", "3", "4", "5", NOISE_LABEL]


def _jain(rng):
    dense = _arc(rng, 276, (12.0, 6.0), 10.0, np.pi * 0.05, np.pi * 0.95, 1.6)
    dense = dense * np.array([1.0, -1.0]) + np.array([0.0, 18.0])
    # the sparse crescent's left tip dips toward the dense crescent's right tip
    sparse = _arc(rng, 97, (30.0, 10.0), 10.0, np.pi * 0.08, np.pi * 0.92, 1.4)
    return [dense, sparse], ["0", "1"]


def _twocircles(rng):
    parts = [
        _arc(rng, 160, (10.0, 10.0), 8.0, 0.0, 2 * np.pi * (1 - 1 / 160), 0.5),
        _gauss(rng, 90, (10.0, 10.0), 1.2, 3.0),
        _arc(rng, 160, (32.0, 10.0), 8.0, 0.0, 2 * np.pi * (1 - 1 / 160), 0.5),
        _gauss(rng, 90, (32.0, 10.0), 1.2, 3.0),
    ]
    return parts, ["0", "1", "2", "3"]


_LAYOUTS = {
    "aggregation": _aggregation,
    "compound": _compound,
    "jain": _jain,
    "twocircles": _twocircles,
}

LAYOUT_NAMES = tuple(_LAYOUTS)


def builtin_layout(name: str) -> tuple[np.ndarray, list[str]]:
    """Seed points ``(n, 2)`` and their labels for a named layout."""
    try:
        build = _LAYOUTS[name]
    except KeyError:
        raise LayoutError(f"unknown layout {name!r}; choose from {', '.join(LAYOUT_NAMES)}") from None
    rng = np.random.default_rng(LAYOUT_SEED)
    parts, names = build(rng)
    points = np.concatenate(parts)
    labels = [lab for part, lab in zip(parts, names) for _ in range(len(part))]
    return points, labels
