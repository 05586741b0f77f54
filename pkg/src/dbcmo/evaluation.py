"""Pair-counting precision, recall and F1 against ground-truth labels.

Ground-truth noise objects are left out of every pair. Predicted noise
objects are treated as singleton clusters, so over-labeling noise shows up
as false negatives.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .cluster import NOISE, ClusterLabeling
from .fileio import NOISE_LABEL


@dataclass(frozen=True)
class PairCounts:
    tp: int
    tn: int
    fp: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn


@dataclass(frozen=True)
class Metrics:
    precision: float
    recall: float
    f1: float


def _is_truth_noise(label) -> bool:
    return str(label) == NOISE_LABEL


def _aligned(predicted, truth: Mapping[str, object]):
    pred = predicted.labels if isinstance(predicted, ClusterLabeling) else dict(predicted)
    if set(pred) != set(truth):
        missing = sorted(set(truth) - set(pred))[:5]
        extra = sorted(set(pred) - set(truth))[:5]
        raise ValueError(f"predicted and truth ids differ (missing {missing}, extra {extra})")
    ids = [oid for oid in truth if not _is_truth_noise(truth[oid])]
    p = []
    singleton = -1
    for oid in ids:
        c = pred[oid]
        if c == NOISE:
            # each predicted-noise object gets its own cluster id
            p.append(("noise", singleton))
            singleton -= 1
        else:
            p.append(("cluster", c))
    t = [str(truth[oid]) for oid in ids]
    return p, t


def pair_counts_direct(predicted, truth: Mapping[str, object]) -> PairCounts:
    """Reference count by enumerating every unordered pair."""
    p, t = _aligned(predicted, truth)
    tp = tn = fp = fn = 0
    for i, j in itertools.combinations(range(len(p)), 2):
        same_t = t[i] == t[j]
        same_p = p[i] == p[j]
        if same_t and same_p:
            tp += 1
        elif same_t:
            fn += 1
        elif same_p:
            fp += 1
        else:
            tn += 1
    return PairCounts(tp, tn, fp, fn)


def _pairs(counts: np.ndarray) -> int:
    counts = counts.astype(np.int64)
    return int((counts * (counts - 1) // 2).sum())


def pair_counts(predicted, truth: Mapping[str, object]) -> PairCounts:
    """Pair counts from the contingency table; equal to :func:`pair_counts_direct`."""
    p, t = _aligned(predicted, truth)
    m = len(p)
    if m < 2:
        return PairCounts(0, 0, 0, 0)
    _, pi = np.unique(np.array([f"{a}:{b}" for a, b in p]), return_inverse=True)
    _, ti = np.unique(np.array(t), return_inverse=True)
    table = np.zeros((pi.max() + 1, ti.max() + 1), dtype=np.int64)
    np.add.at(table, (pi, ti), 1)
    tp = _pairs(table.ravel())
    same_p = _pairs(table.sum(axis=1))
    same_t = _pairs(table.sum(axis=0))
    total = m * (m - 1) // 2
    fp = same_p - tp
    fn = same_t - tp
    return PairCounts(tp, total - tp - fp - fn, fp, fn)


def precision_recall_f1(counts: PairCounts) -> Metrics:
    precision = 1.0 if counts.tp + counts.fp == 0 else counts.tp / (counts.tp + counts.fp)
    recall = 1.0 if counts.tp + counts.fn == 0 else counts.tp / (counts.tp + counts.fn)
    f1 = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
    return Metrics(precision, recall, f1)


def evaluate(predicted, truth: Mapping[str, object]) -> Metrics:
    return precision_recall_f1(pair_counts(predicted, truth))


METRICS_HEADER = "algorithm,dataset,precision,recall,f1,runtime_ms"


def metrics_row(algorithm: str, dataset: str, metrics: Metrics, runtime_ms: float) -> str:
    return f"{algorithm},{dataset},{metrics.precision:.6f},{metrics.recall:.6f},{metrics.f1:.6f},{runtime_ms:.3f}"


def write_metrics(path, rows) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(METRICS_HEADER + "\n")
        for row in rows:
            fh.write(row + "\n")
