"""Dataset, truth-label and labeling file formats.

Dataset files are JSON lines, one object per line::

    {"id": "paul", "instances": [{"coords": [33.56, 37.19], "weight": 0.24}, ...], "label": "c1"}

``label`` is optional ground truth. Weight sums off by more than the
model's 1e-9 but within 1e-6 are renormalized on load; anything further
off is rejected, as are zero or negative weights and ragged dimensionality.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Mapping

import numpy as np

from .model import WEIGHT_SUM_TOL, Dataset, ModelError, MultiValuedObject

RENORMALIZE_TOL = 1e-6
NOISE_LABEL = "-1"


class DatasetFormatError(ModelError):
    pass


def _parse_record(record: dict, lineno: int) -> tuple[MultiValuedObject, str | None]:
    try:
        oid = record["id"]
        raw = record["instances"]
    except (KeyError, TypeError):
        raise DatasetFormatError(f"line {lineno}: record needs 'id' and 'instances'") from None
    if not isinstance(raw, list) or not raw:
        raise DatasetFormatError(f"line {lineno}: object {oid!r} has no instances")
    coords, weights = [], []
    for inst in raw:
        try:
            c = [float(v) for v in inst["coords"]]
            w = float(inst["weight"])
        except (KeyError, TypeError, ValueError):
            raise DatasetFormatError(f"line {lineno}: malformed instance in object {oid!r}") from None
        coords.append(c)
        weights.append(w)
    dims = {len(c) for c in coords}
    if len(dims) != 1 or 0 in dims:
        raise DatasetFormatError(f"line {lineno}: ragged dimensionality in object {oid!r}")
    if any(w <= 0.0 for w in weights):
        raise DatasetFormatError(f"line {lineno}: object {oid!r} has a non-positive weight")
    total = math.fsum(weights)
    if abs(total - 1.0) > RENORMALIZE_TOL:
        raise DatasetFormatError(f"line {lineno}: object {oid!r} weights sum to {total}, not 1")
    w = np.array(weights)
    if abs(total - 1.0) > WEIGHT_SUM_TOL:
        # only drift the model would reject is corrected, so valid files load bit-exact
        w = w / total
    label = record.get("label")
    return MultiValuedObject(str(oid), np.array(coords), w), (None if label is None else str(label))


def read_dataset(path) -> tuple[Dataset, dict[str, str]]:
    """Load a dataset file. Returns the dataset and any embedded labels."""
    objects, labels = [], {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetFormatError(f"line {lineno}: {exc}") from None
            obj, label = _parse_record(record, lineno)
            objects.append(obj)
            if label is not None:
                labels[obj.id] = label
    if not objects:
        raise DatasetFormatError(f"{path}: no objects")
    dims = {o.dim for o in objects}
    if len(dims) != 1:
        raise DatasetFormatError(f"{path}: objects disagree on dimensionality {sorted(dims)}")
    try:
        return Dataset(dims.pop(), tuple(objects)), labels
    except ModelError as exc:
        raise DatasetFormatError(str(exc)) from None


def write_dataset(dataset: Dataset, path, labels: Mapping[str, str] | None = None) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for obj in dataset:
            record = {
                "id": obj.id,
                "instances": [
                    {"coords": c.tolist(), "weight": float(w)} for c, w in zip(obj.coords, obj.weights)
                ],
            }
            if labels is not None and obj.id in labels:
                record["label"] = labels[obj.id]
            fh.write(json.dumps(record) + "\n")


def read_truth(path) -> dict[str, str]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"id", "label"} <= set(reader.fieldnames):
            raise DatasetFormatError(f"{path}: truth file needs an 'id,label' header")
        return {row["id"]: row["label"] for row in reader}


def write_truth(labels: Mapping[str, str], path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["id", "label"])
        for oid, label in labels.items():
            writer.writerow([oid, label])
