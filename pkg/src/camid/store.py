"""On-disk formats: feature caches and prediction files.

Feature cache (CSV text)::

    #camid-features,1
    #header,<JSON: feature_set, dimension, params, class_names, augmentation>
    id,label,f0,f1,...
    img001#tl,3,0.0123...,...

Labels are class indices or ``?``. Values are written with ``repr`` so a
write/read cycle is exact.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError

CACHE_MAGIC = "#camid-features"
CACHE_VERSION = 1
PREDICTION_VERSION = 1


@dataclass
class FeatureCache:
    feature_set: str
    params: dict
    ids: list
    labels: np.ndarray          # -1 for unlabeled rows
    values: np.ndarray          # rows x dimension
    class_names: list = field(default_factory=list)
    augmentation: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).reshape(len(self.ids), -1)
        self.labels = np.asarray(self.labels, dtype=np.intp)
        if len(self.labels) != len(self.ids):
            raise DataError("labels and ids differ in length")

    @property
    def dimension(self):
        return self.values.shape[1]

    @property
    def labeled(self):
        return bool(len(self.labels)) and bool(np.all(self.labels >= 0))

    def header(self):
        return {"feature_set": self.feature_set, "dimension": self.dimension,
                "params": self.params, "class_names": list(self.class_names),
                "augmentation": self.augmentation}

    def subset(self, idx):
        idx = np.asarray(idx, dtype=np.intp)
        return FeatureCache(self.feature_set, self.params, [self.ids[i] for i in idx],
                            self.labels[idx], self.values[idx], self.class_names, self.augmentation)


def write_cache(cache: FeatureCache, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([CACHE_MAGIC, CACHE_VERSION])
        fh.write("#header," + json.dumps(cache.header(), sort_keys=True) + "\n")
        w.writerow(["id", "label", *(f"f{i}" for i in range(cache.dimension))])
        for sid, lab, row in zip(cache.ids, cache.labels, cache.values):
            w.writerow([sid, "?" if lab < 0 else int(lab), *map(repr, row.tolist())])


def read_cache(path) -> FeatureCache:
    path = Path(path)
    with open(path, newline="") as fh:
        first = fh.readline().strip().split(",")
        if first[0] != CACHE_MAGIC:
            raise DataError(f"{path}: not a feature cache")
        if int(first[1]) > CACHE_VERSION:
            raise DataError(f"{path}: cache format {first[1]} is newer than supported")
        line = fh.readline()
        if not line.startswith("#header,"):
            raise DataError(f"{path}: missing header line")
        header = json.loads(line[len("#header,"):])
        reader = csv.reader(fh)
        next(reader)
        ids, labels, rows = [], [], []
        dim = int(header["dimension"])
        for rec in reader:
            if not rec:
                continue
            if len(rec) != dim + 2:
                raise DataError(f"{path}: row {rec[0]!r} has {len(rec) - 2} values, expected {dim}")
            ids.append(rec[0])
            labels.append(-1 if rec[1] == "?" else int(rec[1]))
            rows.append([float(v) for v in rec[2:]])
    values = np.array(rows, dtype=float).reshape(len(ids), dim)
    return FeatureCache(header["feature_set"], header["params"], ids, labels, values,
                        header.get("class_names", []), header.get("augmentation", {}))


def merge_caches(caches):
    """Concatenate caches that share feature set and parameters."""
    first = caches[0]
    for c in caches[1:]:
        if (c.feature_set, c.params, c.dimension) != (first.feature_set, first.params, first.dimension):
            raise DataError("caches were extracted with different settings")
        if c.class_names and first.class_names and list(c.class_names) != list(first.class_names):
            raise DataError("caches disagree on class names")
    if len(caches) == 1:
        return first
    return FeatureCache(first.feature_set, first.params, sum((c.ids for c in caches), []),
                        np.concatenate([c.labels for c in caches]),
                        np.vstack([c.values for c in caches]),
                        first.class_names or next((c.class_names for c in caches if c.class_names), []),
                        first.augmentation)


# --- predictions ---------------------------------------------------------------------

def write_predictions(path, ids, names, proba=None, class_names=None):
    """``fname,camera`` CSV; with ``proba`` one probability column per class."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        header = ["fname", "camera"]
        if proba is not None:
            header += [f"p_{c}" for c in class_names]
        w.writerow(header)
        for i, (sid, name) in enumerate(zip(ids, names)):
            row = [sid, name]
            if proba is not None:
                row += [repr(float(p)) for p in proba[i]]
            w.writerow(row)


def read_predictions(path):
    """Returns (ids, predicted class names)."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"fname", "camera"} <= set(reader.fieldnames):
            raise DataError(f"{path}: expected a fname,camera header")
        rows = list(reader)
    return [r["fname"] for r in rows], [r["camera"] for r in rows]
