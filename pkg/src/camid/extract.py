"""Feature extraction over a manifest, optionally augmented and in parallel."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .dataset import augment_quadrant_crops, augmented_ids, decode_image
from .errors import CamidError, DataError
from .features_dwd import DWD_DIM, extract_dwd
from .features_lbp import AUTO, LBP_DIM, extract_lbp
from .store import FeatureCache

log = logging.getLogger(__name__)

FEATURE_SETS = ("dwd", "lbp")
DIMENSIONS = {"dwd": DWD_DIM, "lbp": LBP_DIM}


def default_params(feature_set, tau=AUTO, gray_levels=16, offset=(0, 1)):
    """Extraction parameters recorded in caches and models."""
    if feature_set == "dwd":
        return {"wavelet": "db8", "levels": 4, "gray_levels": int(gray_levels),
                "offset": [int(offset[0]), int(offset[1])]}
    if feature_set == "lbp":
        tau = AUTO if isinstance(tau, str) else float(tau)
        return {"wavelet": "bior3.5", "levels": 4, "tau": tau, "lbp": "riu2-P8R1"}
    raise ValueError(f"unknown feature set {feature_set!r}")


def extract_image(image, feature_set, params):
    if feature_set == "dwd":
        return extract_dwd(image, params["gray_levels"], tuple(params["offset"])).values
    return extract_lbp(image, params["tau"], params["levels"])


@dataclass
class _Job:
    sample_id: str
    path: str
    label: int
    feature_set: str
    params: dict
    augment: bool
    include_original: bool


@dataclass
class _Result:
    sample_id: str
    ids: list = field(default_factory=list)
    rows: list = field(default_factory=list)
    label: int = -1
    error: str = ""


def _run(job: _Job) -> _Result:
    out = _Result(job.sample_id, label=job.label)
    try:
        image = decode_image(job.path)
        if job.augment:
            images = augment_quadrant_crops(image, job.include_original)
            out.ids = augmented_ids(job.sample_id, job.include_original)
        else:
            images, out.ids = [image], [job.sample_id]
        out.rows = [extract_image(im, job.feature_set, job.params) for im in images]
    except (CamidError, OSError) as exc:
        out.ids, out.rows = [], []
        out.error = f"{type(exc).__name__}: {exc}"
    return out


@dataclass
class ExtractionSummary:
    cache: FeatureCache
    skipped: list   # (sample id, reason)
    total: int

    @property
    def skipped_fraction(self):
        return len(self.skipped) / self.total if self.total else 0.0


def extract_manifest(manifest, feature_set, params, augment=False, include_original=False,
                     jobs=1) -> ExtractionSummary:
    """Rows come out in manifest order whatever ``jobs`` is."""
    tasks = [_Job(e.id, e.path, -1 if e.label is None else e.label, feature_set, params,
                  augment, include_original) for e in manifest.entries]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run, tasks, chunksize=max(1, len(tasks) // (8 * jobs))))
    else:
        results = [_run(t) for t in tasks]

    ids, labels, rows, skipped = [], [], [], []
    for res in results:
        if res.error:
            log.warning("skipping %s: %s", res.sample_id, res.error)
            skipped.append((res.sample_id, res.error))
            continue
        ids.extend(res.ids)
        labels.extend([res.label] * len(res.ids))
        rows.extend(res.rows)
    if not ids:
        raise DataError(f"none of the {len(tasks)} images could be processed")
    dim = DIMENSIONS[feature_set]
    values = np.array(rows, dtype=float).reshape(len(ids), dim)
    cache = FeatureCache(feature_set, params, ids, labels, values, list(manifest.class_names),
                         {"augment": bool(augment), "include_original": bool(include_original)})
    return ExtractionSummary(cache, skipped, len(tasks))
