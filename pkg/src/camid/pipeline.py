"""Standardize -> optional PCA -> classifier, with a versioned JSON model file."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .classify import (MODEL_TYPES, Standardizer, TrainConfig, knn_train, logreg_train,
                       mlp_train)
from .dataset import DatasetManifest, ManifestEntry, SplitSpec, source_id, stratified_split
from .errors import DataError, FeatureModelMismatch
from .evaluation import ConfusionMatrix, GridReport, confusion, grid_select
from .pca import PcaModel, pca_fit, pca_transform

MODEL_VERSION = 1


@dataclass(frozen=True)
class PcaBlock:
    standardizer: Standardizer
    model: PcaModel

    def transform(self, X):
        return pca_transform(self.model, self.standardizer.transform(X))

    def to_dict(self):
        return {"standardizer": self.standardizer.to_dict(), "model": self.model.to_dict()}

    @classmethod
    def from_dict(cls, d):
        return cls(Standardizer.from_dict(d["standardizer"]), PcaModel.from_dict(d["model"]))


@dataclass
class Pipeline:
    feature_set: str
    params: dict
    dimension: int
    class_names: list
    classifier: object
    pca: Optional[PcaBlock] = None
    training: dict = field(default_factory=dict)

    @property
    def model_type(self):
        return self.classifier.model_type

    def check_cache(self, cache):
        if cache.feature_set != self.feature_set or cache.dimension != self.dimension:
            raise FeatureModelMismatch(
                f"model expects {self.feature_set} features of dimension {self.dimension}, "
                f"cache has {cache.feature_set} of dimension {cache.dimension}")
        if cache.params != self.params:
            raise FeatureModelMismatch(f"extraction parameters differ: model {self.params}, "
                                       f"cache {cache.params}")

    def _prepare(self, X):
        X = np.asarray(X, dtype=float)
        if X.shape[-1] != self.dimension:
            raise FeatureModelMismatch(f"expected {self.dimension} features, got {X.shape[-1]}")
        return self.pca.transform(X) if self.pca is not None else X

    def predict(self, X):
        return self.classifier.predict(self._prepare(X))

    def predict_proba(self, X):
        return self.classifier.predict_proba(self._prepare(X))

    def to_dict(self):
        return {
            "format_version": MODEL_VERSION,
            "model_type": self.model_type,
            "feature_set": self.feature_set,
            "dimension": self.dimension,
            "params": self.params,
            "class_names": list(self.class_names),
            "pca": None if self.pca is None else self.pca.to_dict(),
            "classifier": self.classifier.to_dict(),
            "training": self.training,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":")) + "\n"

    @classmethod
    def from_dict(cls, d):
        if d.get("format_version", 0) > MODEL_VERSION:
            raise DataError(f"model format {d['format_version']} is newer than supported")
        try:
            model_cls = MODEL_TYPES[d["model_type"]]
        except KeyError:
            raise DataError(f"unknown model_type {d.get('model_type')!r}")
        pca = PcaBlock.from_dict(d["pca"]) if d.get("pca") else None
        return cls(d["feature_set"], d["params"], int(d["dimension"]), list(d["class_names"]),
                   model_cls.from_dict(d["classifier"]), pca, d.get("training", {}))


def save_model(pipeline, path):
    with open(path, "w") as fh:
        fh.write(pipeline.to_json())


def load_model(path) -> Pipeline:
    with open(path) as fh:
        return Pipeline.from_dict(json.load(fh))


# --- training ------------------------------------------------------------------------

@dataclass
class TrainingResult:
    pipeline: Pipeline
    grid: GridReport
    holdout: ConfusionMatrix
    train_ids: list
    holdout_ids: list


def split_cache(cache, train_fraction, seed):
    """Stratified split keeping every crop of a photo on the same side."""
    if not cache.labeled:
        raise DataError("training needs a fully labeled feature cache")
    names = cache.class_names or [f"C{i + 1}" for i in range(int(cache.labels.max()) + 1)]
    manifest = DatasetManifest(tuple(ManifestEntry(sid, "", int(lab))
                                     for sid, lab in zip(cache.ids, cache.labels)), tuple(names))
    train, test = stratified_split(manifest, SplitSpec(train_fraction, seed),
                                   groups=[source_id(s) for s in cache.ids])
    pos = {sid: i for i, sid in enumerate(cache.ids)}
    return [pos[e.id] for e in train.entries], [pos[e.id] for e in test.entries]


def _trainer(model_type, fixed, cfg, K):
    if model_type == "logreg":
        return lambda lam, X, y: logreg_train(X, y, lam, cfg, n_classes=K,
                                              intercept=fixed.get("intercept", True))
    if model_type == "knn":
        return lambda k, X, y: knn_train(X, y, int(k), n_classes=K)
    if model_type == "mlp":
        return lambda lam, X, y: mlp_train(X, y, fixed["hidden"], lam, cfg, n_classes=K)
    raise ValueError(f"unknown model type {model_type!r}")


def train_pipeline(cache, model_type, grid, cfg: TrainConfig = TrainConfig(),
                   train_fraction=0.8, pca_components=None, pca_tolerance=None,
                   pca_relative=True, pca_center=True, hidden=None, intercept=True) -> TrainingResult:
    """Split, optionally fit PCA on the training part, select over ``grid``
    (lambda for logreg/mlp, k for knn) by held-out mean per-class accuracy."""
    names = list(cache.class_names) or [f"C{i + 1}" for i in range(int(cache.labels.max()) + 1)]
    K = len(names)
    tr, te = split_cache(cache, train_fraction, cfg.seed)
    X_tr, y_tr = cache.values[tr], cache.labels[tr]
    X_te, y_te = cache.values[te], cache.labels[te]

    pca = None
    if pca_components is not None or pca_tolerance is not None:
        pre = Standardizer.fit(X_tr)
        model = pca_fit(pre.transform(X_tr), n_components=pca_components, tolerance=pca_tolerance,
                        relative=pca_relative, center=pca_center)
        pca = PcaBlock(pre, model)
        X_tr, X_te = pca.transform(X_tr), pca.transform(X_te)

    trainer = _trainer(model_type, {"hidden": hidden, "intercept": intercept}, cfg, K)
    best, report, clf = grid_select(trainer, list(grid), X_tr, y_tr, X_te, y_te, K)
    holdout = confusion(y_te, clf.predict(X_te), K, names)

    training = {"seed": cfg.seed, "train_fraction": train_fraction,
                "learning_rate": cfg.learning_rate, "max_iters": cfg.max_iters, "tol": cfg.tol,
                "grid": list(grid), "selected": best, "n_train": len(tr), "n_holdout": len(te)}
    if model_type == "mlp":
        training["hidden"] = hidden
    if pca is not None:
        training["pca_components"] = pca.model.k
    pipe = Pipeline(cache.feature_set, cache.params, cache.dimension, names, clf, pca, training)
    return TrainingResult(pipe, report, holdout, [cache.ids[i] for i in tr],
                          [cache.ids[i] for i in te])
