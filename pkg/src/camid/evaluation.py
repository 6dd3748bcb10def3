"""Confusion matrices, per-class accuracy and single-split grid selection."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import EmptyClass, LabelOutOfRange


@dataclass(frozen=True)
class ConfusionMatrix:
    counts: np.ndarray       # rows = true class, columns = predicted class
    class_names: tuple

    @property
    def n_classes(self):
        return self.counts.shape[0]

    @property
    def total(self):
        return int(self.counts.sum())


def _names(k, class_names):
    return tuple(class_names) if class_names else tuple(f"C{i + 1}" for i in range(k))


def confusion(y_true, y_pred, K, class_names=None) -> ConfusionMatrix:
    y_true = np.asarray(y_true, dtype=np.intp).ravel()
    y_pred = np.asarray(y_pred, dtype=np.intp).ravel()
    if y_true.shape != y_pred.shape:
        raise ValueError(f"{y_true.size} true labels vs {y_pred.size} predictions")
    for arr in (y_true, y_pred):
        if arr.size and (arr.min() < 0 or arr.max() >= K):
            raise LabelOutOfRange(f"labels must lie in 0..{K - 1}")
    counts = np.zeros((K, K), dtype=np.int64)
    np.add.at(counts, (y_true, y_pred), 1)
    return ConfusionMatrix(counts, _names(K, class_names))


@dataclass(frozen=True)
class Accuracies:
    per_class: np.ndarray
    mean: float          # unweighted mean of per_class
    overall: float       # trace / total


def accuracies(cm: ConfusionMatrix) -> Accuracies:
    rows = cm.counts.sum(axis=1)
    if np.any(rows == 0):
        empty = [cm.class_names[i] for i in np.flatnonzero(rows == 0)]
        raise EmptyClass(f"no true samples for {', '.join(empty)}")
    per_class = np.diag(cm.counts) / rows
    return Accuracies(per_class, float(per_class.mean()), float(np.trace(cm.counts) / rows.sum()))


def mean_class_accuracy(y_true, y_pred, K):
    return accuracies(confusion(y_true, y_pred, K)).mean


@dataclass
class GridReport:
    params: list
    scores: list        # mean per-class accuracy on the held-out split
    overall: list
    best_index: int

    @property
    def best(self):
        return self.params[self.best_index]

    def rows(self):
        return [(p, s, o) for p, s, o in zip(self.params, self.scores, self.overall)]


def grid_select(trainer: Callable, grid: Sequence, X_tr, y_tr, X_cv, y_cv, K=None):
    """Train one model per grid point, score on the held-out split.

    ``trainer(param, X, y)`` returns an object with ``predict``. Ties keep the
    earliest grid point. Returns ``(best_param, report, best_model)``.
    """
    if len(grid) == 0:
        raise ValueError("empty parameter grid")
    K = int(max(np.max(y_tr), np.max(y_cv)) + 1) if K is None else K
    scores, overall, best_model, best = [], [], None, -1
    for i, param in enumerate(grid):
        model = trainer(param, X_tr, y_tr)
        acc = accuracies(confusion(y_cv, model.predict(X_cv), K))
        scores.append(acc.mean)
        overall.append(acc.overall)
        if best < 0 or acc.mean > scores[best]:
            best, best_model = i, model
    report = GridReport(list(grid), scores, overall, best)
    return report.best, report, best_model


# --- rendering -----------------------------------------------------------------------

def _pct(x):
    return f"{100 * x:.0f}"


def render_confusion(cm: ConfusionMatrix) -> str:
    """Text table: rows true class, columns predicted, a per-class % row and the
    mean % in the bottom-right cell."""
    acc = accuracies(cm)
    names = cm.class_names
    width = max(5, max(len(n) for n in names) + 1, len(str(cm.counts.max())) + 1)
    head = " " * width + "".join(n.rjust(width) for n in names) + " |" + "%".rjust(width)
    lines = [head, "-" * len(head)]
    for name, row in zip(names, cm.counts):
        lines.append(name.ljust(width) + "".join(str(c).rjust(width) for c in row) + " |")
    lines.append("-" * len(head))
    lines.append("%".ljust(width) + "".join(_pct(a).rjust(width) for a in acc.per_class)
                 + " |" + (_pct(acc.mean) + "%").rjust(width))
    lines.append(f"mean per-class accuracy {100 * acc.mean:.2f}%, "
                 f"overall accuracy {100 * acc.overall:.2f}% ({cm.total} samples)")
    return "\n".join(lines) + "\n"


def confusion_csv(cm: ConfusionMatrix) -> str:
    acc = accuracies(cm)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["format_version", 1])
    w.writerow(["true\\predicted", *cm.class_names, "class_accuracy"])
    for name, row, a in zip(cm.class_names, cm.counts, acc.per_class):
        w.writerow([name, *row.tolist(), repr(float(a))])
    w.writerow(["mean_class_accuracy", repr(acc.mean)])
    w.writerow(["overall_accuracy", repr(acc.overall)])
    return buf.getvalue()


def read_confusion_csv(text) -> ConfusionMatrix:
    rows = list(csv.reader(io.StringIO(text)))
    header = rows[1]
    names = tuple(header[1:-1])
    body = rows[2:2 + len(names)]
    counts = np.array([[int(c) for c in r[1:1 + len(names)]] for r in body], dtype=np.int64)
    return ConfusionMatrix(counts, names)


def render_grid(report: GridReport, param_name="param") -> str:
    lines = [f"{param_name:>12} {'mean_class_acc':>15} {'overall_acc':>12}"]
    for i, (p, s, o) in enumerate(report.rows()):
        mark = "  <- selected" if i == report.best_index else ""
        lines.append(f"{p!s:>12} {s:15.4f} {o:12.4f}{mark}")
    return "\n".join(lines) + "\n"


def grid_csv(report: GridReport, param_name="param") -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["format_version", 1])
    w.writerow([param_name, "mean_class_accuracy", "overall_accuracy", "selected"])
    for i, (p, s, o) in enumerate(report.rows()):
        w.writerow([p, repr(s), repr(o), int(i == report.best_index)])
    return buf.getvalue()
