import numpy as np
import pytest

from camid.errors import EmptyClass, LabelOutOfRange
from camid.evaluation import (ConfusionMatrix, accuracies, confusion, confusion_csv, grid_csv,
                              grid_select, mean_class_accuracy, read_confusion_csv,
                              render_confusion, render_grid)

# LBP + logistic regression result on the 10-camera set; columns are the true
# class (each sums to the 55 test images), rows the prediction.
PUBLISHED_LBP = np.array([
    [41, 0, 2, 8, 7, 0, 4, 0, 0, 0],
    [1, 49, 2, 0, 3, 1, 0, 0, 1, 0],
    [1, 2, 45, 2, 1, 0, 1, 0, 0, 0],
    [5, 0, 0, 39, 1, 0, 3, 1, 0, 0],
    [3, 0, 2, 1, 36, 0, 7, 2, 1, 0],
    [0, 1, 0, 0, 2, 53, 1, 0, 1, 1],
    [0, 0, 1, 4, 4, 0, 33, 2, 2, 0],
    [3, 0, 0, 1, 0, 0, 2, 48, 4, 0],
    [1, 3, 3, 0, 1, 1, 4, 2, 46, 0],
    [0, 0, 0, 0, 0, 0, 0, 0, 0, 54],
])
PUBLISHED_PERCENT = [74, 89, 81, 71, 65, 96, 60, 87, 83, 98]


class _Fixed:
    def __init__(self, pred):
        self.pred = np.asarray(pred)

    def predict(self, X):
        return self.pred


def test_perfect_predictions():
    y = np.repeat(np.arange(4), 5)
    cm = confusion(y, y, 4)
    assert np.array_equal(cm.counts, np.diag([5] * 4))
    acc = accuracies(cm)
    assert acc.mean == acc.overall == 1.0


def test_single_sample():
    cm = confusion([2], [0], 3)
    assert cm.counts.sum() == 1 and cm.counts[2, 0] == 1
    with pytest.raises(EmptyClass):
        accuracies(cm)


def test_row_sums_are_class_counts(rng):
    y = rng.integers(0, 5, size=200)
    p = rng.integers(0, 5, size=200)
    cm = confusion(y, p, 5)
    assert list(cm.counts.sum(axis=1)) == list(np.bincount(y, minlength=5))


def test_small_accuracy_example():
    acc = accuracies(ConfusionMatrix(np.array([[3, 1], [2, 2]]), ("a", "b")))
    np.testing.assert_allclose(acc.per_class, [0.75, 0.5])
    assert acc.mean == pytest.approx(0.625)
    assert acc.overall == pytest.approx(5 / 8)


def test_published_lbp_table():
    cm = ConfusionMatrix(PUBLISHED_LBP.T, tuple(f"C{i}" for i in range(1, 11)))
    acc = accuracies(cm)
    # the printed per-class figures are neither consistently rounded nor truncated
    assert np.all(np.abs(100 * acc.per_class - PUBLISHED_PERCENT) < 1)
    assert round(100 * acc.mean) == 81


def test_mean_is_unweighted(rng):
    y = np.r_[np.zeros(90, int), np.ones(10, int)]
    p = np.r_[np.zeros(90, int), np.zeros(10, int)]
    assert mean_class_accuracy(y, p, 2) == 0.5
    assert accuracies(confusion(y, p, 2)).overall == 0.9


def test_duplicating_a_class_keeps_mean(rng):
    y = rng.integers(0, 3, size=60)
    p = np.where(rng.random(60) < 0.7, y, rng.integers(0, 3, size=60))
    extra = y == 1
    a = mean_class_accuracy(y, p, 3)
    b = mean_class_accuracy(np.r_[y, y[extra]], np.r_[p, p[extra]], 3)
    assert a == pytest.approx(b)


def test_streaming_matches_batch(rng):
    y = rng.integers(0, 4, size=100)
    p = rng.integers(0, 4, size=100)
    total = np.zeros((4, 4), int)
    for i in range(0, 100, 7):
        total += confusion(y[i:i + 7], p[i:i + 7], 4).counts
    np.testing.assert_array_equal(total, confusion(y, p, 4).counts)


def test_label_out_of_range():
    with pytest.raises(LabelOutOfRange):
        confusion([0, 3], [0, 1], 3)
    with pytest.raises(LabelOutOfRange):
        confusion([0, 1], [0, -1], 3)


def test_grid_single_point():
    y = np.array([0, 1, 0, 1])
    best, report, model = grid_select(lambda p, X, y_: _Fixed(y), [0.1], None, y, None, y)
    assert best == 0.1 and len(report.rows()) == 1 and report.scores == [1.0]


def test_grid_picks_better_and_keeps_first_on_tie():
    y = np.array([0, 1, 0, 1])
    preds = {1e6: [0, 0, 0, 0], 1.0: [0, 1, 0, 1], 0.1: [0, 1, 0, 1]}
    best, report, model = grid_select(lambda p, X, y_: _Fixed(preds[p]), list(preds), None, y, None, y)
    assert best == 1.0 and report.best_index == 1
    assert report.scores == [0.5, 1.0, 1.0]
    assert np.array_equal(model.predict(None), preds[1.0])


def test_grid_report_row_count():
    y = np.array([0, 1, 1, 0])
    grid = [10.0 ** e for e in range(1, -6, -1)]
    _, report, _ = grid_select(lambda p, X, y_: _Fixed(y), grid, None, y, None, y)
    assert len(report.rows()) == 7
    assert len(grid_csv(report, "lambda").strip().splitlines()) == 2 + 7
    assert "<- selected" in render_grid(report, "lambda")


def test_render_and_csv_agree(rng):
    y = np.repeat(np.arange(3), 10)
    p = np.where(rng.random(30) < 0.6, y, rng.integers(0, 3, size=30))
    cm = confusion(y, p, 3, ("canon", "nikon", "sony"))
    text = render_confusion(cm)
    lines = text.splitlines()
    body = [l for l in lines if l[:1].strip() and l.split()[0] in cm.class_names]
    assert len(body) == 3
    for name, row in zip(cm.class_names, cm.counts):
        line = next(l for l in body if l.split()[0] == name)
        assert [int(v) for v in line.split()[1:4]] == row.tolist()
    mean = accuracies(cm).mean
    assert f"{100 * mean:.0f}%" in lines[-2]
    back = read_confusion_csv(confusion_csv(cm))
    assert back.class_names == cm.class_names
    np.testing.assert_array_equal(back.counts, cm.counts)
