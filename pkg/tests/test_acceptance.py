"""Acceptance criteria, one test each. Every test prints a PASS/FAIL line and
the lines are repeated in the terminal summary (see conftest.py).

The dataset-conditional check runs only when CAMID_DATASET points at a
labeled manifest of the original 10-camera photo set.
"""

import os
import time

import numpy as np
import pytest

from camid.classify import (LAMBDA_GRID, TrainConfig, knn_predict, knn_train, mlp_cost_grad,
                            numerical_gradient, relative_error, softmax_cost_grad)
from camid.cli import main
from camid.dataset import DatasetManifest, ImageRGB, ManifestEntry, read_manifest, write_manifest
from camid.evaluation import accuracies
from camid.extract import default_params, extract_manifest
from camid.features_dwd import dwd_block_slices, extract_dwd
from camid.features_lbp import RIU2_TABLE, extract_lbp, lbp_riu2_histogram
from camid.pca import pca_fit, projection_error
from camid.pipeline import train_pipeline
from camid.store import read_cache
from camid.synthetic import make_dataset
from camid.wavelet import BIOR35, DB8, dwt2, idwt2

from test_features_lbp import _naive_histogram, _rotations
from conftest import natural_like

RESULTS = []


def record(number, title, ok, detail=""):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title}" + (f" ({detail})" if detail else "")
    RESULTS.append(line)
    print(line)
    assert ok, line


def test_c01_wavelet_round_trip():
    rng = np.random.default_rng(1)
    t0 = time.perf_counter()
    worst = 0.0
    for i in range(100):
        h, w = rng.integers(32, 258, size=2)
        if i % 2:  # alternate parities explicitly
            h, w = h | 1, w & ~1
        x = rng.uniform(-255, 255, size=(h, w))
        for bank in (DB8, BIOR35):
            worst = max(worst, float(np.abs(x - idwt2(dwt2(x, bank, 4))).max()))
    elapsed = time.perf_counter() - t0
    record(1, "wavelet round trip", worst < 1e-8 and elapsed < 30,
           f"max error {worst:.2e}, {elapsed:.1f}s")


def test_c02_gradient_fidelity():
    rng = np.random.default_rng(2)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(50):
        m, n, K = rng.integers(1, 51), rng.integers(1, 21), rng.integers(2, 6)
        X, y = rng.normal(size=(m, n)), rng.integers(0, K, size=m)
        theta, lam = rng.normal(size=(K, n)), rng.uniform(0, 1)
        g = softmax_cost_grad(theta, X, y, lam)[1]
        num = numerical_gradient(lambda t: softmax_cost_grad(t, X, y, lam)[0], theta, h=1e-5)
        worst = max(worst, relative_error(g, num))
    for _ in range(50):
        m, n, K, hid = rng.integers(1, 51), rng.integers(1, 21), rng.integers(2, 6), rng.integers(1, 11)
        X, Y = rng.normal(size=(m, n)), np.eye(K)[rng.integers(0, K, size=m)]
        t1, t2 = rng.normal(size=(hid, n + 1)), rng.normal(size=(K, hid + 1))
        lam = rng.uniform(0, 1)
        _, (g1, g2) = mlp_cost_grad(t1, t2, X, Y, lam)
        n1 = numerical_gradient(lambda t: mlp_cost_grad(t, t2, X, Y, lam)[0], t1, h=1e-5)
        n2 = numerical_gradient(lambda t: mlp_cost_grad(t1, t, X, Y, lam)[0], t2, h=1e-5)
        worst = max(worst, relative_error(np.r_[g1.ravel(), g2.ravel()], np.r_[n1.ravel(), n2.ravel()]))
    elapsed = time.perf_counter() - t0
    record(2, "gradient fidelity", worst < 1e-6 and elapsed < 60,
           f"max relative error {worst:.2e}, {elapsed:.1f}s")


def test_c03_feature_shapes():
    image = ImageRGB(natural_like(np.random.default_rng(3)))
    dwd = extract_dwd(image).values
    blocks = {k: s.stop - s.start for k, s in dwd_block_slices().items()}
    lbp = extract_lbp(image)
    ok = (dwd.shape == (351,) and np.all(np.isfinite(dwd))
          and blocks == {"coef": 108, "pred": 108, "glcm": 135}
          and lbp.shape == (30,) and np.allclose(lbp.reshape(3, 10).sum(axis=1), 1.0))
    record(3, "feature shape contract", ok, f"dwd {dwd.size}, lbp {lbp.size}")


def test_c04_lbp_oracle():
    rng = np.random.default_rng(4)
    mismatches = sum(not np.array_equal(lbp_riu2_histogram(r), _naive_histogram(r))
                     for r in (rng.normal(size=(16, 16)) for _ in range(1000)))
    invariant = all(len({int(RIU2_TABLE[r]) for r in _rotations(c)}) == 1 for c in range(256))
    record(4, "LBP oracle equivalence", mismatches == 0 and invariant,
           f"{mismatches} mismatches in 1000")


def test_c05_knn_oracle():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(120, 6))
    y = rng.integers(0, 4, size=120)
    Q = rng.normal(size=(500, 6))
    bad = 0
    for k in (1, 8, 15):
        model = knn_train(X, y, k)
        Zq = model.standardizer.transform(Q)
        for q, z in zip(Q, Zq):
            d = ((model.reference - z) ** 2).sum(axis=1)
            order = sorted(range(len(d)), key=lambda i: (d[i], i))[:k]
            votes = np.bincount(y[order], minlength=4)
            expect = next(int(y[i]) for i in order if votes[y[i]] == votes.max())
            bad += knn_predict(model, q) != expect
    record(5, "k-NN oracle equivalence", bad == 0, f"{bad} mismatches in 1500")


def test_c06_pca_identity():
    rng = np.random.default_rng(6)
    worst = 0.0
    for _ in range(20):
        m, n = rng.integers(5, 60), rng.integers(2, 30)
        X = rng.normal(size=(m, n)) @ rng.normal(size=(n, n))
        err = projection_error(pca_fit(X, n_components=int(rng.integers(0, n + 1))), X)
        worst = max(worst, abs(err.direct - err.eigen_tail) / max(err.eigen_tail, 1e-300)
                    if err.eigen_tail > 1e-9 else abs(err.direct))
    x = rng.normal(size=40)
    k = pca_fit(np.column_stack([x, -3 * x, 0.5 * x]), tolerance=1e-6).k
    record(6, "PCA projection identity", worst < 1e-6 and k == 1,
           f"max relative gap {worst:.2e}, rank-1 k={k}")


def test_c07_synthetic_end_to_end(tmp_path):
    t0 = time.perf_counter()
    manifest = make_dataset(tmp_path, n_classes=4, per_class=60, seed=7)
    cache = extract_manifest(manifest, "lbp", default_params("lbp")).cache
    result = train_pipeline(cache, "logreg", LAMBDA_GRID, TrainConfig(seed=7), 0.8)
    mean = accuracies(result.holdout).mean
    elapsed = time.perf_counter() - t0
    record(7, "synthetic end to end", mean >= 0.80 and elapsed < 300,
           f"mean per-class accuracy {mean:.3f}, {elapsed:.1f}s")


def test_c08_augmentation_arithmetic(tmp_path):
    base = make_dataset(tmp_path / "img", n_classes=10, per_class=2, height=64, width=64, seed=8)
    entries = tuple(ManifestEntry(f"img{i:04d}", base.entries[i % 20].path, base.entries[i % 20].label)
                    for i in range(2750))
    write_manifest(DatasetManifest(entries, base.class_names), tmp_path / "m.csv")
    code = main(["extract", str(tmp_path / "m.csv"), "--augment", "--out", str(tmp_path / "f.csv")])
    rows = len(read_cache(tmp_path / "f.csv").ids) if code == 0 else 0
    record(8, "augmentation arithmetic", rows == 11000, f"2750 entries -> {rows} rows")


def _pipeline(root, data):
    out = {}
    for model, extra in (("logreg", []), ("mlp", ["--max-iters", "60"]), ("knn", [])):
        m = root / f"{model}.json"
        p = root / f"{model}_pred.csv"
        assert main(["train", str(data / "lbp.csv"), "--model", model, "--seed", "3",
                     "--out", str(m), "--no-figures", *extra]) == 0
        assert main(["predict", str(m), str(data / "lbp.csv"), "--out", str(p)]) == 0
        out[model] = (m.read_bytes(), p.read_bytes())
    return out


def test_c09_determinism(tmp_path):
    runs = []
    for name in ("a", "b"):
        root = tmp_path / name
        assert main(["synth", "--out", str(root), "--classes", "3", "--per-class", "10",
                     "--size", "64", "--seed", "9"]) == 0
        assert main(["extract", str(root / "manifest.csv"), "--out", str(root / "lbp.csv")]) == 0
        runs.append(_pipeline(root, root))
    same = runs[0] == runs[1]
    record(9, "determinism", same, "model and prediction files byte-identical" if same else "")


@pytest.mark.skipif(not os.environ.get("CAMID_DATASET"),
                    reason="set CAMID_DATASET to the labeled 10-camera manifest")
def test_c10_original_dataset():
    manifest = read_manifest(os.environ["CAMID_DATASET"])
    cache = extract_manifest(manifest, "lbp", default_params("lbp"), jobs=os.cpu_count() or 1).cache
    result = train_pipeline(cache, "logreg", LAMBDA_GRID, TrainConfig(), 0.8)
    mean = 100 * accuracies(result.holdout).mean
    record(10, "original dataset LBP + logistic regression", abs(mean - 81) <= 5,
           f"mean per-class accuracy {mean:.1f}% vs 81%")
