import numpy as np
import pytest

from camid.errors import DegenerateData, DimensionMismatch
from camid.pca import (PcaModel, components_for_tolerance, pca_fit, pca_reconstruct,
                       pca_transform, projection_error)


def _aligned(a, b):
    """Column-wise agreement up to sign."""
    return np.abs(np.abs(np.sum(a * b, axis=0)) - 1).max()


def test_rank_one_line():
    x = np.arange(-5.0, 6.0)
    X = np.column_stack([x, 2 * x])
    model = pca_fit(X, tolerance=1e-6)
    assert model.k == 1
    np.testing.assert_allclose(model.basis[:, 0], np.array([1, 2]) / np.sqrt(5), atol=1e-12)
    assert model.eigenvalues[1] == pytest.approx(0.0, abs=1e-9)


def test_matches_svd(rng):
    X = rng.normal(size=(50, 10)) @ rng.normal(size=(10, 10))
    model = pca_fit(X, n_components=10)
    xc = X - X.mean(axis=0)
    _, s, vt = np.linalg.svd(xc, full_matrices=False)
    np.testing.assert_allclose(model.eigenvalues, s ** 2, rtol=1e-6)
    assert _aligned(model.basis, vt.T) < 1e-6


def test_eigenvalues_descending_nonnegative(rng):
    model = pca_fit(rng.normal(size=(20, 6)), n_components=3)
    assert np.all(np.diff(model.eigenvalues) <= 0) and np.all(model.eigenvalues >= 0)
    np.testing.assert_allclose(model.basis.T @ model.basis, np.eye(3), atol=1e-12)


def test_sign_convention(rng):
    model = pca_fit(rng.normal(size=(40, 7)), n_components=7)
    idx = np.argmax(np.abs(model.basis), axis=0)
    assert np.all(model.basis[idx, np.arange(7)] > 0)


def test_transform_identities(rng):
    X = rng.normal(size=(30, 5))
    model = pca_fit(X, n_components=3)
    np.testing.assert_allclose(pca_transform(model, model.mean), 0, atol=1e-12)
    for j in range(3):
        e = np.zeros(3)
        e[j] = 1
        np.testing.assert_allclose(pca_transform(model, model.mean + model.basis[:, j]), e, atol=1e-12)
    z = pca_transform(model, X)
    xc = X - model.mean
    assert np.all(np.linalg.norm(z, axis=1) <= np.linalg.norm(xc, axis=1) + 1e-12)


def test_projection_error_extremes(rng):
    X = rng.normal(size=(25, 6))
    full = projection_error(pca_fit(X, n_components=6), X)
    assert full.direct == pytest.approx(0, abs=1e-10) and full.eigen_tail == pytest.approx(0, abs=1e-10)
    none = projection_error(pca_fit(X, n_components=0), X)
    total = np.sum((X - X.mean(axis=0)) ** 2)
    assert none.direct == pytest.approx(total) and none.eigen_tail == pytest.approx(total)


def test_projection_error_identity(rng):
    for _ in range(10):
        X = rng.normal(size=(30, 8)) * rng.uniform(0.1, 10, size=8)
        err = projection_error(pca_fit(X, n_components=3), X)
        assert err.direct == pytest.approx(err.eigen_tail, rel=1e-6)


def test_optimal_among_random_projections(rng):
    X = rng.normal(size=(40, 6)) @ rng.normal(size=(6, 6))
    k = 2
    best = projection_error(pca_fit(X, n_components=k), X).direct
    xc = X - X.mean(axis=0)
    for _ in range(100):
        q, _ = np.linalg.qr(rng.normal(size=(6, k)))
        resid = xc - xc @ q @ q.T
        assert np.sum(resid ** 2) >= best - 1e-9


def test_refit_on_scores(rng):
    X = rng.normal(size=(60, 5)) * [5, 4, 3, 2, 1]
    model = pca_fit(X, n_components=5)
    again = pca_fit(pca_transform(model, X), n_components=5)
    np.testing.assert_allclose(again.eigenvalues, model.eigenvalues, rtol=1e-9)
    np.testing.assert_allclose(np.abs(again.basis), np.eye(5), atol=1e-9)


def test_gram_route(rng):
    X = rng.normal(size=(8, 30))
    model = pca_fit(X, n_components=5)
    ref = pca_fit(np.vstack([X, X]), n_components=5)  # m > n path, scatter doubled
    np.testing.assert_allclose(2 * model.eigenvalues, ref.eigenvalues, atol=1e-9)
    assert _aligned(model.basis, ref.basis) < 1e-8
    assert np.all(model.eigenvalues[7:] == 0)
    err = projection_error(model, X)
    assert err.direct == pytest.approx(err.eigen_tail, rel=1e-8)
    assert pca_fit(X, n_components=12).k == 12


def test_tolerance_selection():
    ev = np.array([6.0, 3.0, 1.0, 0.0])
    assert components_for_tolerance(ev, 0.1) == 2
    assert components_for_tolerance(ev, 0.05) == 3
    assert components_for_tolerance(ev, 1.0, relative=False) == 2
    assert components_for_tolerance(ev, 0.0) == 3


def test_uncentered(rng):
    X = rng.normal(size=(20, 4)) + 10
    model = pca_fit(X, n_components=1, center=False)
    assert not model.centered and np.all(model.mean == 0)
    np.testing.assert_allclose(np.abs(model.basis[:, 0]), 0.5, atol=0.05)


def test_reconstruct_and_serialize(rng):
    X = rng.normal(size=(15, 4))
    model = pca_fit(X, n_components=4)
    np.testing.assert_allclose(pca_reconstruct(model, pca_transform(model, X)), X, atol=1e-10)
    back = PcaModel.from_dict(model.to_dict())
    np.testing.assert_array_equal(back.basis, model.basis)


def test_errors(rng):
    with pytest.raises(DegenerateData):
        pca_fit(np.ones((5, 3)), n_components=1)
    with pytest.raises(DimensionMismatch):
        pca_fit(np.ones((1, 3)), n_components=1)
    model = pca_fit(rng.normal(size=(5, 3)), n_components=2)
    with pytest.raises(DimensionMismatch):
        pca_transform(model, np.zeros(4))
    with pytest.raises(ValueError):
        pca_fit(rng.normal(size=(5, 3)))
