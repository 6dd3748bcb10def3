"""Principal component analysis with an exact projection-error report.

Eigenvalues are those of the (centered) scatter matrix ``Xc^T Xc``, not the
covariance, so the discarded-eigenvalue sum equals the squared Frobenius norm
of the reconstruction residual.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .errors import DegenerateData, DimensionMismatch

DEFAULT_DWD_COMPONENTS = 87
DEFAULT_TOLERANCE = 1e-3


@dataclass(frozen=True)
class PcaModel:
    mean: np.ndarray          # zeros when fit with center=False
    eigenvalues: np.ndarray   # all n, descending, clamped >= 0
    basis: np.ndarray         # n x k, orthonormal columns
    centered: bool = True

    @property
    def k(self):
        return self.basis.shape[1]

    @property
    def n_features(self):
        return self.mean.shape[0]

    def to_dict(self):
        return {
            "mean": self.mean.tolist(),
            "eigenvalues": self.eigenvalues.tolist(),
            "basis": self.basis.tolist(),
            "centered": self.centered,
        }

    @classmethod
    def from_dict(cls, d):
        n = len(d["mean"])
        basis = np.array(d["basis"], dtype=float).reshape(n, -1)
        return cls(np.array(d["mean"], dtype=float), np.array(d["eigenvalues"], dtype=float),
                   basis, bool(d["centered"]))


class ProjectionError(NamedTuple):
    direct: float       # ||Xc - Xc B B^T||_F^2
    eigen_tail: float   # sum of discarded eigenvalues


def _fix_signs(vectors):
    """Flip each column so its largest-magnitude entry is positive."""
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def _eigh_descending(sym):
    vals, vecs = np.linalg.eigh(sym)
    order = np.argsort(vals)[::-1]
    return vals[order], vecs[:, order]


def _spectrum(xc):
    """Descending eigenpairs of ``xc^T xc`` (all n eigenvalues, all n vectors when
    they are determined; through the Gram matrix when m < n)."""
    m, n = xc.shape
    if m < n:
        vals, u = _eigh_descending(xc @ xc.T)
        vals = np.where(vals < 0, 0.0, vals)
        pos = vals > vals[0] * 1e-12 if vals[0] > 0 else np.zeros(m, bool)
        vecs = xc.T @ u[:, pos] / np.sqrt(vals[pos])
        eigenvalues = np.zeros(n)
        eigenvalues[: pos.sum()] = vals[pos]
        return eigenvalues, vecs
    vals, vecs = _eigh_descending(xc.T @ xc)
    return np.where(vals < 0, 0.0, vals), vecs


def components_for_tolerance(eigenvalues, tolerance, relative=True):
    """Smallest k whose discarded tail is within ``tolerance`` (of the total when
    ``relative``)."""
    total = eigenvalues.sum()
    tails = total - np.concatenate([[0.0], np.cumsum(eigenvalues)])
    tails = np.maximum(tails, 0.0)
    if relative:
        tails = tails / total
    return int(np.argmax(tails <= tolerance))


def pca_fit(X, n_components: Optional[int] = None, tolerance: Optional[float] = None,
            relative: bool = True, center: bool = True) -> PcaModel:
    """Fit on rows of ``X``. Pass either ``n_components`` or ``tolerance``."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2 or X.shape[1] < 1:
        raise DimensionMismatch(f"need an m x n matrix with m >= 2, got {X.shape}")
    if not np.all(np.isfinite(X)):
        raise DegenerateData("feature matrix has non-finite entries")
    if np.all(X == X[0]):
        raise DegenerateData("all rows are identical")
    if (n_components is None) == (tolerance is None):
        raise ValueError("give exactly one of n_components or tolerance")

    m, n = X.shape
    mean = X.mean(axis=0) if center else np.zeros(n)
    xc = X - mean
    eigenvalues, vecs = _spectrum(xc)
    if n_components is None:
        k = components_for_tolerance(eigenvalues, tolerance, relative)
    else:
        k = int(n_components)
        if not 0 <= k <= n:
            raise ValueError(f"n_components must be in 0..{n}, got {k}")
    if k > vecs.shape[1]:
        # Gram route left the null space undetermined
        _, vecs = _eigh_descending(xc.T @ xc)
    basis = _fix_signs(vecs[:, :k]) if k else np.zeros((n, 0))
    return PcaModel(mean, eigenvalues, basis, center)


def pca_transform(model: PcaModel, x):
    """Project a vector or the rows of a matrix onto the retained components."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != model.n_features:
        raise DimensionMismatch(f"expected {model.n_features} features, got {x.shape[-1]}")
    return (x - model.mean) @ model.basis


def pca_reconstruct(model: PcaModel, z):
    return np.asarray(z, dtype=float) @ model.basis.T + model.mean


def projection_error(model: PcaModel, X) -> ProjectionError:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise DimensionMismatch(f"expected m x {model.n_features}, got {X.shape}")
    xc = X - model.mean
    resid = xc - (xc @ model.basis) @ model.basis.T
    direct = float(np.sum(resid * resid))
    tail = float(model.eigenvalues[model.k:].sum())
    return ProjectionError(direct, tail)
