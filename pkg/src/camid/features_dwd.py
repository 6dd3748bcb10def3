"""Wavelet-domain (DWD) features: 351 values per RGB image.

Layout, block-major (see :func:`dwd_slot_names`)::

    [0, 108)    moments of detail coefficients
    [108, 216)  moments of log2 linear-predictor errors
    [216, 351)  co-occurrence (Haralick) statistics of detail coefficients

Within a block the order is channel (R, G, B), level (1..3), orientation
(V, H, D), then statistic. Moments are population moments with non-excess
kurtosis; flat bands get skewness = kurtosis = 0 (and correlation = 0 for
co-occurrence) and are reported in ``DwdFeatureVector.flags``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateBand, InsufficientSamples
from .wavelet import DB8, dwt2

CHANNEL_NAMES = ("R", "G", "B")
ORIENTATIONS = ("V", "H", "D")
FEATURE_LEVELS = (1, 2, 3)
DECOMPOSITION_LEVELS = 4
MOMENT_NAMES = ("mean", "variance", "skewness", "kurtosis")
HARALICK_NAMES = ("energy", "entropy", "contrast", "homogeneity", "correlation")

N_MOMENT_SLOTS = len(MOMENT_NAMES) * 3 * 3 * 3
N_HARALICK_SLOTS = len(HARALICK_NAMES) * 3 * 3 * 3
DWD_DIM = 2 * N_MOMENT_SLOTS + N_HARALICK_SLOTS

MIN_PREDICTOR_SAMPLES = 8
LOG_EPS = 1e-10
_VAR_FLOOR = 1e-12


@dataclass(frozen=True)
class SubbandStats:
    mean: float
    variance: float
    skewness: float
    kurtosis: float

    def as_tuple(self):
        return (self.mean, self.variance, self.skewness, self.kurtosis)


@dataclass(frozen=True)
class HaralickStats:
    energy: float
    entropy: float
    contrast: float
    homogeneity: float
    correlation: float
    degenerate: bool = False

    def as_tuple(self):
        return (self.energy, self.entropy, self.contrast, self.homogeneity, self.correlation)


@dataclass
class DwdFeatureVector:
    values: np.ndarray
    flags: list = field(default_factory=list)  # slot-group names that needed substitution


def subband_stats(band) -> SubbandStats:
    x = np.asarray(band, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("empty band")
    m1 = x.mean()
    c = x - m1
    m2 = np.mean(c * c)
    if m2 < _VAR_FLOOR:
        raise DegenerateBand(f"variance {m2:.3g} too small for skewness/kurtosis")
    m3 = np.mean(c ** 3)
    m4 = np.mean(c ** 4)
    return SubbandStats(float(m1), float(m2), float(m3 / m2 ** 1.5), float(m4 / m2 ** 2))


def _stats_or_zero(values):
    """Moments with the degenerate substitution; returns (tuple, flagged)."""
    x = np.asarray(values, dtype=float).ravel()
    if x.size == 0:
        return (0.0, 0.0, 0.0, 0.0), True
    try:
        return subband_stats(x).as_tuple(), False
    except DegenerateBand:
        return (float(x.mean()), float(np.mean((x - x.mean()) ** 2)), 0.0, 0.0), True


# --- linear predictor of coefficient magnitudes --------------------------------------

def predictor_design(pyramid, orientation, level):
    """Target magnitudes ``v`` and 7-column neighbor matrix ``Q`` for one band.

    Neighbors: left, right, up, down, same-orientation parent, then for V/H
    the diagonal band at this level and its parent; for D the H and V bands at
    this level. Border coefficients are skipped; only ``|c| > 1`` rows are kept.
    """
    if level + 1 > pyramid.levels:
        raise ValueError(f"predictor for level {level} needs a parent level")
    mag = np.abs(pyramid.band(level, orientation))
    parent = np.abs(pyramid.band(level + 1, orientation))
    if orientation == "D":
        cross = (np.abs(pyramid.band(level, "H")), np.abs(pyramid.band(level, "V")))
        cross_parent = None
    else:
        cross = (np.abs(pyramid.band(level, "D")),)
        cross_parent = np.abs(pyramid.band(level + 1, "D"))

    h, w = mag.shape
    if h < 3 or w < 3:
        return np.empty(0), np.empty((0, 7))
    r, c = np.mgrid[1:h - 1, 1:w - 1]
    r, c = r.ravel(), c.ravel()
    cols = [mag[r, c - 1], mag[r, c + 1], mag[r - 1, c], mag[r + 1, c], parent[r // 2, c // 2]]
    cols += [b[r, c] for b in cross]
    if cross_parent is not None:
        cols.append(cross_parent[r // 2, c // 2])
    v = mag[r, c]
    Q = np.column_stack(cols)
    keep = v > 1.0
    return v[keep], Q[keep]


def fit_predictor(v, Q):
    w, *_ = np.linalg.lstsq(Q, v, rcond=None)
    return w


def predictor_errors(pyramid, orientation, level):
    """``log2(v) - log2(|Q w|)`` for the least-squares weights ``w``.

    Returns an empty array when fewer than 8 coefficients exceed magnitude 1.
    """
    v, Q = predictor_design(pyramid, orientation, level)
    if v.size < MIN_PREDICTOR_SAMPLES:
        return np.empty(0)
    w = fit_predictor(v, Q)
    return np.log2(v + LOG_EPS) - np.log2(np.abs(Q @ w) + LOG_EPS)


def require_predictor_errors(pyramid, orientation, level):
    err = predictor_errors(pyramid, orientation, level)
    if err.size == 0:
        raise InsufficientSamples(f"band {orientation}{level}: fewer than "
                                  f"{MIN_PREDICTOR_SAMPLES} coefficients above 1")
    return err


# --- co-occurrence -------------------------------------------------------------------

def quantize(band, gray_levels):
    x = np.asarray(band, dtype=float)
    lo, hi = x.min(), x.max()
    # a range this small is rounding noise on a flat band
    if hi - lo <= np.sqrt(_VAR_FLOOR):
        return np.zeros(x.shape, dtype=np.intp)
    q = np.floor((x - lo) / (hi - lo) * gray_levels).astype(np.intp)
    return np.minimum(q, gray_levels - 1)


def cooccurrence_matrix(band, gray_levels=16, offset=(0, 1)):
    """Symmetric, normalized co-occurrence probabilities of the quantized band."""
    q = quantize(band, gray_levels)
    dr, dc = offset
    h, w = q.shape
    if h - abs(dr) < 1 or w - abs(dc) < 1 or (dr, dc) == (0, 0):
        raise ValueError(f"offset {offset} does not fit a {h}x{w} band")
    a = q[max(0, -dr):h - max(0, dr), max(0, -dc):w - max(0, dc)]
    b = q[max(0, dr):h - max(0, -dr), max(0, dc):w - max(0, -dc)]
    counts = np.zeros((gray_levels, gray_levels))
    np.add.at(counts, (a.ravel(), b.ravel()), 1.0)
    counts += counts.T
    return counts / counts.sum()


def haralick_stats(p) -> HaralickStats:
    g = p.shape[0]
    i, j = np.indices((g, g))
    nz = p > 0
    energy = float(np.sum(p * p))
    entropy = float(-np.sum(p[nz] * np.log2(p[nz])))
    diff2 = (i - j) ** 2
    contrast = float(np.sum(diff2 * p))
    homogeneity = float(np.sum(p / (1.0 + diff2)))
    mu_i, mu_j = np.sum(i * p), np.sum(j * p)
    sd_i = np.sqrt(np.sum((i - mu_i) ** 2 * p))
    sd_j = np.sqrt(np.sum((j - mu_j) ** 2 * p))
    if sd_i * sd_j < 1e-12:
        return HaralickStats(energy, entropy, contrast, homogeneity, 0.0, degenerate=True)
    corr = float(np.sum((i - mu_i) * (j - mu_j) * p) / (sd_i * sd_j))
    return HaralickStats(energy, entropy, contrast, homogeneity, float(np.clip(corr, -1, 1)))


def cooccurrence_features(band, gray_levels=16, offset=(0, 1)) -> HaralickStats:
    return haralick_stats(cooccurrence_matrix(band, gray_levels, offset))


# --- full vector ---------------------------------------------------------------------

def dwd_slot_names():
    names = []
    for block, stats in (("coef", MOMENT_NAMES), ("pred", MOMENT_NAMES), ("glcm", HARALICK_NAMES)):
        for ch in CHANNEL_NAMES:
            for lev in FEATURE_LEVELS:
                for o in ORIENTATIONS:
                    names.extend(f"{block}.{ch}.L{lev}.{o}.{s}" for s in stats)
    return names


def dwd_block_slices():
    return {
        "coef": slice(0, N_MOMENT_SLOTS),
        "pred": slice(N_MOMENT_SLOTS, 2 * N_MOMENT_SLOTS),
        "glcm": slice(2 * N_MOMENT_SLOTS, DWD_DIM),
    }


def extract_dwd(image, gray_levels=16, offset=(0, 1)) -> DwdFeatureVector:
    coef, pred, glcm, flags = [], [], [], []
    for ch_name, chan in zip(CHANNEL_NAMES, image.channels()):
        pyr = dwt2(chan, DB8, DECOMPOSITION_LEVELS)
        for lev in FEATURE_LEVELS:
            for o in ORIENTATIONS:
                tag = f"{ch_name}.L{lev}.{o}"
                band = pyr.band(lev, o)
                stats, bad = _stats_or_zero(band)
                coef.extend(stats)
                if bad:
                    flags.append(f"coef.{tag}")
                stats, bad = _stats_or_zero(predictor_errors(pyr, o, lev))
                pred.extend(stats)
                if bad:
                    flags.append(f"pred.{tag}")
                hs = cooccurrence_features(band, gray_levels, offset)
                glcm.extend(hs.as_tuple())
                if hs.degenerate:
                    flags.append(f"glcm.{tag}")
    values = np.array(coef + pred + glcm, dtype=float)
    assert values.size == DWD_DIM
    return DwdFeatureVector(values, flags)
