"""Separable 2D fast wavelet transform for the two filter banks we need.

``db8`` is used with periodic extension (orthogonal, energy preserving) and
``bior3.5`` with half-sample symmetric extension. Both transforms are
non-expansive: a band at level k has ``ceil(n / 2**k)`` samples per axis,
odd lengths being padded by repeating the last sample before each split.

Filter tables follow the usual convention (decomposition filters are applied
by convolution, reconstruction filters by transposed convolution).
"""

from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from .errors import ShapeMismatch, TooManyLevels


@dataclass(frozen=True)
class FilterBank:
    name: str
    dec_lo: np.ndarray
    dec_hi: np.ndarray
    rec_lo: np.ndarray
    rec_hi: np.ndarray
    extension: str  # "periodic" | "symmetric"
    shift: int

    def __repr__(self):
        return f"FilterBank({self.name!r}, taps={len(self.dec_lo)}, {self.extension})"


_DB8_LO = np.array([
    -0.00011747678412476953, 0.0006754494064505693, -0.00039174037337694705,
    -0.004870352993451574, 0.008746094047405777, 0.013981027917398282,
    -0.044088253930794755, -0.017369301001807547, 0.12874742662047847,
    0.0004724845739132828, -0.2840155429615469, -0.015829105256349306,
    0.5853546836542067, 0.6756307362972898, 0.31287159091429995,
    0.05441584224310401,
])
# quadrature mirror: g[n] = (-1)^(n+1) h[L-1-n]
_DB8_HI = _DB8_LO[::-1] * np.where(np.arange(16) % 2 == 0, -1.0, 1.0)

# bior3.5, 12-tap analysis lowpass / 4-tap synthesis lowpass (zero padded to 12)
_BIOR35_DEC_LO = np.array([
    -0.013810679320049757, 0.04143203796014927, 0.052480581416189075,
    -0.26792717880896527, -0.07181553246425873, 0.966747552403483,
    0.966747552403483, -0.07181553246425873, -0.26792717880896527,
    0.052480581416189075, 0.04143203796014927, -0.013810679320049757,
])
_BIOR35_REC_LO = np.array([
    0.0, 0.0, 0.0, 0.0, 0.1767766952966369, 0.5303300858899106,
    0.5303300858899106, 0.1767766952966369, 0.0, 0.0, 0.0, 0.0,
])
_ALT = np.where(np.arange(12) % 2 == 0, 1.0, -1.0)
_BIOR35_DEC_HI = -_BIOR35_REC_LO * _ALT
_BIOR35_REC_HI = _BIOR35_DEC_LO * _ALT

DB8 = FilterBank("db8", _DB8_LO, _DB8_HI, _DB8_LO[::-1].copy(), _DB8_HI[::-1].copy(),
                 extension="periodic", shift=-7)
BIOR35 = FilterBank("bior3.5", _BIOR35_DEC_LO, _BIOR35_DEC_HI, _BIOR35_REC_LO,
                    _BIOR35_REC_HI, extension="symmetric", shift=-5)

BANKS = {"db8": DB8, "bior3.5": BIOR35}


def get_bank(name):
    try:
        return BANKS[name]
    except KeyError:
        raise ValueError(f"unknown filter bank {name!r}; expected one of {sorted(BANKS)}")


@dataclass
class WaveletPyramid:
    """Approximation at the deepest level plus (vertical, horizontal, diagonal)
    detail triplets; ``details[0]`` is level 1 (finest)."""

    approx: np.ndarray
    details: list
    original_shape: tuple
    bank: str = "db8"
    shapes: list = field(default_factory=list)  # input shape of each level

    @property
    def levels(self):
        return len(self.details)

    def band(self, level, orientation):
        """``orientation`` is one of 'V', 'H', 'D'; ``level`` counts from 1."""
        return self.details[level - 1]["VHD".index(orientation)]

    def map_details(self, fn):
        return replace(self, details=[tuple(fn(b) for b in trip) for trip in self.details])

    def scaled(self, factor):
        out = self.map_details(lambda b: b * factor)
        out.approx = self.approx * factor
        return out

    def coefficient_count(self):
        return self.approx.size + sum(b.size for trip in self.details for b in trip)


# --- 1D kernels along the last axis -------------------------------------------------

def _analyze_periodic(y, f, shift):
    n = y.shape[-1]
    idx = (2 * np.arange(n // 2)[:, None] + np.arange(len(f))[None, :] + shift) % n
    return y[..., idx] @ f


def _synthesize_periodic(a, d, f, g, shift):
    half = a.shape[-1]
    n = 2 * half
    y = np.zeros(a.shape[:-1] + (n,))
    base = 2 * np.arange(half)
    for t in range(len(f)):
        pos = (base + t + shift) % n
        y[..., pos] += a * f[t] + d * g[t]
    return y


def _analyze(x, bank):
    """Split along the last axis; ``x`` has even length."""
    phi = bank.dec_lo[::-1]
    psi = bank.dec_hi[::-1]
    if bank.extension == "periodic":
        return _analyze_periodic(x, phi, bank.shift), _analyze_periodic(x, psi, bank.shift)
    n = x.shape[-1]
    y = np.concatenate([x, x[..., ::-1]], axis=-1)
    # mirrored input makes lowpass symmetric and highpass antisymmetric:
    # the first n/2 coefficients determine the rest
    lo = _analyze_periodic(y, phi, bank.shift)[..., : n // 2]
    hi = _analyze_periodic(y, psi, bank.shift)[..., : n // 2]
    return lo, hi


def _synthesize(lo, hi, bank):
    if bank.extension == "periodic":
        return _synthesize_periodic(lo, hi, bank.rec_lo, bank.rec_hi, bank.shift)
    lo_full = np.concatenate([lo, lo[..., ::-1]], axis=-1)
    hi_full = np.concatenate([hi, -hi[..., ::-1]], axis=-1)
    y = _synthesize_periodic(lo_full, hi_full, bank.rec_lo, bank.rec_hi, bank.shift)
    return y[..., : 2 * lo.shape[-1]]


# Short signals go through cached dense operators built from the kernels above;
# long ones use the kernels directly to keep memory bounded.
MATRIX_MAX_LENGTH = 1024


@lru_cache(maxsize=64)
def _analysis_matrix(name, n):
    lo, hi = _analyze(np.eye(n), get_bank(name))
    return np.hstack([lo, hi])


@lru_cache(maxsize=64)
def _synthesis_matrix(name, n):
    eye = np.eye(n)
    return _synthesize(eye[:, : n // 2], eye[:, n // 2:], get_bank(name))


def _pad_even(x, axis):
    if x.shape[axis] % 2 == 0:
        return x
    pad = [(0, 0)] * x.ndim
    pad[axis] = (0, 1)
    return np.pad(x, pad, mode="edge")


def dwt1(x, bank, axis=-1):
    """Single-level split of ``x`` along ``axis``; returns (lowpass, highpass)."""
    x = np.moveaxis(_pad_even(np.asarray(x, dtype=float), axis), axis, -1)
    n = x.shape[-1]
    if n <= MATRIX_MAX_LENGTH:
        both = x @ _analysis_matrix(bank.name, n)
        lo, hi = both[..., : n // 2], both[..., n // 2:]
    else:
        lo, hi = _analyze(x, bank)
    return np.moveaxis(lo, -1, axis), np.moveaxis(hi, -1, axis)


def idwt1(lo, hi, bank, axis=-1, length=None):
    lo = np.moveaxis(np.asarray(lo, dtype=float), axis, -1)
    hi = np.moveaxis(np.asarray(hi, dtype=float), axis, -1)
    if lo.shape != hi.shape:
        raise ShapeMismatch(f"lowpass {lo.shape} vs highpass {hi.shape}")
    n = 2 * lo.shape[-1]
    if n <= MATRIX_MAX_LENGTH:
        y = np.concatenate([lo, hi], axis=-1) @ _synthesis_matrix(bank.name, n)
    else:
        y = _synthesize(lo, hi, bank)
    if length is not None:
        y = y[..., :length]
    return np.moveaxis(y, -1, axis)


# --- 2D ------------------------------------------------------------------------------

def max_levels(shape):
    """Deepest decomposition leaving at least one coefficient per axis."""
    n = min(shape)
    levels = 0
    while n >= 2:
        n = -(-n // 2)
        levels += 1
    return levels


def dwt2(channel, bank=DB8, levels=4):
    """Multilevel separable decomposition (rows filtered first, then columns)."""
    if isinstance(bank, str):
        bank = get_bank(bank)
    x = np.asarray(channel, dtype=float)
    if x.ndim != 2:
        raise ShapeMismatch(f"expected a 2D matrix, got shape {x.shape}")
    if levels < 1 or min(x.shape) / 2 ** levels < 1:
        raise TooManyLevels(f"{levels} levels requested for shape {x.shape}")
    details, shapes = [], []
    for _ in range(levels):
        shapes.append(x.shape)
        lo, hi = dwt1(x, bank, axis=1)
        ll, lh = dwt1(lo, bank, axis=0)
        hl, hh = dwt1(hi, bank, axis=0)
        # lh: lowpass across columns, highpass down rows -> horizontal edges
        details.append((hl, lh, hh))
        x = ll
    return WaveletPyramid(approx=x, details=details, original_shape=tuple(np.shape(channel)),
                          bank=bank.name, shapes=shapes)


def _expected_shapes(shape, levels):
    shapes = []
    for _ in range(levels):
        shapes.append(tuple(shape))
        shape = tuple(-(-s // 2) for s in shape)
    return shapes, shape


def idwt2(pyramid, bank=None):
    if bank is None:
        bank = pyramid.bank
    if isinstance(bank, str):
        bank = get_bank(bank)
    shapes, deepest = _expected_shapes(pyramid.original_shape, pyramid.levels)
    if pyramid.approx.shape != deepest:
        raise ShapeMismatch(f"approximation {pyramid.approx.shape}, expected {deepest}")
    x = np.asarray(pyramid.approx, dtype=float)
    for level in range(pyramid.levels, 0, -1):
        v, h, d = pyramid.details[level - 1]
        if not (v.shape == h.shape == d.shape == x.shape):
            raise ShapeMismatch(f"level {level} bands {v.shape}, {h.shape}, {d.shape}, "
                                f"approximation {x.shape}")
        rows, cols = shapes[level - 1]
        lo = idwt1(x, h, bank, axis=0, length=rows)
        hi = idwt1(v, d, bank, axis=0, length=rows)
        x = idwt1(lo, hi, bank, axis=1, length=cols)
    return x


def hard_threshold(pyramid, tau):
    """Zero detail coefficients with ``|c| <= tau``; the approximation is kept."""
    if tau < 0:
        raise ValueError("tau must be non-negative")
    if tau == 0:
        return pyramid.map_details(np.copy)
    return pyramid.map_details(lambda b: np.where(np.abs(b) > tau, b, 0.0))
