"""LBP features of wavelet-denoising residuals: 10 riu2 bins per color channel."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ImageTooSmall
from .wavelet import BIOR35, dwt2, hard_threshold, idwt2

AUTO = "auto"
DENOISE_LEVELS = 4
N_BINS = 10
LBP_DIM = 3 * N_BINS

# unit-radius neighbors in circular order, starting top-left, clockwise
NEIGHBOR_OFFSETS = ((-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1))


@dataclass
class NoiseResidual:
    residual: np.ndarray
    tau: float


def universal_threshold(pyramid, n_pixels):
    """Donoho's threshold, noise scale from the MAD of the finest diagonal band."""
    sigma = np.median(np.abs(pyramid.band(1, "D"))) / 0.6745
    return float(sigma * np.sqrt(2.0 * np.log(n_pixels)))


def noise_residual(channel, tau=AUTO, levels=DENOISE_LEVELS) -> NoiseResidual:
    x = np.asarray(channel, dtype=float)
    if min(x.shape) < 32:
        raise ImageTooSmall(f"channel {x.shape} smaller than 32x32")
    pyr = dwt2(x, BIOR35, levels)
    if isinstance(tau, str):
        if tau.lower() != AUTO:
            raise ValueError(f"tau must be a number or 'auto', got {tau!r}")
        tau = universal_threshold(pyr, x.size)
    denoised = idwt2(hard_threshold(pyr, float(tau)), BIOR35)
    return NoiseResidual(x - denoised, float(tau))


def _rotl8(code, k):
    return ((code << k) | (code >> (8 - k))) & 0xFF


def _transitions(code):
    return bin(code ^ _rotl8(code, 1)).count("1")


def riu2_bin(code):
    """Uniform patterns (<= 2 circular transitions) map to their popcount 0..8,
    everything else to bin 9."""
    return bin(code).count("1") if _transitions(code) <= 2 else 9


RIU2_TABLE = np.array([riu2_bin(c) for c in range(256)], dtype=np.intp)


def lbp_codes(residual):
    """8-bit codes of interior pixels; neighbor >= center sets the bit."""
    r = np.asarray(residual, dtype=float)
    h, w = r.shape
    if h < 3 or w < 3:
        raise ImageTooSmall(f"LBP needs at least 3x3, got {r.shape}")
    center = r[1:-1, 1:-1]
    codes = np.zeros(center.shape, dtype=np.intp)
    for bit, (dr, dc) in enumerate(NEIGHBOR_OFFSETS):
        nb = r[1 + dr:h - 1 + dr, 1 + dc:w - 1 + dc]
        codes |= (nb >= center).astype(np.intp) << bit
    return codes


def lbp_riu2_histogram(residual):
    codes = lbp_codes(residual)
    counts = np.bincount(RIU2_TABLE[codes].ravel(), minlength=N_BINS).astype(float)
    return counts / codes.size


def extract_lbp(image, tau=AUTO, levels=DENOISE_LEVELS):
    """30 values: normalized riu2 histograms of the R, G and B residuals."""
    return np.concatenate([
        lbp_riu2_histogram(noise_residual(ch, tau, levels).residual)
        for ch in image.channels()
    ])


def lbp_slot_names():
    return [f"lbp.{ch}.bin{b}" for ch in "RGB" for b in range(N_BINS)]
