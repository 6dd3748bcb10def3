"""Camera-model identification from wavelet statistics and noise-residual LBP."""

__version__ = "0.1.0"
