"""Synthetic "camera" classes for desk-scale end-to-end checks.

Each class owns a fixed small noise-shaping kernel; every image is a smooth
random scene plus per-image white noise filtered by its class kernel, then
quantized to 8 bits like a real photo.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from scipy.ndimage import convolve, gaussian_filter

from .dataset import (DatasetManifest, ImageRGB, ManifestEntry, encode_png, read_manifest,
                      write_manifest)


def class_kernel(cls, size=3, seed=0):
    """Unit-energy kernel: identity tap plus a class-specific random part."""
    rng = np.random.default_rng([seed, 7919, cls])
    k = rng.normal(size=(size, size))
    k[size // 2, size // 2] += 1.5
    return k / np.linalg.norm(k)


def smooth_scene(rng, height, width):
    scene = np.empty((height, width, 3))
    base = gaussian_filter(rng.normal(size=(height, width)), sigma=max(height, width) / 12)
    base = (base - base.min()) / (np.ptp(base) + 1e-12)
    for c in range(3):
        tint = gaussian_filter(rng.normal(size=(height, width)), sigma=max(height, width) / 8)
        tint = (tint - tint.min()) / (np.ptp(tint) + 1e-12)
        scene[:, :, c] = 50 + 120 * base + 30 * tint
    return scene


def synthetic_image(rng, kernel, height=96, width=96, noise_level=4.0):
    scene = smooth_scene(rng, height, width)
    for c in range(3):
        scene[:, :, c] += noise_level * convolve(rng.normal(size=(height, width)), kernel, mode="wrap")
    return ImageRGB(np.clip(np.rint(scene), 0, 255))


def make_dataset(out_dir, n_classes=4, per_class=60, height=96, width=96, seed=0,
                 noise_level=4.0) -> DatasetManifest:
    """Write PNGs plus ``manifest.csv`` under ``out_dir``; returns the manifest
    as read back, so paths resolve from any working directory."""
    out = Path(out_dir)
    (out / "images").mkdir(parents=True, exist_ok=True)
    names = tuple(f"cam{c}" for c in range(n_classes))
    kernels = [class_kernel(c, seed=seed) for c in range(n_classes)]
    entries = []
    for c in range(n_classes):
        rng = np.random.default_rng([seed, c])
        for i in range(per_class):
            sid = f"{names[c]}_{i:04d}"
            rel = f"images/{sid}.png"
            encode_png(synthetic_image(rng, kernels[c], height, width, noise_level), out / rel)
            entries.append(ManifestEntry(sid, rel, c))
    manifest = DatasetManifest(tuple(entries), names)
    write_manifest(manifest, out / "manifest.csv")
    return read_manifest(out / "manifest.csv")
