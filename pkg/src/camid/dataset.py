"""Image decoding, labeled manifests, stratified splits and quadrant-crop augmentation."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import ClassTooSmall, CorruptFile, DataError, ImageTooSmall, UnsupportedFormat

MIN_SIDE = 32  # smallest side a 4-level decomposition accepts
MANIFEST_VERSION = 1
CHANNELS = {"r": 0, "g": 1, "b": 2, "red": 0, "green": 1, "blue": 2}


@dataclass(frozen=True, eq=False)
class ImageRGB:
    """Float64 ``(height, width, 3)`` raster with intensities in [0, 255]."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=np.float64)
        if px.ndim != 3 or px.shape[2] != 3:
            raise DataError(f"expected (height, width, 3) pixels, got {px.shape}")
        if min(px.shape[:2]) < MIN_SIDE:
            raise ImageTooSmall(f"image is {px.shape[1]}x{px.shape[0]}, minimum side {MIN_SIDE}")
        if not np.all(np.isfinite(px)) or px.min() < 0 or px.max() > 255:
            raise DataError("intensities must be finite and within [0, 255]")
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @property
    def height(self):
        return self.pixels.shape[0]

    @property
    def width(self):
        return self.pixels.shape[1]

    def channel(self, which="g"):
        """One color plane, selected by name ('r', 'g', 'b') or index."""
        idx = CHANNELS[which.lower()] if isinstance(which, str) else int(which)
        return self.pixels[:, :, idx]

    def channels(self):
        return [self.pixels[:, :, i] for i in range(3)]


def decode_image(path) -> ImageRGB:
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such image: {path}")
    try:
        with Image.open(path) as im:
            if im.format not in ("PNG", "JPEG", "MPO", "TIFF", "BMP"):
                raise UnsupportedFormat(f"{path}: unsupported format {im.format}")
            if im.mode not in ("RGB", "L", "RGBA", "P", "CMYK", "YCbCr"):
                raise UnsupportedFormat(f"{path}: unsupported pixel mode {im.mode}")
            px = np.asarray(im.convert("RGB"), dtype=np.float64)
    except UnidentifiedImageError as exc:
        raise UnsupportedFormat(f"{path}: not a recognised raster") from exc
    except (OSError, SyntaxError, ValueError) as exc:
        raise CorruptFile(f"{path}: {exc}") from exc
    return ImageRGB(px)


def encode_png(image: ImageRGB, path) -> None:
    px = np.clip(np.rint(image.pixels), 0, 255).astype(np.uint8)
    Image.fromarray(px, mode="RGB").save(path, format="PNG")


# --- manifests ----------------------------------------------------------------------

@dataclass(frozen=True)
class ManifestEntry:
    id: str
    path: str
    label: Optional[int]  # None for unlabeled samples


@dataclass(frozen=True)
class DatasetManifest:
    entries: tuple
    class_names: tuple = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        object.__setattr__(self, "class_names", tuple(self.class_names))
        ids = [e.id for e in self.entries]
        if len(set(ids)) != len(ids):
            dup = next(i for i in ids if ids.count(i) > 1)
            raise DataError(f"duplicate sample id {dup!r}")
        labeled = [e.label for e in self.entries if e.label is not None]
        if labeled and len(self.class_names) < 2:
            raise DataError("a labeled manifest needs at least 2 class names")
        bad = [lab for lab in labeled if not 0 <= lab < len(self.class_names)]
        if bad:
            raise DataError(f"label {bad[0]} outside 0..{len(self.class_names) - 1}")

    def __len__(self):
        return len(self.entries)

    @property
    def labels(self):
        return np.array([-1 if e.label is None else e.label for e in self.entries])

    def with_entries(self, entries):
        return DatasetManifest(tuple(entries), self.class_names)


def read_manifest(path) -> DatasetManifest:
    """Read ``id,path,label`` CSV. ``#classes,...`` names the classes; labels may be
    class names or indices, ``?``/blank for unlabeled. Image paths are resolved
    relative to the manifest."""
    path = Path(path)
    class_names: list = []
    rows = []
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if ln.strip()]
    meta = [ln for ln in lines if ln.startswith("#")]
    body = [ln for ln in lines if not ln.startswith("#")]
    for row in csv.reader(meta):
        key = row[0].lstrip("#").strip()
        if key == "classes":
            class_names = [c.strip() for c in row[1:]]
        elif key == "format_version" and int(row[1]) > MANIFEST_VERSION:
            raise DataError(f"{path}: manifest format {row[1]} is newer than supported")
    reader = csv.DictReader(body)
    if reader.fieldnames is None or not {"id", "path"} <= set(reader.fieldnames):
        raise DataError(f"{path}: header must contain id,path[,label]")
    raw = [(r["id"], r["path"], (r.get("label") or "").strip()) for r in reader]
    if not class_names:
        names = sorted({lab for _, _, lab in raw if lab not in ("", "?")})
        class_names = names if not all(n.isdigit() for n in names) else []
    index = {name: i for i, name in enumerate(class_names)}
    for sid, p, lab in raw:
        if lab in ("", "?"):
            label = None
        elif lab in index:
            label = index[lab]
        elif lab.lstrip("-").isdigit():
            label = int(lab)
        else:
            raise DataError(f"{path}: unknown class {lab!r} for id {sid!r}")
        full = Path(p) if Path(p).is_absolute() else path.parent / p
        rows.append(ManifestEntry(sid, str(full), label))
    if not class_names and any(r.label is not None for r in rows):
        k = max(r.label for r in rows if r.label is not None) + 1
        class_names = [f"C{i + 1}" for i in range(k)]
    return DatasetManifest(tuple(rows), tuple(class_names))


def write_manifest(manifest: DatasetManifest, path) -> None:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["#format_version", MANIFEST_VERSION])
        if manifest.class_names:
            w.writerow(["#classes", *manifest.class_names])
        w.writerow(["id", "path", "label"])
        for e in manifest.entries:
            w.writerow([e.id, e.path, "?" if e.label is None else manifest.class_names[e.label]])


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.8
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.train_fraction < 1:
            raise ValueError("train_fraction must lie in (0, 1)")


def stratified_split(manifest: DatasetManifest, spec: SplitSpec, groups: Sequence = None):
    """Per-class shuffled split; each class contributes ``round(fraction * size)``
    members to train (kept within 1..size-1).

    ``groups`` optionally ties entries together (e.g. crops of one photo) so a
    group never straddles the split; counts are then per group.
    """
    labels = manifest.labels
    if np.any(labels < 0):
        raise DataError("stratified split needs every entry labeled")
    if groups is None:
        groups = [e.id for e in manifest.entries]
    group_order, group_label, members = [], {}, {}
    for i, (g, lab) in enumerate(zip(groups, labels)):
        if g not in members:
            group_order.append(g)
            group_label[g] = int(lab)
            members[g] = []
        elif group_label[g] != lab:
            raise DataError(f"group {g!r} mixes classes")
        members[g].append(i)

    rng = np.random.default_rng(spec.seed)
    train_idx, test_idx = [], []
    for cls in range(len(manifest.class_names)):
        cls_groups = [g for g in group_order if group_label[g] == cls]
        if not cls_groups:
            continue
        if len(cls_groups) < 2:
            raise ClassTooSmall(f"class {manifest.class_names[cls]!r} has fewer than 2 samples")
        perm = rng.permutation(len(cls_groups))
        n_train = min(max(int(round(spec.train_fraction * len(cls_groups))), 1), len(cls_groups) - 1)
        for rank, j in enumerate(perm):
            (train_idx if rank < n_train else test_idx).extend(members[cls_groups[j]])
    train_idx.sort()
    test_idx.sort()
    entries = manifest.entries
    return (manifest.with_entries(entries[i] for i in train_idx),
            manifest.with_entries(entries[i] for i in test_idx))


# --- augmentation -------------------------------------------------------------------

QUADRANTS = ("tl", "tr", "bl", "br")


def quadrant_slices(height, width):
    """Row/column slices of the four half-size center-to-corner crops."""
    h2, w2 = height // 2, width // 2
    top, bottom = slice(0, h2), slice(height - h2, height)
    left, right = slice(0, w2), slice(width - w2, width)
    return [(top, left), (top, right), (bottom, left), (bottom, right)]


def augment_quadrant_crops(image: ImageRGB, include_original: bool = False):
    """Four quadrant crops (tl, tr, bl, br), then the original when requested."""
    if min(image.height, image.width) < 2 * MIN_SIDE:
        raise ImageTooSmall(f"crops of a {image.width}x{image.height} image fall below {MIN_SIDE}")
    crops = [ImageRGB(image.pixels[rs, cs]) for rs, cs in quadrant_slices(image.height, image.width)]
    if include_original:
        crops.append(image)
    return crops


def augmented_ids(sample_id, include_original=False):
    ids = [f"{sample_id}#{q}" for q in QUADRANTS]
    if include_original:
        ids.append(f"{sample_id}#full")
    return ids


def source_id(sample_id):
    """Strip an augmentation suffix: ``img7#tl`` -> ``img7``."""
    return sample_id.split("#", 1)[0]


def augment_manifest(manifest: DatasetManifest, include_original: bool = False):
    """Entry-level view of the augmentation: one entry per produced sample,
    each inheriting its parent's path and label."""
    out = []
    for e in manifest.entries:
        out.extend(ManifestEntry(sid, e.path, e.label)
                   for sid in augmented_ids(e.id, include_original))
    return manifest.with_entries(out)
