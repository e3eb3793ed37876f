"""Dataset loading (CSV, LibSVM, IDX) and synthetic shape generators.

All loaders return an immutable :class:`Dataset` holding an N x d float64
feature matrix and optional integer labels remapped to a contiguous,
0-based alphabet.
"""

from __future__ import annotations

import bz2
import csv
import gzip
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Optional, Sequence, Union

import numpy as np

from .errors import ConfigError, DataError

__all__ = [
    "Dataset",
    "load_csv",
    "load_libsvm",
    "load_idx",
    "make_two_moons",
    "make_two_circles",
    "save_csv",
    "minmax_scale",
]


@dataclass(frozen=True)
class Dataset:
    """A dense feature matrix with optional ground-truth class ids."""

    features: np.ndarray
    labels: Optional[np.ndarray] = None
    name: str = "dataset"

    def __post_init__(self):
        feats = np.ascontiguousarray(self.features, dtype=np.float64)
        if feats.ndim != 2 or feats.shape[0] < 1 or feats.shape[1] < 1:
            raise DataError(f"features must be a non-empty 2-D matrix, got shape {feats.shape}")
        if not np.all(np.isfinite(feats)):
            raise DataError("features contain non-finite values")
        object.__setattr__(self, "features", feats)
        if self.labels is not None:
            labels = np.asarray(self.labels, dtype=np.int64)
            if labels.shape != (feats.shape[0],):
                raise DataError(
                    f"labels length {labels.shape} does not match sample count {feats.shape[0]}"
                )
            if labels.min() < 0:
                raise DataError("labels must be non-negative")
            object.__setattr__(self, "labels", labels)

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def n_classes(self) -> int:
        if self.labels is None:
            return 0
        return int(self.labels.max()) + 1


def _open_text(path: Union[str, Path]) -> IO[str]:
    """Open a text file, transparently decompressing .bz2 / .gz."""
    p = Path(path)
    if not p.exists():
        raise DataError(f"file not found: {p}")
    if p.suffix == ".bz2":
        return bz2.open(p, "rt")
    if p.suffix == ".gz":
        return gzip.open(p, "rt")
    return open(p, "r")


def _remap_labels(raw: Sequence) -> np.ndarray:
    """Map label values to contiguous 0-based ids in first-appearance order."""
    seen: dict = {}
    out = np.empty(len(raw), dtype=np.int64)
    for i, v in enumerate(raw):
        if v not in seen:
            seen[v] = len(seen)
        out[i] = seen[v]
    return out


def load_csv(path: Union[str, Path], label_column: Union[int, str, None] = None,
             name: Optional[str] = None) -> Dataset:
    """Load a comma-separated dataset.

    A header row is detected when no cell of the first row parses as a
    float (a partially numeric first row is data and parse errors there are
    reported as row 1). ``label_column`` selects the label column by
    0-based index, by header name, or with the keyword ``"last"``; label
    values must be integral and are remapped to contiguous 0-based ids.
    """

    def _is_float(cell: str) -> bool:
        try:
            float(cell)
            return True
        except ValueError:
            return False

    header: Optional[list] = None
    rows: list = []
    with _open_text(path) as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, start=1):
            if not row or (len(row) == 1 and row[0].strip() == ""):
                continue
            row = [c.strip() for c in row]
            if lineno == 1 and not any(_is_float(c) for c in row):
                header = row
                continue
            rows.append(row)
    if not rows:
        raise DataError(f"no data rows in {path}")

    width = len(rows[0])
    for r, row in enumerate(rows):
        if len(row) != width:
            raise DataError(f"ragged row {r + 1}: expected {width} columns, got {len(row)}")

    label_idx: Optional[int] = None
    if label_column is not None:
        if label_column == "last":
            label_idx = width - 1
        elif isinstance(label_column, int):
            label_idx = label_column if label_column >= 0 else width + label_column
        elif header is not None and label_column in header:
            label_idx = header.index(label_column)
        else:
            raise DataError(f"label column {label_column!r} not found")
        if not 0 <= label_idx < width:
            raise DataError(f"label column index {label_idx} out of range for {width} columns")
        if width < 2:
            raise DataError("cannot split a label column out of a single-column file")

    n = len(rows)
    d = width - (1 if label_idx is not None else 0)
    feats = np.empty((n, d), dtype=np.float64)
    raw_labels: list = []
    for r, row in enumerate(rows):
        c_out = 0
        for c, cell in enumerate(row):
            try:
                val = float(cell)
            except ValueError:
                raise DataError(
                    f"cannot parse value {cell!r} at row {r + 1}, column {c + 1}"
                ) from None
            if c == label_idx:
                if val != int(val):
                    raise DataError(f"non-integral label {cell!r} at row {r + 1}")
                raw_labels.append(int(val))
            else:
                feats[r, c_out] = val
                c_out += 1
    labels = _remap_labels(raw_labels) if label_idx is not None else None
    return Dataset(feats, labels, name or Path(path).stem)


def load_libsvm(path: Union[str, Path], name: Optional[str] = None) -> Dataset:
    """Load a sparse ``<label> <index>:<value> ...`` text dataset.

    Indices are 1-based and must be strictly increasing within a line;
    unobserved indices are zero. Labels are remapped to contiguous 0-based
    ids in first-appearance order. ``.bz2`` / ``.gz`` files are decompressed
    transparently.
    """
    raw_labels: list = []
    entries: list = []  # (row, col, value)
    d = 0
    row_no = 0
    with _open_text(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            raw_labels.append(parts[0])
            prev_idx = 0
            for tok in parts[1:]:
                try:
                    idx_s, val_s = tok.split(":", 1)
                    idx = int(idx_s)
                    val = float(val_s)
                except ValueError:
                    raise DataError(f"malformed pair {tok!r} at line {lineno}") from None
                if idx <= prev_idx:
                    raise DataError(
                        f"indices not strictly increasing at line {lineno} (index {idx})"
                    )
                prev_idx = idx
                d = max(d, idx)
                entries.append((row_no, idx - 1, val))
            row_no += 1
    if row_no == 0:
        raise DataError(f"empty LibSVM file: {path}")
    feats = np.zeros((row_no, max(d, 1)), dtype=np.float64)
    for r, c, v in entries:
        feats[r, c] = v
    return Dataset(feats, _remap_labels(raw_labels), name or Path(path).stem)


_IDX_IMAGES_MAGIC = 0x00000803
_IDX_LABELS_MAGIC = 0x00000801


def _read_exact(fh: IO[bytes], count: int, what: str, path) -> bytes:
    buf = fh.read(count)
    if len(buf) != count:
        raise DataError(f"truncated {what} in {path}: wanted {count} bytes, got {len(buf)}")
    return buf


def load_idx(images_path: Union[str, Path], labels_path: Union[str, Path, None] = None,
             name: Optional[str] = None) -> Dataset:
    """Load big-endian IDX image (and optional label) files.

    Images are flattened row-major and scaled to [0, 1] by dividing by 255.
    """
    p = Path(images_path)
    if not p.exists():
        raise DataError(f"file not found: {p}")
    opener = gzip.open if p.suffix == ".gz" else open
    with opener(p, "rb") as fh:
        magic, count, rows, cols = struct.unpack(">IIII", _read_exact(fh, 16, "header", p))
        if magic != _IDX_IMAGES_MAGIC:
            raise DataError(f"wrong magic 0x{magic:08x} in {p}, expected 0x{_IDX_IMAGES_MAGIC:08x}")
        if count < 1:
            raise DataError(f"IDX file {p} contains no images")
        payload = _read_exact(fh, count * rows * cols, "image payload", p)
    feats = np.frombuffer(payload, dtype=np.uint8).astype(np.float64) / 255.0
    feats = feats.reshape(count, rows * cols)

    labels = None
    if labels_path is not None:
        lp = Path(labels_path)
        if not lp.exists():
            raise DataError(f"file not found: {lp}")
        opener = gzip.open if lp.suffix == ".gz" else open
        with opener(lp, "rb") as fh:
            magic, lcount = struct.unpack(">II", _read_exact(fh, 8, "header", lp))
            if magic != _IDX_LABELS_MAGIC:
                raise DataError(
                    f"wrong magic 0x{magic:08x} in {lp}, expected 0x{_IDX_LABELS_MAGIC:08x}"
                )
            if lcount != count:
                raise DataError(f"count mismatch: {count} images but {lcount} labels")
            labels = np.frombuffer(_read_exact(fh, lcount, "label payload", lp), dtype=np.uint8)
        labels = labels.astype(np.int64)
    return Dataset(feats, labels, name or p.stem)


def _check_synth_args(n: int, noise: float) -> None:
    if n < 4 or n % 2 != 0:
        raise ConfigError(f"sample count must be even and >= 4, got {n}")
    if noise < 0:
        raise ConfigError(f"noise must be non-negative, got {noise}")


def make_two_moons(n: int, noise: float, seed: int) -> Dataset:
    """Two interleaved half-circle arcs with ``n/2`` samples each.

    Class 0 is the upper unit arc centered at the origin, class 1 the lower
    unit arc centered at (1, 0.5). Gaussian coordinate noise with the given
    standard deviation is added after placing points on the arcs.
    """
    _check_synth_args(n, noise)
    m = n // 2
    t = np.linspace(0.0, np.pi, m)
    upper = np.column_stack([np.cos(t), np.sin(t)])
    lower = np.column_stack([1.0 - np.cos(t), 0.5 - np.sin(t)])
    pts = np.vstack([upper, lower])
    if noise > 0:
        pts = pts + np.random.default_rng(seed).normal(0.0, noise, size=pts.shape)
    labels = np.repeat(np.array([0, 1], dtype=np.int64), m)
    return Dataset(pts, labels, name=f"two_moons_n{n}")


def make_two_circles(n: int, radius_ratio: float, noise: float, seed: int) -> Dataset:
    """Two concentric circles; class 0 at radius 1, class 1 at ``radius_ratio``."""
    _check_synth_args(n, noise)
    if not 0.0 < radius_ratio < 1.0:
        raise ConfigError(f"radius_ratio must lie in (0, 1), got {radius_ratio}")
    m = n // 2
    t = np.linspace(0.0, 2.0 * np.pi, m, endpoint=False)
    ring = np.column_stack([np.cos(t), np.sin(t)])
    pts = np.vstack([ring, radius_ratio * ring])
    if noise > 0:
        pts = pts + np.random.default_rng(seed).normal(0.0, noise, size=pts.shape)
    labels = np.repeat(np.array([0, 1], dtype=np.int64), m)
    return Dataset(pts, labels, name=f"two_circles_n{n}")


def save_csv(dataset: Dataset, path: Union[str, Path], include_labels: bool = True) -> None:
    """Write a Dataset as CSV, label column last; floats round-trip exactly."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for i in range(dataset.n_samples):
            row = [format(v, ".17g") for v in dataset.features[i]]
            if include_labels and dataset.labels is not None:
                row.append(str(int(dataset.labels[i])))
            writer.writerow(row)


def minmax_scale(dataset: Dataset) -> Dataset:
    """Rescale every feature to [0, 1]; constant features map to 0."""
    feats = dataset.features
    lo = feats.min(axis=0)
    span = feats.max(axis=0) - lo
    span_safe = np.where(span > 0, span, 1.0)
    scaled = (feats - lo) / span_safe
    scaled[:, span == 0] = 0.0
    return Dataset(scaled, dataset.labels, dataset.name + "_minmax")
