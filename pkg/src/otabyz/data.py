"""Datasets: MNIST IDX loading, synthetic generators and client partitioning.

Features are stored as float64 with a constant bias column appended as the
last feature, so a dataset built from ``d`` raw features has ``dim == d + 1``.
"""
from __future__ import annotations

import gzip
import logging
import os
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

log = logging.getLogger(__name__)

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801

MNIST_FILES = {
    "train": ("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
    "test": ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
}


class IdxFormatError(ValueError):
    """File does not follow the IDX layout."""


class IdxConsistencyError(ValueError):
    """Image and label files disagree."""


@dataclass(frozen=True, eq=False)
class Dataset:
    """Samples with a bias column already appended to ``features``.

    ``num_classes == 0`` marks a regression dataset with real-valued labels.
    """

    features: np.ndarray
    labels: np.ndarray
    num_classes: int

    def __post_init__(self):
        if self.features.ndim != 2:
            raise ValueError("features must be a 2-D array")
        if len(self.features) != len(self.labels):
            raise ValueError(
                f"{len(self.features)} feature rows but {len(self.labels)} labels"
            )
        if len(self.labels) < 1:
            raise ValueError("dataset must contain at least one sample")
        if self.num_classes:
            if self.labels.min() < 0 or self.labels.max() >= self.num_classes:
                raise ValueError(f"labels must lie in [0, {self.num_classes - 1}]")

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def subset(self, indices) -> "Dataset":
        indices = np.asarray(indices, dtype=np.int64)
        return Dataset(self.features[indices], self.labels[indices], self.num_classes)


@dataclass(frozen=True)
class Partition:
    assignments: list
    dropped: int = 0

    def __len__(self) -> int:
        return len(self.assignments)


def normalize(x: np.ndarray) -> np.ndarray:
    """Map raw features to float64 in [0, 1].

    Integer arrays are treated as 8-bit pixel intensities and divided by 255;
    real arrays are clipped. Applying it to its own output is a no-op.
    """
    x = np.asarray(x)
    if np.issubdtype(x.dtype, np.integer):
        return x.astype(np.float64) / 255.0
    return np.clip(x.astype(np.float64), 0.0, 1.0)


def add_bias(x: np.ndarray) -> np.ndarray:
    return np.hstack([x, np.ones((x.shape[0], 1), dtype=np.float64)])


def _read_idx(path: Path, expected_magic: int) -> np.ndarray:
    path = Path(path)
    raw = gzip.decompress(path.read_bytes()) if path.suffix == ".gz" else path.read_bytes()
    if len(raw) < 8:
        raise IdxFormatError(f"{path}: file too short for an IDX header")
    (magic,) = struct.unpack(">I", raw[:4])
    if magic != expected_magic:
        raise IdxFormatError(
            f"{path}: bad magic number 0x{magic:08x}, expected 0x{expected_magic:08x}"
        )
    ndim = magic & 0xFF
    header_end = 4 + 4 * ndim
    dims = struct.unpack(f">{ndim}I", raw[4:header_end])
    body = np.frombuffer(raw, dtype=np.uint8, offset=header_end)
    expected = int(np.prod(dims))
    if body.size != expected:
        raise IdxFormatError(f"{path}: expected {expected} data bytes, found {body.size}")
    return body.reshape(dims)


def load_idx(images_path, labels_path) -> Dataset:
    """Read an IDX image/label file pair (the MNIST distribution format)."""
    images = _read_idx(Path(images_path), IDX_IMAGES_MAGIC)
    labels = _read_idx(Path(labels_path), IDX_LABELS_MAGIC)
    if images.shape[0] != labels.shape[0]:
        raise IdxConsistencyError(
            f"{images_path} holds {images.shape[0]} images but "
            f"{labels_path} holds {labels.shape[0]} labels"
        )
    features = normalize(images.reshape(images.shape[0], -1))
    return Dataset(add_bias(features), labels.astype(np.int64), 10)


def find_mnist(data_dir=None) -> dict | None:
    """Locate MNIST IDX files; returns ``{"train": (img, lbl), "test": ...}`` or None."""
    data_dir = data_dir or os.environ.get("OTA_BYZ_DATA_DIR")
    if not data_dir:
        return None
    root = Path(data_dir)
    found = {}
    for split, names in MNIST_FILES.items():
        paths = []
        for name in names:
            plain = [root / name, root / name.replace("-idx", ".idx")]
            candidates = plain + [p.with_name(p.name + ".gz") for p in plain]
            hit = next((p for p in candidates if p.is_file()), None)
            if hit is None:
                return None
            paths.append(hit)
        found[split] = tuple(paths)
    return found


def synth_classify(n: int, d: int, C: int, spread: float, seed: int) -> Dataset:
    """Gaussian blobs, one per class, clipped to the unit cube.

    Class centers are drawn uniformly from ``[0.2, 0.8]^d``; each sample is its
    center plus isotropic noise of standard deviation ``spread``.
    """
    if C < 2:
        raise ValueError("need at least two classes")
    if n < C:
        raise ValueError(f"n={n} is smaller than the number of classes C={C}")
    if d < 1 or spread <= 0:
        raise ValueError("d must be >= 1 and spread > 0")
    rng = np.random.default_rng(seed)
    centers = rng.uniform(0.2, 0.8, size=(C, d))
    labels = rng.permutation(np.arange(n) % C).astype(np.int64)
    x = centers[labels] + spread * rng.standard_normal((n, d))
    return Dataset(add_bias(normalize(x)), labels, C)


def synth_regression(n: int, d: int, noise: float, seed: int):
    """Linear-Gaussian regression data; returns ``(dataset, true_weights)``.

    Features are standard normal (no clipping), targets ``x @ w + noise * e``.
    """
    if n < 1 or d < 1 or noise < 0:
        raise ValueError("need n >= 1, d >= 1, noise >= 0")
    rng = np.random.default_rng(seed)
    x = add_bias(rng.standard_normal((n, d)))
    w_true = rng.standard_normal(d + 1)
    y = x @ w_true + noise * rng.standard_normal(n)
    return Dataset(x, y, 0), w_true


def partition_uniform(dataset: Dataset, N: int, seed: int) -> Partition:
    """Shuffle and split into ``N`` equal shards; the remainder is dropped."""
    if N < 1:
        raise ValueError("N must be >= 1")
    size = len(dataset)
    per_client = size // N
    if per_client == 0:
        raise ValueError(f"cannot give {N} clients at least one of {size} samples")
    dropped = size - per_client * N
    if dropped:
        log.warning("partition drops %d of %d samples (N=%d does not divide size)",
                    dropped, size, N)
    perm = np.random.default_rng(seed).permutation(size)
    lists = [perm[i * per_client:(i + 1) * per_client] for i in range(N)]
    return Partition(lists, dropped)
