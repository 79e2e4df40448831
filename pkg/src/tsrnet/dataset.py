"""Directory-per-class ingestion, preprocessing, one-hot labels and stratified splits."""
from __future__ import annotations

import csv
import hashlib
import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .images import decode_image, normalize, resize_bilinear
from .network import N_CLASSES
from .tensor import get_dtype

log = logging.getLogger(__name__)

IMAGE_SIZE = 30
IMAGE_SUFFIXES = {".ppm", ".png"}


class DatasetError(ValueError):
    pass


class DatasetRootError(DatasetError):
    pass


class EmptyDatasetError(DatasetError):
    pass


class ClassDirectoryError(DatasetError):
    pass


class SplitError(DatasetError):
    pass


@dataclass
class LabeledExample:
    image: np.ndarray  # [30, 30, 3] in [0, 1]
    label: int
    source_path: str

    def __post_init__(self):
        if self.image.shape != (IMAGE_SIZE, IMAGE_SIZE, 3):
            raise ValueError(f"{self.source_path}: image shape {list(self.image.shape)} is not [30, 30, 3]")
        if not 0 <= self.label < N_CLASSES:
            raise ValueError(f"{self.source_path}: label {self.label} outside [0, {N_CLASSES - 1}]")
        if self.image.min() < 0 or self.image.max() > 1:
            raise ValueError(f"{self.source_path}: pixel values outside [0, 1]")


@dataclass
class DatasetSplit:
    train: list[LabeledExample]
    validation: list[LabeledExample]
    test: list[LabeledExample]
    class_names: list[str] = field(default_factory=lambda: default_class_names())


def default_class_names(n: int = N_CLASSES) -> list[str]:
    return [f"class_{i}" for i in range(n)]


def scan_dataset(root) -> list[tuple[Path, int]]:
    """List (path, label) for every PPM/PNG under ``root/<class_id>/``, sorted by (label, filename)."""
    root = Path(root)
    if not root.is_dir():
        raise DatasetRootError(f"dataset root {root} does not exist or is not a directory")
    entries = []
    for sub in root.iterdir():
        if not sub.is_dir():
            continue
        if not sub.name.isdigit():
            raise ClassDirectoryError(f"directory {sub.name!r} in {root} is not an integer class id")
        label = int(sub.name)
        if label >= N_CLASSES:
            raise ClassDirectoryError(f"class directory {sub.name!r} outside 0..{N_CLASSES - 1}")
        for f in sub.iterdir():
            if f.is_file() and f.suffix.lower() in IMAGE_SUFFIXES:
                entries.append((f, label))
    if not entries:
        raise EmptyDatasetError(f"empty dataset: no PPM/PNG images under {root}")
    entries.sort(key=lambda e: (e[1], e[0].name))
    return entries


def load_class_names(root) -> list[str]:
    """Names from optional ``root/classes.csv`` (``id,name`` lines); missing ids get ``class_<id>``."""
    names = default_class_names()
    path = Path(root) / "classes.csv"
    if not path.is_file():
        return names
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or not row[0].strip():
                continue
            try:
                cid = int(row[0])
            except ValueError:
                if lineno == 1:
                    continue  # header line
                raise DatasetError(f"{path}:{lineno}: bad class id {row[0]!r}") from None
            if not 0 <= cid < N_CLASSES:
                raise DatasetError(f"{path}:{lineno}: class id {cid} outside 0..{N_CLASSES - 1}")
            names[cid] = ",".join(row[1:]).strip() or names[cid]
    return names


def preprocess(raw: np.ndarray) -> np.ndarray:
    """uint8 [H, W, 3] -> [30, 30, 3] in [0, 1] at the active precision."""
    return normalize(resize_bilinear(raw, IMAGE_SIZE, IMAGE_SIZE)).astype(get_dtype())


def load_example(path, label: int) -> LabeledExample:
    return LabeledExample(preprocess(decode_image(path)), label, str(path))


def load_dataset(root) -> list[LabeledExample]:
    entries = scan_dataset(root)
    log.info("decoding %d images from %s", len(entries), root)
    return [load_example(path, label) for path, label in entries]


def dataset_digest(root) -> str:
    """SHA-256 over the sorted (relative path, file bytes) listing of the dataset."""
    root = Path(root)
    h = hashlib.sha256()
    for path, _ in scan_dataset(root):
        h.update(str(path.relative_to(root).as_posix()).encode("utf-8") + b"\0")
        h.update(path.read_bytes())
    return h.hexdigest()


def one_hot(label: int, n_classes: int = N_CLASSES) -> np.ndarray:
    if not 0 <= label < n_classes:
        raise ValueError(f"label {label} outside [0, {n_classes - 1}]")
    v = np.zeros(n_classes, dtype=get_dtype())
    v[label] = 1
    return v


def _part_size(n: int, fraction: float) -> int:
    if fraction <= 0:
        return 0
    return max(1, math.floor(n * fraction + 0.5))


def stratified_split(
    examples: list[LabeledExample],
    test_fraction: float = 0.2,
    val_fraction: float = 0.2,
    seed: int = 0,
    class_names: list[str] | None = None,
) -> DatasetSplit:
    """Per-class seeded shuffle; test carved first, validation from the remainder.

    Part sizes are rounded to the nearest integer per class, with at least
    one example in every requested part.
    """
    if not 0 <= test_fraction < 1 or not 0 <= val_fraction < 1:
        raise SplitError("fractions must lie in [0, 1)")
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, 1])))
    by_class: dict[int, list[LabeledExample]] = defaultdict(list)
    for ex in sorted(examples, key=lambda e: (e.label, e.source_path)):
        by_class[ex.label].append(ex)
    need = 1 + (test_fraction > 0) + (val_fraction > 0)
    train, val, test = [], [], []
    for label in sorted(by_class):
        items = by_class[label]
        n = len(items)
        if n < need:
            raise SplitError(f"class {label} has {n} examples; at least {need} are needed")
        order = rng.permutation(n)
        n_test = _part_size(n, test_fraction)
        n_val = _part_size(n - n_test, val_fraction)
        if n - n_test - n_val < 1:
            raise SplitError(f"class {label} has too few examples ({n}) to keep a training part")
        test += [items[i] for i in order[:n_test]]
        val += [items[i] for i in order[n_test:n_test + n_val]]
        train += [items[i] for i in order[n_test + n_val:]]
    key = lambda e: (e.label, e.source_path)  # noqa: E731
    return DatasetSplit(sorted(train, key=key), sorted(val, key=key), sorted(test, key=key),
                        class_names or default_class_names())
