"""Helpers for the GTSRB archive layout.

The training archive (``Final_Training/Images/000NN/*.ppm``) is already a
directory-per-class tree and can be passed to ``load_dataset`` as is. The
test archive keeps all images in one folder with labels in a
semicolon-separated ``GT-final_test.csv``; :func:`convert_test_archive`
regroups it.
"""
from __future__ import annotations

import csv
import shutil
from pathlib import Path

import numpy as np

from .dataset import DatasetError, scan_dataset

# ten classes with at least 1,400 training images each
SUBSET_CLASSES = (1, 2, 3, 4, 5, 7, 8, 9, 10, 12)


def _place(src: Path, dst: Path, link: bool) -> None:
    dst.parent.mkdir(parents=True, exist_ok=True)
    if dst.exists():
        dst.unlink()
    if link:
        dst.symlink_to(src.resolve())
    else:
        shutil.copyfile(src, dst)


def convert_test_archive(images_dir, labels_csv, out_root, link: bool = False) -> int:
    """Regroup the flat test archive into ``out_root/<class>/``; returns the image count."""
    images_dir, out_root = Path(images_dir), Path(out_root)
    count = 0
    with open(labels_csv, newline="") as fh:
        for row in csv.DictReader(fh, delimiter=";"):
            label = int(row["ClassId"])
            _place(images_dir / row["Filename"], out_root / str(label) / row["Filename"], link)
            count += 1
    if count == 0:
        raise DatasetError(f"no rows in {labels_csv}")
    return count


def make_subset(src_root, out_root, classes=SUBSET_CLASSES, per_class: int = 900, seed: int = 0,
                link: bool = True) -> int:
    """Copy (or symlink) a seeded sample of ``per_class`` images for each listed class."""
    out_root = Path(out_root)
    by_class: dict[int, list[Path]] = {}
    for path, label in scan_dataset(src_root):
        by_class.setdefault(label, []).append(path)
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, 2])))
    count = 0
    for label in classes:
        paths = by_class.get(label, [])
        if len(paths) < per_class:
            raise DatasetError(f"class {label} has {len(paths)} images, need {per_class}")
        for i in sorted(rng.choice(len(paths), per_class, replace=False)):
            _place(paths[i], out_root / str(label) / paths[i].name, link)
            count += 1
    return count
