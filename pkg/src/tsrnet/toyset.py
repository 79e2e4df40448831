"""Procedural sign-like images for smoke tests and overfit checks.

Each class is a distinct colored shape (disc, triangle, square, diamond,
bar, ...) on a noisy background; image sizes vary so the resize path is
exercised.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .images import encode_ppm

_COLORS = [(220, 30, 30), (30, 60, 210), (240, 200, 20), (30, 170, 60), (240, 240, 240),
           (150, 40, 170), (250, 120, 10), (20, 20, 20), (0, 190, 200), (120, 70, 20)]


def _shape_mask(kind: int, size: int, rng: np.random.Generator) -> np.ndarray:
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    c = size / 2 + rng.uniform(-size * 0.06, size * 0.06, 2)
    r = size * rng.uniform(0.28, 0.36)
    dy, dx = yy - c[0], xx - c[1]
    kind %= 5
    if kind == 0:
        return dx ** 2 + dy ** 2 <= r ** 2
    if kind == 1:
        return (dy <= r * 0.7) & (dy >= -r) & (np.abs(dx) <= (dy + r) * 0.6)
    if kind == 2:
        return (np.abs(dx) <= r * 0.85) & (np.abs(dy) <= r * 0.85)
    if kind == 3:
        return np.abs(dx) + np.abs(dy) <= r
    return (np.abs(dy) <= r * 0.3) & (np.abs(dx) <= r)


def make_image(label: int, rng: np.random.Generator) -> np.ndarray:
    size = int(rng.integers(32, 49))
    background = rng.integers(60, 140, 3)
    img = np.empty((size, size, 3), dtype=np.float64)
    img[:] = background
    mask = _shape_mask(label, size, rng)
    img[mask] = _COLORS[label % len(_COLORS)]
    img += rng.normal(0, 12, img.shape)
    return np.clip(np.rint(img), 0, 255).astype(np.uint8)


def write_toy_dataset(root, n_classes: int = 5, per_class: int = 20, seed: int = 0) -> Path:
    """Write ``root/<class>/<k>.ppm`` and a ``classes.csv``; returns ``root``."""
    root = Path(root)
    rng = np.random.default_rng(seed)
    names = []
    for label in range(n_classes):
        d = root / str(label)
        d.mkdir(parents=True, exist_ok=True)
        for k in range(per_class):
            (d / f"{k:05d}.ppm").write_bytes(encode_ppm(make_image(label, rng)))
        names.append(f"{label},toy_shape_{label}")
    (root / "classes.csv").write_text("\n".join(names) + "\n")
    return root
