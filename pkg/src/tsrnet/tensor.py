"""Dense row-major arrays and the scalar-precision switch.

Tensors are plain ``numpy.ndarray`` objects. This module pins the scalar
type (float32 for training and inference, float64 for gradient checks) and
provides the small set of validated array operations the rest of the
package is written against.
"""
from __future__ import annotations

import contextlib
import math
from typing import Iterator, Sequence

import numpy as np

_PRECISIONS = {"float32": np.float32, "float64": np.float64}
_dtype = np.float32


class ShapeError(ValueError):
    """Raised when tensor shapes are invalid or incompatible."""


def get_dtype() -> type:
    return _dtype


def set_precision(name: str) -> None:
    """Select the global scalar type: ``"float32"`` or ``"float64"``."""
    global _dtype
    try:
        _dtype = _PRECISIONS[name]
    except KeyError:
        raise ValueError(f"unknown precision {name!r}; expected one of {sorted(_PRECISIONS)}")


@contextlib.contextmanager
def precision(name: str) -> Iterator[None]:
    """Temporarily switch precision, e.g. ``with precision("float64"): ...``."""
    global _dtype
    previous = _dtype
    set_precision(name)
    try:
        yield
    finally:
        _dtype = previous


def as_tensor(values) -> np.ndarray:
    """Copy ``values`` into a tensor of the active precision."""
    return np.array(values, dtype=_dtype)


def check_shape(shape: Sequence[int]) -> tuple[int, ...]:
    dims = tuple(int(d) for d in shape)
    if len(dims) == 0:
        raise ShapeError("shape must have rank >= 1")
    if any(d < 1 for d in dims):
        raise ShapeError(f"every extent must be >= 1, got {list(dims)}")
    count = math.prod(dims)
    if count >= np.iinfo(np.intp).max:
        raise ShapeError(f"element count of {list(dims)} overflows")
    return dims


def tensor_new(shape: Sequence[int], fill: float = 0.0) -> np.ndarray:
    return np.full(check_shape(shape), fill, dtype=_dtype)


def elementwise(a: np.ndarray, b: np.ndarray, op: str) -> np.ndarray:
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch: {list(a.shape)} vs {list(b.shape)}")
    if op == "add":
        return np.add(a, b)
    if op == "sub":
        return np.subtract(a, b)
    if op == "mul":
        return np.multiply(a, b)
    raise ValueError(f"unknown elementwise op {op!r}")


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError(f"matmul needs rank-2 operands, got {list(a.shape)} and {list(b.shape)}")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"inner dimensions differ: {list(a.shape)} @ {list(b.shape)}")
    return a @ b


def reshape(t: np.ndarray, new_shape: Sequence[int]) -> np.ndarray:
    dims = check_shape(new_shape)
    if math.prod(dims) != t.size:
        raise ShapeError(f"cannot reshape {list(t.shape)} ({t.size} values) to {list(dims)}")
    return np.ascontiguousarray(t).reshape(dims)


def argmax(t: np.ndarray) -> int:
    """Index of the largest element; ties go to the lowest index."""
    if t.ndim != 1:
        raise ShapeError(f"argmax expects a rank-1 tensor, got {list(t.shape)}")
    if t.size == 0:
        raise ShapeError("argmax of an empty tensor")
    # np.argmax returns the first occurrence of the maximum
    return int(np.argmax(t))
