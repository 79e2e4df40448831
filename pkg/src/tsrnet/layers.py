"""Forward and backward passes for the layer types of the classifier.

Image tensors are laid out (height, width, channel). Every op accepts a
single example or a batch with a leading example axis; the output keeps the
same form as the input. Kernels are stored (out_channel, in_channel, kh, kw).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .tensor import ShapeError, get_dtype


@dataclass
class ConvLayer:
    kernels: np.ndarray  # [out_c, in_c, f, f]
    bias: np.ndarray  # [out_c]

    def __post_init__(self):
        if self.kernels.ndim != 4 or self.kernels.shape[2] != self.kernels.shape[3]:
            raise ShapeError(f"kernels must be [out_c, in_c, f, f], got {list(self.kernels.shape)}")
        if self.bias.shape != (self.kernels.shape[0],):
            raise ShapeError(f"bias shape {list(self.bias.shape)} does not match {self.kernels.shape[0]} kernels")

    @property
    def f(self) -> int:
        return self.kernels.shape[2]


@dataclass(frozen=True)
class PoolSpec:
    f: int
    s: int
    p: int = 0

    def __post_init__(self):
        if self.f < 1 or self.s < 1 or self.p < 0:
            raise ValueError(f"invalid pool spec {self}")
        if self.p >= self.f:
            raise ValueError(f"padding {self.p} must be smaller than window {self.f}")


@dataclass(frozen=True)
class DropoutLayer:
    rate: float

    def __post_init__(self):
        if not 0.0 <= self.rate < 1.0:
            raise ValueError(f"dropout rate must be in [0, 1), got {self.rate}")


@dataclass
class DenseLayer:
    weights: np.ndarray  # [out, in]
    bias: np.ndarray  # [out]

    def __post_init__(self):
        if self.weights.ndim != 2:
            raise ShapeError(f"dense weights must be rank-2, got {list(self.weights.shape)}")
        if self.bias.shape != (self.weights.shape[0],):
            raise ShapeError(f"bias shape {list(self.bias.shape)} does not match {self.weights.shape[0]} units")


def shape_after(input_shape, f: int, s: int, p: int, out_c: int) -> list[int]:
    """Output [H', W', out_c] of a window op with size f, stride s, padding p."""
    n_h, n_w = int(input_shape[0]), int(input_shape[1])
    if f < 1 or s < 1 or p < 0:
        raise ValueError(f"invalid window parameters f={f}, s={s}, p={p}")
    if n_h + 2 * p < f or n_w + 2 * p < f:
        raise ShapeError(f"window {f} larger than padded input {n_h}x{n_w} (p={p})")
    return [(n_h + 2 * p - f) // s + 1, (n_w + 2 * p - f) // s + 1, int(out_c)]


def _batched(x: np.ndarray, rank: int) -> tuple[np.ndarray, bool]:
    if x.ndim == rank:
        return x[None], True
    if x.ndim == rank + 1:
        return x, False
    raise ShapeError(f"expected rank {rank} (or batched rank {rank + 1}), got shape {list(x.shape)}")


def _unbatch(x: np.ndarray, single: bool) -> np.ndarray:
    return x[0] if single else x


# -- convolution ------------------------------------------------------------

def _im2col(x: np.ndarray, f: int) -> np.ndarray:
    # [N, H, W, C] -> [N, H', W', C*f*f], column order (c, i, j) matches kernel layout
    windows = sliding_window_view(x, (f, f), axis=(1, 2))
    n, oh, ow = windows.shape[:3]
    return windows.reshape(n, oh, ow, -1)


def conv2d_forward(x: np.ndarray, layer: ConvLayer) -> np.ndarray:
    xb, single = _batched(x, 3)
    out_c, in_c, f, _ = layer.kernels.shape
    if xb.shape[3] != in_c:
        raise ShapeError(f"input has {xb.shape[3]} channels, layer expects {in_c}")
    shape_after(xb.shape[1:], f, 1, 0, out_c)
    cols = _im2col(xb, f)
    out = cols @ layer.kernels.reshape(out_c, -1).T + layer.bias
    return _unbatch(out, single)


def conv2d_backward(x: np.ndarray, layer: ConvLayer, upstream: np.ndarray) -> dict[str, np.ndarray]:
    xb, single = _batched(x, 3)
    ub, _ = _batched(upstream, 3)
    out_c, in_c, f, _ = layer.kernels.shape
    expected = [xb.shape[0], *shape_after(xb.shape[1:], f, 1, 0, out_c)]
    if list(ub.shape) != expected:
        raise ShapeError(f"upstream shape {list(ub.shape)} does not match conv output {expected}")
    n, oh, ow, _ = ub.shape
    cols = _im2col(xb, f).reshape(n * oh * ow, -1)
    up2 = ub.reshape(n * oh * ow, out_c)
    grad_kernels = (up2.T @ cols).reshape(layer.kernels.shape)
    grad_bias = up2.sum(axis=0)
    dcols = (up2 @ layer.kernels.reshape(out_c, -1)).reshape(n, oh, ow, in_c, f, f)
    grad_input = np.zeros_like(xb)
    for i in range(f):
        for j in range(f):
            grad_input[:, i:i + oh, j:j + ow, :] += dcols[..., i, j]
    return {
        "grad_input": _unbatch(grad_input, single),
        "grad_kernels": grad_kernels,
        "grad_bias": grad_bias,
    }


# -- max pooling --------------------------------------------------------------

@dataclass
class PoolIndexMap:
    """Flat source index (into each example's [H, W, C] input) of every pooled maximum."""

    indices: np.ndarray  # [N, H', W', C], int64
    input_shape: tuple[int, ...]  # [N, H, W, C]
    single: bool


def maxpool_forward(x: np.ndarray, spec: PoolSpec) -> tuple[np.ndarray, PoolIndexMap]:
    xb, single = _batched(x, 3)
    n, h, w, c = xb.shape
    oh, ow, _ = shape_after((h, w), spec.f, spec.s, spec.p, c)
    f, s, p = spec.f, spec.s, spec.p
    if p:
        xb = np.pad(xb, ((0, 0), (p, p), (p, p), (0, 0)), constant_values=-np.inf)
    windows = sliding_window_view(xb, (f, f), axis=(1, 2))[:, ::s, ::s][:, :oh, :ow]
    flat = windows.reshape(n, oh, ow, c, f * f)
    # argmax picks the first maximum in row-major window order == lowest source index
    local = np.argmax(flat, axis=-1)
    out = np.take_along_axis(flat, local[..., None], axis=-1)[..., 0]
    rows = np.arange(oh)[:, None, None] * s - p + local // f
    cols = np.arange(ow)[None, :, None] * s - p + local % f
    chans = np.arange(c)[None, None, :]
    indices = (rows * w + cols) * c + chans
    return _unbatch(out, single), PoolIndexMap(indices.astype(np.int64), (n, h, w, c), single)


def maxpool_backward(index_map: PoolIndexMap | None, upstream: np.ndarray) -> np.ndarray:
    if index_map is None:
        raise ValueError("maxpool_backward needs the index map from the matching forward call")
    ub, _ = _batched(upstream, 3)
    if ub.shape != index_map.indices.shape:
        raise ShapeError(
            f"upstream shape {list(ub.shape)} does not match index map {list(index_map.indices.shape)}"
        )
    n, h, w, c = index_map.input_shape
    per_example = h * w * c
    offsets = (np.arange(n) * per_example)[:, None, None, None]
    flat_index = (index_map.indices + offsets).ravel()
    grad = np.bincount(flat_index, weights=ub.ravel(), minlength=n * per_example)
    grad = grad.astype(ub.dtype, copy=False).reshape(n, h, w, c)
    return _unbatch(grad, index_map.single)


# -- activations ---------------------------------------------------------------

def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0)


def relu_backward(x: np.ndarray, upstream: np.ndarray) -> np.ndarray:
    # subgradient at exactly zero is 0
    return np.where(x > 0, upstream, 0).astype(upstream.dtype, copy=False)


def softmax(z: np.ndarray) -> np.ndarray:
    if z.shape[-1] == 0:
        raise ShapeError("softmax of an empty tensor")
    e = np.exp(z - z.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


# -- dropout ---------------------------------------------------------------------

def dropout_forward(
    x: np.ndarray, layer: DropoutLayer, mode: str, rng: np.random.Generator | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Inverted dropout. Returns (output, mask); the mask is 1 where a unit survived."""
    if mode == "eval" or layer.rate == 0.0:
        return x, np.ones_like(x)
    if mode != "train":
        raise ValueError(f"mode must be 'train' or 'eval', got {mode!r}")
    if rng is None:
        raise ValueError("train-mode dropout needs a seeded rng")
    keep = 1.0 - layer.rate
    mask = (rng.random(x.shape) < keep).astype(x.dtype)
    return x * mask / keep, mask


def dropout_backward(mask: np.ndarray, layer: DropoutLayer, upstream: np.ndarray) -> np.ndarray:
    return upstream * mask / (1.0 - layer.rate)


def dropout_response_moments(p, w, inputs) -> tuple[float, float]:
    """Mean and variance of R = sum_i d_i w_i I_i with independent d_i ~ Bernoulli(p_i)."""
    p = np.asarray(p, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    inputs = np.asarray(inputs, dtype=np.float64)
    if not (p.shape == w.shape == inputs.shape) or p.ndim != 1:
        raise ShapeError(f"length mismatch: p {list(p.shape)}, w {list(w.shape)}, I {list(inputs.shape)}")
    if np.any((p < 0) | (p > 1)):
        raise ValueError("retention probabilities must lie in [0, 1]")
    wi = w * inputs
    return float(np.dot(p, wi)), float(np.sum(p * (1 - p) * wi * wi))


def expected_dropout_response(p, w, inputs) -> float:
    """E_R = 1/2 (sum p_i w_i I_i)^2 + sum p_i (1 - p_i) w_i^2 I_i^2.

    ``p`` holds per-unit retention probabilities. The half factor on the
    squared-mean term is deliberate, so this is not the plain second moment
    of the response.
    """
    mean, var = dropout_response_moments(p, w, inputs)
    return 0.5 * mean ** 2 + var


# -- dense -------------------------------------------------------------------------

def dense_forward(a: np.ndarray, layer: DenseLayer) -> np.ndarray:
    if a.shape[-1] != layer.weights.shape[1] or a.ndim not in (1, 2):
        raise ShapeError(f"input {list(a.shape)} does not match dense weights {list(layer.weights.shape)}")
    return a @ layer.weights.T + layer.bias


def dense_backward(a: np.ndarray, layer: DenseLayer, upstream: np.ndarray) -> dict[str, np.ndarray]:
    ab, single = _batched(a, 1)
    ub, _ = _batched(upstream, 1)
    out_n, in_n = layer.weights.shape
    if ab.shape[1] != in_n or ub.shape != (ab.shape[0], out_n):
        raise ShapeError(
            f"dense backward shapes inconsistent: a {list(a.shape)}, upstream {list(upstream.shape)}, "
            f"weights {list(layer.weights.shape)}"
        )
    return {
        "grad_input": _unbatch(ub @ layer.weights, single),
        "grad_w": ub.T @ ab,
        "grad_b": ub.sum(axis=0),
    }


def he_uniform(rng: np.random.Generator, shape, fan_in: int) -> np.ndarray:
    bound = np.sqrt(6.0 / fan_in)
    return rng.uniform(-bound, bound, size=shape).astype(get_dtype())


def glorot_uniform(rng: np.random.Generator, shape, fan_in: int, fan_out: int) -> np.ndarray:
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=shape).astype(get_dtype())
