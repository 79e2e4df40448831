"""Layer-sequence description of the classifier and whole-network passes."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import layers as L
from .tensor import ShapeError, get_dtype

N_CLASSES = 43


@dataclass(frozen=True)
class Conv:
    out_c: int
    f: int


@dataclass(frozen=True)
class ReLU:
    pass


@dataclass(frozen=True)
class MaxPool:
    f: int
    s: int
    p: int = 0


@dataclass(frozen=True)
class Dropout:
    rate: float


@dataclass(frozen=True)
class Flatten:
    pass


@dataclass(frozen=True)
class Dense:
    units: int


@dataclass(frozen=True)
class Softmax:
    pass


Layer = Conv | ReLU | MaxPool | Dropout | Flatten | Dense | Softmax


@dataclass(frozen=True)
class NetworkSpec:
    input_shape: tuple[int, int, int]
    layers: tuple[Layer, ...]

    def __post_init__(self):
        shapes = self.shape_chain()
        if not isinstance(self.layers[-1], Softmax):
            raise ValueError("network must end in Softmax")
        if len(shapes[-1]) != 1:
            raise ShapeError("network output must be a vector")

    @property
    def n_classes(self) -> int:
        return self.shape_chain()[-1][0]

    def shape_chain(self) -> list[list[int]]:
        """Shape after every layer, starting with the input shape."""
        shape = list(self.input_shape)
        chain = [shape]
        for layer in self.layers:
            if isinstance(layer, Conv):
                shape = L.shape_after(shape, layer.f, 1, 0, layer.out_c)
            elif isinstance(layer, MaxPool):
                shape = L.shape_after(shape, layer.f, layer.s, layer.p, shape[2])
            elif isinstance(layer, Flatten):
                shape = [int(np.prod(shape))]
            elif isinstance(layer, Dense):
                if len(shape) != 1:
                    raise ShapeError(f"Dense needs a flat input, got {shape}")
                shape = [layer.units]
            chain.append(shape)
        return chain

    def param_shapes(self) -> list[tuple[int, ...]]:
        """Parameter tensor shapes in declaration order (weights then bias per layer)."""
        shapes = []
        for layer, in_shape in zip(self.layers, self.shape_chain()):
            if isinstance(layer, Conv):
                shapes += [(layer.out_c, in_shape[2], layer.f, layer.f), (layer.out_c,)]
            elif isinstance(layer, Dense):
                shapes += [(layer.units, in_shape[0]), (layer.units,)]
        return shapes

    def param_count(self) -> int:
        return sum(int(np.prod(s)) for s in self.param_shapes())


CANONICAL_SPEC = NetworkSpec(
    input_shape=(30, 30, 3),
    layers=(
        Conv(32, 5), ReLU(),
        Conv(32, 5), ReLU(),
        MaxPool(2, 2), Dropout(0.25),
        Conv(64, 3), ReLU(),
        Conv(64, 3), ReLU(),
        MaxPool(2, 2), Dropout(0.25),
        Flatten(),
        Dense(256), ReLU(), Dropout(0.5),
        Dense(N_CLASSES), Softmax(),
    ),
)


def init_params(spec: NetworkSpec, rng: np.random.Generator) -> list[np.ndarray]:
    """He-uniform for conv and hidden dense layers, Glorot-uniform for the output layer, zero biases."""
    params = []
    dense_idx = [i for i, layer in enumerate(spec.layers) if isinstance(layer, Dense)]
    last_dense = dense_idx[-1] if dense_idx else -1
    for i, (layer, in_shape) in enumerate(zip(spec.layers, spec.shape_chain())):
        if isinstance(layer, Conv):
            fan_in = in_shape[2] * layer.f * layer.f
            params.append(L.he_uniform(rng, (layer.out_c, in_shape[2], layer.f, layer.f), fan_in))
            params.append(np.zeros(layer.out_c, dtype=get_dtype()))
        elif isinstance(layer, Dense):
            if i == last_dense:
                w = L.glorot_uniform(rng, (layer.units, in_shape[0]), in_shape[0], layer.units)
            else:
                w = L.he_uniform(rng, (layer.units, in_shape[0]), in_shape[0])
            params.append(w)
            params.append(np.zeros(layer.units, dtype=get_dtype()))
    return params


def zero_params(spec: NetworkSpec) -> list[np.ndarray]:
    return [np.zeros(s, dtype=get_dtype()) for s in spec.param_shapes()]


@dataclass
class ForwardCache:
    spec: NetworkSpec
    mode: str
    batch: int
    inputs: list = field(default_factory=list)  # per-layer input
    extras: list = field(default_factory=list)  # per-layer mask / index map


def network_forward(
    spec: NetworkSpec,
    params: list[np.ndarray],
    x: np.ndarray,
    mode: str = "eval",
    rng: np.random.Generator | None = None,
    return_logits: bool = False,
):
    """Run the layer sequence on one image [H,W,C] or a batch [N,H,W,C].

    Returns ``(class_probs, cache)``; with ``return_logits`` the pre-softmax
    scores are returned as a third element.
    """
    if mode not in ("train", "eval"):
        raise ValueError(f"mode must be 'train' or 'eval', got {mode!r}")
    single = x.ndim == 3
    xb = x[None] if single else x
    if xb.ndim != 4 or tuple(xb.shape[1:]) != tuple(spec.input_shape):
        raise ShapeError(f"input shape {list(x.shape)} does not match network input {list(spec.input_shape)}")
    cache = ForwardCache(spec, mode, xb.shape[0])
    h = xb
    logits = None
    k = 0
    for layer in spec.layers:
        cache.inputs.append(h)
        extra = None
        if isinstance(layer, Conv):
            h = L.conv2d_forward(h, L.ConvLayer(params[k], params[k + 1]))
            k += 2
        elif isinstance(layer, ReLU):
            h = L.relu(h)
        elif isinstance(layer, MaxPool):
            h, extra = L.maxpool_forward(h, L.PoolSpec(layer.f, layer.s, layer.p))
        elif isinstance(layer, Dropout):
            h, extra = L.dropout_forward(h, L.DropoutLayer(layer.rate), mode, rng)
        elif isinstance(layer, Flatten):
            h = h.reshape(h.shape[0], -1)
        elif isinstance(layer, Dense):
            h = L.dense_forward(h, L.DenseLayer(params[k], params[k + 1]))
            k += 2
        elif isinstance(layer, Softmax):
            logits = h
            h = L.softmax(h)
        cache.extras.append(extra)
    probs = h[0] if single else h
    if return_logits:
        return probs, cache, (logits[0] if single else logits)
    return probs, cache


def network_backward(cache: ForwardCache, params: list[np.ndarray], grad_logits: np.ndarray) -> list[np.ndarray]:
    """Gradients of every parameter tensor given d(loss)/d(logits).

    The Softmax layer is skipped: the caller supplies the gradient with
    respect to its input, as produced by the combined softmax/cross-entropy
    adjoint.
    """
    if cache.mode != "train":
        raise ValueError("network_backward needs a cache from a train-mode forward pass")
    g = grad_logits[None] if grad_logits.ndim == 1 else grad_logits
    if g.shape != (cache.batch, cache.spec.n_classes):
        raise ShapeError(f"grad_logits shape {list(grad_logits.shape)} does not match batch output")
    grads: list[np.ndarray | None] = [None] * len(params)
    k = len(params)
    for layer, x, extra in zip(reversed(cache.spec.layers), reversed(cache.inputs), reversed(cache.extras)):
        if isinstance(layer, Softmax):
            continue
        if isinstance(layer, Dense):
            k -= 2
            out = L.dense_backward(x, L.DenseLayer(params[k], params[k + 1]), g)
            grads[k], grads[k + 1] = out["grad_w"], out["grad_b"]
            g = out["grad_input"]
        elif isinstance(layer, Conv):
            k -= 2
            out = L.conv2d_backward(x, L.ConvLayer(params[k], params[k + 1]), g)
            grads[k], grads[k + 1] = out["grad_kernels"], out["grad_bias"]
            g = out["grad_input"]
        elif isinstance(layer, ReLU):
            g = L.relu_backward(x, g)
        elif isinstance(layer, MaxPool):
            g = L.maxpool_backward(extra, g)
        elif isinstance(layer, Dropout):
            g = L.dropout_backward(extra, L.DropoutLayer(layer.rate), g)
        elif isinstance(layer, Flatten):
            g = g.reshape(x.shape)
    return grads


def predict(spec: NetworkSpec, params: list[np.ndarray], images: np.ndarray, chunk: int = 64) -> np.ndarray:
    """Eval-mode class probabilities for a stack of images, computed in chunks."""
    out = [network_forward(spec, params, images[i:i + chunk], "eval")[0] for i in range(0, len(images), chunk)]
    return np.concatenate(out) if out else np.zeros((0, spec.n_classes), dtype=get_dtype())
