import numpy as np
import pytest

from oracles import max_rel_error, numeric_grad
from tsrnet.network import (CANONICAL_SPEC, Conv, Dense, Dropout, Flatten, MaxPool, NetworkSpec, ReLU, Softmax,
                            init_params, network_backward, network_forward, zero_params)
from tsrnet.tensor import ShapeError, get_dtype

# same layer pattern as the canonical network, sized for a 6x6x3 input
REDUCED_SPEC = NetworkSpec(
    input_shape=(6, 6, 3),
    layers=(
        Conv(3, 2), ReLU(),
        Conv(3, 2), ReLU(),
        MaxPool(2, 1), Dropout(0.25),
        Conv(4, 2), ReLU(),
        Conv(4, 1), ReLU(),
        MaxPool(2, 1), Dropout(0.25),
        Flatten(),
        Dense(6), ReLU(), Dropout(0.5),
        Dense(5), Softmax(),
    ),
)


def test_canonical_shape_chain():
    chain = CANONICAL_SPEC.shape_chain()
    spatial = [s for layer, s in zip(CANONICAL_SPEC.layers, chain[1:]) if isinstance(layer, (Conv, MaxPool))]
    assert spatial == [[26, 26, 32], [22, 22, 32], [11, 11, 32], [9, 9, 64], [7, 7, 64], [3, 3, 64]]
    flat = [s for layer, s in zip(CANONICAL_SPEC.layers, chain[1:]) if isinstance(layer, Flatten)]
    assert flat == [[576]]
    assert chain[-1] == [43]


def test_canonical_param_count():
    per_layer = [int(np.prod(s)) for s in CANONICAL_SPEC.param_shapes()]
    grouped = [per_layer[i] + per_layer[i + 1] for i in range(0, len(per_layer), 2)]
    assert grouped == [2432, 25632, 18496, 36928, 147712, 11051]
    assert CANONICAL_SPEC.param_count() == 242251


def test_spec_must_end_in_softmax():
    with pytest.raises(ValueError):
        NetworkSpec((4, 4, 1), (Flatten(), Dense(3)))


def test_init_params_bounds_and_determinism():
    params = init_params(CANONICAL_SPEC, np.random.default_rng(0))
    again = init_params(CANONICAL_SPEC, np.random.default_rng(0))
    assert all(np.array_equal(a, b) for a, b in zip(params, again))
    assert all(p.dtype == get_dtype() for p in params)
    # conv1: He bound sqrt(6 / 75); output layer: Glorot bound sqrt(6 / (256 + 43))
    assert np.abs(params[0]).max() <= np.sqrt(6 / 75)
    assert np.abs(params[-2]).max() <= np.sqrt(6 / 299)
    assert np.abs(params[-2]).max() > 0.9 * np.sqrt(6 / 299)
    assert all(np.all(b == 0) for b in params[1::2])


def test_zero_network_is_uniform():
    probs, _ = network_forward(CANONICAL_SPEC, zero_params(CANONICAL_SPEC), np.zeros((30, 30, 3), np.float32))
    np.testing.assert_allclose(probs, 1 / 43, rtol=1e-6)


def test_forward_sums_to_one_and_flatten_width():
    rng = np.random.default_rng(1)
    params = init_params(CANONICAL_SPEC, rng)
    x = rng.uniform(0, 1, (2, 30, 30, 3)).astype(np.float32)
    probs, cache = network_forward(CANONICAL_SPEC, params, x, "train", rng)
    assert probs.shape == (2, 43)
    np.testing.assert_allclose(probs.sum(axis=1), 1, rtol=1e-5)
    dense_input = cache.inputs[CANONICAL_SPEC.layers.index(Dense(256))]
    assert dense_input.shape == (2, 576)


def test_forward_rejects_wrong_input_shape():
    with pytest.raises(ShapeError):
        network_forward(CANONICAL_SPEC, zero_params(CANONICAL_SPEC), np.zeros((32, 32, 3)))


def test_backward_needs_train_cache():
    _, cache = network_forward(REDUCED_SPEC, zero_params(REDUCED_SPEC), np.zeros((6, 6, 3)), "eval")
    with pytest.raises(ValueError):
        network_backward(cache, zero_params(REDUCED_SPEC), np.zeros(5))


def test_zero_grad_logits_give_zero_gradients():
    rng = np.random.default_rng(2)
    params = init_params(REDUCED_SPEC, rng)
    _, cache = network_forward(REDUCED_SPEC, params, rng.uniform(size=(6, 6, 3)), "train", rng)
    grads = network_backward(cache, params, np.zeros(5))
    assert all(np.all(g == 0) for g in grads)


def test_backward_is_repeatable():
    rng = np.random.default_rng(3)
    params = init_params(REDUCED_SPEC, rng)
    _, cache = network_forward(REDUCED_SPEC, params, rng.uniform(size=(2, 6, 6, 3)), "train", rng)
    g = rng.normal(size=(2, 5))
    a, b = network_backward(cache, params, g), network_backward(cache, params, g)
    assert all(np.array_equal(x, y) for x, y in zip(a, b))


def whole_network_gradient_error(seed: int = 4) -> float:
    """Max relative error of every parameter gradient of the reduced clone vs finite differences."""
    rng = np.random.default_rng(seed)
    params = [p + rng.uniform(0.05, 0.1, p.shape) * (p.ndim == 1) for p in init_params(REDUCED_SPEC, rng)]
    x = rng.uniform(0, 1, (2, 6, 6, 3))
    target = np.eye(5)[[1, 3]]

    def loss():
        probs, _ = network_forward(REDUCED_SPEC, params, x, "train", np.random.default_rng(99))
        return float(-np.sum(target * np.log(probs)))

    probs, cache = network_forward(REDUCED_SPEC, params, x, "train", np.random.default_rng(99))
    grads = network_backward(cache, params, probs - target)
    return max(max_rel_error(g, numeric_grad(loss, p)) for g, p in zip(grads, params))


def test_whole_network_gradient_check(f64):
    assert whole_network_gradient_error() <= 1e-5
