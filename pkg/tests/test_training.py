import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import max_rel_error, numeric_grad, scalar_adam
from tsrnet.dataset import load_dataset, stratified_split
from tsrnet.layers import softmax
from tsrnet.network import CANONICAL_SPEC
from tsrnet.training import (AdamState, RunRNG, TrainConfig, adam_step, cross_entropy_loss, early_stopping_check,
                             fit, reduce_lr_on_plateau, softmax_xent_gradient)


def test_train_config_defaults_and_validation():
    cfg = TrainConfig()
    assert (cfg.learning_rate, cfg.batch_size, cfg.max_epochs, cfg.early_stop_patience) == (0.001, 32, 100, 10)
    for bad in ({"lr_factor": 1.0}, {"min_lr": 0}, {"val_fraction": 0}, {"batch_size": 0}, {"seed": -1}):
        with pytest.raises(ValueError):
            TrainConfig(**bad)


# -- loss --------------------------------------------------------------------------

def test_cross_entropy_examples():
    onehot = np.eye(43)[5]
    assert cross_entropy_loss(onehot, onehot) == 0.0
    assert cross_entropy_loss(np.full(43, 1 / 43), onehot) == pytest.approx(math.log(43), rel=1e-12)
    assert math.log(43) == pytest.approx(3.7612, abs=1e-4)
    assert cross_entropy_loss(np.array([0.8, 0.2]), np.array([1.0, 0.0])) == pytest.approx(0.2231, abs=1e-4)
    # clamp keeps a confident wrong prediction finite
    assert cross_entropy_loss(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == pytest.approx(-math.log(1e-12))
    with pytest.raises(ValueError):
        cross_entropy_loss(np.array([0.5, 0.5]), np.array([0.5, 0.5]))


@given(st.lists(st.floats(-10, 10), min_size=2, max_size=43), st.data())
def test_cross_entropy_nonnegative_and_gradient_sums_to_zero(z, data):
    probs = softmax(np.array(z))
    target = np.eye(len(z))[data.draw(st.integers(0, len(z) - 1))]
    assert cross_entropy_loss(probs, target) >= 0
    assert abs(softmax_xent_gradient(probs, target).sum()) <= 1e-12


def test_softmax_xent_gradient_examples():
    onehot = np.eye(43)[0]
    assert np.all(softmax_xent_gradient(onehot, onehot) == 0)
    g = softmax_xent_gradient(np.full(43, 1 / 43), onehot)
    assert g[0] == pytest.approx(1 / 43 - 1) and np.allclose(g[1:], 1 / 43)


def test_softmax_xent_gradient_finite_differences(f64):
    rng = np.random.default_rng(0)
    z = rng.normal(size=43)
    target = np.eye(43)[7]
    num = numeric_grad(lambda: cross_entropy_loss(softmax(z), target), z)
    assert max_rel_error(softmax_xent_gradient(softmax(z), target), num) <= 1e-6


# -- adam ---------------------------------------------------------------------------

def test_adam_zero_gradient_keeps_params():
    p = [np.array([1.0, -2.0])]
    new, state = adam_step(p, [np.zeros(2)], AdamState.zeros_like(p), 0.001)
    assert np.array_equal(new[0], p[0]) and state.t == 1


def test_adam_first_step_magnitude():
    g = np.array([3.0, -0.02, 1e-3])
    p = [np.zeros(3)]
    new, _ = adam_step(p, [g], AdamState.zeros_like(p), 0.001)
    np.testing.assert_allclose(np.abs(new[0]), 0.001 * np.abs(g) / (np.abs(g) + 1e-8), rtol=1e-12)
    assert np.all(np.abs(np.abs(new[0]) - 0.001) <= 1e-6)


def test_adam_matches_scalar_reference(f64):
    expected = scalar_adam(1.0, lambda th: 2 * th, lr=0.1, steps=100)
    params = [np.array([1.0])]
    state = AdamState.zeros_like(params)
    for t in range(100):
        params, state = adam_step(params, [2 * params[0]], state, 0.1)
        assert abs(params[0][0] - expected[t]) <= 1e-12
    assert np.all(state.v[0] >= 0)


def test_adam_shape_mismatch():
    p = [np.zeros(2)]
    with pytest.raises(ValueError):
        adam_step(p, [np.zeros(3)], AdamState.zeros_like(p), 0.1)


# -- schedule / stopping --------------------------------------------------------------

def test_reduce_lr_on_plateau():
    cfg = TrainConfig()
    assert reduce_lr_on_plateau([0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7], 0.001, cfg) == 0.001
    assert reduce_lr_on_plateau([0.9] * 6, 0.001, cfg) == 0.0005
    assert reduce_lr_on_plateau([0.9] * 5, 0.001, cfg) == 0.001
    # the counter resets after a reduction
    assert reduce_lr_on_plateau([0.9] * 7, 0.0005, cfg) == 0.0005
    assert reduce_lr_on_plateau([0.9] * 11, 0.0005, cfg) == 0.00025
    assert reduce_lr_on_plateau([0.9] * 6, cfg.min_lr, cfg) == cfg.min_lr
    with pytest.raises(ValueError):
        reduce_lr_on_plateau([], 0.001, cfg)


def test_early_stopping():
    assert early_stopping_check([0.1, 0.2, 0.3], 10) == (False, 2)
    assert early_stopping_check([0.5, 0.9] + [0.9, 0.8] * 5, 10) == (True, 1)
    assert early_stopping_check([0.5, 0.9] + [0.9] * 9, 10)[0] is False
    assert early_stopping_check([0.5, 0.9] + [0.9] * 9 + [0.95], 10) == (False, 11)
    assert early_stopping_check([0.3] * 4, 10) == (False, 0)


# -- rng ------------------------------------------------------------------------------

def test_run_rng_state_roundtrip():
    a = RunRNG.from_seed(5)
    a.shuffle.permutation(10)
    a.dropout.random(7)
    state = a.state()
    b = RunRNG.from_seed(123)
    b.set_state(state)
    for name in ("init", "shuffle", "dropout"):
        assert np.array_equal(getattr(a, name).random(5), getattr(b, name).random(5))


def test_rng_streams_are_independent():
    a, b = RunRNG.from_seed(1), RunRNG.from_seed(1)
    a.dropout.random(1000)
    assert np.array_equal(a.shuffle.permutation(50), b.shuffle.permutation(50))


# -- fit ------------------------------------------------------------------------------

@pytest.fixture(scope="module")
def toy_split(toy_root):
    return stratified_split(load_dataset(toy_root), 0.2, 0.2, seed=0)


def test_fit_zero_epochs_returns_initial_params(toy_split):
    from tsrnet.network import init_params

    result = fit(toy_split, TrainConfig(max_epochs=0, seed=3))
    initial = init_params(CANONICAL_SPEC, RunRNG.from_seed(3).init)
    assert result.curves == []
    assert all(np.array_equal(a, b) for a, b in zip(result.params, initial))


def test_fit_requires_train_and_validation(toy_split):
    from tsrnet.dataset import DatasetSplit

    with pytest.raises(ValueError):
        fit(DatasetSplit(toy_split.train, [], toy_split.test), TrainConfig(max_epochs=1))


def test_fit_is_deterministic(toy_split):
    cfg = TrainConfig(max_epochs=3, seed=11)
    a, b = fit(toy_split, cfg), fit(toy_split, cfg)
    assert a.curves == b.curves
    assert all(np.array_equal(x, y) for x, y in zip(a.params, b.params))
    assert all(np.array_equal(x, y) for x, y in zip(a.final_params, b.final_params))


def test_fit_overfits_toy_set(toy_split):
    """Toy 5-class set: reaches >= 99% train accuracy; loss trends down over 20-epoch windows."""
    result = fit(toy_split, TrainConfig(max_epochs=40, early_stop_patience=40, seed=0))
    assert max(c.train_acc for c in result.curves) >= 0.99
    losses = [c.train_loss for c in result.curves]
    for start in range(len(losses) - 20 + 1):
        window = losses[start:start + 20]
        assert np.mean(window[10:]) <= np.mean(window[:10])
    # returned parameters are the best-validation epoch's
    assert result.checkpoint.best_value == max(c.val_acc for c in result.curves)
    assert result.checkpoint.epoch == result.best_epoch
