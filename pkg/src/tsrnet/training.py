"""Loss, Adam, learning-rate schedule, early stopping and the epoch loop."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .metrics import CurvePoint
from .network import CANONICAL_SPEC, NetworkSpec, init_params, network_backward, network_forward, predict
from .tensor import ShapeError, get_dtype

log = logging.getLogger(__name__)

LOG_CLAMP = 1e-12


@dataclass
class TrainConfig:
    learning_rate: float = 0.001
    batch_size: int = 32
    max_epochs: int = 100
    early_stop_patience: int = 10
    lr_factor: float = 0.5
    lr_patience: int = 5
    min_lr: float = 1e-5
    seed: int = 0
    val_fraction: float = 0.2
    test_fraction: float = 0.2
    monitor: str = "val_acc"

    def __post_init__(self):
        if not 0 < self.lr_factor < 1:
            raise ValueError(f"lr_factor must be in (0, 1), got {self.lr_factor}")
        if self.min_lr <= 0:
            raise ValueError(f"min_lr must be positive, got {self.min_lr}")
        if not 0 < self.val_fraction < 1:
            raise ValueError(f"val_fraction must be in (0, 1), got {self.val_fraction}")
        if not 0 <= self.test_fraction < 1:
            raise ValueError(f"test_fraction must be in [0, 1), got {self.test_fraction}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.max_epochs < 0 or self.early_stop_patience < 1 or self.lr_patience < 1:
            raise ValueError("max_epochs must be >= 0 and patience values >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        if self.monitor != "val_acc":
            raise ValueError("only val_acc can be monitored")


# -- loss --------------------------------------------------------------------

def _check_one_hot(target: np.ndarray) -> None:
    if not (np.all((target == 0) | (target == 1)) and np.all(target.sum(axis=-1) == 1)):
        raise ValueError("target must be one-hot")


def cross_entropy_loss(probs: np.ndarray, target_one_hot: np.ndarray) -> float:
    if probs.shape != target_one_hot.shape:
        raise ShapeError(f"probs {list(probs.shape)} vs target {list(target_one_hot.shape)}")
    _check_one_hot(target_one_hot)
    loss = -np.sum(target_one_hot * np.log(np.maximum(probs, LOG_CLAMP)), axis=-1)
    return float(np.mean(loss)) + 0.0  # mean over a batch; +0.0 turns -0.0 into 0.0


def softmax_xent_gradient(probs: np.ndarray, target_one_hot: np.ndarray) -> np.ndarray:
    """Gradient of cross-entropy(softmax(z)) with respect to the logits z."""
    if probs.shape != target_one_hot.shape:
        raise ShapeError(f"probs {list(probs.shape)} vs target {list(target_one_hot.shape)}")
    return probs - target_one_hot


# -- optimizer -------------------------------------------------------------------

@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros_like(cls, params: list[np.ndarray]) -> "AdamState":
        return cls([np.zeros_like(p) for p in params], [np.zeros_like(p) for p in params])

    def copy(self) -> "AdamState":
        return AdamState([m.copy() for m in self.m], [v.copy() for v in self.v], self.t,
                         self.beta1, self.beta2, self.eps)


def adam_step(
    params: list[np.ndarray], grads: list[np.ndarray], state: AdamState, lr: float
) -> tuple[list[np.ndarray], AdamState]:
    if len(params) != len(grads) or len(params) != len(state.m):
        raise ShapeError("params, grads and optimizer state must have the same number of tensors")
    t = state.t + 1
    b1, b2 = state.beta1, state.beta2
    bc1 = 1.0 - b1 ** t
    bc2 = 1.0 - b2 ** t
    new_params, new_m, new_v = [], [], []
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if not (p.shape == g.shape == m.shape == v.shape):
            raise ShapeError(f"shape mismatch: param {list(p.shape)}, grad {list(g.shape)}")
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * (g * g)
        m_hat = m / bc1
        v_hat = v / bc2
        new_params.append(p - lr * m_hat / (np.sqrt(v_hat) + state.eps))
        new_m.append(m)
        new_v.append(v)
    return new_params, AdamState(new_m, new_v, t, b1, b2, state.eps)


# -- schedule and stopping -------------------------------------------------------

def reduce_lr_on_plateau(history: list[float], current_lr: float, cfg: TrainConfig) -> float:
    """Learning rate to use after the last epoch in ``history``.

    The plateau counter is replayed from the history: it grows on every
    epoch that does not strictly beat the best value so far, and a
    reduction fires (resetting the counter) whenever it reaches
    ``cfg.lr_patience``. Only a reduction firing on the final epoch changes
    the rate.
    """
    if not history:
        raise ValueError("history must be non-empty")
    best = -math.inf
    wait = 0
    fired = False
    for value in history:
        fired = False
        if value > best:
            best = value
            wait = 0
        else:
            wait += 1
            if wait >= cfg.lr_patience:
                fired = True
                wait = 0
    if fired:
        return max(current_lr * cfg.lr_factor, cfg.min_lr)
    return current_lr


def early_stopping_check(history: list[float], patience: int) -> tuple[bool, int]:
    """Return (stop, best_epoch); best_epoch is the earliest index of the maximum."""
    if patience < 1:
        raise ValueError("patience must be >= 1")
    best_epoch = int(np.argmax(history)) if history else -1
    if len(history) <= patience:
        return False, best_epoch
    best_before = max(history[:-patience])
    stop = all(v <= best_before for v in history[-patience:])
    return stop, best_epoch


# -- seeded randomness -------------------------------------------------------------

_STREAMS = ("init", "shuffle", "dropout")


def _to_jsonable(obj):
    if isinstance(obj, dict):
        return {k: _to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, np.ndarray):
        return {"__uint64__": [int(x) for x in obj]}
    return obj


def _from_jsonable(obj):
    if isinstance(obj, dict):
        if set(obj) == {"__uint64__"}:
            return np.array(obj["__uint64__"], dtype=np.uint64)
        return {k: _from_jsonable(v) for k, v in obj.items()}
    return obj


@dataclass
class RunRNG:
    """Independent Philox streams for initialization, shuffling and dropout."""

    seed: int
    init: np.random.Generator
    shuffle: np.random.Generator
    dropout: np.random.Generator

    @classmethod
    def from_seed(cls, seed: int) -> "RunRNG":
        children = np.random.SeedSequence(seed).spawn(len(_STREAMS))
        gens = [np.random.Generator(np.random.Philox(c)) for c in children]
        return cls(seed, *gens)

    def state(self) -> dict:
        return {name: _to_jsonable(getattr(self, name).bit_generator.state) for name in _STREAMS}

    def set_state(self, state: dict) -> None:
        for name in _STREAMS:
            getattr(self, name).bit_generator.state = _from_jsonable(state[name])


# -- the epoch loop ----------------------------------------------------------------

@dataclass
class FitResult:
    params: list[np.ndarray]
    curves: list[CurvePoint]
    checkpoint: "Checkpoint"
    best_epoch: int
    stopped_early: bool = False
    final_params: list[np.ndarray] = field(default_factory=list)


def _stack(examples) -> tuple[np.ndarray, np.ndarray]:
    if not examples:
        raise ValueError("empty example list")
    x = np.stack([e.image for e in examples]).astype(get_dtype(), copy=False)
    y = np.array([e.label for e in examples], dtype=np.int64)
    return x, y


def evaluate(spec: NetworkSpec, params: list[np.ndarray], x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Eval-mode (mean cross-entropy, accuracy)."""
    probs = predict(spec, params, x)
    picked = probs[np.arange(len(y)), y]
    loss = float(np.mean(-np.log(np.maximum(picked.astype(np.float64), LOG_CLAMP)))) + 0.0
    acc = float(np.mean(np.argmax(probs, axis=1) == y))
    return loss, acc


def fit(split, cfg: TrainConfig, rng: RunRNG | None = None, spec: NetworkSpec = CANONICAL_SPEC,
        metadata: dict | None = None) -> FitResult:
    """Train on ``split.train`` monitoring accuracy on ``split.validation``.

    Returns the parameters of the best-validation-accuracy epoch together
    with the matching checkpoint and the per-epoch curve log.
    """
    from .checkpoint import Checkpoint

    if not split.train or not split.validation:
        raise ValueError("fit needs non-empty train and validation parts")
    rng = rng or RunRNG.from_seed(cfg.seed)
    x_tr, y_tr = _stack(split.train)
    x_va, y_va = _stack(split.validation)
    n_classes = spec.n_classes
    eye = np.eye(n_classes, dtype=get_dtype())

    params = init_params(spec, rng.init)
    state = AdamState.zeros_like(params)
    lr = cfg.learning_rate
    history: list[float] = []
    curves: list[CurvePoint] = []

    def snapshot(epoch, best_value):
        return Checkpoint(spec=spec, params=[p.copy() for p in params], adam=state.copy(), lr=lr,
                          rng_state=rng.state(), epoch=epoch, best_value=best_value,
                          metadata=dict(metadata or {}))

    best = snapshot(0, -math.inf)
    best_epoch = 0
    stopped = False
    n = len(y_tr)
    for epoch in range(1, cfg.max_epochs + 1):
        order = rng.shuffle.permutation(n)
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            probs, cache = network_forward(spec, params, x_tr[idx], "train", rng.dropout)
            grad_logits = softmax_xent_gradient(probs, eye[y_tr[idx]]) / len(idx)
            grads = network_backward(cache, params, grad_logits)
            params, state = adam_step(params, grads, state, lr)
        train_loss, train_acc = evaluate(spec, params, x_tr, y_tr)
        val_loss, val_acc = evaluate(spec, params, x_va, y_va)
        curves.append(CurvePoint(epoch, train_loss, train_acc, val_loss, val_acc, lr))
        log.info("epoch %d  loss %.4f  acc %.4f  val_loss %.4f  val_acc %.4f  lr %.2e",
                 epoch, train_loss, train_acc, val_loss, val_acc, lr)
        improved = not history or val_acc > max(history)
        history.append(val_acc)
        lr = reduce_lr_on_plateau(history, lr, cfg)
        if improved:
            best_epoch = epoch
            best = snapshot(epoch, val_acc)
        stop, _ = early_stopping_check(history, cfg.early_stop_patience)
        if stop:
            log.info("early stopping after epoch %d (best epoch %d)", epoch, best_epoch)
            stopped = True
            break
    return FitResult([p.copy() for p in best.params], curves, best, best_epoch, stopped, params)
