"""Binary checkpoint format.

All integers and floats are little-endian::

    b"TSRN"                      magic
    u32 version                  (1)
    u32 x 3                      input shape H, W, C
    u32 layer count, then per layer:
        u32 type tag, u32 hyperparameter count, i32 hyperparameters
    u32 tensor count, then per parameter tensor (declaration order):
        u32 rank, u32 dims, f32 data (row-major)
    optimizer:  u64 step, f64 beta1, f64 beta2, f64 eps, f64 current lr,
                f32 first moments, f32 second moments (parameter shapes)
    u32 byte length, UTF-8 JSON: RNG stream states and run metadata
    u32 epoch
    f64 best monitored value

Dropout rates are stored as integer parts per million.
"""
from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .network import Conv, Dense, Dropout, Flatten, MaxPool, NetworkSpec, ReLU, Softmax
from .training import AdamState

MAGIC = b"TSRN"
VERSION = 1

_TAGS = {Conv: 1, ReLU: 2, MaxPool: 3, Dropout: 4, Flatten: 5, Dense: 6, Softmax: 7}


class CheckpointError(ValueError):
    pass


class NotACheckpointError(CheckpointError):
    pass


class UnsupportedVersionError(CheckpointError):
    pass


class TruncatedCheckpointError(CheckpointError):
    pass


@dataclass
class Checkpoint:
    spec: NetworkSpec
    params: list[np.ndarray]
    adam: AdamState
    lr: float
    rng_state: dict
    epoch: int
    best_value: float
    metadata: dict = field(default_factory=dict)


def _layer_hparams(layer) -> list[int]:
    if isinstance(layer, Conv):
        return [layer.out_c, layer.f]
    if isinstance(layer, MaxPool):
        return [layer.f, layer.s, layer.p]
    if isinstance(layer, Dropout):
        return [round(layer.rate * 1_000_000)]
    if isinstance(layer, Dense):
        return [layer.units]
    return []


def _build_layer(tag: int, hp: list[int]):
    try:
        cls = {v: k for k, v in _TAGS.items()}[tag]
    except KeyError:
        raise CheckpointError(f"unknown layer type tag {tag}") from None
    if cls is Dropout:
        return Dropout(hp[0] / 1_000_000)
    return cls(*hp)


def encode(ckpt: Checkpoint) -> bytes:
    out = bytearray(MAGIC)
    out += struct.pack("<I", VERSION)
    out += struct.pack("<3I", *ckpt.spec.input_shape)
    out += struct.pack("<I", len(ckpt.spec.layers))
    for layer in ckpt.spec.layers:
        hp = _layer_hparams(layer)
        out += struct.pack(f"<II{len(hp)}i", _TAGS[type(layer)], len(hp), *hp)
    out += struct.pack("<I", len(ckpt.params))
    for p in ckpt.params:
        out += struct.pack(f"<I{p.ndim}I", p.ndim, *p.shape)
        out += np.ascontiguousarray(p, dtype="<f4").tobytes()
    a = ckpt.adam
    out += struct.pack("<Q4d", a.t, a.beta1, a.beta2, a.eps, ckpt.lr)
    for arr in (*a.m, *a.v):
        out += np.ascontiguousarray(arr, dtype="<f4").tobytes()
    blob = json.dumps({"rng": ckpt.rng_state, "meta": ckpt.metadata}, sort_keys=True,
                      separators=(",", ":")).encode("utf-8")
    out += struct.pack("<I", len(blob)) + blob
    out += struct.pack("<Id", ckpt.epoch, ckpt.best_value)
    return bytes(out)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise TruncatedCheckpointError(
                f"checkpoint truncated: needed {n} bytes at offset {self.pos}, file has {len(self.data)}"
            )
        chunk = self.data[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def floats(self, shape) -> np.ndarray:
        count = math.prod(shape)
        return np.frombuffer(self.take(4 * count), dtype="<f4").astype(np.float32).reshape(shape)


def decode(data: bytes) -> Checkpoint:
    if len(data) < 4 or data[:4] != MAGIC:
        if len(data) < 4 and MAGIC.startswith(data):
            raise TruncatedCheckpointError("checkpoint truncated inside the magic bytes")
        raise NotACheckpointError("not a checkpoint: bad magic bytes")
    r = _Reader(data)
    r.take(4)
    (version,) = r.unpack("<I")
    if version != VERSION:
        raise UnsupportedVersionError(f"unsupported checkpoint version {version} (expected {VERSION})")
    input_shape = r.unpack("<3I")
    (n_layers,) = r.unpack("<I")
    layers = []
    for _ in range(n_layers):
        tag, n_hp = r.unpack("<II")
        hp = list(r.unpack(f"<{n_hp}i"))
        layers.append(_build_layer(tag, hp))
    try:
        spec = NetworkSpec(tuple(input_shape), tuple(layers))
    except ValueError as exc:
        raise CheckpointError(f"invalid network description: {exc}") from exc
    (n_tensors,) = r.unpack("<I")
    params = []
    for _ in range(n_tensors):
        (rank,) = r.unpack("<I")
        shape = r.unpack(f"<{rank}I")
        params.append(r.floats(shape))
    if [p.shape for p in params] != spec.param_shapes():
        raise CheckpointError("parameter shapes do not match the network description")
    t, b1, b2, eps, lr = r.unpack("<Q4d")
    m = [r.floats(p.shape) for p in params]
    v = [r.floats(p.shape) for p in params]
    (blob_len,) = r.unpack("<I")
    try:
        blob = json.loads(r.take(blob_len).decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"corrupt metadata block: {exc}") from exc
    epoch, best = r.unpack("<Id")
    if r.pos != len(data):
        raise CheckpointError(f"{len(data) - r.pos} unexpected trailing bytes")
    return Checkpoint(spec, params, AdamState(m, v, t, b1, b2, eps), lr, blob["rng"], epoch, best, blob["meta"])


def save_checkpoint(path, ckpt: Checkpoint) -> None:
    Path(path).write_bytes(encode(ckpt))


def load_checkpoint(path) -> Checkpoint:
    return decode(Path(path).read_bytes())
