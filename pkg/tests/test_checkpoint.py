import struct

import numpy as np
import pytest

from tsrnet.checkpoint import (Checkpoint, CheckpointError, NotACheckpointError, TruncatedCheckpointError,
                               UnsupportedVersionError, decode, encode, load_checkpoint, save_checkpoint)
from tsrnet.network import CANONICAL_SPEC, init_params
from tsrnet.training import AdamState, RunRNG


def make_checkpoint(seed=0) -> Checkpoint:
    rng = RunRNG.from_seed(seed)
    params = init_params(CANONICAL_SPEC, rng.init)
    adam = AdamState([p * 0.5 for p in params], [np.abs(p) * 0.1 for p in params], t=17)
    rng.shuffle.permutation(10)
    return Checkpoint(CANONICAL_SPEC, params, adam, lr=0.0005, rng_state=rng.state(), epoch=9,
                      best_value=0.953125, metadata={"seed": seed, "class_names": ["a", "b"]})


def assert_same(a: Checkpoint, b: Checkpoint):
    assert a.spec == b.spec
    for x, y in zip(a.params + a.adam.m + a.adam.v, b.params + b.adam.m + b.adam.v):
        assert x.dtype == y.dtype and x.tobytes() == y.tobytes()
    assert (a.adam.t, a.adam.beta1, a.adam.beta2, a.adam.eps) == (b.adam.t, b.adam.beta1, b.adam.beta2, b.adam.eps)
    assert (a.lr, a.epoch, a.best_value) == (b.lr, b.epoch, b.best_value)
    assert a.rng_state == b.rng_state and a.metadata == b.metadata


def test_roundtrip_is_bit_exact(tmp_path):
    ckpt = make_checkpoint()
    path = tmp_path / "m.tsrn"
    save_checkpoint(path, ckpt)
    loaded = load_checkpoint(path)
    assert_same(ckpt, loaded)
    assert encode(loaded) == path.read_bytes()


def test_rng_state_restores_streams():
    ckpt = make_checkpoint(3)
    restored = RunRNG.from_seed(0)
    restored.set_state(decode(encode(ckpt)).rng_state)
    original = RunRNG.from_seed(3)
    original.shuffle.permutation(10)
    assert np.array_equal(restored.shuffle.permutation(20), original.shuffle.permutation(20))


def test_layout_header():
    data = encode(make_checkpoint())
    assert data[:4] == b"TSRN"
    assert struct.unpack("<I", data[4:8]) == (1,)
    assert struct.unpack("<3I", data[8:20]) == (30, 30, 3)
    assert struct.unpack("<I", data[20:24]) == (len(CANONICAL_SPEC.layers),)
    # first layer: Conv tag 1 with (out_c, f) = (32, 5)
    assert struct.unpack("<II2i", data[24:40]) == (1, 2, 32, 5)


def test_bad_magic():
    data = encode(make_checkpoint())
    with pytest.raises(NotACheckpointError, match="not a checkpoint"):
        decode(b"XXXX" + data[4:])


def test_bad_version():
    data = bytearray(encode(make_checkpoint()))
    data[4:8] = struct.pack("<I", 99)
    with pytest.raises(UnsupportedVersionError):
        decode(bytes(data))


@pytest.mark.parametrize("cut", [2, 10, 100, 5000, -9, -1])
def test_truncated(cut):
    data = encode(make_checkpoint())
    with pytest.raises(TruncatedCheckpointError, match="truncated"):
        decode(data[:cut])


def test_trailing_bytes_rejected():
    with pytest.raises(CheckpointError):
        decode(encode(make_checkpoint()) + b"\0")
