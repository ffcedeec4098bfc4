"""Checkpoint file format: round-trips, header validation, corruption cases."""

import json

import numpy as np
import pytest

from awm.checkpoint import CheckpointError, MAGIC, load_tensors, save_tensors


def test_roundtrip_preserves_values_and_shapes(tmp_path):
    rng = np.random.default_rng(0)
    tensors = {
        "a.w": rng.normal(size=(3, 4)),
        "a.b": rng.normal(size=4),
        "scalarish": np.array(2.5),
        "deep": rng.normal(size=(2, 3, 5)),
    }
    path = tmp_path / "m.awm1"
    save_tensors(path, tensors)
    back = load_tensors(path)
    assert set(back) == set(tensors)
    for name, arr in tensors.items():
        assert back[name].shape == np.shape(arr)
        np.testing.assert_array_equal(back[name], arr)


def test_float32_input_round_trips_exactly(tmp_path):
    arr = np.random.default_rng(1).normal(size=(5, 5)).astype(np.float32)
    path = tmp_path / "m.awm1"
    save_tensors(path, {"w": arr})
    back = load_tensors(path)["w"]
    assert back.dtype == np.float64
    np.testing.assert_array_equal(back.astype(np.float32), arr)


def test_header_is_readable_json(tmp_path):
    path = tmp_path / "m.awm1"
    save_tensors(path, {"x": np.zeros(2)})
    raw = path.read_bytes()
    header = json.loads(raw[:raw.find(b"\n\0")].decode("utf-8"))
    assert header["magic"] == MAGIC
    assert header["tensors"][0]["name"] == "x"
    assert header["tensors"][0]["shape"] == [2]


def test_bad_magic_rejected(tmp_path):
    path = tmp_path / "m.awm1"
    path.write_bytes(b'{"magic": "NOPE", "tensors": []}\n\0')
    with pytest.raises(CheckpointError):
        load_tensors(path)


def test_missing_separator_rejected(tmp_path):
    path = tmp_path / "m.awm1"
    path.write_bytes(b'{"magic": "AWM1", "tensors": []}')
    with pytest.raises(CheckpointError):
        load_tensors(path)


def test_garbage_header_rejected(tmp_path):
    path = tmp_path / "m.awm1"
    path.write_bytes(b"\xff\xfe not json\n\0rest")
    with pytest.raises(CheckpointError):
        load_tensors(path)


def test_truncated_payload_fails(tmp_path):
    path = tmp_path / "m.awm1"
    save_tensors(path, {"w": np.arange(10.0)})
    raw = path.read_bytes()
    path.write_bytes(raw[:-16])  # drop the last two float64s
    with pytest.raises(ValueError):
        load_tensors(path)
