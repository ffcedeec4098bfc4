"""Named-tensor checkpoint file: UTF-8 JSON header, a "\\n\\0" separator, then
a little-endian float64 payload. Header schema:

    {"magic": "AWM1", "tensors": [{"name": str, "shape": [...], "offset": int}]}

Offsets are byte offsets into the payload.
"""

from __future__ import annotations

import json

import numpy as np

from .autodiff import Tensor

MAGIC = "AWM1"
_SEP = b"\n\0"


class CheckpointError(ValueError):
    pass


def save_tensors(path, tensors: dict[str, Tensor | np.ndarray]) -> None:
    entries = []
    blobs = []
    offset = 0
    for name in sorted(tensors):
        arr = tensors[name].data if isinstance(tensors[name], Tensor) else np.asarray(tensors[name])
        shape = list(arr.shape)
        # ascontiguousarray promotes 0-d to 1-d, so record the shape first
        arr = np.ascontiguousarray(arr, dtype="<f8")
        entries.append({"name": name, "shape": shape, "offset": offset})
        blobs.append(arr.tobytes())
        offset += arr.nbytes
    header = json.dumps({"magic": MAGIC, "tensors": entries}).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(_SEP)
        for blob in blobs:
            fh.write(blob)


def load_tensors(path) -> dict[str, np.ndarray]:
    with open(path, "rb") as fh:
        raw = fh.read()
    idx = raw.find(_SEP)
    if idx < 0:
        raise CheckpointError(f"{path}: missing header separator")
    try:
        header = json.loads(raw[:idx].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"{path}: bad header ({exc})") from exc
    if header.get("magic") != MAGIC:
        raise CheckpointError(f"{path}: bad magic {header.get('magic')!r}")
    payload = raw[idx + len(_SEP):]
    out: dict[str, np.ndarray] = {}
    for entry in header["tensors"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        start = entry["offset"]
        arr = np.frombuffer(payload, dtype="<f8", count=count, offset=start)
        out[entry["name"]] = arr.reshape(shape).astype(np.float64)
    return out
