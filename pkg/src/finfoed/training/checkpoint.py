"""Binary checkpoint format.

Layout::

    b"IEDK"                      magic
    u32 little-endian            format version
    u32 little-endian            byte length L of the JSON index
    L bytes                      UTF-8 JSON index
    blob                         concatenated little-endian float32 tensors

The index holds ``config``, ``epoch``, ``dev_eer`` and ``tensors``, a list of
``{"name", "shape", "offset"}`` with offsets relative to the blob start.
Parameters and buffers share the tensor list.
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..model import Model, ModelConfig
from ..tensor import Tensor

MAGIC = b"IEDK"
VERSION = 1
_HEADER = struct.Struct("<4sII")
_DTYPE = np.dtype("<f4")


class CheckpointError(ValueError):
    pass


@dataclass
class Checkpoint:
    model: Model
    epoch: int
    dev_eer: float | None


def checkpoint_bytes(model: Model, epoch: int = 0, dev_eer: float | None = None) -> bytes:
    tensors, blobs, offset = [], [], 0
    stored = {**{k: v.data for k, v in model.params.items()}, **model.buffers}
    for name in sorted(stored):
        arr = np.array(stored[name], dtype=_DTYPE, order="C")  # keeps 0-d buffers 0-d
        tensors.append({"name": name, "shape": list(arr.shape), "offset": offset})
        blobs.append(arr.tobytes())
        offset += arr.nbytes
    index = json.dumps(
        {"config": model.cfg.to_dict(), "epoch": int(epoch),
         "dev_eer": None if dev_eer is None else float(dev_eer), "tensors": tensors},
        sort_keys=True, separators=(",", ":"),
    ).encode("utf-8")
    return _HEADER.pack(MAGIC, VERSION, len(index)) + index + b"".join(blobs)


def save_checkpoint(model: Model, path: str | Path, epoch: int = 0, dev_eer: float | None = None) -> None:
    Path(path).write_bytes(checkpoint_bytes(model, epoch, dev_eer))


def parse_checkpoint(raw: bytes, source: str = "<bytes>") -> Checkpoint:
    if len(raw) < _HEADER.size:
        raise CheckpointError(f"{source}: truncated header ({len(raw)} bytes)")
    magic, version, index_len = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise CheckpointError(f"{source}: bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise CheckpointError(f"{source}: format version {version} is not supported (expected {VERSION})")
    start = _HEADER.size + index_len
    if len(raw) < start:
        raise CheckpointError(f"{source}: truncated index (need {index_len} bytes)")
    try:
        index = json.loads(raw[_HEADER.size:start].decode("utf-8"))
        cfg = ModelConfig.from_dict(index["config"])
        entries = {t["name"]: t for t in index["tensors"]}
    except (UnicodeDecodeError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise CheckpointError(f"{source}: malformed index: {exc}") from exc
    if len(entries) != len(index["tensors"]):
        raise CheckpointError(f"{source}: duplicate tensor names in index")

    template = Model.init(cfg, seed=0)
    reference = {**{k: v.data for k, v in template.params.items()}, **template.buffers}
    missing = sorted(set(reference) - set(entries))
    if missing:
        raise CheckpointError(f"{source}: missing tensor(s): {', '.join(missing)}")
    unknown = sorted(set(entries) - set(reference))
    if unknown:
        raise CheckpointError(f"{source}: unknown tensor(s): {', '.join(unknown)}")

    blob = memoryview(raw)[start:]
    params, buffers = {}, {}
    for name, ref in reference.items():
        entry = entries[name]
        shape = tuple(entry["shape"])
        if shape != ref.shape:
            raise CheckpointError(f"{source}: tensor {name} has shape {shape}, config implies {ref.shape}")
        n = int(np.prod(shape, dtype=np.int64)) * _DTYPE.itemsize
        off = int(entry["offset"])
        if off < 0 or off + n > len(blob):
            raise CheckpointError(f"{source}: truncated data for tensor {name}")
        data = np.frombuffer(blob[off:off + n], dtype=_DTYPE).reshape(shape).astype(np.float32)
        if name in template.buffers:
            buffers[name] = data
        else:
            params[name] = Tensor(data, requires_grad=True, dtype=np.float32)
    return Checkpoint(Model(cfg, params, buffers), int(index.get("epoch", 0)), index.get("dev_eer"))


def load_checkpoint(path: str | Path) -> Checkpoint:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc.strerror}") from exc
    return parse_checkpoint(raw, str(path))
