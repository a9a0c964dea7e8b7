"""Weights file: magic, version, JSON header (spec + training metadata), then
little-endian float32 tensors in parameter declaration order."""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .network import NetworkSpec, NetworkWeights

MAGIC = b"HTWN"
VERSION = 1
_PREFIX = struct.Struct("<4sHI")


class WeightsFormatError(ValueError):
    pass


def save_weights(path, weights: NetworkWeights) -> None:
    header = {
        "spec": weights.spec.to_dict(),
        "training_meta": weights.training_meta,
        "tensors": [[k, list(v.shape)] for k, v in weights.params.items()],
    }
    hbytes = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_PREFIX.pack(MAGIC, VERSION, len(hbytes)))
        fh.write(hbytes)
        for v in weights.params.values():
            fh.write(np.ascontiguousarray(v, dtype="<f4").tobytes())


def load_weights(path) -> NetworkWeights:
    buf = Path(path).read_bytes()
    if len(buf) < _PREFIX.size:
        raise OSError(f"{path}: truncated")
    magic, version, hlen = _PREFIX.unpack_from(buf)
    if magic != MAGIC:
        raise WeightsFormatError(f"{path}: not a weights file")
    if version != VERSION:
        raise WeightsFormatError(f"{path}: unsupported weights version {version}")
    header = json.loads(buf[_PREFIX.size:_PREFIX.size + hlen].decode("utf-8"))
    spec = NetworkSpec.from_dict(header["spec"])
    offset = _PREFIX.size + hlen
    params = {}
    for name, shape in header["tensors"]:
        n = int(np.prod(shape))
        if offset + 4 * n > len(buf):
            raise OSError(f"{path}: truncated tensor data at {name}")
        params[name] = np.frombuffer(buf, dtype="<f4", count=n, offset=offset).reshape(shape).astype(np.float32)
        offset += 4 * n
    return NetworkWeights(spec, params, header.get("training_meta", {}))
