"""Raster and field file I/O.

Native float format (little-endian)::

    magic    4 bytes  b"HTWR"
    version  uint16   1
    kind     uint8    0 = real, 1 = complex (interleaved re, im)
    reserved uint8
    width    uint32
    height   uint32
    pitch    float64  meters / pixel
    data     float32  row-major, width * height (* 2 for complex)

Grayscale image files (8/16 bit) are read with values scaled to [0, 1].
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np
from PIL import Image

from .fieldcore import ComplexField, Raster

MAGIC = b"HTWR"
VERSION = 1
_HEADER = struct.Struct("<4sHBBIId")


class FormatError(ValueError):
    pass


def write_raster(path, x) -> None:
    """Write a Raster or ComplexField in the native float format."""
    is_complex = isinstance(x, ComplexField)
    v = x.values
    h, w = v.shape
    header = _HEADER.pack(MAGIC, VERSION, int(is_complex), 0, w, h, float(x.pitch))
    if is_complex:
        data = np.empty((h, w, 2), dtype="<f4")
        data[..., 0] = v.real
        data[..., 1] = v.imag
    else:
        data = v.astype("<f4")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(data.tobytes())


def read_raster(path):
    """Read a native float file; returns Raster or ComplexField."""
    buf = Path(path).read_bytes()
    if len(buf) < _HEADER.size:
        raise OSError(f"{path}: truncated header")
    magic, version, kind, _, w, h, pitch = _HEADER.unpack_from(buf)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    if kind not in (0, 1):
        raise FormatError(f"{path}: unknown channel kind {kind}")
    n = w * h * (2 if kind else 1)
    body = buf[_HEADER.size:]
    if len(body) < 4 * n:
        raise OSError(f"{path}: truncated data ({len(body)} of {4 * n} bytes)")
    data = np.frombuffer(body, dtype="<f4", count=n)
    if kind:
        data = data.reshape(h, w, 2).astype(np.float64)
        return ComplexField(data[..., 0] + 1j * data[..., 1], pitch)
    return Raster(data.reshape(h, w).astype(np.float64), pitch)


def read_image(path, pitch: float = 1.0) -> Raster:
    """Read an image file as grayscale in [0, 1] (8-bit / 255, 16-bit / 65535)."""
    with Image.open(path) as im:
        if im.mode in ("I;16", "I;16B", "I;16L", "I"):
            arr = np.asarray(im, dtype=np.float64)
            return Raster(arr / 65535.0, pitch)
        if im.mode == "F":
            return Raster(np.asarray(im, dtype=np.float64), pitch)
        if im.mode not in ("L", "RGB"):
            im = im.convert("RGB")
        arr = np.asarray(im, dtype=np.float64) / 255.0
    if arr.ndim == 3:
        # ITU-R 601 luma, same weights PIL uses for mode "L"
        arr = arr[..., 0] * 0.299 + arr[..., 1] * 0.587 + arr[..., 2] * 0.114
    return Raster(arr, pitch)


def write_image(path, raster, vmin=None, vmax=None, bits: int = 8) -> None:
    """Export a raster for display, linearly mapping [vmin, vmax] to the full integer range."""
    v = raster.values if isinstance(raster, Raster) else np.asarray(raster, dtype=np.float64)
    lo = float(np.min(v)) if vmin is None else vmin
    hi = float(np.max(v)) if vmax is None else vmax
    scaled = np.clip((v - lo) / (hi - lo if hi > lo else 1.0), 0, 1)
    if bits == 16:
        Image.fromarray((scaled * 65535 + 0.5).astype(np.uint16)).save(path)
    elif bits == 8:
        Image.fromarray((scaled * 255 + 0.5).astype(np.uint8)).save(path)
    else:
        raise ValueError("bits must be 8 or 16")


def read_any(path, pitch: float = 1.0):
    """Native float files by magic, anything else through the image reader."""
    with open(path, "rb") as fh:
        head = fh.read(4)
    if head == MAGIC:
        return read_raster(path)
    return read_image(path, pitch)
