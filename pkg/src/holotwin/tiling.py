"""Overlapping tile layouts and alpha-blended stitching.

Tiles are composited in raster order. Each tile carries an alpha map that is 1
except on linear ramps across its overlap with the left and top neighbours, and
is painted over the running result as ``out += alpha * (tile - out)``. The
effective weight of tile t is ``alpha_t * prod_{s > t} (1 - alpha_s)``, which is
a partition of unity because the first tile covering any pixel has alpha 1 there.
The lerp form makes an identity filter reproduce its input bit for bit.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .fieldcore import Raster, ShapeError


class ContractError(RuntimeError):
    """A tile filter changed the tile dimensions."""


def tile_starts(length: int, tile: int, overlap: int) -> list[int]:
    if length <= tile:
        return [0]
    n = math.ceil((length - overlap) / (tile - overlap))
    # round half up; numpy's half-to-even could widen a gap by one pixel
    return [int(math.floor(s + 0.5)) for s in np.linspace(0, length - tile, n)]


def _ramp(starts: list[int], tile: int, k: int) -> np.ndarray:
    a = np.ones(tile)
    if k > 0:
        ov = starts[k - 1] + tile - starts[k]
        if ov > 0:
            a[:ov] = np.arange(1, ov + 1) / (ov + 1)
    return a


@dataclass(frozen=True)
class TileLayout:
    width: int
    height: int
    tile_size: int
    overlap_px: int
    xs: tuple[int, ...]
    ys: tuple[int, ...]
    pad_x: int = 0
    pad_y: int = 0

    @property
    def padded_width(self) -> int:
        return max(self.width, self.tile_size)

    @property
    def padded_height(self) -> int:
        return max(self.height, self.tile_size)

    @property
    def tiles(self) -> list[tuple[int, int, int, int]]:
        """(x, y, w, h) rectangles in painting order, on the padded canvas."""
        t = self.tile_size
        return [(x, y, t, t) for y in self.ys for x in self.xs]

    def alpha(self, index: int) -> np.ndarray:
        r, c = divmod(index, len(self.xs))
        return np.outer(_ramp(list(self.ys), self.tile_size, r), _ramp(list(self.xs), self.tile_size, c))

    @cached_property
    def weights(self) -> list[np.ndarray]:
        """Effective blending weight map for each tile (tile-sized arrays)."""
        remaining = np.ones((self.padded_height, self.padded_width))
        out = [None] * len(self.tiles)
        for i in reversed(range(len(self.tiles))):
            x, y, w, h = self.tiles[i]
            a = self.alpha(i)
            out[i] = a * remaining[y:y + h, x:x + w]
            remaining[y:y + h, x:x + w] *= 1 - a
        return out

    def weight_sum(self) -> np.ndarray:
        total = np.zeros((self.padded_height, self.padded_width))
        for (x, y, w, h), wt in zip(self.tiles, self.weights):
            total[y:y + h, x:x + w] += wt
        return total


def plan_tiles(width: int, height: int, tile_size: int = 512, overlap_fraction: float = 0.10) -> TileLayout:
    """Evenly spaced tiles of exactly ``tile_size``; edge tiles are shifted inward.

    A dimension smaller than the tile is replicate-padded (centered) to one tile.
    """
    if not 0 <= overlap_fraction < 0.5:
        raise ValueError("overlap_fraction must be in [0, 0.5)")
    if tile_size < 1 or width < 1 or height < 1:
        raise ValueError("sizes must be positive")
    ov = int(math.floor(overlap_fraction * tile_size + 0.5))
    pad_x = max(tile_size - width, 0) // 2
    pad_y = max(tile_size - height, 0) // 2
    xs = tile_starts(max(width, tile_size), tile_size, ov)
    ys = tile_starts(max(height, tile_size), tile_size, ov)
    return TileLayout(width, height, tile_size, ov, tuple(xs), tuple(ys), pad_x, pad_y)


def _threads() -> int:
    return int(os.environ.get("HOLOTWIN_THREADS", "0")) or (os.cpu_count() or 1)


def process_tiled(raster, layout: TileLayout, filt, workers: int | None = None):
    """Filter each tile and alpha-blend the results; returns the same type as ``raster``."""
    is_raster = isinstance(raster, Raster)
    v = raster.values if is_raster else np.asarray(raster, dtype=np.float64)
    if v.shape != (layout.height, layout.width):
        raise ShapeError(f"layout is for {(layout.height, layout.width)}, got {v.shape}")
    canvas = v
    if v.shape != (layout.padded_height, layout.padded_width):
        canvas = np.pad(v, ((layout.pad_y, layout.padded_height - layout.height - layout.pad_y),
                            (layout.pad_x, layout.padded_width - layout.width - layout.pad_x)), mode="edge")

    def run(rect):
        x, y, w, h = rect
        res = np.asarray(filt(canvas[y:y + h, x:x + w].copy()), dtype=np.float64)
        if res.shape != (h, w):
            raise ContractError(f"filter changed tile shape {(h, w)} -> {res.shape}")
        return res

    workers = workers or _threads()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, layout.tiles))
    else:
        results = [run(r) for r in layout.tiles]

    out = np.zeros(canvas.shape)
    for i, ((x, y, w, h), res) in enumerate(zip(layout.tiles, results)):
        region = out[y:y + h, x:x + w]
        region += layout.alpha(i) * (res - region)
    out = out[layout.pad_y:layout.pad_y + layout.height, layout.pad_x:layout.pad_x + layout.width]
    return raster.like(out) if is_raster else out
