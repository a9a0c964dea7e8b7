"""Procedural stand-in image corpora for desk-scale experiments.

``flora`` scenes are radial petal/blossom compositions split into five
sub-folders (daisy, sunflower, tulip, dandelion, rose); ``fauna`` scenes are
a structurally different family (striped/furry blobs, polygons) used as an
out-of-distribution test corpus. Images are written as 8-bit RGB PNGs.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image
from scipy.ndimage import gaussian_filter, map_coordinates

FLORA = ("daisy", "sunflower", "tulip", "dandelion", "rose")
FAUNA = ("stripes", "fur", "polygons")


def _grid(n):
    y, x = np.mgrid[0:n, 0:n] / n
    return x, y


def _smooth_noise(rng, n, sigma):
    return gaussian_filter(rng.standard_normal((n, n)), sigma, mode="wrap")


def _background(rng, n):
    x, y = _grid(n)
    g = rng.uniform(0.2, 0.6) + rng.uniform(-0.3, 0.3) * x + rng.uniform(-0.3, 0.3) * y
    g += 0.15 * _smooth_noise(rng, n, n / 8) / 0.05
    return np.clip(g, 0, 1)


def _blossom(rng, n, style):
    x, y = _grid(n)
    cx, cy = rng.uniform(0.2, 0.8, 2)
    r0 = rng.uniform(0.12, 0.3)
    dx, dy = x - cx, y - cy
    r = np.hypot(dx, dy)
    th = np.arctan2(dy, dx) + rng.uniform(0, 2 * np.pi)
    if style == "daisy":
        k = rng.integers(10, 20)
        edge = r0 * (0.6 + 0.4 * np.abs(np.cos(k * th / 2)))
        petals = (r < edge).astype(float) * rng.uniform(0.8, 1.0)
        center = r < 0.25 * r0
        return np.where(center, rng.uniform(0.3, 0.6), petals), r < edge
    if style == "sunflower":
        k = rng.integers(14, 26)
        edge = r0 * (0.75 + 0.25 * np.abs(np.cos(k * th / 2)))
        disk = r < 0.5 * r0
        seeds = 0.15 + 0.1 * np.sin(60 * r + 7 * th)
        val = np.where(disk, seeds, rng.uniform(0.6, 0.9))
        return val, r < edge
    if style == "tulip":
        sx, sy = rng.uniform(0.5, 0.8), rng.uniform(1.0, 1.5)
        rr = np.hypot(dx / sx, dy / sy)
        k = 3
        edge = r0 * (0.8 + 0.2 * np.cos(k * th))
        shade = 0.5 + 0.4 * (1 - rr / r0)
        return np.clip(shade, 0, 1), rr < edge
    if style == "dandelion":
        k = rng.integers(40, 80)
        rays = 0.5 + 0.5 * np.cos(k * th)
        val = 0.6 + 0.4 * rays * (r / r0)
        return np.clip(val, 0, 1), r < r0
    # rose: spiral of nested arcs
    spiral = 0.5 + 0.5 * np.sin(40 * r - 3 * th)
    val = 0.3 + 0.6 * spiral * np.exp(-r / r0)
    return val, r < r0


def flora_image(rng, n=96, style="daisy") -> np.ndarray:
    gray = _background(rng, n)
    for _ in range(rng.integers(1, 4)):
        val, mask = _blossom(rng, n, style)
        gray = np.where(mask, val, gray)
    gray = gaussian_filter(gray, 0.7) + 0.02 * rng.standard_normal((n, n))
    tint = rng.uniform(0.6, 1.0, 3)
    return np.clip(gray[..., None] * tint, 0, 1)


def fauna_image(rng, n=96, style="stripes") -> np.ndarray:
    x, y = _grid(n)
    gray = 0.45 + 0.3 * _smooth_noise(rng, n, n / 6) / 0.05
    gray = np.clip(gray, 0, 1)
    for _ in range(rng.integers(1, 3)):
        cx, cy = rng.uniform(0.25, 0.75, 2)
        ax, ay = rng.uniform(0.15, 0.35, 2)
        ang = rng.uniform(0, np.pi)
        u = ((x - cx) * np.cos(ang) + (y - cy) * np.sin(ang)) / ax
        v = (-(x - cx) * np.sin(ang) + (y - cy) * np.cos(ang)) / ay
        body = u**2 + v**2 < 1
        base = rng.uniform(0.3, 0.7)
        if style == "stripes":
            f = rng.uniform(6, 14)
            warp = 0.3 * _smooth_noise(rng, n, 6) / 0.05
            val = base + 0.35 * np.sin(f * (u + warp))
        elif style == "fur":
            tex = _smooth_noise(rng, n, 1.0)
            coords = np.array([y * n + 3 * np.cos(ang), x * n + 3 * np.sin(ang)])
            val = base + 2.5 * map_coordinates(tex, coords, order=1, mode="wrap")
        else:
            k = rng.integers(3, 7)
            th = np.arctan2(v, u)
            rad = np.cos(np.pi / k) / np.cos((th % (2 * np.pi / k)) - np.pi / k)
            body = np.hypot(u, v) < rad
            val = rng.uniform(0.05, 0.95) + 0.3 * u
        gray = np.where(body, np.clip(val, 0, 1), gray)
    gray = gaussian_filter(gray, 0.8) + 0.02 * rng.standard_normal((n, n))
    return np.clip(np.repeat(gray[..., None], 3, axis=2) * rng.uniform(0.7, 1.0, 3), 0, 1)


def write_corpus(root, family: str, per_folder: int, seed: int, size: int = 96) -> Path:
    """Write ``per_folder`` images into each sub-folder of ``family`` ('flora' or 'fauna')."""
    root = Path(root)
    styles, make = (FLORA, flora_image) if family == "flora" else (FAUNA, fauna_image)
    rng = np.random.default_rng(seed)
    for style in styles:
        d = root / style
        d.mkdir(parents=True, exist_ok=True)
        for i in range(per_folder):
            img = make(rng, size, style)
            Image.fromarray((img * 255 + 0.5).astype(np.uint8)).save(d / f"{style}_{i:04d}.png")
    return root
