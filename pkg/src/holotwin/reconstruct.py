"""Single-hologram reconstruction: backpropagation, CNN filtering of amplitude and
phase, and one hologram-consistency update."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .cnn import NetworkWeights, forward
from .fieldcore import ComplexField, DataError, Raster, ShapeError, SystemParams
from .propagate import angular_spectrum, crop_center, pad_replicate
from .tiling import plan_tiles, process_tiled

Filter = Union[NetworkWeights, Callable[[np.ndarray], np.ndarray], None]


@dataclass(frozen=True, eq=False)
class Hologram:
    intensity: Raster
    params: SystemParams

    def __post_init__(self):
        if np.any(self.intensity.values < 0):
            raise DataError("hologram intensity must be nonnegative")

    @classmethod
    def from_array(cls, intensity, params: SystemParams) -> "Hologram":
        return cls(Raster(intensity, params.pitch), params)

    @property
    def amplitude(self) -> np.ndarray:
        return np.sqrt(self.intensity.values)


@dataclass(frozen=True)
class NormRecord:
    amplitude_median: float
    phase_offset: float = np.pi

    def __post_init__(self):
        if not self.amplitude_median > 0:
            raise DataError("amplitude median must be positive")


@dataclass(frozen=True)
class ReconstructConfig:
    """``normalize_amplitude`` divides the amplitude by its median before filtering
    (needed for experimental holograms whose scale is arbitrary). ``iterations``
    repeats filter + consistency update. ``pad_fraction`` replicate-pads the
    hologram by that fraction of its size per side before propagation."""

    tile_size: int | None = 512
    overlap: float = 0.10
    iterations: int = 1
    normalize_amplitude: bool = True
    pad_fraction: float = 0.0
    workers: int | None = None

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.tile_size is not None and (self.tile_size < 2 or self.tile_size % 2):
            raise ValueError("tile_size must be a positive even number")


def backpropagate_amplitude(amplitude: np.ndarray, params: SystemParams) -> ComplexField:
    """Propagate a zero-phase camera-plane amplitude to the sample plane (+Z).

    The on-axis piston phase is removed so a uniform hologram gives zero phase.
    """
    field = ComplexField(amplitude, params.pitch)
    return angular_spectrum(field, params.z_distance, params.wavelength, remove_piston=True)


def backpropagate(holo: Hologram) -> ComplexField:
    return backpropagate_amplitude(holo.amplitude, holo.params)


def to_camera(field: ComplexField, params: SystemParams) -> ComplexField:
    return angular_spectrum(field, -params.z_distance, params.wavelength, remove_piston=True)


def to_sample(field: ComplexField, params: SystemParams) -> ComplexField:
    return angular_spectrum(field, params.z_distance, params.wavelength, remove_piston=True)


def normalize_experimental(field: ComplexField, normalize_amplitude: bool = True):
    """Split ``field`` into (amplitude / median, phase + pi, record).

    The shifted phase lies in [0, 2 pi]; it is returned as a raster because the
    argument of a complex sample cannot hold it.
    """
    amp = field.amplitude
    med = float(np.median(amp)) if normalize_amplitude else 1.0
    if not med > 0:
        raise DataError("median amplitude is zero; cannot normalize")
    rec = NormRecord(med, np.pi)
    return Raster(amp / med, field.pitch), Raster(field.phase + rec.phase_offset, field.pitch), rec


def denormalize(amplitude: Raster, phase: Raster, rec: NormRecord) -> ComplexField:
    a = amplitude.values * rec.amplitude_median
    p = phase.values - rec.phase_offset
    return ComplexField(a * np.exp(1j * p), amplitude.pitch)


def as_filter(f: Filter) -> Callable[[np.ndarray], np.ndarray]:
    if f is None:
        return lambda x: x
    if isinstance(f, NetworkWeights):
        return lambda x: np.asarray(forward(f, x), dtype=np.float64)
    return f


def _apply(filt, values: np.ndarray, cfg: ReconstructConfig) -> np.ndarray:
    h, w = values.shape
    if cfg.tile_size is not None and (h > cfg.tile_size or w > cfg.tile_size):
        layout = plan_tiles(w, h, cfg.tile_size, cfg.overlap)
        return process_tiled(values, layout, filt, workers=cfg.workers)
    # the pooled path needs even dimensions
    ph, pw = h % 2, w % 2
    if ph or pw:
        padded = np.pad(values, ((0, ph), (0, pw)), mode="edge")
        return np.asarray(filt(padded))[:h, :w]
    return np.asarray(filt(values))


def _filter_field(u: ComplexField, fa, fp, cfg: ReconstructConfig) -> ComplexField:
    a, p, rec = normalize_experimental(u, cfg.normalize_amplitude)
    a2 = _apply(fa, a.values, cfg)
    p2 = _apply(fp, p.values, cfg)
    return denormalize(Raster(a2, u.pitch), Raster(p2, u.pitch), rec)


def _padded(holo: Hologram, cfg: ReconstructConfig):
    if cfg.pad_fraction <= 0:
        return holo, 0
    m = int(round(cfg.pad_fraction * max(holo.intensity.shape)))
    return Hologram(pad_replicate(holo.intensity, m), holo.params), m


def _crop(u: ComplexField, holo: Hologram) -> ComplexField:
    return crop_center(u, holo.intensity.width, holo.intensity.height)


def consistency_update(u: ComplexField, holo: Hologram) -> ComplexField:
    """Replace the hologram-plane amplitude of ``u`` with the measured one, keep the phase."""
    u2 = to_camera(u, holo.params)
    if u2.shape != holo.intensity.shape:
        raise ShapeError("field and hologram dimensions differ")
    u3 = ComplexField(holo.amplitude * np.exp(1j * u2.phase), u.pitch)
    return to_sample(u3, holo.params)


def cnn_only_reconstruct(holo: Hologram, w_a: Filter, w_p: Filter, cfg: ReconstructConfig = ReconstructConfig()) -> ComplexField:
    """Backpropagate and CNN-filter amplitude and phase, without the consistency update."""
    work, m = _padded(holo, cfg)
    u = _filter_field(backpropagate(work), as_filter(w_a), as_filter(w_p), cfg)
    return _crop(u, holo) if m else u


def utirnet_reconstruct(holo: Hologram, w_a: Filter, w_p: Filter, cfg: ReconstructConfig = ReconstructConfig()) -> ComplexField:
    """Backpropagate, CNN-filter, propagate to the camera, impose the measured
    amplitude and backpropagate again."""
    work, m = _padded(holo, cfg)
    fa, fp = as_filter(w_a), as_filter(w_p)
    u = backpropagate(work)
    for _ in range(cfg.iterations):
        u = consistency_update(_filter_field(u, fa, fp, cfg), work)
    return _crop(u, holo) if m else u


def consistency_error(u: ComplexField, holo: Hologram) -> float:
    """Relative RMSE between |AS(u, -Z)| and the measured amplitude."""
    pred = to_camera(u, holo.params).amplitude
    ref = holo.amplitude
    return float(np.sqrt(np.mean((pred - ref) ** 2)) / np.sqrt(np.mean(ref**2)))
