"""Raster and complex-field primitives shared by the whole toolkit."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class ShapeError(ValueError):
    """Array dimensions do not agree with what an operation requires."""


class DataError(ValueError):
    """Sample values are invalid (non-finite, negative intensity, ...)."""


class ParameterError(ValueError):
    """Physical or configuration parameters are out of range."""


class CountError(ValueError):
    """Not enough items (images, pairs) to run."""


@dataclass(frozen=True)
class SystemParams:
    """Physical parameters of a lensless in-line holographic setup.

    ``pixel_size`` is the camera pixel pitch; the sampling pitch of the field at
    the sample plane is ``pixel_size / magnification``.
    """

    wavelength: float
    pixel_size: float
    z_distance: float
    magnification: float = 1.0

    def __post_init__(self):
        for name in ("wavelength", "pixel_size", "z_distance", "magnification"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise ParameterError(f"{name} must be positive and finite, got {value!r}")

    @property
    def pitch(self) -> float:
        return self.pixel_size / self.magnification

    def with_z(self, z: float) -> "SystemParams":
        return SystemParams(self.wavelength, self.pixel_size, z, self.magnification)

    def to_dict(self) -> dict:
        return {
            "wavelength": self.wavelength,
            "pixel_size": self.pixel_size,
            "z_distance": self.z_distance,
            "magnification": self.magnification,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SystemParams":
        return cls(
            float(d["wavelength"]),
            float(d["pixel_size"]),
            float(d["z_distance"]),
            float(d.get("magnification", 1.0)),
        )


def _check_pitch(pitch):
    if not np.isfinite(pitch) or pitch <= 0:
        raise ParameterError(f"pitch must be positive, got {pitch!r}")


@dataclass(frozen=True, eq=False)
class Raster:
    """Real-valued 2-D samples, shape (height, width), with physical pitch."""

    values: np.ndarray
    pitch: float = 1.0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2 or v.size == 0:
            raise ShapeError(f"raster must be a nonempty 2-D array, got shape {v.shape}")
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "values", v)
        _check_pitch(self.pitch)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    def like(self, values) -> "Raster":
        return Raster(values, self.pitch)


@dataclass(frozen=True, eq=False)
class ComplexField:
    """Complex optical-field samples, shape (height, width), with physical pitch."""

    values: np.ndarray
    pitch: float = 1.0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.complex128)
        if v.ndim != 2 or v.size == 0:
            raise ShapeError(f"field must be a nonempty 2-D array, got shape {v.shape}")
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "values", v)
        _check_pitch(self.pitch)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def amplitude(self) -> np.ndarray:
        return np.abs(self.values)

    @property
    def phase(self) -> np.ndarray:
        return _safe_angle(self.values)

    def like(self, values) -> "ComplexField":
        return ComplexField(values, self.pitch)


def _safe_angle(z: np.ndarray) -> np.ndarray:
    # np.angle gives +pi for negative reals with +0 imaginary part but -pi for -0j;
    # fold -pi onto +pi so the range is (-pi, pi], and zero magnitude maps to 0.
    ph = np.angle(z)
    ph = np.where(ph <= -np.pi, np.pi, ph)
    return np.where(z == 0, 0.0, ph)


def split(field: ComplexField) -> tuple[Raster, Raster]:
    """Return (amplitude, phase) rasters; phase lies in (-pi, pi]."""
    return Raster(field.amplitude, field.pitch), Raster(field.phase, field.pitch)


def combine(amplitude: Raster, phase: Raster) -> ComplexField:
    if amplitude.shape != phase.shape:
        raise ShapeError(f"amplitude {amplitude.shape} and phase {phase.shape} differ")
    if amplitude.pitch != phase.pitch:
        raise ShapeError(f"pitch mismatch: {amplitude.pitch} vs {phase.pitch}")
    return ComplexField(amplitude.values * np.exp(1j * phase.values), amplitude.pitch)


def wrap_phase(x):
    """Wrap radians into (-pi, pi]. Works on scalars and arrays."""
    y = np.pi - np.mod(np.pi - np.asarray(x, dtype=np.float64), 2 * np.pi)
    if np.ndim(y) == 0:
        return float(y)
    return y


def rmse(a, b) -> float:
    """Root-mean-square difference of two equally shaped rasters (or arrays)."""
    av = a.values if isinstance(a, Raster) else np.asarray(a, dtype=np.float64)
    bv = b.values if isinstance(b, Raster) else np.asarray(b, dtype=np.float64)
    if av.shape != bv.shape:
        raise ShapeError(f"rmse of mismatched shapes {av.shape} and {bv.shape}")
    return float(np.sqrt(np.mean((av - bv) ** 2)))
