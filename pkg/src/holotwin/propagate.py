"""Angular-spectrum free-space propagation, replicate padding and center cropping."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .fieldcore import ComplexField, DataError, ParameterError, Raster, ShapeError


def frequency_grid(height: int, width: int, pitch: float):
    """Spatial frequencies fx = k / (N * pitch), k in the signed FFT ordering."""
    fy = np.fft.fftfreq(height, d=pitch)
    fx = np.fft.fftfreq(width, d=pitch)
    return fy[:, None], fx[None, :]


@lru_cache(maxsize=32)
def _transfer(height, width, pitch, z, wavelength, remove_piston):
    fy, fx = frequency_grid(height, width, pitch)
    arg = 1.0 / wavelength**2 - fx**2 - fy**2
    propagating = arg >= 0
    kz = np.sqrt(np.where(propagating, arg, 0.0))
    if remove_piston:
        # kz - 1/lambda, written to avoid cancellation for small frequencies
        kz = -(fx**2 + fy**2) / (kz + 1.0 / wavelength)
    H = np.where(propagating, np.exp(2j * np.pi * z * kz), 0.0)
    H.flags.writeable = False
    return H


@dataclass(frozen=True)
class PropagationPlan:
    """Cached angular-spectrum transfer function for one grid, distance and wavelength.

    With ``remove_piston`` the constant phase exp(i 2 pi z / wavelength) of the
    on-axis plane wave is factored out, so a uniform field keeps zero phase.
    """

    height: int
    width: int
    pitch: float
    z: float
    wavelength: float
    remove_piston: bool = False

    def __post_init__(self):
        if self.height <= 0 or self.width <= 0:
            raise ShapeError("propagation grid must be nonempty")
        if not self.wavelength > 0:
            raise ParameterError(f"wavelength must be positive, got {self.wavelength}")
        if not self.pitch > 0:
            raise ParameterError(f"pitch must be positive, got {self.pitch}")

    @property
    def transfer(self) -> np.ndarray:
        return _transfer(
            self.height, self.width, float(self.pitch), float(self.z),
            float(self.wavelength), bool(self.remove_piston),
        )

    def apply(self, values: np.ndarray) -> np.ndarray:
        if values.shape != (self.height, self.width):
            raise ShapeError(f"plan is for {(self.height, self.width)}, got {values.shape}")
        if self.z == 0:
            return np.array(values, dtype=np.complex128)
        return np.fft.ifft2(np.fft.fft2(values) * self.transfer)


def angular_spectrum(field: ComplexField, z: float, wavelength: float, *, remove_piston=False) -> ComplexField:
    """Propagate ``field`` by signed distance ``z`` (meters).

    Evanescent components are discarded. The result has the input's shape and pitch.
    """
    v = field.values
    if not np.all(np.isfinite(v)):
        raise DataError("non-finite samples in field")
    plan = PropagationPlan(field.height, field.width, field.pitch, z, wavelength, remove_piston)
    return ComplexField(plan.apply(v), field.pitch)


def pad_replicate(x, margin: int):
    """Pad a Raster, ComplexField or 2-D array by ``margin`` edge-replicated pixels per side."""
    if margin < 0:
        raise ValueError("margin must be >= 0")
    if isinstance(x, (Raster, ComplexField)):
        return type(x)(np.pad(x.values, margin, mode="edge"), x.pitch)
    return np.pad(np.asarray(x), margin, mode="edge")


def crop_center(x, width: int, height: int):
    """Centered (height, width) window; the offset is (source - target) // 2."""
    v = x.values if isinstance(x, (Raster, ComplexField)) else np.asarray(x)
    H, W = v.shape
    if width > W or height > H:
        raise ShapeError(f"cannot crop {W}x{H} to {width}x{height}")
    y0 = (H - height) // 2
    x0 = (W - width) // 2
    out = v[y0:y0 + height, x0:x0 + width]
    if isinstance(x, (Raster, ComplexField)):
        return type(x)(out, x.pitch)
    return out.copy()
