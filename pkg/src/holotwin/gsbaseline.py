"""Multi-hologram Gerchberg-Saxton reconstruction and an approximate variant with
object-plane complex-field filtering (GS+CFF).

The object-plane field is shared between constraints; each constraint uses its
own wavelength and distance in the transfer function (object dispersion ignored).
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.ndimage import gaussian_filter

from .fieldcore import ComplexField, Raster, ShapeError, rmse
from .propagate import angular_spectrum

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Constraint:
    intensity: Raster
    wavelength: float
    z_distance: float

    @property
    def amplitude(self) -> np.ndarray:
        return np.sqrt(np.maximum(self.intensity.values, 0.0))


@dataclass(frozen=True, eq=False)
class GsProblem:
    constraints: list[Constraint]
    iterations: int = 5
    object_plane_pitch: float | None = None

    def __post_init__(self):
        if not self.constraints:
            raise ValueError("at least one constraint is required")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        shape = self.constraints[0].intensity.shape
        for c in self.constraints:
            if c.intensity.shape != shape:
                raise ShapeError("constraint rasters must share dimensions")

    @property
    def pitch(self) -> float:
        return self.object_plane_pitch or self.constraints[0].intensity.pitch


@dataclass(frozen=True)
class CffConfig:
    """Object-plane amplitude filter approximating complex-field filtering.

    The Gaussian low-pass (``sigma`` px) of the amplitude is taken as the
    background; it is subtracted and replaced by its mean, then amplitudes are
    clamped to [0, (1 + headroom) * mean].
    """

    sigma: float = 20.0
    headroom: float = 0.0
    enabled: bool = True


@dataclass(eq=False)
class GsResult:
    field: ComplexField
    residuals: list[list[float]] = field(default_factory=list)
    meta: dict = field(default_factory=dict)


def cff_filter(obj: np.ndarray, cfg: CffConfig) -> np.ndarray:
    amp = np.abs(obj)
    bg = gaussian_filter(amp, cfg.sigma, mode="nearest")
    level = float(bg.mean())
    flat = np.clip(amp - bg + level, 0.0, (1.0 + cfg.headroom) * level)
    ph = np.angle(obj)
    return flat * np.exp(1j * ph)


def _to_sample(values, c: Constraint, pitch):
    return angular_spectrum(ComplexField(values, pitch), c.z_distance, c.wavelength, remove_piston=True).values


def _to_camera(values, c: Constraint, pitch):
    return angular_spectrum(ComplexField(values, pitch), -c.z_distance, c.wavelength, remove_piston=True).values


def gs_run(problem: GsProblem, cff: CffConfig | None = None) -> GsResult:
    """Cyclic projections starting from the first constraint's amplitude with zero phase.

    One iteration visits constraints 1, 2, ..., n-1 and then 0 again; at each
    plane the predicted amplitude is replaced by the measured one.
    ``residuals[it][j]`` is the amplitude RMSE at plane j before replacement.
    """
    cs = problem.constraints
    pitch = problem.pitch
    amps = [c.amplitude for c in cs]
    order = list(range(1, len(cs))) + [0]
    use_cff = cff is not None and cff.enabled

    cur = amps[0].astype(np.complex128)
    k = 0
    residuals = []
    for it in range(problem.iterations):
        res = [0.0] * len(cs)
        for j in order:
            obj = _to_sample(cur, cs[k], pitch)
            if use_cff:
                obj = cff_filter(obj, cff)
            pred = _to_camera(obj, cs[j], pitch)
            res[j] = rmse(np.abs(pred), amps[j])
            cur = amps[j] * np.exp(1j * np.angle(pred))
            k = j
        residuals.append(res)
        log.debug("GS iteration %d residuals %s", it + 1, res)
    obj = _to_sample(cur, cs[k], pitch)
    if use_cff:
        obj = cff_filter(obj, cff)
    meta = {"iterations": problem.iterations, "cff": asdict(cff) if use_cff else None,
            "cff_note": "approximate complex-field filtering (low-pass background flattening)" if use_cff else None}
    return GsResult(ComplexField(obj, pitch), residuals, meta)


def gs_multi(problem: GsProblem) -> ComplexField:
    return gs_run(problem).field


def gs_cff(problem: GsProblem, filter_cfg: CffConfig = CffConfig()) -> ComplexField:
    return gs_run(problem, filter_cfg).field
