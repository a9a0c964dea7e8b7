"""Wall-clock timing of the reconstruction methods over image sizes."""

from __future__ import annotations

import csv
import io
import os
import platform
import time
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.ndimage import gaussian_filter

from ..fieldcore import ComplexField, Raster, SystemParams
from ..gsbaseline import CffConfig, Constraint, GsProblem, gs_run
from ..propagate import angular_spectrum
from ..reconstruct import Hologram, ReconstructConfig, backpropagate, utirnet_reconstruct
from .evaluate import GS_WAVELENGTHS, ConfigurationError

TIMED = ("AS", "UTIRnet", "GS", "GS+CFF")
HEADERS = {"AS": "AS [s]", "UTIRnet": "UTIRnet [s]", "GS": "GS (5 iter.) [s]", "GS+CFF": "GS+CFF (5 iter.) [s]"}


def hardware_descriptor() -> str:
    return (f"{platform.machine()} {platform.processor() or 'cpu'}; {os.cpu_count()} cores; "
            f"python {platform.python_version()}; numpy {np.__version__}")


@dataclass
class TimingReport:
    sizes: list[int]
    methods: list[str]
    reps: int
    hardware: str = field(default_factory=hardware_descriptor)
    seconds: dict = field(default_factory=dict)  # (method, size) -> median seconds

    @property
    def empty(self) -> bool:
        return not self.seconds

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["Image size [px]"] + [HEADERS[m] for m in self.methods])
        for n in self.sizes:
            w.writerow([f"{n}x{n}"] + [f"{self.seconds[(m, n)]:.6g}" for m in self.methods])
        return buf.getvalue()


def _scene(n: int, params: SystemParams, seed: int = 0):
    """Smooth random absorbing object and its holograms at the GS wavelengths."""
    rng = np.random.default_rng(seed)
    t = 0.4 + 0.6 * gaussian_filter(rng.random((n, n)), 3.0, mode="wrap")
    t = (t - t.min()) / (t.max() - t.min()) * 0.6 + 0.4
    obj = ComplexField(t.astype(np.complex128), params.pitch)
    cs = []
    for lam in GS_WAVELENGTHS:
        cam = angular_spectrum(obj, -params.z_distance, lam, remove_piston=True)
        cs.append(Constraint(Raster(np.abs(cam.values) ** 2, params.pitch), lam, params.z_distance))
    holo = Hologram(cs[0].intensity, replace(params, wavelength=GS_WAVELENGTHS[0]))
    return holo, cs


def time_methods(sizes, methods, reps: int = 3, *, w_a=None, w_p=None,
                 params: SystemParams | None = None, recon: ReconstructConfig = ReconstructConfig(),
                 gs_iterations: int = 5, cff: CffConfig = CffConfig()) -> TimingReport:
    """Median wall-clock seconds per (method, size). Report only, never gated."""
    methods = sorted(set(methods), key=lambda m: TIMED.index(m) if m in TIMED else -1)
    bad = [m for m in methods if m not in TIMED]
    if bad:
        raise ConfigurationError(f"cannot time methods {bad}")
    if "UTIRnet" in methods and (w_a is None or w_p is None):
        raise ConfigurationError("UTIRnet timing needs both networks")
    if reps < 1:
        raise ValueError("reps must be >= 1")
    params = params or SystemParams(405e-9, 2.4e-6, 2.6e-3)
    report = TimingReport(list(sizes), methods, reps)
    for n in report.sizes:
        holo, cs = _scene(n, params)
        runs = {
            "AS": lambda: backpropagate(holo),
            "UTIRnet": lambda: utirnet_reconstruct(holo, w_a, w_p, recon),
            "GS": lambda: gs_run(GsProblem(cs, gs_iterations)),
            "GS+CFF": lambda: gs_run(GsProblem(cs, gs_iterations), cff),
        }
        for m in methods:
            ts = []
            for _ in range(reps):
                t0 = time.perf_counter()
                runs[m]()
                ts.append(time.perf_counter() - t0)
            report.seconds[(m, n)] = float(np.median(ts))
    return report
