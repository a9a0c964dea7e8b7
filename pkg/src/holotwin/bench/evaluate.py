"""RMSE evaluation of reconstruction methods over generated datasets, and the
propagation-distance robustness sweep."""

from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..datasetgen import DatasetManifest, object_field, synthesize_pair
from ..fieldcore import ComplexField, Raster, SystemParams, rmse
from ..gsbaseline import CffConfig, Constraint, GsProblem, gs_run
from ..propagate import angular_spectrum, crop_center, pad_replicate
from ..reconstruct import Hologram, ReconstructConfig, cnn_only_reconstruct, utirnet_reconstruct

METHODS = ("AS", "cnn_only", "UTIRnet", "GS", "GS+CFF")
LEARNED = {"cnn_only", "UTIRnet"}
GS_WAVELENGTHS = (405e-9, 561e-9)

# synthetic targets are min-max normalized, not median normalized
SYNTHETIC_RECON = ReconstructConfig(normalize_amplitude=False, tile_size=None)


class ConfigurationError(ValueError):
    pass


def _channel(u: ComplexField, kind: str, n_h: int, n_w: int) -> np.ndarray:
    u = crop_center(u, n_w, n_h)
    return u.amplitude if kind == "amplitude" else u.phase + np.pi


def _gs_constraints(target: np.ndarray, kind: str, params: SystemParams, pad_fraction: float, wavelengths):
    margin = int(round(pad_fraction * max(target.shape)))
    obj = ComplexField(object_field(pad_replicate(target, margin), kind), params.pitch)
    cs = []
    for lam in wavelengths:
        cam = angular_spectrum(obj, -params.z_distance, lam, remove_piston=True)
        cs.append(Constraint(Raster(np.abs(cam.values) ** 2, params.pitch), lam, params.z_distance))
    return cs


@dataclass
class EvalReport:
    """Per-(dataset, kind, method) RMSE lists; every cell of a dataset covers the same pairs."""

    methods: list[str]
    params: dict
    provenance: dict = field(default_factory=dict)
    values: dict = field(default_factory=dict)
    source_ids: dict = field(default_factory=dict)

    def cells(self):
        for (ds, kind, method), v in sorted(self.values.items()):
            yield ds, kind, method, float(np.mean(v)), float(np.std(v)), len(v)

    def mean(self, dataset, kind, method) -> float:
        return float(np.mean(self.values[(dataset, kind, method)]))

    @property
    def empty(self) -> bool:
        return not self.values

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["dataset", "kind", "method", "rmse_mean", "rmse_std", "n"])
        for ds, kind, method, m, s, n in self.cells():
            w.writerow([ds, kind, method, f"{m:.6g}", f"{s:.6g}", n])
        return buf.getvalue()

    def to_json(self) -> str:
        doc = {
            "methods": self.methods,
            "params": self.params,
            "provenance": self.provenance,
            "cells": [
                {"dataset": ds, "kind": k, "method": me, "rmse_mean": m, "rmse_std": s, "n": n}
                for ds, k, me, m, s, n in self.cells()
            ],
        }
        return json.dumps(doc, indent=1, sort_keys=True) + "\n"

    def table(self) -> str:
        lines = [f"{'dataset':<14}{'kind':<11}{'method':<10}{'mean':>10}{'std':>10}{'n':>6}"]
        for ds, kind, method, m, s, n in self.cells():
            lines.append(f"{ds:<14}{kind:<11}{method:<10}{m:>10.5f}{s:>10.5f}{n:>6}")
        return "\n".join(lines)


def evaluate_pair(pair, method: str, w_a=None, w_p=None, *, recon=SYNTHETIC_RECON,
                  pad_fraction=0.5, gs_wavelengths=GS_WAVELENGTHS, gs_iterations=5,
                  cff: CffConfig = CffConfig()) -> float:
    """RMSE of one method on one stored pair, on the pair's own channel."""
    t = pair.target.values
    h, w = t.shape
    if method == "AS":
        return rmse(pair.input, pair.target)
    if method in LEARNED:
        holo = Hologram(pair.hologram, pair.params)
        fn = utirnet_reconstruct if method == "UTIRnet" else cnn_only_reconstruct
        return rmse(_channel(fn(holo, w_a, w_p, recon), pair.kind, h, w), t)
    if method in ("GS", "GS+CFF"):
        cs = _gs_constraints(t, pair.kind, pair.params, pad_fraction, gs_wavelengths)
        res = gs_run(GsProblem(cs, gs_iterations), cff if method == "GS+CFF" else None)
        return rmse(_channel(res.field, pair.kind, h, w), t)
    raise ConfigurationError(f"unknown method {method!r}")


def evaluate(datasets, methods, w_a=None, w_p=None, *, kinds=("amplitude",), limit=None,
             recon: ReconstructConfig = SYNTHETIC_RECON, gs_wavelengths=GS_WAVELENGTHS,
             cff: CffConfig = CffConfig(), workers: int = 1) -> EvalReport:
    """Evaluate ``methods`` on named datasets.

    ``datasets`` maps a name to a DatasetManifest. Pairs are processed in
    manifest order (sorted by source id in the report); ``limit`` caps the
    number of pairs per kind.
    """
    methods = list(methods)
    if not datasets:
        raise ValueError("no datasets given")
    bad = [m for m in methods if m not in METHODS]
    if bad:
        raise ConfigurationError(f"unknown methods {bad}")
    if LEARNED & set(methods) and (w_a is None or w_p is None):
        raise ConfigurationError("learned methods need both amplitude and phase weights")

    first = next(iter(datasets.values()))
    report = EvalReport(methods=methods, params=first.params.to_dict())
    for name, man in datasets.items():
        report.provenance[name] = {"corpus": man.corpus, "master_seed": man.master_seed,
                                   "dataset_hash": man.content_hash()}
        pad_fraction = float(man.corpus.get("pad_fraction", 0.5))
        for kind in kinds:
            idx = man.select(kind)[:limit]
            idx = sorted(idx, key=lambda i: man.pairs[i]["source_id"])
            report.source_ids[(name, kind)] = [man.pairs[i]["source_id"] for i in idx]

            def run(i):
                pair = man.load_pair(i, with_hologram=True)
                return [evaluate_pair(pair, m, w_a, w_p, recon=recon, pad_fraction=pad_fraction,
                                      gs_wavelengths=gs_wavelengths, cff=cff) for m in methods]

            if workers > 1:
                with ThreadPoolExecutor(workers) as pool:
                    rows = list(pool.map(run, idx))
            else:
                rows = [run(i) for i in idx]
            for j, m in enumerate(methods):
                report.values[(name, kind, m)] = [r[j] for r in rows]
    return report


def z_sweep(w_a, w_p, dataset: DatasetManifest, z_values, *, limit=None,
            recon: ReconstructConfig = SYNTHETIC_RECON) -> list[dict]:
    """Relative RMSE (UTIRnet / AS * 100 %) on amplitude targets re-simulated at each z."""
    if any(z <= 0 for z in z_values):
        raise ValueError("z values must be positive")
    if w_a is None or w_p is None:
        raise ConfigurationError("z sweep needs both networks")
    pad_fraction = float(dataset.corpus.get("pad_fraction", 0.5))
    idx = dataset.select("amplitude")[:limit]
    targets = [dataset.load_pair(i).target for i in idx]
    curve = []
    for z in z_values:
        params = dataset.params.with_z(float(z))
        as_err, ut_err = [], []
        for t in targets:
            pair = synthesize_pair(t, "amplitude", params, pad_fraction=pad_fraction)
            as_err.append(rmse(pair.input, pair.target))
            u = utirnet_reconstruct(Hologram(pair.hologram, params), w_a, w_p, recon)
            ut_err.append(rmse(_channel(u, "amplitude", *t.shape), t.values))
        a, u = float(np.mean(as_err)), float(np.mean(ut_err))
        curve.append({"z": float(z), "as_rmse": a, "utirnet_rmse": u, "relative_rmse": 100.0 * u / a})
    return curve


def sweep_csv(curve: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["z_m", "as_rmse", "utirnet_rmse", "relative_rmse_percent"])
    for row in curve:
        w.writerow([f"{row['z']:.6g}", f"{row['as_rmse']:.6g}", f"{row['utirnet_rmse']:.6g}",
                    f"{row['relative_rmse']:.6g}"])
    return buf.getvalue()
