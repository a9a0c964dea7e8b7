"""Static figures for the docs: grouped RMSE bars, z-sweep curves, timing lines."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .evaluate import EvalReport  # noqa: E402
from .timing import TimingReport  # noqa: E402

# fixed metadata keeps repeated renders byte-identical
_META = {"Software": None, "Creation Time": None}


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=100, metadata=_META)
    plt.close(fig)
    return path


def plot_eval(report: EvalReport, path, kind: str = "amplitude") -> Path:
    """Grouped bars: one group per dataset, one bar per method, std as error bars."""
    if report is None or report.empty:
        raise ValueError("empty evaluation report")
    cells = [c for c in report.cells() if c[1] == kind]
    if not cells:
        raise ValueError(f"report has no {kind} cells")
    datasets = sorted({c[0] for c in cells})
    lookup = {(c[0], c[2]): (c[3], c[4]) for c in cells}
    width = 0.8 / len(report.methods)
    fig, ax = plt.subplots(figsize=(6, 3.5))
    x = np.arange(len(datasets))
    for j, m in enumerate(report.methods):
        vals = [lookup.get((d, m), (np.nan, 0.0)) for d in datasets]
        ax.bar(x + (j - (len(report.methods) - 1) / 2) * width, [v[0] for v in vals], width,
               yerr=[v[1] for v in vals], label=m, capsize=2)
    ax.set_xticks(x, datasets)
    ax.set_ylabel(f"RMSE ({kind})")
    ax.legend(fontsize=8)
    fig.tight_layout()
    return _save(fig, path)


def plot_zsweep(curves: dict, path, z_train: float | None = None) -> Path:
    """One line per network (name -> z_sweep curve); the argmin is marked."""
    if not curves or not any(curves.values()):
        raise ValueError("empty z sweep")
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for name, curve in curves.items():
        z = np.array([r["z"] for r in curve]) * 1e3
        rel = np.array([r["relative_rmse"] for r in curve])
        (line,) = ax.plot(z, rel, "o-", ms=3, label=name)
        k = int(np.argmin(rel))
        ax.plot(z[k], rel[k], "v", ms=9, color=line.get_color())
    if z_train is not None:
        ax.axvline(z_train * 1e3, color="0.6", ls="--", lw=1)
    ax.set_xlabel("z [mm]")
    ax.set_ylabel("relative RMSE [%]")
    ax.legend(fontsize=8)
    fig.tight_layout()
    return _save(fig, path)


def plot_timing(report: TimingReport, path) -> Path:
    if report is None or report.empty:
        raise ValueError("empty timing report")
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for m in report.methods:
        ax.loglog(report.sizes, [report.seconds[(m, n)] for n in report.sizes], "o-", label=m)
    ax.set_xlabel("image size [px per side]")
    ax.set_ylabel("time [s]")
    ax.legend(fontsize=8)
    fig.tight_layout()
    return _save(fig, path)


def plot_emit(report, path, **kw) -> Path:
    """Dispatch on report type; a z sweep is passed as a dict of curves."""
    if isinstance(report, EvalReport):
        return plot_eval(report, path, **kw)
    if isinstance(report, TimingReport):
        return plot_timing(report, path)
    if isinstance(report, dict):
        return plot_zsweep(report, path, **kw)
    raise TypeError(f"cannot plot {type(report).__name__}")
