"""Desk-scale run: build data, train both networks, evaluate, sweep z, time.

    python scripts/desk_pipeline.py --root runs/desk [--no-reuse] [--skip-timing]

Writes CSV/JSON reports and PNG figures into ``--root``.
"""

import argparse
import logging
from pathlib import Path

import numpy as np

from holotwin import bench
from holotwin.experiments import DeskConfig, run_desk


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--root", default="runs/desk")
    ap.add_argument("--no-reuse", action="store_true")
    ap.add_argument("--skip-timing", action="store_true")
    ap.add_argument("--sweep-limit", type=int, default=30)
    a = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")

    run = run_desk(a.root, DeskConfig(), reuse=not a.no_reuse)
    root = Path(a.root)
    print("stage seconds:", {k: round(v, 1) for k, v in run.seconds.items()})

    rep = bench.evaluate({"train": run.train, "validation": run.val, "ood": run.ood},
                         bench.METHODS, run.w_amp, run.w_phase, kinds=("amplitude", "phase"), limit=100)
    print(rep.table())
    (root / "eval.csv").write_text(rep.to_csv())
    (root / "eval.json").write_text(rep.to_json())
    bench.plot_emit(rep, root / "eval_amplitude.png")
    bench.plot_emit(rep, root / "eval_phase.png", kind="phase")

    z0 = run.config.z_distance
    curve = bench.z_sweep(run.w_amp, run.w_phase, run.val, list(z0 * np.linspace(0.5, 1.5, 11)),
                          limit=a.sweep_limit)
    (root / "zsweep.csv").write_text(bench.sweep_csv(curve))
    print(bench.sweep_csv(curve))
    bench.plot_emit({"UTIRnet (desk)": curve}, root / "zsweep.png", z_train=z0)

    if not a.skip_timing:
        t = bench.time_methods([512, 1024, 2048], ["AS", "UTIRnet", "GS", "GS+CFF"], 1,
                               w_a=run.w_amp, w_p=run.w_phase)
        print(t.hardware)
        print(t.to_csv())
        (root / "timing.csv").write_text(t.to_csv())
        bench.plot_emit(t, root / "timing.png")


if __name__ == "__main__":
    main()
