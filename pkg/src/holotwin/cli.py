"""Command-line entry point: ``holotwin <command> [--config FILE] [flags]``.

Every command accepts a YAML or JSON config whose keys mirror the long flags
(dashes or underscores); flags given on the command line win.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np
import yaml

from . import bench
from .cnn import NetworkSpec, TrainConfig, load_weights, save_weights, train
from .datasetgen import DatasetManifest, build_dataset
from .fieldcore import Raster, SystemParams
from .gsbaseline import CffConfig, Constraint, GsProblem, gs_run
from .io import read_any, write_image, write_raster
from .reconstruct import Hologram, ReconstructConfig, utirnet_reconstruct

log = logging.getLogger("holotwin")

KIND_ALIASES = {"amp": "amplitude", "amplitude": "amplitude", "phase": "phase", "pha": "phase"}


def _csv_list(cast=str):
    def parse(s):
        if isinstance(s, (list, tuple)):
            return [cast(v) for v in s]
        return [cast(v) for v in str(s).split(",") if v.strip()]
    return parse


def _write_out(path, values: np.ndarray, pitch: float, vmin=None, vmax=None):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if path.suffix.lower() == ".htw":
        write_raster(path, Raster(values, pitch))
    else:
        bits = 16 if path.suffix.lower() in (".png", ".tif", ".tiff") else 8
        write_image(path, values, vmin, vmax, bits=bits)


def _params(a) -> SystemParams:
    return SystemParams(a.wavelength, a.pixel, a.z, a.magnification)


def _need(a, *names):
    missing = [n for n in names if getattr(a, n, None) is None]
    if missing:
        raise SystemExit("missing required option(s): " + ", ".join("--" + n.replace("_", "-") for n in missing))


def _optics(p):
    p.add_argument("--wavelength", type=float, help="illumination wavelength [m]")
    p.add_argument("--pixel", type=float, help="camera pixel size [m]")
    p.add_argument("--magnification", type=float, default=1.0)
    p.add_argument("--z", type=float, help="sample-camera distance [m]")


# -- commands -----------------------------------------------------------------

def cmd_gen_dataset(a):
    _need(a, "corpus", "out", "count", "wavelength", "pixel", "z", "seed")
    kinds = [KIND_ALIASES[k] for k in a.kinds]
    man = build_dataset(a.corpus, a.out, a.count, _params(a), a.seed, tile_size=a.tile_size,
                        subdirs=a.subdirs or None, kinds=kinds, denoiser=a.denoiser,
                        pad_fraction=a.pad_fraction)
    print(f"wrote {len(man.pairs)} pairs to {man.root}")


def cmd_train(a):
    _need(a, "dataset", "kind", "out")
    ds = DatasetManifest.load(a.dataset)
    val = DatasetManifest.load(a.validation) if a.validation else None
    spec = NetworkSpec(filters_per_layer=a.filters, kernel_size=a.kernel, blocks_per_path=a.blocks,
                       pooling=a.pooling, upsampling=a.upsampling)
    cfg = TrainConfig(initial_lr=a.lr, epochs=a.epochs, seed=a.seed)
    w = train(ds, KIND_ALIASES[a.kind], spec, cfg, validation=val)
    Path(a.out).parent.mkdir(parents=True, exist_ok=True)
    save_weights(a.out, w)
    print(f"final loss {w.training_meta['final_loss']:.6g} -> {a.out}")


def cmd_reconstruct(a):
    _need(a, "hologram", "wavelength", "pixel", "z", "weights_amp", "weights_phase", "out_amp", "out_phase")
    params = _params(a)
    raw = read_any(a.hologram, params.pitch)
    holo = Hologram.from_array(raw.values, params)
    cfg = ReconstructConfig(tile_size=a.tile_size, overlap=a.overlap, iterations=a.iterations,
                            normalize_amplitude=not a.no_normalize, pad_fraction=a.pad_fraction)
    u = utirnet_reconstruct(holo, load_weights(a.weights_amp), load_weights(a.weights_phase), cfg)
    _write_out(a.out_amp, u.amplitude, u.pitch)
    _write_out(a.out_phase, u.phase, u.pitch, -np.pi, np.pi)
    print(f"wrote {a.out_amp} and {a.out_phase}")


def cmd_gs(a):
    _need(a, "holograms", "wavelengths", "z", "pixel", "out_amp")
    if len(a.holograms) != len(a.wavelengths):
        raise SystemExit("--holograms and --wavelengths differ in length")
    pitch = a.pixel / a.magnification
    cs = [Constraint(read_any(h, pitch), lam, a.z) for h, lam in zip(a.holograms, a.wavelengths)]
    cs = [Constraint(Raster(c.intensity.values, pitch), c.wavelength, c.z_distance) for c in cs]
    cff = CffConfig(sigma=a.cff_sigma) if a.cff else None
    res = gs_run(GsProblem(cs, a.iters), cff)
    _write_out(a.out_amp, res.field.amplitude, pitch)
    if a.out_phase:
        _write_out(a.out_phase, res.field.phase, pitch, -np.pi, np.pi)
    for it, r in enumerate(res.residuals, 1):
        print(f"iteration {it}: residuals " + " ".join(f"{v:.6g}" for v in r))


def _datasets(specs) -> dict:
    out = {}
    for s in specs:
        name, _, path = s.rpartition("=")
        out[name or Path(path).name] = DatasetManifest.load(path)
    return out


def _maybe_weights(a):
    wa = load_weights(a.weights_amp) if a.weights_amp else None
    wp = load_weights(a.weights_phase) if a.weights_phase else None
    return wa, wp


def cmd_evaluate(a):
    _need(a, "dataset")
    wa, wp = _maybe_weights(a)
    rep = bench.evaluate(_datasets(a.dataset), a.methods, wa, wp,
                         kinds=[KIND_ALIASES[k] for k in a.kinds], limit=a.limit, workers=a.workers)
    print(rep.table())
    if a.out_csv:
        Path(a.out_csv).write_text(rep.to_csv())
    if a.out_json:
        Path(a.out_json).write_text(rep.to_json())
    if a.plot:
        bench.plot_emit(rep, a.plot)


def cmd_z_sweep(a):
    _need(a, "dataset", "weights_amp", "weights_phase")
    wa, wp = _maybe_weights(a)
    ds = DatasetManifest.load(a.dataset)
    z0 = ds.params.z_distance
    zs = list(z0 * np.linspace(1 - a.span, 1 + a.span, a.steps))
    curve = bench.z_sweep(wa, wp, ds, zs, limit=a.limit)
    text = bench.sweep_csv(curve)
    print(text, end="")
    if a.out_csv:
        Path(a.out_csv).write_text(text)
    if a.plot:
        bench.plot_emit({"UTIRnet": curve}, a.plot, z_train=z0)


def cmd_bench_time(a):
    wa, wp = _maybe_weights(a)
    params = SystemParams(a.wavelength or 405e-9, a.pixel or 2.4e-6, a.z or 2.6e-3, a.magnification)
    rep = bench.time_methods(a.sizes, a.methods, a.reps, w_a=wa, w_p=wp, params=params,
                             recon=ReconstructConfig(tile_size=a.tile_size))
    print(f"# {rep.hardware}; median of {rep.reps} runs")
    print(rep.to_csv(), end="")
    if a.out_csv:
        Path(a.out_csv).write_text(rep.to_csv())
    if a.plot:
        bench.plot_emit(rep, a.plot)


# -- parser ---------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="holotwin", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, fn, help):
        p = sub.add_parser(name, help=help)
        p.add_argument("--config", help="YAML/JSON file with option values")
        p.set_defaults(func=fn)
        return p

    p = add("gen-dataset", cmd_gen_dataset, "simulate training pairs from an image corpus")
    p.add_argument("--corpus")
    p.add_argument("--out")
    p.add_argument("--count", type=int)
    _optics(p)
    p.add_argument("--seed", type=int)
    p.add_argument("--tile-size", type=int, default=512)
    p.add_argument("--subdirs", type=_csv_list(), default=[])
    p.add_argument("--kinds", type=_csv_list(), default=["amplitude", "phase"])
    p.add_argument("--denoiser", default="nlm", choices=["nlm", "identity"])
    p.add_argument("--pad-fraction", type=float, default=0.5)

    p = add("train", cmd_train, "train an amplitude or phase network")
    p.add_argument("--dataset")
    p.add_argument("--validation")
    p.add_argument("--kind", choices=sorted(KIND_ALIASES))
    p.add_argument("--out")
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--filters", type=int, default=70)
    p.add_argument("--blocks", type=int, default=4)
    p.add_argument("--kernel", type=int, default=3)
    p.add_argument("--pooling", default="max", choices=["max", "average"])
    p.add_argument("--upsampling", default="bilinear", choices=["bilinear", "nearest"])
    p.add_argument("--lr", type=float, default=1e-4)

    p = add("reconstruct", cmd_reconstruct, "reconstruct one hologram")
    p.add_argument("--hologram")
    _optics(p)
    p.add_argument("--weights-amp")
    p.add_argument("--weights-phase")
    p.add_argument("--out-amp")
    p.add_argument("--out-phase")
    p.add_argument("--tile-size", type=int, default=512)
    p.add_argument("--overlap", type=float, default=0.10)
    p.add_argument("--iterations", type=int, default=1)
    p.add_argument("--pad-fraction", type=float, default=0.5)
    p.add_argument("--no-normalize", action="store_true", help="skip median amplitude normalization")

    p = add("gs", cmd_gs, "multi-wavelength Gerchberg-Saxton baseline")
    p.add_argument("--holograms", type=_csv_list())
    p.add_argument("--wavelengths", type=_csv_list(float))
    p.add_argument("--z", type=float)
    p.add_argument("--pixel", type=float)
    p.add_argument("--magnification", type=float, default=1.0)
    p.add_argument("--iters", type=int, default=5)
    p.add_argument("--cff", action="store_true")
    p.add_argument("--cff-sigma", type=float, default=CffConfig.sigma)
    p.add_argument("--out-amp")
    p.add_argument("--out-phase")

    p = add("evaluate", cmd_evaluate, "RMSE of methods over datasets")
    p.add_argument("--dataset", type=_csv_list(), help="comma-separated [NAME=]DIR entries")
    p.add_argument("--methods", type=_csv_list(), default=["AS", "cnn_only", "UTIRnet"])
    p.add_argument("--kinds", type=_csv_list(), default=["amplitude"])
    p.add_argument("--weights-amp")
    p.add_argument("--weights-phase")
    p.add_argument("--limit", type=int)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out-csv")
    p.add_argument("--out-json")
    p.add_argument("--plot")

    p = add("z-sweep", cmd_z_sweep, "relative RMSE versus propagation distance")
    p.add_argument("--dataset")
    p.add_argument("--weights-amp")
    p.add_argument("--weights-phase")
    p.add_argument("--span", type=float, default=0.5, help="relative half-width of the z range")
    p.add_argument("--steps", type=int, default=11)
    p.add_argument("--limit", type=int)
    p.add_argument("--out-csv")
    p.add_argument("--plot")

    p = add("bench-time", cmd_bench_time, "wall-clock timing table")
    p.add_argument("--sizes", type=_csv_list(int), default=[512, 1024, 2048])
    p.add_argument("--methods", type=_csv_list(), default=["AS", "UTIRnet", "GS", "GS+CFF"])
    p.add_argument("--reps", type=int, default=3)
    p.add_argument("--weights-amp")
    p.add_argument("--weights-phase")
    _optics(p)
    p.add_argument("--tile-size", type=int, default=512)
    p.add_argument("--out-csv")
    p.add_argument("--plot")
    return ap


def _apply_config(parser, sub_parser, argv):
    """Re-parse with config values installed as defaults so flags still override them."""
    args = parser.parse_args(argv)
    if not args.config:
        return args
    conf = yaml.safe_load(Path(args.config).read_text()) or {}
    if not isinstance(conf, dict):
        raise SystemExit(f"{args.config}: config must be a mapping")
    known = {a.dest: a for a in sub_parser[args.command]._actions}
    defaults = {}
    for k, v in conf.items():
        dest = k.replace("-", "_")
        if dest not in known:
            raise SystemExit(f"{args.config}: unknown option {k!r}")
        act = known[dest]
        defaults[dest] = act.type(v) if act.type is not None and v is not None else v
    sub_parser[args.command].set_defaults(**defaults)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    parser = build_parser()
    subs = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction)).choices
    args = _apply_config(parser, subs, argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    args.func(args)
    return 0


if __name__ == "__main__":
    sys.exit(main())
