"""Desk-scale end-to-end experiment: procedural corpora, three datasets, two trained
networks. Shared by the scripts and the acceptance suite."""

from __future__ import annotations

import json
import logging
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .cnn import NetworkSpec, TrainConfig, load_weights, save_weights, train
from .corpus import write_corpus
from .datasetgen import DatasetManifest, build_dataset
from .fieldcore import SystemParams

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class DeskConfig:
    wavelength: float = 405e-9
    pixel_size: float = 2.4e-6
    z_distance: float = 2.6e-3
    tile_size: int = 64
    filters: int = 16
    blocks: int = 2
    # the receptive field (~42 px) must span the twin image's first Fresnel zone,
    # 2 sqrt(2 lambda z) / pitch ~ 38 px; 3x3 kernels see ~14 px and stay z-agnostic
    kernel: int = 9
    train_pairs: int = 200
    heldout_pairs: int = 100
    epochs: int = 10
    # 2000 Adam steps in total, far fewer than a full-scale run
    lr: float = 1e-3
    seed: int = 0
    denoiser: str = "nlm"
    # training and validation draw from disjoint flower classes
    train_classes: tuple = ("daisy", "sunflower", "tulip")
    val_classes: tuple = ("dandelion", "rose")
    images_per_class: int = 70
    ood_images_per_class: int = 40

    @property
    def params(self) -> SystemParams:
        return SystemParams(self.wavelength, self.pixel_size, self.z_distance)


@dataclass
class DeskRun:
    root: Path
    config: DeskConfig
    train: DatasetManifest
    val: DatasetManifest
    ood: DatasetManifest
    w_amp: object
    w_phase: object
    seconds: dict = field(default_factory=dict)


def run_desk(root, cfg: DeskConfig = DeskConfig(), *, reuse: bool = True) -> DeskRun:
    """Build (or reuse) corpora, datasets and weights under ``root``.

    Reuse only happens when ``root/config.json`` matches ``cfg`` exactly.
    """
    root = Path(root)
    stamp = root / "config.json"
    conf_text = json.dumps(asdict(cfg), sort_keys=True)
    fresh = not (reuse and stamp.exists() and stamp.read_text() == conf_text
                 and (root / "w_amp.utir").exists() and (root / "w_phase.utir").exists())
    secs = {}
    if fresh:
        root.mkdir(parents=True, exist_ok=True)
        stamp.unlink(missing_ok=True)
        t = time.perf_counter()
        write_corpus(root / "flora", "flora", cfg.images_per_class, cfg.seed + 1)
        write_corpus(root / "fauna", "fauna", cfg.ood_images_per_class, cfg.seed + 2)
        kw = dict(tile_size=cfg.tile_size, denoiser=cfg.denoiser)
        build_dataset(root / "flora", root / "ds_train", cfg.train_pairs, cfg.params, cfg.seed,
                      subdirs=list(cfg.train_classes), **kw)
        build_dataset(root / "flora", root / "ds_val", cfg.heldout_pairs, cfg.params, cfg.seed + 1,
                      subdirs=list(cfg.val_classes), **kw)
        build_dataset(root / "fauna", root / "ds_ood", cfg.heldout_pairs, cfg.params, cfg.seed + 2, **kw)
        secs["datasets"] = time.perf_counter() - t

        spec = NetworkSpec(filters_per_layer=cfg.filters, kernel_size=cfg.kernel, blocks_per_path=cfg.blocks)
        tcfg = TrainConfig(initial_lr=cfg.lr, epochs=cfg.epochs, seed=cfg.seed)
        ds = DatasetManifest.load(root / "ds_train")
        for kind, name in (("amplitude", "w_amp.utir"), ("phase", "w_phase.utir")):
            t = time.perf_counter()
            save_weights(root / name, train(ds, kind, spec, tcfg))
            secs[f"train_{kind}"] = time.perf_counter() - t
            log.info("trained %s in %.1f s", kind, secs[f"train_{kind}"])
        stamp.write_text(conf_text)
    return DeskRun(
        root=root, config=cfg,
        train=DatasetManifest.load(root / "ds_train"),
        val=DatasetManifest.load(root / "ds_val"),
        ood=DatasetManifest.load(root / "ds_ood"),
        w_amp=load_weights(root / "w_amp.utir"),
        w_phase=load_weights(root / "w_phase.utir"),
        seconds=secs,
    )
