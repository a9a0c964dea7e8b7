"""Synthetic twin-image training pairs from an ordinary image corpus.

Targets are clean amplitude ([0, 1]) or phase ([0, 2 pi]) rasters; inputs are
the same objects after a simulated in-line hologram recording and plain
angular-spectrum backpropagation, i.e. corrupted by the twin image.
"""

from __future__ import annotations

import hashlib
import json
import logging
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.ndimage import gaussian_filter
from scipy.signal import convolve2d
from skimage.restoration import denoise_nl_means
from skimage.transform import resize

from .fieldcore import ComplexField, CountError, ParameterError, Raster, ShapeError, SystemParams, wrap_phase
from .io import read_image, read_raster, write_raster
from .propagate import angular_spectrum, crop_center, pad_replicate

log = logging.getLogger(__name__)

KINDS = ("amplitude", "phase")
PHASE_RANGES = ((-2 * np.pi, 0.0), (-np.pi / 2, 0.0))
IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff", ".gif"}
MANIFEST_NAME = "manifest.json"


class DegenerateImageWarning(UserWarning):
    pass


# -- denoisers ---------------------------------------------------------------

def identity_denoiser(x: np.ndarray) -> np.ndarray:
    return x


_LAPLACE_MASK = np.array([[1, -2, 1], [-2, 4, -2], [1, -2, 1]], dtype=float)


def estimate_noise(x: np.ndarray) -> float:
    """Immerkaer's fast Gaussian noise estimate."""
    h, w = x.shape
    if h < 3 or w < 3:
        return 0.0
    s = np.abs(convolve2d(x, _LAPLACE_MASK, mode="valid")).sum()
    return float(s * np.sqrt(0.5 * np.pi) / (6.0 * (w - 2) * (h - 2)))


def nlm_denoiser(x: np.ndarray) -> np.ndarray:
    """Non-local means with a noise level estimated from the image itself."""
    sigma = estimate_noise(x)
    if sigma <= 0:
        return x
    return denoise_nl_means(x, h=0.8 * sigma, sigma=sigma, patch_size=5, patch_distance=6, fast_mode=True)


DENOISERS: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "nlm": nlm_denoiser,
    "identity": identity_denoiser,
}


def _get_denoiser(denoiser):
    if callable(denoiser):
        return denoiser
    try:
        return DENOISERS[denoiser]
    except KeyError:
        raise ValueError(f"unknown denoiser {denoiser!r}; choose from {sorted(DENOISERS)}") from None


# -- target preparation ------------------------------------------------------

def _grayscale_resized(image, size: int, denoiser) -> np.ndarray:
    v = image.values if isinstance(image, Raster) else np.asarray(image, dtype=np.float64)
    if v.size == 0:
        raise ShapeError("empty image")
    if v.shape != (size, size):
        v = resize(v, (size, size), order=1, anti_aliasing=True, mode="edge")
    return np.asarray(_get_denoiser(denoiser)(v), dtype=np.float64)


def _normalize(v: np.ndarray, lo: float, hi: float) -> np.ndarray:
    vmin, vmax = float(v.min()), float(v.max())
    span = vmax - vmin
    if not span > 1e-12 * max(1.0, abs(vmax)):
        warnings.warn("constant image; mapping to mid-range", DegenerateImageWarning, stacklevel=3)
        return np.full_like(v, 0.5 * (lo + hi))
    return lo + (v - vmin) * ((hi - lo) / span)


def prepare_target_amplitude(image, size: int = 512, denoiser="nlm", pitch: float = 1.0) -> Raster:
    """Grayscale, resize to ``size``, denoise, min-max normalize to [0, 1]."""
    v = _grayscale_resized(image, size, denoiser)
    return Raster(_normalize(v, 0.0, 1.0), pitch)


def prepare_target_phase(image, rng, size: int = 512, denoiser="nlm", pitch: float = 1.0,
                         highpass_sigma: float = 10.0, phase_range=None) -> Raster:
    """Phase target in [0, 2 pi].

    After grayscale/resize/denoise, the Gaussian blur (``highpass_sigma`` px) is
    subtracted, the result is normalized into a range drawn with probability 1/2
    from [-2 pi, 0] or [-pi/2, 0], wrapped to (-pi, pi] and shifted by +pi.
    ``phase_range`` overrides the random choice.
    """
    v = _grayscale_resized(image, size, denoiser)
    v = v - gaussian_filter(v, highpass_sigma, mode="nearest")
    if phase_range is None:
        phase_range = PHASE_RANGES[int(rng.integers(2))]
    lo, hi = phase_range
    vmin, vmax = float(v.min()), float(v.max())
    if not vmax - vmin > 1e-12 * max(1.0, abs(vmax)):
        warnings.warn("constant image; flat phase", DegenerateImageWarning, stacklevel=2)
        p = np.zeros_like(v)
    else:
        p = _normalize(v, lo, hi)
    return Raster(wrap_phase(p) + np.pi, pitch)


# -- forward model -----------------------------------------------------------

@dataclass(eq=False)
class TrainingPair:
    input: Raster
    target: Raster
    kind: str
    params: SystemParams
    source_id: str = ""
    seed: int = 0
    hologram: Raster | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}")
        if self.input.shape != self.target.shape:
            raise ShapeError("input and target dimensions differ")


def object_field(target: np.ndarray, kind: str) -> np.ndarray:
    """O = A exp(iP): amplitude objects have P = 0, phase objects A = 1 and P = target - pi."""
    if kind == "amplitude":
        return target.astype(np.complex128)
    return np.exp(1j * wrap_phase(target - np.pi))


def synthesize_pair(target: Raster, kind: str, params: SystemParams, *, pad_fraction: float = 0.5,
                    source_id: str = "", seed: int = 0) -> TrainingPair:
    """Simulate the recorded hologram of ``target`` and its twin-image-corrupted backpropagation.

    The stored hologram is the camera-plane intensity on the padded simulation grid.
    """
    from .reconstruct import backpropagate_amplitude

    if not isinstance(params, SystemParams):
        raise ParameterError("params must be SystemParams")
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}")
    h, w = target.shape
    margin = int(round(pad_fraction * max(h, w)))
    padded = pad_replicate(target.values, margin)
    obj = ComplexField(object_field(padded, kind), params.pitch)
    camera = angular_spectrum(obj, -params.z_distance, params.wavelength, remove_piston=True)
    cam_amp = np.abs(camera.values)
    back = crop_center(backpropagate_amplitude(cam_amp, params), w, h)
    if kind == "amplitude":
        inp = back.amplitude
    else:
        inp = back.phase + np.pi
    return TrainingPair(
        input=Raster(inp, params.pitch),
        target=Raster(target.values, params.pitch),
        kind=kind,
        params=params,
        source_id=source_id,
        seed=seed,
        hologram=Raster(cam_amp**2, params.pitch),
    )


# -- dataset building --------------------------------------------------------

def pair_seed(master_seed: int, source_id: str) -> int:
    """Per-item seed, independent of processing order."""
    digest = hashlib.sha256(source_id.encode("utf-8")).digest()
    key = [int.from_bytes(digest[i:i + 4], "little") for i in range(0, 16, 4)]
    ss = np.random.SeedSequence(entropy=int(master_seed), spawn_key=key)
    return int(ss.generate_state(1, dtype=np.uint32)[0])


def list_images(corpus_dir, subdirs=None) -> list[str]:
    root = Path(corpus_dir)
    roots = [root / s for s in subdirs] if subdirs else [root]
    out = []
    for r in roots:
        if not r.is_dir():
            raise FileNotFoundError(f"corpus folder {r} not found")
        out.extend(
            p.relative_to(root).as_posix()
            for p in r.rglob("*")
            if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES
        )
    return sorted(out)


@dataclass
class DatasetManifest:
    """Index of a generated dataset; file paths are relative to ``root``."""

    params: SystemParams
    tile_size: int
    master_seed: int
    pairs: list[dict] = field(default_factory=list)
    corpus: dict = field(default_factory=dict)
    root: Path = Path(".")

    def to_json(self) -> str:
        doc = {
            "format": "holotwin-dataset",
            "version": 1,
            "params": self.params.to_dict(),
            "tile_size": self.tile_size,
            "master_seed": self.master_seed,
            "corpus": self.corpus,
            "pairs": self.pairs,
        }
        return json.dumps(doc, indent=1, sort_keys=True) + "\n"

    def save(self, root=None) -> Path:
        root = Path(root or self.root)
        root.mkdir(parents=True, exist_ok=True)
        path = root / MANIFEST_NAME
        path.write_text(self.to_json())
        return path

    @classmethod
    def load(cls, path) -> "DatasetManifest":
        path = Path(path)
        if path.is_dir():
            path = path / MANIFEST_NAME
        doc = json.loads(path.read_text())
        if doc.get("format") != "holotwin-dataset":
            raise ValueError(f"{path} is not a dataset manifest")
        return cls(
            params=SystemParams.from_dict(doc["params"]),
            tile_size=int(doc["tile_size"]),
            master_seed=int(doc["master_seed"]),
            pairs=list(doc["pairs"]),
            corpus=dict(doc.get("corpus", {})),
            root=path.parent,
        )

    def select(self, kind=None) -> list[int]:
        return [i for i, p in enumerate(self.pairs) if kind is None or p["kind"] == kind]

    def load_pair(self, i: int, with_hologram: bool = False) -> TrainingPair:
        rec = self.pairs[i]
        holo = read_raster(self.root / rec["hologram"]) if with_hologram else None
        return TrainingPair(
            input=read_raster(self.root / rec["input"]),
            target=read_raster(self.root / rec["target"]),
            kind=rec["kind"],
            params=self.params,
            source_id=rec["source_id"],
            seed=rec["seed"],
            hologram=holo,
        )

    def arrays(self, kind: str):
        """(inputs, targets) as lists of 2-D arrays for one channel kind."""
        idx = self.select(kind)
        pairs = [self.load_pair(i) for i in idx]
        return [p.input.values for p in pairs], [p.target.values for p in pairs]

    def content_hash(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()


def _f32(r: Raster) -> Raster:
    return Raster(r.values.astype(np.float32).astype(np.float64), r.pitch)


def build_dataset(corpus_dir, out_dir, count: int, params: SystemParams, master_seed: int, *,
                  tile_size: int = 512, subdirs=None, kinds=KINDS, denoiser="nlm",
                  highpass_sigma: float = 10.0, pad_fraction: float = 0.5) -> DatasetManifest:
    """Generate ``count`` pairs per kind from images under ``corpus_dir``.

    Images are drawn in a seeded order from ``subdirs`` (or the whole tree).
    Unreadable files are skipped with a warning. Targets are quantized to
    float32 before simulation so stored inputs are reproducible from stored
    targets.
    """
    out_dir = Path(out_dir)
    manifest = DatasetManifest(
        params=params, tile_size=tile_size, master_seed=int(master_seed), root=out_dir,
        corpus={
            "name": Path(corpus_dir).name,
            "subdirs": list(subdirs) if subdirs else [],
            "denoiser": denoiser if isinstance(denoiser, str) else getattr(denoiser, "__name__", "custom"),
            "highpass_sigma": highpass_sigma,
            "pad_fraction": pad_fraction,
        },
    )
    if count < 0:
        raise CountError("count must be >= 0")
    if count == 0:
        manifest.save()
        return manifest

    files = list_images(corpus_dir, subdirs)
    if len(files) < count:
        raise CountError(f"corpus has {len(files)} images, {count} requested")
    order = np.random.default_rng(master_seed).permutation(len(files))
    (out_dir / "pairs").mkdir(parents=True, exist_ok=True)

    n_done = 0
    for j in order:
        if n_done == count:
            break
        source_id = files[j]
        try:
            image = read_image(Path(corpus_dir) / source_id)
        except Exception as exc:  # PIL raises a zoo of exception types
            log.warning("skipping unreadable image %s: %s", source_id, exc)
            continue
        seed = pair_seed(master_seed, source_id)
        rng = np.random.default_rng(seed)
        for kind in kinds:
            if kind == "amplitude":
                target = prepare_target_amplitude(image, tile_size, denoiser, params.pitch)
            else:
                target = prepare_target_phase(image, rng, tile_size, denoiser, params.pitch, highpass_sigma)
            pair = synthesize_pair(_f32(target), kind, params, pad_fraction=pad_fraction,
                                   source_id=source_id, seed=seed)
            stem = f"pairs/{n_done:05d}_{kind[:3]}"
            rec = {
                "kind": kind,
                "source_id": source_id,
                "seed": seed,
                "width": tile_size,
                "height": tile_size,
                "input": stem + "_input.htw",
                "target": stem + "_target.htw",
                "hologram": stem + "_holo.htw",
            }
            write_raster(out_dir / rec["input"], pair.input)
            write_raster(out_dir / rec["target"], pair.target)
            write_raster(out_dir / rec["hologram"], pair.hologram)
            manifest.pairs.append(rec)
        n_done += 1
    if n_done < count:
        raise CountError(f"only {n_done} readable images, {count} requested")
    manifest.save()
    return manifest
