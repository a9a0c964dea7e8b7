"""Adam training loop with a step learning-rate schedule, and a finite-difference
gradient check for the hand-written backward pass."""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass

import numpy as np

from ..fieldcore import CountError
from .network import NetworkSpec, NetworkWeights, forward, init_weights, loss_and_grad

log = logging.getLogger(__name__)


class TrainingError(RuntimeError):
    def __init__(self, msg, epoch):
        super().__init__(f"{msg} (epoch {epoch})")
        self.epoch = epoch


@dataclass(frozen=True)
class TrainConfig:
    initial_lr: float = 1e-4
    lr_drop_every: int = 5
    lr_drop_factor: float = 5.0
    batch_size: int = 1
    epochs: int = 30
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size != 1:
            raise ValueError("only mini-batch size 1 is supported")
        for name in ("initial_lr", "lr_drop_every", "lr_drop_factor", "eps"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    def lr_at(self, epoch: int) -> float:
        """Learning rate for 1-based ``epoch``."""
        return self.initial_lr * self.lr_drop_factor ** (-((epoch - 1) // self.lr_drop_every))

    def to_dict(self):
        return asdict(self)


def dataset_loss(weights, inputs, targets) -> float:
    return float(np.mean([np.mean((forward(weights, x) - t) ** 2) for x, t in zip(inputs, targets)]))


def fit(inputs, targets, spec: NetworkSpec, cfg: TrainConfig, *, val=None, dtype=np.float32):
    """Train a fresh network on paired arrays.

    Returns the trained weights; ``training_meta`` holds the per-epoch loss
    curve, learning rates and (if ``val`` is given) validation losses.
    """
    if len(inputs) == 0:
        raise CountError("training set is empty")
    if len(inputs) != len(targets):
        raise ValueError("inputs and targets differ in length")
    inputs = [np.asarray(x, dtype=dtype) for x in inputs]
    targets = [np.asarray(t, dtype=dtype) for t in targets]

    # independent streams for init and shuffling
    init_seed, shuffle_seed = np.random.SeedSequence(cfg.seed).spawn(2)
    weights = init_weights(spec, int(init_seed.generate_state(1)[0]), dtype=dtype)
    rng = np.random.default_rng(shuffle_seed)

    m = {k: np.zeros_like(v) for k, v in weights.params.items()}
    v2 = {k: np.zeros_like(v) for k, v in weights.params.items()}
    b1, b2 = cfg.beta1, cfg.beta2
    step = 0

    initial_loss = dataset_loss(weights, inputs, targets)
    history = {"loss": [], "lr": [], "val_loss": []}
    log.info("initial loss %.6g", initial_loss)

    for epoch in range(1, cfg.epochs + 1):
        lr = cfg.lr_at(epoch)
        total = 0.0
        for i in rng.permutation(len(inputs)):
            loss, grads = loss_and_grad(weights, inputs[i], targets[i])
            if not np.isfinite(loss):
                raise TrainingError("loss became non-finite", epoch)
            total += loss
            step += 1
            c1 = 1 - b1**step
            c2 = 1 - b2**step
            for k, p in weights.params.items():
                g = grads[k]
                m[k] *= b1
                m[k] += (1 - b1) * g
                v2[k] *= b2
                v2[k] += (1 - b2) * g * g
                p -= (lr * (m[k] / c1) / (np.sqrt(v2[k] / c2) + cfg.eps)).astype(p.dtype, copy=False)
        epoch_loss = total / len(inputs)
        history["loss"].append(epoch_loss)
        history["lr"].append(lr)
        if val is not None:
            history["val_loss"].append(dataset_loss(weights, *val))
        log.info("epoch %d lr %.3g loss %.6g", epoch, lr, epoch_loss)

    weights.training_meta = {
        "epochs": cfg.epochs,
        "initial_loss": initial_loss,
        "final_loss": history["loss"][-1],
        "loss_curve": history["loss"],
        "lr_curve": history["lr"],
        "val_loss_curve": history["val_loss"],
        "train_config": cfg.to_dict(),
    }
    return weights


def gradient_check(spec: NetworkSpec, tolerance: float = 1e-4, *, step: float = 1e-3,
                   size: int = 8, seed: int = 0, weights: NetworkWeights | None = None,
                   x=None, target=None) -> dict:
    """Compare analytic gradients with central finite differences in float64.

    Relative error per parameter is |a - n| / max(|a| + |n|, floor). The
    returned report lists every parameter above ``tolerance`` under ``failures``.
    """
    if spec.filters_per_layer > 4 or size > 8:
        raise ValueError("gradient check is meant for tiny networks (<= 4 filters, <= 8x8 input)")
    rng = np.random.default_rng(seed)
    if weights is None:
        weights = init_weights(spec, seed, dtype=np.float64)
        # nonzero biases keep most ReLUs away from their kink
        for k in weights.params:
            if k.endswith(".b"):
                weights.params[k] = rng.uniform(0.05, 0.2, weights.params[k].shape)
    weights = weights.astype(np.float64)
    if x is None:
        x = rng.uniform(0.0, 1.0, (size, size))
    if target is None:
        target = rng.uniform(0.0, 1.0, (size, size))

    _, analytic = loss_and_grad(weights, x, target)
    floor = 1e-8
    worst = 0.0
    failures = []
    for name, p in weights.params.items():
        a = analytic[name]
        for idx in np.ndindex(p.shape):
            orig = p[idx]
            p[idx] = orig + step
            lp, _ = loss_and_grad(weights, x, target)
            p[idx] = orig - step
            lm, _ = loss_and_grad(weights, x, target)
            p[idx] = orig
            num = (lp - lm) / (2 * step)
            rel = abs(a[idx] - num) / max(abs(a[idx]) + abs(num), floor)
            worst = max(worst, rel)
            if rel > tolerance:
                failures.append((name, idx, float(a[idx]), float(num), float(rel)))
    return {"max_rel_error": worst, "failures": failures, "ok": not failures,
            "n_params": sum(p.size for p in weights.params.values())}


def train(dataset, kind: str, spec: NetworkSpec, cfg: TrainConfig, *, validation=None) -> NetworkWeights:
    """Train CNN_A (``kind='amplitude'``) or CNN_P (``'phase'``) on a dataset manifest."""
    import hashlib
    import json

    inputs, targets = dataset.arrays(kind)
    if not inputs:
        raise CountError(f"dataset has no {kind} pairs")
    val = validation.arrays(kind) if validation is not None else None
    weights = fit(inputs, targets, spec, cfg, val=val)
    params_json = json.dumps(dataset.params.to_dict(), sort_keys=True)
    weights.training_meta.update(
        kind=kind,
        tile_size=dataset.tile_size,
        params=dataset.params.to_dict(),
        params_hash=hashlib.sha256(params_json.encode()).hexdigest(),
        dataset_hash=dataset.content_hash(),
        n_pairs=len(inputs),
    )
    return weights
