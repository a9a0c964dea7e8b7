"""Two-path image-to-image CNN: a full-resolution path and a pooled path, merged
by channel concatenation and a final convolution."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from ..fieldcore import DataError, ShapeError
from . import layers as L


@dataclass(frozen=True)
class NetworkSpec:
    filters_per_layer: int = 70
    kernel_size: int = 3
    blocks_per_path: int = 4
    pooling: str = "max"
    upsampling: str = "bilinear"
    input_channels: int = 1
    output_channels: int = 1

    def __post_init__(self):
        if self.filters_per_layer < 1:
            raise ValueError("filters_per_layer must be >= 1")
        if self.kernel_size < 1 or self.kernel_size % 2 == 0:
            raise ValueError("kernel_size must be odd")
        if self.blocks_per_path < 1:
            raise ValueError("blocks_per_path must be >= 1")
        if self.pooling not in ("max", "average"):
            raise ValueError(f"unknown pooling {self.pooling!r}")
        if self.upsampling not in ("nearest", "bilinear"):
            raise ValueError(f"unknown upsampling {self.upsampling!r}")
        if self.input_channels != 1 or self.output_channels != 1:
            raise ValueError("only single-channel networks are supported")

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        return cls(**d)

    def param_shapes(self) -> dict[str, tuple]:
        """Parameter names and shapes in declaration order."""
        F, K = self.filters_per_layer, self.kernel_size
        shapes = {}
        for path in ("p1", "p2"):
            cin = self.input_channels
            for i in range(self.blocks_per_path):
                shapes[f"{path}.conv{i}.w"] = (F, cin, K, K)
                shapes[f"{path}.conv{i}.b"] = (F,)
                cin = F
        shapes["final.w"] = (self.output_channels, 2 * F, K, K)
        shapes["final.b"] = (self.output_channels,)
        return shapes


@dataclass(eq=False)
class NetworkWeights:
    spec: NetworkSpec
    params: dict[str, np.ndarray]
    training_meta: dict = field(default_factory=dict)

    def __post_init__(self):
        shapes = self.spec.param_shapes()
        if list(self.params) != list(shapes):
            missing = set(shapes) ^ set(self.params)
            if missing:
                raise ShapeError(f"parameter names do not match spec: {sorted(missing)}")
            self.params = {k: self.params[k] for k in shapes}
        for name, shape in shapes.items():
            if self.params[name].shape != shape:
                raise ShapeError(f"{name}: expected {shape}, got {self.params[name].shape}")
            if not np.all(np.isfinite(self.params[name])):
                raise DataError(f"{name} contains non-finite values")

    @property
    def dtype(self):
        return self.params["final.w"].dtype

    def astype(self, dtype) -> "NetworkWeights":
        return NetworkWeights(
            self.spec, {k: v.astype(dtype) for k, v in self.params.items()}, dict(self.training_meta)
        )

    def copy(self) -> "NetworkWeights":
        return self.astype(self.dtype)


def init_weights(spec: NetworkSpec, seed: int, dtype=np.float32) -> NetworkWeights:
    """He-normal kernels (fan-in scaled), zero biases."""
    rng = np.random.default_rng(seed)
    params = {}
    for name, shape in spec.param_shapes().items():
        if name.endswith(".b"):
            params[name] = np.zeros(shape, dtype=dtype)
        else:
            fan_in = shape[1] * shape[2] * shape[3]
            gain = 2.0 if not name.startswith("final") else 1.0
            params[name] = (rng.standard_normal(shape) * np.sqrt(gain / fan_in)).astype(dtype)
    return NetworkWeights(spec, params)


def zero_weights(spec: NetworkSpec, dtype=np.float64) -> NetworkWeights:
    return NetworkWeights(spec, {k: np.zeros(s, dtype=dtype) for k, s in spec.param_shapes().items()})


def _check_input(x):
    x = np.asarray(x)
    if x.ndim != 2:
        raise ShapeError(f"network input must be 2-D, got shape {x.shape}")
    if x.shape[0] % 2 or x.shape[1] % 2:
        raise ShapeError(f"network input dimensions must be even, got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise DataError("non-finite network input")
    return x


def _forward(weights: NetworkWeights, x: np.ndarray, keep_cache: bool):
    spec, P = weights.spec, weights.params
    h0 = x[None].astype(weights.dtype, copy=False)
    cache = {"x": h0}

    h = h0
    for i in range(spec.blocks_per_path):
        h = L.relu(L.conv2d(h, P[f"p1.conv{i}.w"], P[f"p1.conv{i}.b"]))
        if keep_cache:
            cache[f"p1.{i}"] = h
    top = h

    if spec.pooling == "max":
        h, idx = L.maxpool2(h0)
        cache["pool_idx"] = idx
    else:
        h = L.avgpool2(h0)
    cache["pooled"] = h
    for i in range(spec.blocks_per_path):
        h = L.relu(L.conv2d(h, P[f"p2.conv{i}.w"], P[f"p2.conv{i}.b"]))
        if keep_cache:
            cache[f"p2.{i}"] = h
    up = L.upsample2_bilinear(h) if spec.upsampling == "bilinear" else L.upsample2_nearest(h)

    cat = np.concatenate([top, up], axis=0)
    cache["cat"] = cat
    y = L.conv2d(cat, P["final.w"], P["final.b"])
    return y[0], cache


def forward(weights: NetworkWeights, x) -> np.ndarray:
    """Apply the network to a 2-D array (or Raster values); output has the input's shape."""
    x = _check_input(getattr(x, "values", x))
    y, _ = _forward(weights, x, keep_cache=False)
    return y


def loss_and_grad(weights: NetworkWeights, x, target):
    """Mean-squared-error loss and its gradient with respect to every parameter."""
    x = _check_input(x)
    y, cache = _forward(weights, x, keep_cache=True)
    spec, P = weights.spec, weights.params
    resid = y - target.astype(y.dtype, copy=False)
    loss = float(np.mean(resid.astype(np.float64) ** 2))
    grads = {}

    dy = (2.0 / resid.size) * resid[None]
    dcat, grads["final.w"], grads["final.b"] = L.conv2d_backward(dy.astype(y.dtype), cache["cat"], P["final.w"])
    F = spec.filters_per_layer
    dtop, dup = dcat[:F], dcat[F:]

    if spec.upsampling == "bilinear":
        dh = L.upsample2_bilinear_backward(dup)
    else:
        dh = L.upsample2_nearest_backward(dup)
    for i in reversed(range(spec.blocks_per_path)):
        dh = L.relu_backward(dh, cache[f"p2.{i}"])
        inp = cache[f"p2.{i - 1}"] if i > 0 else cache["pooled"]
        dh, grads[f"p2.conv{i}.w"], grads[f"p2.conv{i}.b"] = L.conv2d_backward(dh, inp, P[f"p2.conv{i}.w"])

    dh = dtop
    for i in reversed(range(spec.blocks_per_path)):
        dh = L.relu_backward(dh, cache[f"p1.{i}"])
        inp = cache[f"p1.{i - 1}"] if i > 0 else cache["x"]
        dh, grads[f"p1.conv{i}.w"], grads[f"p1.conv{i}.b"] = L.conv2d_backward(dh, inp, P[f"p1.conv{i}.w"])

    return loss, {k: grads[k] for k in P}
