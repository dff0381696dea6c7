"""Synthetic Gaussian data and the forward pass of untrained MLPs."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
import numpy as np

from .errors import ConfigError, NumericalError

ACTIVATIONS = ("linear", "relu", "srelu", "tanh")
POOLINGS = ("none", "max", "average")
BIAS_MODES = ("zero", "gaussian", "constant")


@dataclass(frozen=True)
class ArchitectureSpec:
    """A family of randomly initialised fully connected networks.

    ``widths`` holds the pre-pooling width of every hidden layer; a single
    value is broadcast to all ``depth`` layers.  Pooling, when enabled, is
    applied after the activation of every hidden layer.
    """

    depth: int = 1
    widths: tuple[int, ...] = (100,)
    activation: str = "relu"
    pooling: str = "none"
    kernel: int = 1
    gain: float = math.sqrt(2.0)
    bias_mode: str = "zero"
    bias_scale: float = 0.0
    class_count: int = 2

    def __post_init__(self):
        widths = tuple(int(w) for w in np.atleast_1d(self.widths))
        if self.depth < 0 or int(self.depth) != self.depth:
            raise ConfigError("depth must be a non-negative integer", "depth")
        if self.depth > 0 and len(widths) == 1:
            widths = widths * self.depth
        if self.depth > 0 and len(widths) != self.depth:
            raise ConfigError(
                f"got {len(widths)} widths for {self.depth} hidden layers", "widths")
        if any(w < 1 for w in widths):
            raise ConfigError("widths must be positive", "widths")
        object.__setattr__(self, "widths", widths if self.depth > 0 else ())
        if self.activation not in ACTIVATIONS:
            raise ConfigError(f"unknown activation {self.activation!r}", "activation")
        pooling = "average" if self.pooling == "avg" else self.pooling
        object.__setattr__(self, "pooling", pooling)
        if pooling not in POOLINGS:
            raise ConfigError(f"unknown pooling {self.pooling!r}", "pooling")
        if int(self.kernel) != self.kernel or self.kernel < 1:
            raise ConfigError("kernel must be a positive integer", "kernel")
        if pooling == "none" and self.kernel != 1:
            raise ConfigError("kernel must be 1 when pooling is none", "kernel")
        if not (self.gain > 0 and math.isfinite(self.gain)):
            raise ConfigError("gain must be positive", "gain")
        if self.bias_mode not in BIAS_MODES:
            raise ConfigError(f"unknown bias mode {self.bias_mode!r}", "bias_mode")
        if self.class_count < 2:
            raise ConfigError("class_count must be at least 2", "class_count")

    def pooled_widths(self) -> tuple[int, ...]:
        return tuple(-(-w // self.kernel) for w in self.widths)

    def to_dict(self) -> dict:
        return {
            "depth": self.depth, "widths": list(self.widths),
            "activation": self.activation, "pooling": self.pooling,
            "kernel": self.kernel, "gain": self.gain,
            "bias_mode": self.bias_mode, "bias_scale": self.bias_scale,
            "class_count": self.class_count,
        }


@dataclass(frozen=True)
class DataSpec:
    """Gaussian inputs x_b ~ Normal(K_b, var_c) with round-robin labels."""

    input_dim: int = 3072
    dataset_size: int = 10_000
    offset: float | tuple[float, ...] = 0.0
    class_variances: tuple[float, ...] = (1.0,)
    class_count: int = 2

    def __post_init__(self):
        if self.input_dim < 1:
            raise ConfigError("input_dim must be positive", "input_dim")
        if self.dataset_size < 1:
            raise ConfigError("dataset_size must be positive", "dataset_size")
        if self.class_count < 2:
            raise ConfigError("class_count must be at least 2", "class_count")
        variances = tuple(float(v) for v in np.atleast_1d(self.class_variances))
        if len(variances) == 1:
            variances = variances * self.class_count
        if len(variances) != self.class_count:
            raise ConfigError("need one variance per class", "class_variances")
        if any(not v > 0 for v in variances):
            raise ConfigError("class variances must be positive", "class_variances")
        object.__setattr__(self, "class_variances", variances)
        if np.ndim(self.offset) > 0:
            off = tuple(float(k) for k in self.offset)
            if len(off) != self.input_dim:
                raise ConfigError("offset vector length must equal input_dim", "offset")
            object.__setattr__(self, "offset", off)
        else:
            object.__setattr__(self, "offset", float(self.offset))

    def offset_vector(self) -> np.ndarray:
        return np.broadcast_to(np.asarray(self.offset, dtype=np.float64), (self.input_dim,))

    def offset_mean_square(self) -> float:
        """Mean over components of K_b squared."""
        return float(np.mean(np.square(np.asarray(self.offset, dtype=np.float64))))

    def labels(self) -> np.ndarray:
        return np.arange(self.dataset_size) % self.class_count

    def to_dict(self) -> dict:
        off = self.offset if isinstance(self.offset, float) else list(self.offset)
        return {
            "input_dim": self.input_dim, "dataset_size": self.dataset_size,
            "offset": off, "class_variances": list(self.class_variances),
            "class_count": self.class_count,
        }


@dataclass(frozen=True)
class WeightSet:
    """Weight matrices (fan-out x fan-in) and bias vectors, input layer first.

    The last matrix maps the final pooled hidden layer to the outputs.
    """

    matrices: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]
    seed: object = None


@dataclass
class OutputBatch:
    """Raw output values, one row per datapoint and one column per class."""

    values: np.ndarray
    labels: np.ndarray | None = None
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        if not np.all(np.isfinite(self.values)):
            raise NumericalError("network output contains non-finite values")

    def to_csv(self, path) -> None:
        n, c = self.values.shape
        labels = self.labels if self.labels is not None else np.full(n, -1)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["sample_index", "label"] + [f"O_{j}" for j in range(c)])
            for i in range(n):
                w.writerow([i, int(labels[i])] + [repr(float(v)) for v in self.values[i]])


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def generate_dataset(data: DataSpec, seed, dtype=np.float64):
    """Draw the D x d input matrix and its labels.

    Rows are labelled round-robin, so class counts differ by at most one.
    """
    rng = _rng(seed)
    labels = data.labels()
    x = rng.standard_normal((data.dataset_size, data.input_dim), dtype=np.dtype(dtype).type)
    sd = np.sqrt(np.asarray(data.class_variances))[labels].astype(dtype)
    x *= sd[:, None]
    if np.any(data.offset_vector() != 0):
        x += data.offset_vector().astype(dtype)
    return x, labels


def init_weights(arch: ArchitectureSpec, input_dim: int, seed) -> WeightSet:
    """Kaiming normal weights: entries Normal(0, gain^2 / fan_in).

    The fan-in of each layer is the pooled width of the layer feeding it.
    """
    rng = _rng(seed)
    fan_ins = (input_dim,) + arch.pooled_widths()
    fan_outs = arch.widths + (arch.class_count,)
    mats, biases = [], []
    for fan_in, fan_out in zip(fan_ins, fan_outs):
        w = rng.standard_normal((fan_out, fan_in))
        w *= arch.gain / math.sqrt(fan_in)
        mats.append(w)
        if arch.bias_mode == "zero":
            biases.append(np.zeros(fan_out))
        elif arch.bias_mode == "gaussian":
            biases.append(arch.bias_scale * rng.standard_normal(fan_out))
        else:
            biases.append(np.full(fan_out, float(arch.bias_scale)))
    for m in mats:
        m.setflags(write=False)
    return WeightSet(tuple(mats), tuple(biases), seed if not isinstance(seed, np.random.Generator) else None)


def srelu(h, gain):
    """ReLU shifted down by gain/sqrt(2*pi), which centres it for Normal(0, gain^2) input."""
    shift = gain / math.sqrt(2.0 * math.pi)
    return np.maximum(h, 0.0) - shift


def activate(h: np.ndarray, activation: str, gain: float) -> np.ndarray:
    if activation == "linear":
        return h
    if activation == "relu":
        return np.maximum(h, 0.0)
    if activation == "srelu":
        return srelu(h, gain).astype(h.dtype, copy=False)
    if activation == "tanh":
        return np.tanh(h)
    raise ConfigError(f"unknown activation {activation!r}", "activation")


def pool(g: np.ndarray, pooling: str, kernel: int) -> np.ndarray:
    """Pool consecutive blocks of ``kernel`` columns.

    When the width is not a multiple of the kernel, the trailing columns form
    a smaller final block.
    """
    if pooling == "none" or kernel == 1:
        return g
    n, width = g.shape
    full = width // kernel
    reduce = np.max if pooling == "max" else np.mean
    parts = []
    if full:
        parts.append(reduce(g[:, : full * kernel].reshape(n, full, kernel), axis=2))
    if width % kernel:
        parts.append(reduce(g[:, full * kernel:], axis=1, keepdims=True))
    return parts[0] if len(parts) == 1 else np.concatenate(parts, axis=1)


def forward(weights: WeightSet, arch: ArchitectureSpec, inputs: np.ndarray,
            batch_size: int | None = None, dtype=None, labels=None) -> OutputBatch:
    """Propagate inputs through the network and return the raw outputs.

    Computation runs in ``dtype`` (the input dtype by default); outputs are
    returned as float64.  ``batch_size`` bounds the rows processed at once.
    """
    x = np.asarray(inputs)
    if x.ndim != 2 or x.shape[1] != weights.matrices[0].shape[1]:
        raise ConfigError(
            f"inputs of shape {x.shape} do not match first layer fan-in "
            f"{weights.matrices[0].shape[1]}", "input_dim")
    if len(weights.matrices) != arch.depth + 1:
        raise ConfigError("weight set depth does not match architecture", "depth")
    dtype = np.dtype(dtype or (x.dtype if x.dtype.kind == "f" else np.float64))
    mats = [m.astype(dtype, copy=False) for m in weights.matrices]
    bias = [b.astype(dtype, copy=False) for b in weights.biases]
    has_bias = arch.bias_mode != "zero"
    n = x.shape[0]
    step = n if not batch_size else int(batch_size)
    out = np.empty((n, arch.class_count), dtype=np.float64)
    # Overflow surfaces as a NumericalError from OutputBatch, not as warnings.
    with np.errstate(over="ignore", invalid="ignore"):
        for start in range(0, n, step):
            h = x[start:start + step].astype(dtype, copy=False)
            for layer in range(arch.depth):
                h = h @ mats[layer].T
                if has_bias:
                    h += bias[layer]
                h = pool(activate(h, arch.activation, arch.gain), arch.pooling, arch.kernel)
            o = h @ mats[-1].T
            if has_bias:
                o += bias[-1]
            out[start:start + step] = o
    return OutputBatch(out, labels, {"architecture": arch.to_dict(), "seed": weights.seed})
