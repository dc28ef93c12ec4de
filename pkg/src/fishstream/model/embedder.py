"""Wave embedder: stacked multi-scale causal convolution layers.

Each layer concatenates three causal CNN branches with an ABS branch (|x|
averaged over the stride window), mixes them to D channels, then applies
gelu and a per-timestep RMSNorm. Row t of the output depends only on input
samples with index <= t*F.
"""

from dataclasses import dataclass

import numpy as np

from ..core.exceptions import ConfigError, ShapeError
from ..tensor import Tensor, default_dtype, kernels, ops
from .config import SAMPLE_RATE_HZ, EmbedderConfig
from .params import Initializer, ParameterSet


@dataclass
class WaveEmbedding:
    values: Tensor  # [L/F, D]
    downsample_factor: int
    sample_rate_hz: float

    @property
    def n_steps(self) -> int:
        return self.values.shape[0]


# Input conditioning ------------------------------------------------------

class EwmFilter:
    """Online exponentially weighted trend, one state per channel"""

    def __init__(self, alpha: float):
        if not 0.0 < alpha <= 1.0:
            raise ConfigError(f"ewm alpha must lie in (0, 1], got {alpha}")
        self.alpha = alpha
        self.trend: np.ndarray | None = None

    def update(self, sample: np.ndarray) -> np.ndarray:
        """Consume one sample vector, return its residual"""
        x = np.asarray(sample, dtype=np.float64)
        if self.trend is None:
            self.trend = x.copy()
        else:
            self.trend = self.alpha * x + (1.0 - self.alpha) * self.trend
        return x - self.trend

    def reset(self):
        self.trend = None


def ewm_decompose(x: np.ndarray, alpha: float) -> tuple[np.ndarray, np.ndarray]:
    """Split x[C, L] into (trend, residual) with the online filter"""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ShapeError(f"ewm_decompose: expected [C, L], got {x.shape}")
    filt = EwmFilter(alpha)
    residual = np.empty_like(x)
    for i in range(x.shape[1]):
        residual[:, i] = filt.update(x[:, i])
    return x - residual, residual


class InputConditioner:
    """Per-sample input transform: optional EWM detrend, then constant gain"""

    def __init__(self, cfg: EmbedderConfig, dtype=None):
        self.dtype = np.dtype(dtype or default_dtype()).type
        self.gain = self.dtype(cfg.input_gain)
        self.ewm = EwmFilter(cfg.ewm_alpha) if cfg.ewm_alpha is not None else None

    def push(self, sample: np.ndarray) -> np.ndarray:
        x = self.ewm.update(sample) if self.ewm is not None else sample
        return np.asarray(x, dtype=self.dtype) * self.gain

    def reset(self):
        if self.ewm is not None:
            self.ewm.reset()


def prepare_input(samples: np.ndarray, cfg: EmbedderConfig, dtype=None) -> np.ndarray:
    """Whole-record version of InputConditioner: [3, L] -> [3, L]"""
    samples = np.asarray(samples)
    if samples.ndim != 2 or samples.shape[0] != cfg.in_channels:
        raise ShapeError(f"prepare_input: expected [{cfg.in_channels}, L], got {samples.shape}")
    conditioner = InputConditioner(cfg, dtype)
    if cfg.ewm_alpha is None:
        return np.asarray(samples, dtype=conditioner.dtype) * conditioner.gain
    out = np.empty(samples.shape, dtype=conditioner.dtype)
    for i in range(samples.shape[1]):
        out[:, i] = conditioner.push(samples[:, i])
    return out


# Parameters --------------------------------------------------------------

def add_embedder_params(params: ParameterSet, cfg: EmbedderConfig, init: Initializer):
    for layer in range(cfg.n_layers):
        c_in = cfg.layer_in_channels(layer)
        prefix = f"embedder.{layer}"
        for b, k in enumerate(cfg.branch_kernel_sizes[layer]):
            params.add(
                f"{prefix}.branch{b}.weight",
                init.normal(cfg.channels_per_branch, c_in, k, fan_in=c_in * k),
            )
        c_feat = cfg.layer_feature_channels(layer)
        params.add(f"{prefix}.mix.weight", init.normal(cfg.embed_dim, c_feat, 1, fan_in=c_feat))
        params.add(f"{prefix}.mix.bias", init.zeros(cfg.embed_dim))
        params.add(f"{prefix}.norm.gain", init.ones(cfg.embed_dim))


# Differentiable forward --------------------------------------------------

def antisymmetrize(w: Tensor) -> Tensor:
    """(w - reverse(w)) / 2 along the tap axis"""
    return ops.antisymmetrize(w)


def msf_forward(x: Tensor, layer: int, cfg: EmbedderConfig, params: ParameterSet) -> Tensor:
    """Multi-scale feature mix, x[C_in, L] -> [D, ceil(L/stride)] (pre-activation)"""
    c_in = cfg.layer_in_channels(layer)
    if x.ndim != 2 or x.shape[0] != c_in:
        raise ShapeError(f"msf_forward: layer {layer} expects [{c_in}, L], got {x.shape}")
    stride = cfg.stride_per_layer[layer]
    prefix = f"embedder.{layer}"

    features = []
    for b, k in enumerate(cfg.branch_kernel_sizes[layer]):
        w = params[f"{prefix}.branch{b}.weight"]
        if cfg.antisymmetric:
            w = antisymmetrize(w)
        features.append(ops.conv1d(x, w, stride=stride, padding=(k - 1, 0)))
    features.append(ops.causal_mean(ops.absolute(x), stride))

    mixed = ops.conv1d(ops.concat(features, axis=0), params[f"{prefix}.mix.weight"])
    return ops.transpose(ops.add_bias(ops.transpose(mixed), params[f"{prefix}.mix.bias"]))


def msl_forward(x: Tensor, layer: int, cfg: EmbedderConfig, params: ParameterSet) -> Tensor:
    """rmsnorm(gelu(msf(x))) per timestep, channels-first in and out"""
    h = ops.gelu(ops.transpose(msf_forward(x, layer, cfg, params)))
    h = ops.rmsnorm(h, params[f"embedder.{layer}.norm.gain"], eps=cfg.norm_eps)
    return ops.transpose(h)


def embed(
    x: Tensor,
    cfg: EmbedderConfig,
    params: ParameterSet,
    sample_rate_hz: float = SAMPLE_RATE_HZ,
) -> WaveEmbedding:
    """Conditioned waveform x[3, L] -> WaveEmbedding with ceil(L/F) rows"""
    factor = cfg.downsample_factor
    if x.ndim != 2 or x.shape[0] != cfg.in_channels:
        raise ShapeError(f"embed: expected [{cfg.in_channels}, L], got {x.shape}")
    if x.shape[1] < factor:
        raise ShapeError(f"embed: input length {x.shape[1]} is shorter than the required minimum of {factor} samples")
    h = x
    for layer in range(cfg.n_layers):
        h = msl_forward(h, layer, cfg, params)
    return WaveEmbedding(ops.transpose(h), factor, sample_rate_hz / factor)


# Streaming forward -------------------------------------------------------

class _LayerStream:
    """One layer's short input history plus its frozen weights"""

    def __init__(self, layer: int, cfg: EmbedderConfig, arrays: dict[str, np.ndarray], dtype):
        prefix = f"embedder.{layer}"
        self.kernel_sizes = cfg.branch_kernel_sizes[layer]
        self.stride = cfg.stride_per_layer[layer]
        self.eps = cfg.norm_eps
        self.branch_weights = []
        for b in range(len(self.kernel_sizes)):
            w = arrays[f"{prefix}.branch{b}.weight"]
            self.branch_weights.append(kernels.antisymmetric(w) if cfg.antisymmetric else w)
        self.mix_weight = arrays[f"{prefix}.mix.weight"]
        self.mix_bias = arrays[f"{prefix}.mix.bias"]
        self.gain = arrays[f"{prefix}.norm.gain"]
        width = max(max(self.kernel_sizes), self.stride)
        self.history = np.zeros((width, cfg.layer_in_channels(layer)), dtype=dtype)
        self.count = 0

    def reset(self):
        self.history[...] = 0
        self.count = 0

    def push(self, row: np.ndarray) -> np.ndarray | None:
        self.history[:-1] = self.history[1:]
        self.history[-1] = row
        emit = self.count % self.stride == 0
        self.count += 1
        if not emit:
            return None

        features = [kernels.conv1d_tm(self.history[-k:], w) for k, w in zip(self.kernel_sizes, self.branch_weights)]
        features.append(kernels.window_mean_tm(np.abs(self.history[-self.stride :]), self.stride))
        mixed = kernels.conv1d_tm(np.concatenate(features, axis=1), self.mix_weight) + self.mix_bias
        return kernels.rmsnorm(kernels.gelu(mixed), self.gain, self.eps)[0]


class StreamingEmbedder:
    """Sample-by-sample embedder with constant state.

    Bit-identical to `embed` on the same conditioned input: each layer keeps
    its last max(K, stride) input rows, zero-initialized like the causal
    padding, and runs the shared kernels on them.
    """

    def __init__(self, cfg: EmbedderConfig, arrays: dict[str, np.ndarray], dtype=None):
        self.cfg = cfg
        dtype = np.dtype(dtype or default_dtype()).type
        self.conditioner = InputConditioner(cfg, dtype)
        self.layers = [_LayerStream(i, cfg, arrays, dtype) for i in range(cfg.n_layers)]

    @property
    def state_size(self) -> int:
        """Number of reals held"""
        return sum(layer.history.size for layer in self.layers)

    def reset(self):
        self.conditioner.reset()
        for layer in self.layers:
            layer.reset()

    def push(self, sample: np.ndarray) -> np.ndarray | None:
        """Consume one raw 3-channel sample; return an embedding row when
        this sample completes one (every F-th sample, starting at index 0)"""
        row: np.ndarray | None = self.conditioner.push(sample)
        for layer in self.layers:
            row = layer.push(row)
            if row is None:
                return None
        return row
