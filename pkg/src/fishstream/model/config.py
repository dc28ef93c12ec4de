"""Model hyperparameters
"""

import math
from dataclasses import asdict, dataclass, field
from typing import Any

from ..core.config import Config
from ..core.exceptions import ConfigError

SAMPLE_RATE_HZ = 100.0


def decay_schedule(n_heads: int) -> list[float]:
    """gamma_h = 1 - 2^(-5-h): one memory scale per head"""
    return [1.0 - 2.0 ** (-5 - h) for h in range(n_heads)]


@dataclass
class EmbedderConfig:
    n_layers: int = 3
    branch_kernel_sizes: list[list[int]] = field(default_factory=lambda: [[3, 5, 7]] * 3)
    channels_per_branch: int = 8
    embed_dim: int = 32
    stride_per_layer: list[int] = field(default_factory=lambda: [2, 2, 1])
    antisymmetric: bool = True
    ewm_alpha: float | None = None
    input_gain: float = 0.01
    norm_eps: float = 1e-6
    in_channels: int = 3

    def __post_init__(self):
        self.branch_kernel_sizes = [list(k) for k in self.branch_kernel_sizes]
        self.stride_per_layer = list(self.stride_per_layer)
        if self.n_layers < 1:
            raise ConfigError(f"embedder.n_layers must be >= 1, got {self.n_layers}")
        if len(self.branch_kernel_sizes) != self.n_layers or len(self.stride_per_layer) != self.n_layers:
            raise ConfigError("embedder: branch_kernel_sizes and stride_per_layer need one entry per layer")
        for layer, kernels in enumerate(self.branch_kernel_sizes):
            if not kernels:
                raise ConfigError(f"embedder: layer {layer} has no branches")
            for k in kernels:
                if k < 1 or k % 2 == 0:
                    raise ConfigError(f"embedder: kernel sizes must be odd, layer {layer} has {k}")
        if any(s < 1 for s in self.stride_per_layer):
            raise ConfigError(f"embedder: strides must be >= 1, got {self.stride_per_layer}")
        if self.channels_per_branch < 1 or self.embed_dim < 1:
            raise ConfigError("embedder: channels_per_branch and embed_dim must be positive")
        if self.ewm_alpha is not None and not 0.0 < self.ewm_alpha <= 1.0:
            raise ConfigError(f"embedder.ewm_alpha must lie in (0, 1], got {self.ewm_alpha}")
        if self.input_gain <= 0:
            raise ConfigError(f"embedder.input_gain must be positive, got {self.input_gain}")

    @property
    def downsample_factor(self) -> int:
        return math.prod(self.stride_per_layer)

    def layer_in_channels(self, layer: int) -> int:
        return self.in_channels if layer == 0 else self.embed_dim

    def layer_feature_channels(self, layer: int) -> int:
        """Channels entering the linear mix: CNN branches plus the ABS branch"""
        return len(self.branch_kernel_sizes[layer]) * self.channels_per_branch + self.layer_in_channels(layer)


@dataclass
class RetentionConfig:
    n_blocks: int = 2
    model_dim: int = 32
    n_heads: int = 4
    ffn_hidden: int = 64
    gammas: list[float] | None = None
    rope_base: float = 10000.0
    norm_eps: float = 1e-6

    def __post_init__(self):
        if self.n_blocks < 1 or self.n_heads < 1:
            raise ConfigError("retention: n_blocks and n_heads must be >= 1")
        if self.model_dim % self.n_heads:
            raise ConfigError(f"retention: model_dim {self.model_dim} not divisible by n_heads {self.n_heads}")
        if self.head_dim % 2:
            raise ConfigError(f"retention: head_dim {self.head_dim} must be even for rotary encoding")
        if self.gammas is None:
            self.gammas = decay_schedule(self.n_heads)
        self.gammas = [float(g) for g in self.gammas]
        if len(self.gammas) != self.n_heads:
            raise ConfigError(f"retention: {len(self.gammas)} decay factors for {self.n_heads} heads")
        if any(not 0.0 < g < 1.0 for g in self.gammas):
            raise ConfigError(f"retention: decay factors must lie in (0, 1), got {self.gammas}")
        if any(b <= a for a, b in zip(self.gammas, self.gammas[1:])):
            raise ConfigError(f"retention: decay factors must be strictly increasing, got {self.gammas}")

    @property
    def head_dim(self) -> int:
        return self.model_dim // self.n_heads


@dataclass
class DecoderConfig:
    bank_seconds: float = 30.0
    pick_kernel: int = 5
    pick_channels: list[int] | None = None
    head_hidden: int | None = None
    absent_threshold: float = 0.99

    def __post_init__(self):
        if self.pick_kernel < 1 or self.pick_kernel % 2 == 0:
            raise ConfigError(f"decoder.pick_kernel must be odd, got {self.pick_kernel}")
        if self.bank_seconds <= 0:
            raise ConfigError("decoder.bank_seconds must be positive")
        if not 0.0 < self.absent_threshold <= 1.0:
            raise ConfigError(f"decoder.absent_threshold must lie in (0, 1], got {self.absent_threshold}")


@dataclass
class ModelConfig:
    """Everything needed to rebuild the network from a checkpoint"""

    embedder: EmbedderConfig
    retention: RetentionConfig
    decoder: DecoderConfig
    sample_rate_hz: float = SAMPLE_RATE_HZ

    def __post_init__(self):
        if self.retention.model_dim != self.embedder.embed_dim:
            raise ConfigError(
                f"retention.model_dim {self.retention.model_dim} != embedder.embed_dim {self.embedder.embed_dim}"
            )
        if self.decoder.pick_channels is None:
            d = self.embedder.embed_dim
            self.decoder.pick_channels = [d, max(d // 2, 1), max(d // 4, 1), max(d // 4, 1)]
        if len(self.decoder.pick_channels) < 2:
            raise ConfigError("decoder.pick_channels needs input width plus at least one conv layer")
        if self.decoder.pick_channels[0] != self.embedder.embed_dim:
            raise ConfigError("decoder.pick_channels must start at embed_dim")
        if self.decoder.head_hidden is None:
            self.decoder.head_hidden = self.embedder.embed_dim
        if self.bank_size <= self.pick_receptive_field:
            raise ConfigError(
                f"memory bank of {self.bank_size} steps must exceed the pick head receptive field "
                f"of {self.pick_receptive_field} steps"
            )

    @property
    def downsample_factor(self) -> int:
        return self.embedder.downsample_factor

    @property
    def embed_rate_hz(self) -> float:
        return self.sample_rate_hz / self.downsample_factor

    @property
    def bank_size(self) -> int:
        return int(round(self.decoder.bank_seconds * self.embed_rate_hz))

    @property
    def pick_layers(self) -> int:
        return len(self.decoder.pick_channels or []) - 1

    @property
    def pick_receptive_field(self) -> int:
        return self.pick_layers * (self.decoder.pick_kernel - 1) + 1

    def steps(self, seconds: float) -> int:
        """Embedding steps spanning the given duration"""
        return int(round(seconds * self.embed_rate_hz))

    def to_dict(self) -> dict[str, Any]:
        return {
            "embedder": asdict(self.embedder),
            "retention": asdict(self.retention),
            "decoder": asdict(self.decoder),
            "sample_rate_hz": self.sample_rate_hz,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ModelConfig":
        try:
            return cls(
                embedder=EmbedderConfig(**data["embedder"]),
                retention=RetentionConfig(**data["retention"]),
                decoder=DecoderConfig(**data["decoder"]),
                sample_rate_hz=float(data.get("sample_rate_hz", SAMPLE_RATE_HZ)),
            )
        except (KeyError, TypeError) as e:
            raise ConfigError(f"Invalid model configuration: {e}") from e

    @classmethod
    def from_config(cls, config: Config) -> "ModelConfig":
        embedder = config.section("embedder")
        retention = config.section("retention")
        retention.setdefault("model_dim", embedder.get("embed_dim", 32))
        return cls.from_dict(
            {
                "embedder": embedder,
                "retention": retention,
                "decoder": config.section("decoder"),
                "sample_rate_hz": config.get("synthetic.sample_rate_hz", SAMPLE_RATE_HZ),
            }
        )
