"""Network assembly: embedder -> retention encoder -> decoder heads
"""

from dataclasses import dataclass

import numpy as np

from ..tensor import Tensor
from .config import ModelConfig
from .decoder import StepOutput, add_decoder_params, loc_head, mag_head, pick_sequence
from .embedder import WaveEmbedding, add_embedder_params, embed, prepare_input
from .params import Initializer, ParameterSet
from .retention import add_retention_params, encoder_parallel


def init_params(cfg: ModelConfig, seed: int = 0) -> ParameterSet:
    """Fresh parameters in a fixed name order"""
    params = ParameterSet()
    init = Initializer(seed)
    add_embedder_params(params, cfg.embedder, init)
    add_retention_params(params, cfg.retention, init)
    add_decoder_params(params, cfg, init)
    return params


@dataclass
class NetworkOutput:
    embedding: WaveEmbedding
    prediction: Tensor  # [N, D]
    picks: Tensor  # [N, 2] (p_rel, s_rel)
    location: Tensor  # [N, 2] (x_km, y_km)
    magnitude: Tensor  # [N, 1]
    increments: list[Tensor]  # per block, [N]

    @property
    def n_steps(self) -> int:
        return self.picks.shape[0]


class FishNetwork:
    """Parallel-mode (whole record) evaluation of the model"""

    def __init__(self, cfg: ModelConfig, params: ParameterSet | None = None, seed: int = 0):
        self.cfg = cfg
        self.params = params if params is not None else init_params(cfg, seed)

    @property
    def dtype(self) -> np.dtype:
        return self.params.tensors()[0].dtype

    def forward(self, samples: np.ndarray) -> NetworkOutput:
        """Raw samples [3, L] -> outputs for ceil(L/F) steps"""
        x = Tensor(prepare_input(samples, self.cfg.embedder, self.dtype), dtype=self.dtype)
        embedding = embed(x, self.cfg.embedder, self.params, self.cfg.sample_rate_hz)
        encoded = encoder_parallel(embedding.values, self.cfg.retention, self.params)
        return NetworkOutput(
            embedding=embedding,
            prediction=encoded.values,
            picks=pick_sequence(encoded.values, self.cfg, self.params),
            location=loc_head(encoded.values, self.params),
            magnitude=mag_head(encoded.values, self.params),
            increments=encoded.increments,
        )

    def step_outputs(self, samples: np.ndarray) -> list[StepOutput]:
        """Parallel-mode StepOutputs aligned with what a stream emits for the
        same samples (one per complete block of F samples)"""
        out = self.forward(samples)
        factor = self.cfg.downsample_factor
        n = np.asarray(samples).shape[1] // factor
        picks, loc, mag = out.picks.data, out.location.data, out.magnitude.data
        return [
            StepOutput(
                t=(i + 1) * factor,
                p_rel=float(picks[i, 0]),
                s_rel=float(picks[i, 1]),
                magnitude=float(mag[i, 0]),
                x_km=float(loc[i, 0]),
                y_km=float(loc[i, 1]),
            )
            for i in range(n)
        ]
