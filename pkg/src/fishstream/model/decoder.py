"""Decoder heads and the memory bank.

The pick head reads the last T_bank prediction embeddings and regresses, per
phase, the arrival position inside that window as a value in [0, 1); 1.0
means "no arrival in the bank". Location and magnitude heads read only the
current embedding.
"""

import math
from collections.abc import Iterable
from dataclasses import dataclass
from enum import Enum

import numpy as np

from ..core.exceptions import ShapeError
from ..tensor import Tensor, default_dtype, kernels, ops
from .config import ModelConfig
from .params import Initializer, ParameterSet

# sigmoid(4.6) ~= 0.99: an untrained head starts out reporting "absent"
ABSENT_LOGIT = 4.6


class Phase(str, Enum):
    P = "P"
    S = "S"


@dataclass(frozen=True)
class PickEvent:
    phase: Phase
    sample_index: int

    def to_dict(self) -> dict:
        return {"phase": self.phase.value, "sample_index": self.sample_index}


@dataclass
class StepOutput:
    """Decoder outputs at one embedding step; t is the count of samples seen"""

    t: int
    p_rel: float
    s_rel: float
    magnitude: float
    x_km: float
    y_km: float

    @property
    def distance_km(self) -> float:
        return math.hypot(self.x_km, self.y_km)

    @property
    def back_azimuth_deg(self) -> float:
        """Degrees clockwise from north, in [0, 360)"""
        return math.degrees(math.atan2(self.x_km, self.y_km)) % 360.0

    def to_json(self) -> str:
        return (
            f'{{"t": {self.t}, "p": {self.p_rel:.6f}, "s": {self.s_rel:.6f}, '
            f'"mag": {self.magnitude:.6f}, "x_km": {self.x_km:.6f}, "y_km": {self.y_km:.6f}}}'
        )


# Parameters --------------------------------------------------------------

def add_decoder_params(params: ParameterSet, cfg: ModelConfig, init: Initializer):
    dec = cfg.decoder
    channels = dec.pick_channels or []
    k = dec.pick_kernel
    for layer, (c_in, c_out) in enumerate(zip(channels, channels[1:])):
        params.add(f"decoder.pick.conv{layer}.weight", init.normal(c_out, c_in, k, fan_in=c_in * k))
        params.add(f"decoder.pick.conv{layer}.bias", init.zeros(c_out))
    params.add("decoder.pick.out.weight", init.normal(channels[-1], 2, fan_in=channels[-1]))
    params.add("decoder.pick.out.bias", init.full(ABSENT_LOGIT, 2))

    d, hidden = cfg.embedder.embed_dim, dec.head_hidden or cfg.embedder.embed_dim
    for name, width in (("loc", 2), ("mag", 1)):
        params.add(f"decoder.{name}.w1", init.normal(d, hidden, fan_in=d))
        params.add(f"decoder.{name}.b1", init.zeros(hidden))
        params.add(f"decoder.{name}.w2", init.normal(hidden, width, fan_in=hidden))
        params.add(f"decoder.{name}.b2", init.zeros(width))


def _array(params, name: str) -> np.ndarray:
    value = params[name]
    return value.data if isinstance(value, Tensor) else value


# Memory bank -------------------------------------------------------------

class MemoryBank:
    """Fixed-capacity FIFO of prediction embeddings.

    Slots that have never been written read as zero vectors.
    """

    def __init__(self, capacity: int, dim: int, dtype=None):
        if capacity < 1:
            raise ShapeError(f"MemoryBank capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self.dim = dim
        self._data = np.zeros((capacity, dim), dtype=dtype or default_dtype())
        self._next = 0
        self.fill = 0

    def push(self, e: np.ndarray):
        e = np.asarray(e)
        if e.shape != (self.dim,):
            raise ShapeError(f"MemoryBank.push: expected embedding of shape ({self.dim},), got {e.shape}")
        self._data[self._next] = e
        self._next = (self._next + 1) % self.capacity
        self.fill = min(self.fill + 1, self.capacity)

    def values(self) -> np.ndarray:
        """[capacity, dim], oldest slot first"""
        return np.roll(self._data, -self._next, axis=0)

    def newest(self) -> np.ndarray:
        return self._data[(self._next - 1) % self.capacity].copy()

    def reset(self):
        self._data[...] = 0
        self._next = 0
        self.fill = 0

    @property
    def state_size(self) -> int:
        return int(self._data.size)


# Pick head ---------------------------------------------------------------

def _pick_layer_names(cfg: ModelConfig) -> list[tuple[str, str]]:
    return [(f"decoder.pick.conv{i}.weight", f"decoder.pick.conv{i}.bias") for i in range(cfg.pick_layers)]


def _pick_output(features: np.ndarray, params) -> np.ndarray:
    return kernels.sigmoid(kernels.linear(features, _array(params, "decoder.pick.out.weight"), _array(params, "decoder.pick.out.bias")))


def pick_head(bank: MemoryBank | np.ndarray, cfg: ModelConfig, params) -> tuple[float, float]:
    """Direct evaluation over the whole bank: valid convs, global max, sigmoid"""
    h = bank.values() if isinstance(bank, MemoryBank) else np.asarray(bank)
    if h.ndim != 2 or h.shape[0] < cfg.pick_receptive_field:
        raise ShapeError(f"pick_head: bank of shape {h.shape} is shorter than the receptive field {cfg.pick_receptive_field}")
    for w_name, b_name in _pick_layer_names(cfg):
        h = kernels.gelu(kernels.conv1d_tm(h, _array(params, w_name)) + _array(params, b_name))
    p, s = _pick_output(h.max(axis=0), params)
    return float(p), float(s)


class IncrementalPickHead:
    """Streaming pick head, equal to `pick_head` over the current bank.

    Keeps the last K inputs of every conv layer and a ring of the final
    layer's outputs covering the bank; rows that stem only from missing
    history are the constant features of an all-zero window.
    """

    def __init__(self, cfg: ModelConfig, params, dtype=None):
        dtype = dtype or default_dtype()
        self.kernel = cfg.decoder.pick_kernel
        self.params = params
        self.weights = [(_array(params, w), _array(params, b)) for w, b in _pick_layer_names(cfg)]
        self.window = cfg.bank_size - cfg.pick_receptive_field + 1

        # constant features of missing history, one per layer input and the output
        self._fill_rows = [np.zeros(cfg.embedder.embed_dim, dtype=dtype)]
        for w, b in self.weights:
            block = np.repeat(self._fill_rows[-1][None, :], self.kernel, axis=0)
            self._fill_rows.append(kernels.gelu(kernels.conv1d_tm(block, w) + b)[0])
        self.histories = [np.zeros((self.kernel, row.size), dtype=dtype) for row in self._fill_rows[:-1]]
        self.ring = np.zeros((self.window, self._fill_rows[-1].size), dtype=dtype)
        self._next = 0
        self.reset()

    def reset(self):
        for history, row in zip(self.histories, self._fill_rows):
            history[...] = row
        self.ring[...] = self._fill_rows[-1]
        self._next = 0

    @property
    def state_size(self) -> int:
        return int(sum(h.size for h in self.histories) + self.ring.size)

    def push(self, e: np.ndarray) -> tuple[float, float]:
        h = e
        for history, (w, b) in zip(self.histories, self.weights):
            history[:-1] = history[1:]
            history[-1] = h
            h = kernels.gelu(kernels.conv1d_tm(history, w) + b)[0]
        self.ring[self._next] = h
        self._next = (self._next + 1) % self.window
        p, s = _pick_output(self.ring.max(axis=0), self.params)
        return float(p), float(s)


def pick_sequence(e: Tensor, cfg: ModelConfig, params: ParameterSet) -> Tensor:
    """Pick outputs for every step of a prediction sequence e[N, D] -> [N, 2].

    Row t equals `pick_head` over the bank holding rows t-T+1..t (zeros
    before 0): T-1 zero rows are prepended, the valid convs run once, and a
    sliding max over T-R+1 conv outputs replaces the per-bank global max.
    """
    n, d = e.shape
    t_bank = cfg.bank_size
    pad = Tensor(np.zeros((t_bank - 1, d)), dtype=e.dtype)
    h = ops.transpose(ops.concat([pad, e], axis=0))  # [D, N+T-1]
    for w_name, b_name in _pick_layer_names(cfg):
        h = ops.conv1d(h, params[w_name])
        h = ops.transpose(ops.gelu(ops.add_bias(ops.transpose(h), params[b_name])))
    pooled = ops.sliding_max(ops.transpose(h), t_bank - cfg.pick_receptive_field + 1)
    logits = ops.linear(pooled, params["decoder.pick.out.weight"], params["decoder.pick.out.bias"])
    return ops.sigmoid(logits)


# Location / magnitude heads ----------------------------------------------

def _mlp(e, name: str, params):
    """gelu MLP over the trailing axis; Tensor in, Tensor out, else numpy"""
    if isinstance(e, Tensor):
        x = e if e.ndim == 2 else ops.reshape(e, 1, e.shape[0])
        h = ops.gelu(ops.linear(x, params[f"decoder.{name}.w1"], params[f"decoder.{name}.b1"]))
        return ops.linear(h, params[f"decoder.{name}.w2"], params[f"decoder.{name}.b2"])
    h = kernels.gelu(kernels.linear(np.asarray(e), _array(params, f"decoder.{name}.w1"), _array(params, f"decoder.{name}.b1")))
    return kernels.linear(h, _array(params, f"decoder.{name}.w2"), _array(params, f"decoder.{name}.b2"))


def loc_head(e, params):
    """(x_km, y_km) for one embedding [D]; for Tensor[N, D] returns Tensor[N, 2]"""
    out = _mlp(e, "loc", params)
    if isinstance(out, Tensor):
        return out
    return float(out[0]), float(out[1])


def mag_head(e, params):
    """Magnitude for one embedding [D]; for Tensor[N, D] returns Tensor[N, 1]"""
    out = _mlp(e, "mag", params)
    if isinstance(out, Tensor):
        return out
    return float(out[0])


# Pick coordinates ----------------------------------------------------------

def encode_pick(index: int | None, step: int, bank_size: int, factor: int) -> float:
    """Relative position of a true arrival inside the bank at `step`, or 1.0"""
    if index is None:
        return 1.0
    if not (step - bank_size + 1) * factor <= index <= (step + 1) * factor - 1:
        return 1.0
    return (index / factor - step + bank_size - 1) / bank_size


def encode_pick_targets(index: int | None, n_steps: int, bank_size: int, factor: int) -> np.ndarray:
    """Vectorized encode_pick over steps 0..n_steps-1"""
    out = np.ones(n_steps, dtype=np.float64)
    if index is None:
        return out
    steps = np.arange(n_steps)
    inside = ((steps - bank_size + 1) * factor <= index) & (index <= (steps + 1) * factor - 1)
    out[inside] = (index / factor - steps[inside] + bank_size - 1) / bank_size
    return out


def decode_pick(rel: float, current_index: int, bank_size: int, factor: int, absent_threshold: float = 0.99) -> int | None:
    """Sample index encoded by `rel` when `current_index` samples have been seen

    Arrivals within (1 - absent_threshold) * bank_size steps of the newest
    row encode at or above the threshold and decode as absent: 7.5 steps
    (0.3 s) with the default 750-step bank.
    """
    if rel >= absent_threshold:
        return None
    return int(round(current_index - (1.0 - rel) * bank_size * factor))


# Aggregation ---------------------------------------------------------------

class PickAggregator:
    """Clusters per-step pick estimates into events, per phase.

    Consecutive estimates within `merge_window` samples of the previous one
    join its cluster; a cluster's event index is the rounded median.
    """

    def __init__(self, merge_window: int):
        self.merge_window = merge_window
        self._open: dict[Phase, list[int]] = {}

    def add(self, phase: Phase, index: int) -> PickEvent | None:
        """Add one estimate; returns the event of a cluster this closes"""
        cluster = self._open.get(phase)
        if cluster is not None and abs(index - cluster[-1]) <= self.merge_window:
            cluster.append(index)
            return None
        self._open[phase] = [index]
        return self._close(phase, cluster) if cluster else None

    def finish(self) -> list[PickEvent]:
        events = [self._close(phase, cluster) for phase, cluster in self._open.items() if cluster]
        self._open.clear()
        return sorted(events, key=lambda ev: (ev.sample_index, ev.phase.value))

    @staticmethod
    def _close(phase: Phase, cluster: list[int]) -> PickEvent:
        return PickEvent(phase, int(round(float(np.median(cluster)))))


def aggregate_picks(reports: Iterable[tuple[Phase, int]], merge_window: int) -> list[PickEvent]:
    """Chronological (phase, index) estimates -> one PickEvent per cluster"""
    aggregator = PickAggregator(merge_window)
    events = [ev for phase, index in reports if (ev := aggregator.add(Phase(phase), index)) is not None]
    events.extend(aggregator.finish())
    return sorted(events, key=lambda ev: (ev.sample_index, ev.phase.value))
