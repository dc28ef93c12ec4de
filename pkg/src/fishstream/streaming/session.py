"""Recurrent-mode stream sessions.

A session owns every piece of mutable state for one sample stream: the
embedder's input histories, one RetentionState, the memory bank and the
incremental pick head. Parameters are shared read-only, so any number of
sessions can run side by side.
"""

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..core.config import Config
from ..core.events import EventBus, EventType
from ..core.exceptions import ConfigError, StreamError
from ..core.logger import Logger
from ..model import (
    FishNetwork,
    IncrementalPickHead,
    MemoryBank,
    Phase,
    PickAggregator,
    PickEvent,
    RetentionState,
    StepOutput,
    StreamingEmbedder,
    decode_pick,
    encoder_step,
    loc_head,
    mag_head,
)
from ..storage.checkpoint import Checkpoint, load_network


@dataclass
class StreamConfig:
    quiet_horizon_seconds: float = 60.0
    auto_reset: bool = True
    report_seconds_after_p: float = 20.0
    merge_window_seconds: float = 1.0

    def __post_init__(self):
        if self.quiet_horizon_seconds <= 0:
            raise ConfigError(f"stream.quiet_horizon_seconds must be positive, got {self.quiet_horizon_seconds}")
        if self.merge_window_seconds < 0 or self.report_seconds_after_p < 0:
            raise ConfigError("stream: merge_window_seconds and report_seconds_after_p must be >= 0")

    @classmethod
    def from_config(cls, config: Config) -> "StreamConfig":
        section = config.section("stream")
        return cls(
            quiet_horizon_seconds=float(section.get("quiet_horizon_seconds", 60.0)),
            auto_reset=bool(section.get("auto_reset", True)),
            report_seconds_after_p=float(section.get("report_seconds_after_p", 20.0)),
            merge_window_seconds=float(section.get("merge_window_seconds", 1.0)),
        )


class StreamSession:
    """Feeds one sample at a time; emits a StepOutput every F samples"""

    def __init__(
        self,
        network: FishNetwork,
        stream_cfg: StreamConfig | None = None,
        event_bus: EventBus | None = None,
        logger: Logger | None = None,
        name: str = "session",
    ):
        self.network = network
        self.cfg = network.cfg
        self.stream_cfg = stream_cfg or StreamConfig()
        self.event_bus = event_bus
        self.logger = logger
        self.name = name

        arrays = network.params.arrays()
        dtype = network.dtype
        self.arrays = arrays
        self.factor = self.cfg.downsample_factor
        self.horizon_steps = self.cfg.steps(self.stream_cfg.quiet_horizon_seconds)
        self.threshold = self.cfg.decoder.absent_threshold

        self.embedder = StreamingEmbedder(self.cfg.embedder, arrays, dtype)
        self.retention = RetentionState.zeros(self.cfg.retention, dtype)
        self.bank = MemoryBank(self.cfg.bank_size, self.cfg.embedder.embed_dim, dtype)
        self.pick_head = IncrementalPickHead(self.cfg, arrays, dtype)
        self.aggregator = PickAggregator(int(round(self.stream_cfg.merge_window_seconds * self.cfg.sample_rate_hz)))
        self.picks: list[PickEvent] = []

        self.samples_seen = 0
        self.quiet_steps = 0
        self.resets = 0
        self._block_start = 0
        self._pending: np.ndarray | None = None

        if self.logger:
            self.logger.info(
                f"StreamSession.__init__: {self.name} ready (F={self.factor}, bank={self.cfg.bank_size} steps, "
                f"quiet horizon={self.horizon_steps} steps, state={self.state_size} reals)"
            )

    @property
    def state_size(self) -> int:
        """Reals of mutable state; independent of samples_seen"""
        return (
            self.embedder.state_size + self.retention.size + self.bank.state_size + self.pick_head.state_size
        )

    def state_norms(self) -> np.ndarray:
        return self.retention.norms()

    def step(self, sample) -> StepOutput | None:
        x = np.asarray(sample, dtype=np.float64)
        if x.shape != (self.cfg.embedder.in_channels,):
            raise StreamError(f"{self.name}: expected a sample of shape ({self.cfg.embedder.in_channels},), got {x.shape}")
        if not np.all(np.isfinite(x)):
            raise StreamError(f"{self.name}: non-finite sample at index {self.samples_seen}")

        row = self.embedder.push(x)
        if row is not None:
            self._pending = row
        self.samples_seen += 1
        if (self.samples_seen - self._block_start) % self.factor:
            return None

        row, self._pending = self._pending, None
        assert row is not None
        return self._advance(row)

    def _advance(self, row: np.ndarray) -> StepOutput:
        e = encoder_step(row, self.cfg.retention, self.arrays, self.retention)
        self.bank.push(e)
        p_rel, s_rel = self.pick_head.push(e)
        x_km, y_km = loc_head(e, self.arrays)
        out = StepOutput(self.samples_seen, p_rel, s_rel, mag_head(e, self.arrays), x_km, y_km)

        present = False
        for phase, rel in ((Phase.P, p_rel), (Phase.S, s_rel)):
            index = decode_pick(rel, self.samples_seen, self.cfg.bank_size, self.factor, self.threshold)
            if index is None:
                continue
            present = True
            closed = self.aggregator.add(phase, index)
            if closed is not None:
                self._record_pick(closed)

        if present:
            self.quiet_steps = 0
        else:
            self.quiet_steps += 1
            if self.stream_cfg.auto_reset and self.quiet_steps == self.horizon_steps:
                self._reset_state("auto")
        return out

    def _record_pick(self, event: PickEvent):
        self.picks.append(event)
        if self.event_bus:
            self.event_bus.emit_sync(EventType.PICK_DETECTED, self.name, phase=event.phase.value, sample_index=event.sample_index)

    def finish(self) -> list[PickEvent]:
        """Close open pick clusters; returns every event of the stream so far"""
        for event in self.aggregator.finish():
            self._record_pick(event)
        return sorted(self.picks, key=lambda ev: (ev.sample_index, ev.phase.value))

    def reset(self):
        """Zero all model state; sample indexing continues"""
        self.quiet_steps = 0
        self._reset_state("manual")

    def _reset_state(self, reason: str):
        self.embedder.reset()
        self.retention.reset()
        self.bank.reset()
        self.pick_head.reset()
        self._pending = None
        self._block_start = self.samples_seen
        self.resets += 1
        if self.logger:
            self.logger.info(f"StreamSession.reset: {self.name} reset ({reason}) at sample {self.samples_seen}")
        if self.event_bus:
            self.event_bus.emit_sync(EventType.SESSION_RESET, self.name, reason=reason, sample_index=self.samples_seen)


def session_init(
    checkpoint: Checkpoint | FishNetwork | str | Path,
    stream_cfg: StreamConfig | None = None,
    event_bus: EventBus | None = None,
    logger: Logger | None = None,
    name: str = "session",
) -> StreamSession:
    """Fresh zero-state session from a checkpoint (file, object or network)"""
    if isinstance(checkpoint, FishNetwork):
        network = checkpoint
    elif isinstance(checkpoint, Checkpoint):
        network = checkpoint.to_network()
    else:
        network = load_network(checkpoint)
    return StreamSession(network, stream_cfg, event_bus, logger, name)
