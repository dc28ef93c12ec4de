"""Sea-mode training loop
"""

import csv
import queue
import threading
from collections.abc import Callable, Iterator, Sequence
from contextlib import ExitStack
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any

import numpy as np
from tqdm import tqdm

from ..__version__ import __version__
from ..core.config import Config
from ..core.events import Event, EventBus, EventType
from ..core.exceptions import ConfigError, TrainingError
from ..core.logger import Logger
from ..evaluation import EvalConfig, Evaluator
from ..model import FishNetwork, ModelConfig
from ..storage.checkpoint import save_checkpoint
from ..storage.waveform import WaveformRecord
from ..tensor import Tape, ops
from .augment import PAD_MODES, augment_crop
from .losses import LossBreakdown, build_targets, total_loss
from .optimizer import SCHEDULES, Adam, learning_rate

METRICS_HEADER = (
    "epoch", "loss", "l_pick", "l_loc", "l_mag", "l_sea", "val_f1_p", "val_f1_s", "val_mae_mag", "val_err_km",
)


@dataclass
class TrainConfig:
    focus_before: int = 200
    focus_after: int = 3000
    full_focus: bool = False
    sea_weight: float = 0.01
    quake_tail_seconds: float = 10.0
    crop_max_shift: int = 2000
    crop_length: int = 6000
    pad_mode: str = "noise"
    lr: float = 1e-3
    lr_schedule: str = "constant"
    batch: int = 8
    epochs: int = 10
    seed: int = 0
    w_pick: float = 1.0
    w_loc: float = 0.05
    w_mag: float = 1.0
    feeder_queue: int = 16
    progress: bool = True

    def __post_init__(self):
        if self.focus_before < 0 or self.focus_after < 0:
            raise ConfigError("train: focus_before and focus_after must be >= 0")
        if self.sea_weight < 0:
            raise ConfigError(f"train.sea_weight must be >= 0, got {self.sea_weight}")
        if self.crop_max_shift < 0 or self.crop_length < 1:
            raise ConfigError("train: crop_max_shift must be >= 0 and crop_length >= 1")
        if self.pad_mode not in PAD_MODES:
            raise ConfigError(f"train.pad_mode must be one of {PAD_MODES}")
        if self.lr_schedule not in SCHEDULES:
            raise ConfigError(f"train.lr_schedule must be one of {SCHEDULES}")
        if self.lr <= 0 or self.batch < 1 or self.epochs < 1 or self.feeder_queue < 1:
            raise ConfigError("train: lr, batch, epochs and feeder_queue must be positive")

    @property
    def weights(self) -> tuple[float, float, float]:
        return self.w_pick, self.w_loc, self.w_mag

    @classmethod
    def from_config(cls, config: Config) -> "TrainConfig":
        section = config.section("train")
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in section.items() if k in names})


class RecordFeeder:
    """Prepares records on a producer thread behind a bounded queue.

    Items come out in `order`; `prepare(position, record)` must derive any
    randomness from its arguments so results do not depend on timing.
    """

    _DONE = object()

    def __init__(
        self,
        source: Sequence[WaveformRecord],
        order: Sequence[int],
        prepare: Callable[[int, WaveformRecord], WaveformRecord],
        maxsize: int = 16,
    ):
        self.source = source
        self.order = list(order)
        self.prepare = prepare
        self._queue: queue.Queue = queue.Queue(maxsize=maxsize)
        self._stop = threading.Event()
        self._thread: threading.Thread | None = None

    def _produce(self):
        try:
            for position, index in enumerate(self.order):
                if self._stop.is_set():
                    return
                self._put(self.prepare(position, self.source[index]))
        except Exception as e:
            self._put(e)
        finally:
            self._put(self._DONE)

    def _put(self, item: Any):
        while not self._stop.is_set():
            try:
                self._queue.put(item, timeout=0.1)
                return
            except queue.Full:
                continue

    def __iter__(self) -> Iterator[WaveformRecord]:
        self._thread = threading.Thread(target=self._produce, name="record-feeder", daemon=True)
        self._thread.start()
        try:
            while True:
                item = self._queue.get()
                if item is self._DONE:
                    return
                if isinstance(item, Exception):
                    raise item
                yield item
        finally:
            self.close()

    def close(self):
        self._stop.set()
        if self._thread is not None:
            self._thread.join(timeout=5)
            self._thread = None


class MetricsLog:
    """CSV metrics log fed by EPOCH_COMPLETED events"""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with open(self.path, "w", newline="") as f:
            csv.writer(f).writerow(METRICS_HEADER)

    def on_epoch(self, event: Event):
        row = [event.data.get(key, "") for key in METRICS_HEADER]
        with open(self.path, "a", newline="") as f:
            csv.writer(f).writerow([f"{v:.6f}" if isinstance(v, float) else v for v in row])


@dataclass
class TrainResult:
    network: FishNetwork
    history: list[dict[str, float]]
    steps: int


class Trainer:
    """Fits a FishNetwork with Adam on cropped records"""

    def __init__(
        self,
        model_cfg: ModelConfig,
        train_cfg: TrainConfig,
        event_bus: EventBus,
        logger: Logger,
        network: FishNetwork | None = None,
        eval_cfg: EvalConfig | None = None,
    ):
        self.logger = logger
        self.logger.debug("Trainer.__init__: Entry")
        self.model_cfg = model_cfg
        self.cfg = train_cfg
        self.event_bus = event_bus
        self.eval_cfg = eval_cfg or EvalConfig()
        self.network = network or FishNetwork(model_cfg, seed=train_cfg.seed)
        self.optimizer = Adam(self.network.params.tensors(), lr=train_cfg.lr)
        self.step_count = 0
        self.tail_samples = int(round(train_cfg.quake_tail_seconds * model_cfg.sample_rate_hz))
        self.logger.info(
            f"Trainer.__init__: {self.network.params.num_parameters} parameters, "
            f"F={model_cfg.downsample_factor}, bank={model_cfg.bank_size} steps"
        )

    def crop(self, epoch: int, position: int, record: WaveformRecord) -> WaveformRecord:
        rng = np.random.default_rng([self.cfg.seed, epoch, position])
        return augment_crop(record, self.cfg.crop_max_shift, self.cfg.crop_length, rng, self.cfg.pad_mode)

    def record_loss(self, record: WaveformRecord) -> LossBreakdown:
        """Forward one record on the active tape"""
        out = self.network.forward(record.samples)
        targets = build_targets(
            record, self.model_cfg, self.cfg.focus_before, self.cfg.focus_after, self.tail_samples, self.cfg.full_focus
        )
        return total_loss(out, targets, self.cfg.weights, self.cfg.sea_weight)

    def train_step(self, batch: Sequence[WaveformRecord], lr: float) -> dict[str, float]:
        """Accumulate gradients over the batch, then one Adam update"""
        self.optimizer.zero_grad()
        sums = dict.fromkeys(("loss", "l_pick", "l_loc", "l_mag", "l_sea"), 0.0)
        for record in batch:
            with Tape() as tape:
                parts = self.record_loss(record)
                scaled = ops.scale(parts.total, 1.0 / len(batch))
            values = parts.as_dict()
            if not np.isfinite(values["loss"]):
                self.event_bus.emit_sync(EventType.TRAINING_ABORTED, "trainer", step=self.step_count, lr=lr)
                self.logger.error(
                    f"Trainer.train_step: non-finite loss {values['loss']}", step=self.step_count, lr=lr
                )
                raise TrainingError("non-finite loss", step=self.step_count, lr=lr)
            tape.backward(scaled)
            for key, value in values.items():
                sums[key] += value / len(batch)
        self.optimizer.step(lr)
        self.step_count += 1
        return sums

    def validate(self, records: Sequence[WaveformRecord]) -> dict[str, float]:
        report = Evaluator(self.network, self.eval_cfg).evaluate(records, mode="parallel")
        return {
            "val_f1_p": report.p_picks.f1,
            "val_f1_s": report.s_picks.f1,
            "val_mae_mag": report.at_report.get("mag_mae", float("nan")),
            "val_err_km": report.at_report.get("loc_err_median_km", float("nan")),
        }

    def train(
        self,
        train_records: Sequence[WaveformRecord],
        val_records: Sequence[WaveformRecord] | None = None,
        checkpoint_path: str | Path | None = None,
        metrics_path: str | Path | None = None,
    ) -> TrainResult:
        if len(train_records) == 0:
            raise TrainingError("training set is empty")

        metrics = MetricsLog(metrics_path) if metrics_path else None

        n_batches = -(-len(train_records) // self.cfg.batch)
        total_steps = n_batches * self.cfg.epochs
        history: list[dict[str, float]] = []
        with ExitStack() as stack:
            if metrics:
                stack.enter_context(self.event_bus.subscribed(EventType.EPOCH_COMPLETED, metrics.on_epoch))
            for epoch in range(1, self.cfg.epochs + 1):
                order = np.random.default_rng([self.cfg.seed, epoch]).permutation(len(train_records))
                feeder = RecordFeeder(
                    train_records,
                    order,
                    lambda pos, rec, epoch=epoch: self.crop(epoch, pos, rec),
                    self.cfg.feeder_queue,
                )
                sums = dict.fromkeys(("loss", "l_pick", "l_loc", "l_mag", "l_sea"), 0.0)
                batch: list[WaveformRecord] = []
                progress = tqdm(
                    total=n_batches, desc=f"epoch {epoch}/{self.cfg.epochs}", disable=not self.cfg.progress, leave=False
                )
                with progress:
                    for record in feeder:
                        batch.append(record)
                        if len(batch) == self.cfg.batch:
                            self._run_batch(batch, total_steps, sums, n_batches)
                            progress.update(1)
                            batch = []
                    if batch:
                        self._run_batch(batch, total_steps, sums, n_batches)
                        progress.update(1)

                row: dict[str, float] = {"epoch": epoch, **sums}
                if val_records:
                    row.update(self.validate(val_records))
                history.append(row)
                self.logger.info(
                    f"Trainer.train: epoch {epoch} loss={row['loss']:.5f} pick={row['l_pick']:.5f} "
                    f"loc={row['l_loc']:.4f} mag={row['l_mag']:.4f} sea={row['l_sea']:.5f}"
                )
                self.event_bus.emit_sync(EventType.EPOCH_COMPLETED, "trainer", **row)

        if checkpoint_path:
            metadata = {
                "version": __version__,
                "seed": self.cfg.seed,
                "epochs": self.cfg.epochs,
                "steps": self.step_count,
                "final_loss": history[-1]["loss"],
            }
            save_checkpoint(checkpoint_path, self.network, metadata)
            self.event_bus.emit_sync(EventType.CHECKPOINT_SAVED, "trainer", path=str(checkpoint_path))
            self.logger.info(f"Trainer.train: checkpoint written to {checkpoint_path}")
        return TrainResult(self.network, history, self.step_count)

    def _run_batch(self, batch: list[WaveformRecord], total_steps: int, sums: dict[str, float], n_batches: int):
        lr = learning_rate(self.cfg.lr, self.step_count, total_steps, self.cfg.lr_schedule)
        values = self.train_step(batch, lr)
        for key, value in values.items():
            sums[key] += value / n_batches
