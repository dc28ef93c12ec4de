"""Subcommand runner behind the fishstream CLI
"""

import json
import sys
from dataclasses import replace
from pathlib import Path
from typing import TextIO

from .core.config import Config
from .core.events import Event, EventBus, EventType
from .core.exceptions import FishStreamError
from .core.logger import Logger
from .evaluation import EvalConfig, Evaluator
from .model import FishNetwork, ModelConfig
from .storage import load_dataset, load_network, write_dataset
from .streaming import MIN_BENCH_STEPS, StreamConfig, bench_latency, replay, session_init, stream_lines
from .training import SyntheticParams, TrainConfig, Trainer, gen_synthetic


class CommandRunner:
    """Runs one CLI subcommand against a loaded configuration"""

    def __init__(
        self,
        config: Config,
        event_bus: EventBus,
        logger: Logger,
        ckpt: Path | None = None,
        stdout: TextIO | None = None,
    ):
        self.config = config
        self.event_bus = event_bus
        self.logger = logger
        self.ckpt = ckpt
        self.stdout = stdout or sys.stdout
        self.seed = int(config.get("app.seed", 0))

    def _require_ckpt(self) -> Path:
        if self.ckpt is None:
            raise FishStreamError("this command needs --ckpt <checkpoint.fshm>")
        return self.ckpt

    def _network(self) -> FishNetwork:
        """Checkpoint network when --ckpt is given, else fresh weights from config"""
        if self.ckpt is not None:
            return load_network(self.ckpt)
        return FishNetwork(ModelConfig.from_config(self.config), seed=self.seed)

    def _emit(self, payload: dict):
        self.stdout.write(json.dumps(payload, sort_keys=True) + "\n")
        self.stdout.flush()

    def gen_data(self, out_dir: Path, n_records: int | None = None, val_fraction: float | None = None) -> int:
        params = SyntheticParams.from_config(self.config)
        n = n_records if n_records is not None else int(self.config.get("synthetic.n_records", 2000))
        frac = val_fraction if val_fraction is not None else float(self.config.get("synthetic.val_fraction", 0.2))
        self.logger.info(f"CommandRunner.gen_data: {n} records (seed {self.seed}) -> {out_dir}")
        records = gen_synthetic(params, n, self.seed)
        dataset = write_dataset(out_dir, records, frac, metadata={"seed": self.seed, "n_records": n})
        self._emit({
            "root": str(out_dir),
            "train": len(dataset.split("train")),
            "val": len(dataset.split("val")),
        })
        return 0

    def train(self, data_dir: Path, metrics: Path | None = None, epochs: int | None = None) -> int:
        out = self._require_ckpt()
        train_cfg = TrainConfig.from_config(self.config)
        if epochs is not None:
            train_cfg = replace(train_cfg, epochs=epochs)
        dataset = load_dataset(data_dir)
        trainer = Trainer(
            ModelConfig.from_config(self.config),
            train_cfg,
            self.event_bus,
            self.logger,
            eval_cfg=EvalConfig.from_config(self.config),
        )
        result = trainer.train(dataset.split("train"), dataset.split("val"), checkpoint_path=out, metrics_path=metrics)
        self._emit({"checkpoint": str(out), "steps": result.steps, "history": result.history})
        return 0

    def replay(self, path: Path, out: Path | None = None) -> int:
        def log_pick(event: Event):
            self.logger.info(
                f"CommandRunner.replay: {event.data['phase']} pick at sample {event.data['sample_index']}"
            )

        session = session_init(
            self._require_ckpt(), StreamConfig.from_config(self.config), self.event_bus, self.logger, name=path.stem
        )
        with self.event_bus.subscribed(EventType.PICK_DETECTED, log_pick):
            if out is None:
                summary = replay(path, session, self.stdout)
                sys.stderr.write(summary.to_json() + "\n")
            else:
                with open(out, "w") as sink:
                    summary = replay(path, session, sink)
                self._emit(summary.to_dict())
        return 0

    def stream(self, stdin: TextIO | None = None) -> int:
        session = session_init(
            self._require_ckpt(), StreamConfig.from_config(self.config), self.event_bus, self.logger, name="stdin"
        )
        events = stream_lines(session, stdin or sys.stdin, self.stdout)
        self.logger.info(f"CommandRunner.stream: {session.samples_seen} samples, {len(events)} pick events")
        return 0

    def bench(self, n_steps: int = MIN_BENCH_STEPS) -> int:
        report = bench_latency(self._network(), n_steps, seed=self.seed)
        self.logger.info(
            f"CommandRunner.bench: {n_steps} steps, flatness={report.flatness:.3f}, "
            f"realtime x{report.realtime_factor:.1f}"
        )
        self._emit(report.to_dict())
        return 0

    def eval(self, data_dir: Path, split: str = "val", mode: str = "parallel", out: Path | None = None,
             curves: Path | None = None) -> int:
        network = load_network(self._require_ckpt())
        records = load_dataset(data_dir).split(split)
        report = Evaluator(network, EvalConfig.from_config(self.config), self.logger).evaluate(records, mode)
        if out is not None:
            out.write_text(report.to_json() + "\n")
        if curves is not None:
            report.write_curves_csv(curves)
        self.stdout.write(report.to_json() + "\n")
        return 0
