"""
Tests for the training loop
"""

import csv
from unittest.mock import Mock

import numpy as np
import pytest

from fishstream.core.events import EventType
from fishstream.core.exceptions import ConfigError, TrainingError
from fishstream.storage import Checkpoint
from fishstream.training import MetricsLog, RecordFeeder, TrainConfig, Trainer, gen_synthetic
from fishstream.training.trainer import METRICS_HEADER


def _small_train_config(**overrides) -> TrainConfig:
    values = {
        "focus_before": 20,
        "focus_after": 100,
        "quake_tail_seconds": 1.0,
        "crop_max_shift": 100,
        "crop_length": 200,
        "batch": 2,
        "epochs": 2,
        "lr": 1e-3,
        "feeder_queue": 2,
        "progress": False,
        "seed": 3,
    }
    values.update(overrides)
    return TrainConfig(**values)


@pytest.fixture
def records(short_synthetic):
    return gen_synthetic(short_synthetic, 6, seed=9)


class TestTrainConfig:
    """Test training configuration"""

    def test_from_config_ignores_unknown_keys(self, mock_config):
        mock_config.set("train.batch", 4)
        mock_config.set("train.not_a_field", True)
        cfg = TrainConfig.from_config(mock_config)
        assert cfg.batch == 4
        assert cfg.weights == (cfg.w_pick, cfg.w_loc, cfg.w_mag)

    @pytest.mark.parametrize(
        "overrides",
        [{"pad_mode": "mirror"}, {"lr_schedule": "step"}, {"lr": 0.0}, {"batch": 0}, {"sea_weight": -1.0},
         {"focus_before": -1}, {"crop_length": 0}],
    )
    def test_invalid(self, overrides):
        with pytest.raises(ConfigError):
            TrainConfig(**overrides)


class TestRecordFeeder:
    """Test the background record feeder"""

    def test_yields_in_order(self, records):
        seen = []
        feeder = RecordFeeder(records, [2, 0, 1], lambda pos, rec: seen.append(pos) or rec, maxsize=1)
        out = list(feeder)
        assert [r.p_index for r in out] == [records[2].p_index, records[0].p_index, records[1].p_index]
        assert seen == [0, 1, 2]

    def test_forwards_producer_errors(self, records):
        def prepare(position, record):
            if position == 1:
                raise ValueError("bad record")
            return record

        feeder = RecordFeeder(records, range(4), prepare)
        iterator = iter(feeder)
        next(iterator)
        with pytest.raises(ValueError, match="bad record"):
            next(iterator)

    def test_early_close_stops_producer(self, records):
        feeder = RecordFeeder(records, range(6), lambda pos, rec: rec, maxsize=1)
        iterator = iter(feeder)
        next(iterator)
        iterator.close()
        assert feeder._thread is None


class TestMetricsLog:
    """Test the CSV metrics sink"""

    def test_header_and_rows(self, tmp_path, mock_event_bus):
        log = MetricsLog(tmp_path / "out" / "metrics.csv")
        mock_event_bus.subscribe(EventType.EPOCH_COMPLETED, log.on_epoch)
        mock_event_bus.emit_sync(EventType.EPOCH_COMPLETED, "trainer", epoch=1, loss=0.5, l_pick=0.25)

        with open(log.path, newline="") as f:
            rows = list(csv.reader(f))
        assert rows[0] == list(METRICS_HEADER)
        assert rows[1][:3] == ["1", "0.500000", "0.250000"]
        assert rows[1][-1] == ""


class TestTrainer:
    """Test the optimization loop"""

    def test_train_writes_checkpoint_and_metrics(self, tiny_config, records, mock_event_bus, mock_logger, tmp_path):
        saved = Mock()
        mock_event_bus.subscribe(EventType.CHECKPOINT_SAVED, saved)
        trainer = Trainer(tiny_config, _small_train_config(), mock_event_bus, mock_logger)

        result = trainer.train(records[:4], records[4:], tmp_path / "model.fshm", tmp_path / "metrics.csv")

        assert result.steps == 4
        assert len(result.history) == 2
        assert all(np.isfinite(row["loss"]) for row in result.history)
        assert "val_f1_p" in result.history[-1]
        saved.assert_called_once()

        ckpt = Checkpoint.load(tmp_path / "model.fshm")
        assert ckpt.model_config == tiny_config
        assert ckpt.metadata["steps"] == 4
        assert ckpt.metadata["seed"] == 3
        with open(tmp_path / "metrics.csv", newline="") as f:
            assert len(list(csv.reader(f))) == 3
        assert not mock_event_bus.has_subscribers(EventType.EPOCH_COMPLETED)

    def test_training_is_deterministic(self, tiny_config, records, mock_event_bus, mock_logger, tmp_path):
        cfg = _small_train_config(epochs=1)
        for name in ("a", "b"):
            Trainer(tiny_config, cfg, mock_event_bus, mock_logger).train(records[:4], None, tmp_path / f"{name}.fshm")
        assert (tmp_path / "a.fshm").read_bytes() == (tmp_path / "b.fshm").read_bytes()

    def test_training_reduces_loss_on_repeated_batch(self, tiny_config, records, mock_event_bus, mock_logger):
        trainer = Trainer(tiny_config, _small_train_config(lr=1e-2), mock_event_bus, mock_logger)
        batch = [trainer.crop(1, i, r) for i, r in enumerate(records[:2])]
        first = trainer.train_step(batch, 1e-2)["loss"]
        for _ in range(15):
            last = trainer.train_step(batch, 1e-2)["loss"]
        assert last < first

    def test_non_finite_loss_aborts(self, tiny_config, records, mock_event_bus, mock_logger):
        aborted = Mock()
        mock_event_bus.subscribe(EventType.TRAINING_ABORTED, aborted)
        trainer = Trainer(tiny_config, _small_train_config(), mock_event_bus, mock_logger)
        trainer.network.params["decoder.pick.out.bias"].data[...] = np.nan

        with pytest.raises(TrainingError) as exc:
            trainer.train(records[:4])
        assert exc.value.step == 0
        assert exc.value.lr == pytest.approx(1e-3)
        aborted.assert_called_once()
        assert aborted.call_args[0][0].data["step"] == 0

    def test_empty_training_set(self, tiny_config, mock_event_bus, mock_logger):
        trainer = Trainer(tiny_config, _small_train_config(), mock_event_bus, mock_logger)
        with pytest.raises(TrainingError, match="empty"):
            trainer.train([])

    def test_crop_depends_only_on_position(self, tiny_config, records, mock_event_bus, mock_logger):
        trainer = Trainer(tiny_config, _small_train_config(), mock_event_bus, mock_logger)
        a = trainer.crop(1, 0, records[0])
        b = trainer.crop(1, 0, records[0])
        np.testing.assert_array_equal(a.samples, b.samples)
        assert a.n_samples == 200
