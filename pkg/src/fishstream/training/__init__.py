from ..storage.waveform import WaveformRecord
from .augment import PAD_MODES, augment_crop
from .losses import LossBreakdown, TrainTargets, build_targets, focus_mask, quake_mask, sea_loss, total_loss
from .optimizer import SCHEDULES, Adam, learning_rate
from .synthetic import MultiQuakeStream, SyntheticParams, clean_oracle, concat_records, gen_synthetic, synth_record
from .trainer import MetricsLog, RecordFeeder, TrainConfig, Trainer, TrainResult

__all__ = [
    "PAD_MODES",
    "SCHEDULES",
    "Adam",
    "LossBreakdown",
    "MetricsLog",
    "MultiQuakeStream",
    "RecordFeeder",
    "SyntheticParams",
    "TrainConfig",
    "TrainResult",
    "TrainTargets",
    "Trainer",
    "WaveformRecord",
    "augment_crop",
    "build_targets",
    "clean_oracle",
    "concat_records",
    "focus_mask",
    "gen_synthetic",
    "learning_rate",
    "quake_mask",
    "sea_loss",
    "synth_record",
    "total_loss",
]
