"""Core exceptions for fishstream
"""


class FishStreamError(Exception):
    """Base exception class for fishstream"""


class ConfigError(FishStreamError):
    """Configuration related errors"""


class ShapeError(FishStreamError):
    """Tensor shape mismatch"""


class CheckpointError(FishStreamError):
    """Checkpoint read/write errors"""


class WaveformFormatError(FishStreamError):
    """Malformed FSH1 waveform data"""

    def __init__(self, message: str, byte_offset: int = 0):
        super().__init__(f"{message} (at byte offset {byte_offset})")
        self.byte_offset = byte_offset


class StreamError(FishStreamError):
    """Streaming session errors"""


class TrainingError(FishStreamError):
    """Optimization failures"""

    def __init__(self, message: str, step: int | None = None, lr: float | None = None):
        details = []
        if step is not None:
            details.append(f"step={step}")
        if lr is not None:
            details.append(f"lr={lr:g}")
        suffix = f" ({', '.join(details)})" if details else ""
        super().__init__(f"{message}{suffix}")
        self.step = step
        self.lr = lr


class EvaluationError(FishStreamError):
    """Evaluation protocol errors"""
