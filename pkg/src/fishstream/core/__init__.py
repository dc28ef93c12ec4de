"""Core module - configuration, logging, events and errors shared by every
fishstream component
"""

from .config import Config
from .events import Event, EventBus, EventType
from .exceptions import (
    CheckpointError,
    ConfigError,
    EvaluationError,
    FishStreamError,
    ShapeError,
    StreamError,
    TrainingError,
    WaveformFormatError,
)
from .logger import Logger

__all__ = [
    "CheckpointError",
    "Config",
    "ConfigError",
    "EvaluationError",
    "Event",
    "EventBus",
    "EventType",
    "FishStreamError",
    "Logger",
    "ShapeError",
    "StreamError",
    "TrainingError",
    "WaveformFormatError",
]
