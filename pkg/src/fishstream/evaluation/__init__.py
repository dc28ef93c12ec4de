from .evaluator import EvalConfig, EvalReport, Evaluator, RecordOutcome, output_at, picks_from_outputs
from .metrics import (
    ErrorCurve,
    PickScore,
    PickTally,
    PowerLawFit,
    angle_error,
    curve_drop_fraction,
    error_curves,
    location_error,
    match_picks,
    pick_metrics,
    powerlaw_fit,
)

__all__ = [
    "ErrorCurve",
    "EvalConfig",
    "EvalReport",
    "Evaluator",
    "PickScore",
    "PickTally",
    "PowerLawFit",
    "RecordOutcome",
    "angle_error",
    "curve_drop_fraction",
    "error_curves",
    "location_error",
    "match_picks",
    "output_at",
    "pick_metrics",
    "picks_from_outputs",
    "powerlaw_fit",
]
