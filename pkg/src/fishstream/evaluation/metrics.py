"""Pick matching, error curves and the power-law fit
"""

import math
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from ..core.exceptions import EvaluationError


def match_picks(pred: Sequence[int], true: Sequence[int], tolerance: float) -> list[tuple[int, int]]:
    """Greedy one-to-one matching, nearest pairs first.

    Returns (pred position, true position) pairs with |pred - true| <= tolerance.
    """
    pairs = sorted(
        (abs(p - t), i, j) for i, p in enumerate(pred) for j, t in enumerate(true) if abs(p - t) <= tolerance
    )
    used_pred, used_true, matches = set(), set(), []
    for _, i, j in pairs:
        if i in used_pred or j in used_true:
            continue
        used_pred.add(i)
        used_true.add(j)
        matches.append((i, j))
    return matches


@dataclass
class PickScore:
    precision: float
    recall: float
    f1: float
    tolerance_s: float
    true_positives: int = 0
    n_pred: int = 0
    n_true: int = 0

    def to_dict(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "tolerance_s": self.tolerance_s,
            "true_positives": self.true_positives,
            "n_pred": self.n_pred,
            "n_true": self.n_true,
        }


def _score(tp: int, n_pred: int, n_true: int, tolerance_s: float) -> PickScore:
    # undefined ratios are reported as 0
    precision = tp / n_pred if n_pred else 0.0
    recall = tp / n_true if n_true else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return PickScore(precision, recall, f1, tolerance_s, tp, n_pred, n_true)


def pick_metrics(
    pred: Sequence[int],
    true: Sequence[int],
    tolerance_s: float = 0.5,
    sample_rate_hz: float = 100.0,
) -> PickScore:
    if tolerance_s <= 0:
        raise EvaluationError(f"pick tolerance must be positive, got {tolerance_s}")
    tp = len(match_picks(pred, true, tolerance_s * sample_rate_hz))
    return _score(tp, len(pred), len(true), tolerance_s)


@dataclass
class PickTally:
    """Accumulates matches record by record (micro-averaged score)"""

    tolerance_s: float = 0.5
    sample_rate_hz: float = 100.0
    tp: int = 0
    n_pred: int = 0
    n_true: int = 0

    def add(self, pred: Sequence[int], true: Sequence[int]):
        self.tp += len(match_picks(pred, true, self.tolerance_s * self.sample_rate_hz))
        self.n_pred += len(pred)
        self.n_true += len(true)

    def score(self) -> PickScore:
        return _score(self.tp, self.n_pred, self.n_true, self.tolerance_s)


def location_error(est_x: float, est_y: float, true_x: float, true_y: float) -> float:
    """Euclidean distance between estimated and true epicenter, km"""
    return math.hypot(est_x - true_x, est_y - true_y)


def angle_error(a_deg: float, b_deg: float) -> float:
    """Wrapped absolute difference of two azimuths, in [0, 180]"""
    diff = abs(a_deg - b_deg) % 360.0
    return min(diff, 360.0 - diff)


@dataclass
class ErrorCurve:
    """Mean errors per whole-second offset from an arrival"""

    align: str
    offsets: list[int]
    mag_mae: list[float]
    loc_err: list[float]
    counts: list[int]
    per_record: dict[int, list[tuple[float, float]]] = field(default_factory=dict, repr=False)

    def at(self, offset: int) -> tuple[float, float] | None:
        if offset not in self.offsets:
            return None
        i = self.offsets.index(offset)
        return self.mag_mae[i], self.loc_err[i]

    def to_dict(self) -> dict:
        return {
            "align": self.align,
            "offsets_s": self.offsets,
            "mag_mae": self.mag_mae,
            "loc_err_km": self.loc_err,
            "counts": self.counts,
        }


def error_curves(
    samples: Sequence[dict[int, tuple[float, float]]],
    align: str,
    window: tuple[int, int],
) -> ErrorCurve:
    """Average per-record (mag abs error, location error) by offset.

    `samples` holds, per record, a mapping offset_s -> (|mag error|, loc error
    km); offsets a record does not cover are simply absent. Offsets covered by
    no record are dropped from the curve.
    """
    lo, hi = window
    offsets, mag, loc, counts = [], [], [], []
    per_record: dict[int, list[tuple[float, float]]] = {}
    for offset in range(lo, hi + 1):
        values = [rec[offset] for rec in samples if offset in rec]
        if not values:
            continue
        per_record[offset] = values
        offsets.append(offset)
        mag.append(float(np.mean([v[0] for v in values])))
        loc.append(float(np.mean([v[1] for v in values])))
        counts.append(len(values))
    return ErrorCurve(align, offsets, mag, loc, counts, per_record)


def curve_drop_fraction(
    early: Sequence[float],
    late: Sequence[float],
    n_boot: int,
    rng: np.random.Generator,
) -> float:
    """Fraction of record bootstrap resamples in which mean(late) < mean(early).

    early[i] and late[i] belong to the same record and are resampled together.
    """
    early_arr = np.asarray(early, dtype=np.float64)
    late_arr = np.asarray(late, dtype=np.float64)
    if early_arr.shape != late_arr.shape or early_arr.size == 0:
        raise EvaluationError("curve_drop_fraction needs paired, non-empty error lists")
    idx = rng.integers(0, early_arr.size, size=(n_boot, early_arr.size))
    return float(np.mean(late_arr[idx].mean(axis=1) < early_arr[idx].mean(axis=1)))


@dataclass
class PowerLawFit:
    slope: float
    intercept: float
    r2: float
    n_points: int

    def to_dict(self) -> dict:
        return {"slope": self.slope, "intercept": self.intercept, "r2": self.r2, "n_points": self.n_points}


def powerlaw_fit(errors: Sequence[float], gaps_s: Sequence[float], eps: float = 1e-3) -> PowerLawFit:
    """Least squares on (log gap, log error); errors below eps are clamped to eps"""
    err = np.maximum(np.asarray(errors, dtype=np.float64), eps)
    gaps = np.asarray(gaps_s, dtype=np.float64)
    if err.shape != gaps.shape:
        raise EvaluationError(f"powerlaw_fit: {err.size} errors for {gaps.size} gaps")
    if err.size < 3:
        raise EvaluationError(f"powerlaw_fit needs at least 3 points, got {err.size}")
    if np.any(gaps <= 0):
        raise EvaluationError("powerlaw_fit needs positive P-S gaps")
    lx, ly = np.log(gaps), np.log(err)
    design = np.stack([lx, np.ones_like(lx)], axis=1)
    (slope, intercept), *_ = np.linalg.lstsq(design, ly, rcond=None)
    resid = ly - (slope * lx + intercept)
    total = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / total if total > 0 else 1.0
    return PowerLawFit(float(slope), float(intercept), r2, int(err.size))
