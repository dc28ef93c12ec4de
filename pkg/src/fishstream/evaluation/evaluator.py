"""Evaluation protocol over labelled records.

Outputs are collected either with the parallel forward ("parallel") or by
replaying every record sample by sample ("online"); both produce the same
per-step StepOutputs and go through the same scoring.
"""

import csv
import json
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from ..core.config import Config
from ..core.exceptions import ConfigError, EvaluationError
from ..core.logger import Logger
from ..model import FishNetwork, Phase, PickAggregator, PickEvent, StepOutput, decode_pick
from ..storage.waveform import WaveformRecord
from ..streaming.replay import replay_samples
from ..streaming.session import StreamConfig, StreamSession
from .metrics import (
    ErrorCurve,
    PickScore,
    PickTally,
    PowerLawFit,
    angle_error,
    curve_drop_fraction,
    error_curves,
    location_error,
    powerlaw_fit,
)

MODES = ("parallel", "online")


@dataclass
class EvalConfig:
    tolerance_seconds: float = 0.5
    p_window: tuple[int, int] = (-2, 70)
    s_window: tuple[int, int] = (-2, 9)
    offline_seconds: float = 30.0
    bootstrap: int = 1000
    powerlaw_eps_km: float = 1e-3
    report_seconds_after_p: float = 20.0
    merge_window_seconds: float = 1.0
    drop_offsets: tuple[int, int] = (0, 10)
    seed: int = 0

    def __post_init__(self):
        self.p_window = (int(self.p_window[0]), int(self.p_window[1]))
        self.s_window = (int(self.s_window[0]), int(self.s_window[1]))
        if self.tolerance_seconds <= 0:
            raise ConfigError(f"eval.tolerance_seconds must be positive, got {self.tolerance_seconds}")
        if self.p_window[0] > self.p_window[1] or self.s_window[0] > self.s_window[1]:
            raise ConfigError("eval: curve windows must be ordered (start, end)")
        if self.bootstrap < 1:
            raise ConfigError("eval.bootstrap must be >= 1")

    @classmethod
    def from_config(cls, config: Config) -> "EvalConfig":
        section = config.section("eval")
        stream = config.section("stream")
        return cls(
            tolerance_seconds=float(section.get("tolerance_seconds", 0.5)),
            p_window=tuple(section.get("p_window", (-2, 70))),
            s_window=tuple(section.get("s_window", (-2, 9))),
            offline_seconds=float(section.get("offline_seconds", 30.0)),
            bootstrap=int(section.get("bootstrap", 1000)),
            powerlaw_eps_km=float(section.get("powerlaw_eps_km", 1e-3)),
            report_seconds_after_p=float(stream.get("report_seconds_after_p", 20.0)),
            merge_window_seconds=float(stream.get("merge_window_seconds", 1.0)),
            seed=int(config.get("app.seed", 0)),
        )


@dataclass
class RecordOutcome:
    record: WaveformRecord
    outputs: list[StepOutput]
    events: list[PickEvent]


def picks_from_outputs(
    outputs: Iterable[StepOutput],
    bank_size: int,
    factor: int,
    absent_threshold: float,
    merge_window: int,
) -> list[PickEvent]:
    """Decode every step and cluster, exactly as a stream session does"""
    aggregator = PickAggregator(merge_window)
    events = []
    for out in outputs:
        for phase, rel in ((Phase.P, out.p_rel), (Phase.S, out.s_rel)):
            index = decode_pick(rel, out.t, bank_size, factor, absent_threshold)
            if index is not None and (closed := aggregator.add(phase, index)) is not None:
                events.append(closed)
    events.extend(aggregator.finish())
    return sorted(events, key=lambda ev: (ev.sample_index, ev.phase.value))


def output_at(outputs: Sequence[StepOutput], sample_time: float, factor: int) -> StepOutput | None:
    """Latest output emitted at or before `sample_time` samples"""
    i = int(math.floor(sample_time / factor)) - 1
    if 0 <= i < len(outputs):
        return outputs[i]
    return None


@dataclass
class EvalReport:
    mode: str
    n_records: int
    p_picks: PickScore
    s_picks: PickScore
    p_curve: ErrorCurve
    s_curve: ErrorCurve
    at_report: dict[str, float]
    offline_p: PickScore | None = None
    offline_s: PickScore | None = None
    powerlaw: PowerLawFit | None = None
    drop_fraction: dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "mode": self.mode,
            "n_records": self.n_records,
            "picks": {"P": self.p_picks.to_dict(), "S": self.s_picks.to_dict()},
            "curves": {"P": self.p_curve.to_dict(), "S": self.s_curve.to_dict()},
            "at_report": self.at_report,
            "drop_fraction": self.drop_fraction,
            "powerlaw": self.powerlaw.to_dict() if self.powerlaw else None,
        }
        if self.offline_p is not None and self.offline_s is not None:
            out["offline_picks"] = {"P": self.offline_p.to_dict(), "S": self.offline_s.to_dict()}
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def write_curves_csv(self, path: str | Path):
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["align", "offset_s", "mag_mae", "loc_err_km", "count"])
            for curve in (self.p_curve, self.s_curve):
                for offset, mag, loc, count in zip(curve.offsets, curve.mag_mae, curve.loc_err, curve.counts):
                    writer.writerow([curve.align, offset, f"{mag:.6f}", f"{loc:.6f}", count])


class Evaluator:
    """Scores a network on labelled records"""

    def __init__(self, network: FishNetwork, eval_cfg: EvalConfig | None = None, logger: Logger | None = None):
        self.network = network
        self.cfg = network.cfg
        self.eval_cfg = eval_cfg or EvalConfig()
        self.logger = logger
        self.factor = self.cfg.downsample_factor
        self.rate = self.cfg.sample_rate_hz
        self.merge_window = int(round(self.eval_cfg.merge_window_seconds * self.rate))

    def _stream_config(self) -> StreamConfig:
        # records are scored from a single zero state, like the parallel path
        return StreamConfig(
            auto_reset=False,
            report_seconds_after_p=self.eval_cfg.report_seconds_after_p,
            merge_window_seconds=self.eval_cfg.merge_window_seconds,
        )

    def collect(self, records: Iterable[WaveformRecord], mode: str = "parallel") -> list[RecordOutcome]:
        if mode not in MODES:
            raise EvaluationError(f"Unknown evaluation mode '{mode}', expected one of {MODES}")
        outcomes = []
        for record in records:
            if mode == "parallel":
                outputs = self.network.step_outputs(record.samples)
                events = picks_from_outputs(
                    outputs, self.cfg.bank_size, self.factor, self.cfg.decoder.absent_threshold, self.merge_window
                )
            else:
                session = StreamSession(self.network, self._stream_config())
                outputs = replay_samples(session, record.samples)
                events = session.finish()
            outcomes.append(RecordOutcome(record, outputs, events))
        if self.logger:
            self.logger.debug(f"Evaluator.collect: {len(outcomes)} records in {mode} mode")
        return outcomes

    def offline_picks(self, outcome: RecordOutcome) -> dict[Phase, list[int]]:
        """Picks decoded from the final bank state after the first offline_seconds"""
        limit = self.eval_cfg.offline_seconds * self.rate
        last = output_at(outcome.outputs, limit, self.factor)
        if last is None:
            return {Phase.P: [], Phase.S: []}
        picks: dict[Phase, list[int]] = {}
        for phase, rel in ((Phase.P, last.p_rel), (Phase.S, last.s_rel)):
            index = decode_pick(rel, last.t, self.cfg.bank_size, self.factor, self.cfg.decoder.absent_threshold)
            picks[phase] = [] if index is None else [index]
        return picks

    def _offsets(self, outcome: RecordOutcome, arrival: int, window: tuple[int, int]) -> dict[int, tuple[float, float]]:
        rec = outcome.record
        values = {}
        for offset in range(window[0], window[1] + 1):
            out = output_at(outcome.outputs, arrival + offset * self.rate, self.factor)
            if out is None:
                continue
            values[offset] = (
                abs(out.magnitude - rec.magnitude),
                location_error(out.x_km, out.y_km, rec.x_km, rec.y_km),
            )
        return values

    def report(self, outcomes: Sequence[RecordOutcome], mode: str = "parallel") -> EvalReport:
        if not outcomes:
            raise EvaluationError("Nothing to evaluate: no records")
        ec = self.eval_cfg
        tallies = {phase: PickTally(ec.tolerance_seconds, self.rate) for phase in Phase}
        offline = {phase: PickTally(ec.tolerance_seconds, self.rate) for phase in Phase}
        p_rows, s_rows = [], []
        mag_err, loc_err, rel_err, dist_err, baz_err, loc_for_fit, gaps = [], [], [], [], [], [], []

        for outcome in outcomes:
            rec = outcome.record
            truths = {Phase.P: [rec.p_index] if rec.p_index is not None else [],
                      Phase.S: [rec.s_index] if rec.s_index is not None else []}
            final = self.offline_picks(outcome)
            for phase in Phase:
                tallies[phase].add([ev.sample_index for ev in outcome.events if ev.phase is phase], truths[phase])
                offline[phase].add(final[phase], truths[phase])

            labelled = rec.magnitude is not None and rec.x_km is not None and rec.y_km is not None
            if not labelled or rec.p_index is None:
                continue
            p_rows.append(self._offsets(outcome, rec.p_index, ec.p_window))
            if rec.s_index is not None:
                s_rows.append(self._offsets(outcome, rec.s_index, ec.s_window))

            out = output_at(outcome.outputs, rec.p_index + ec.report_seconds_after_p * self.rate, self.factor)
            if out is None:
                continue
            err = location_error(out.x_km, out.y_km, rec.x_km, rec.y_km)
            true_distance = math.hypot(rec.x_km, rec.y_km)
            mag_err.append(abs(out.magnitude - rec.magnitude))
            loc_err.append(err)
            dist_err.append(abs(out.distance_km - true_distance))
            baz_err.append(angle_error(out.back_azimuth_deg, math.degrees(math.atan2(rec.x_km, rec.y_km)) % 360.0))
            if true_distance > 0:
                rel_err.append(err / true_distance)
            if rec.ps_gap_s:
                loc_for_fit.append(err)
                gaps.append(rec.ps_gap_s)

        p_curve = error_curves(p_rows, "P", ec.p_window)
        s_curve = error_curves(s_rows, "S", ec.s_window)

        at_report: dict[str, float] = {"n": float(len(mag_err))}
        if mag_err:
            at_report.update(
                mag_mae=float(np.mean(mag_err)),
                loc_err_median_km=float(np.median(loc_err)),
                loc_err_mean_km=float(np.mean(loc_err)),
                distance_err_mean_km=float(np.mean(dist_err)),
                back_azimuth_err_median_deg=float(np.median(baz_err)),
            )
        if rel_err:
            at_report["loc_err_relative_median"] = float(np.median(rel_err))

        fit = None
        if len(loc_for_fit) >= 3:
            fit = powerlaw_fit(loc_for_fit, gaps, ec.powerlaw_eps_km)

        drop = self._drop_fractions(p_rows)
        report = EvalReport(
            mode=mode,
            n_records=len(outcomes),
            p_picks=tallies[Phase.P].score(),
            s_picks=tallies[Phase.S].score(),
            p_curve=p_curve,
            s_curve=s_curve,
            at_report=at_report,
            offline_p=offline[Phase.P].score(),
            offline_s=offline[Phase.S].score(),
            powerlaw=fit,
            drop_fraction=drop,
        )
        if self.logger:
            self.logger.info(
                f"Evaluator.report: {len(outcomes)} records, P F1={report.p_picks.f1:.3f}, S F1={report.s_picks.f1:.3f}"
            )
        return report

    def _drop_fractions(self, rows: list[dict[int, tuple[float, float]]]) -> dict[str, float]:
        early, late = self.eval_cfg.drop_offsets
        paired = [(r[early], r[late]) for r in rows if early in r and late in r]
        if not paired:
            return {}
        rng = np.random.default_rng(self.eval_cfg.seed)
        n_boot = self.eval_cfg.bootstrap
        return {
            "mag": curve_drop_fraction([p[0][0] for p in paired], [p[1][0] for p in paired], n_boot, rng),
            "loc": curve_drop_fraction([p[0][1] for p in paired], [p[1][1] for p in paired], n_boot, rng),
        }

    def evaluate(self, records: Iterable[WaveformRecord], mode: str = "parallel") -> EvalReport:
        return self.report(self.collect(records, mode), mode)
