"""File replay and stdin streaming on top of StreamSession
"""

import json
from collections.abc import Iterable, Iterator
from dataclasses import dataclass, field
from pathlib import Path
from typing import TextIO

import numpy as np

from ..core.exceptions import WaveformFormatError
from ..model import Phase, PickEvent, StepOutput
from ..storage.waveform import WaveformRecord, read_waveform
from .session import StreamSession


@dataclass
class ReplaySummary:
    n_samples: int
    n_steps: int
    events: list[PickEvent]
    report_index: int | None = None
    report: StepOutput | None = None
    resets: int = 0
    truth: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out: dict = {
            "n_samples": self.n_samples,
            "n_steps": self.n_steps,
            "events": [ev.to_dict() for ev in self.events],
            "resets": self.resets,
        }
        if self.report is not None:
            out["report"] = {
                "t": self.report.t,
                "magnitude": round(self.report.magnitude, 6),
                "x_km": round(self.report.x_km, 6),
                "y_km": round(self.report.y_km, 6),
                "distance_km": round(self.report.distance_km, 6),
                "back_azimuth_deg": round(self.report.back_azimuth_deg, 6),
            }
        if self.truth:
            out["truth"] = self.truth
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def report_output(outputs: list[StepOutput], p_index: int | None, seconds_after_p: float, sample_rate_hz: float) -> StepOutput | None:
    """Latest output emitted no later than `seconds_after_p` after P (or the last one)"""
    if not outputs:
        return None
    if p_index is None:
        return outputs[-1]
    limit = p_index + seconds_after_p * sample_rate_hz
    chosen = None
    for out in outputs:
        if out.t > limit:
            break
        chosen = out
    return chosen or outputs[0]


def replay_samples(
    session: StreamSession,
    samples: np.ndarray,
    sink: TextIO | None = None,
) -> list[StepOutput]:
    """Step every column of samples[3, L]; StepOutputs go to sink as JSONL"""
    outputs = []
    for column in np.asarray(samples).T:
        out = session.step(column)
        if out is not None:
            outputs.append(out)
            if sink is not None:
                sink.write(out.to_json() + "\n")
    return outputs


def replay_record(
    session: StreamSession,
    record: WaveformRecord,
    sink: TextIO | None = None,
) -> tuple[list[StepOutput], ReplaySummary]:
    outputs = replay_samples(session, record.samples, sink)
    events = session.finish()
    first_p = next((ev.sample_index for ev in events if ev.phase is Phase.P), None)
    chosen = report_output(outputs, first_p, session.stream_cfg.report_seconds_after_p, record.sample_rate_hz)
    truth = {k: v for k, v in record.header().items() if k in ("p_index", "s_index", "magnitude", "x_km", "y_km")}
    summary = ReplaySummary(
        n_samples=record.n_samples,
        n_steps=len(outputs),
        events=events,
        report_index=first_p,
        report=chosen,
        resets=session.resets,
        truth=truth,
    )
    if session.logger:
        session.logger.info(
            f"replay: {record.n_samples} samples -> {len(outputs)} steps, {len(events)} pick events"
        )
    return outputs, summary


def replay(path: str | Path, session: StreamSession, sink: TextIO | None = None) -> ReplaySummary:
    """Replay one FSH1 file through a fresh session"""
    record = read_waveform(path)
    return replay_record(session, record, sink)[1]


def parse_sample_lines(lines: Iterable[str]) -> Iterator[np.ndarray]:
    """Whitespace- or comma-separated "z n e" text rows -> samples.

    Blank lines and lines starting with '#' are skipped.
    """
    offset = 0
    for number, line in enumerate(lines, start=1):
        text = line.strip()
        if text and not text.startswith("#"):
            parts = text.replace(",", " ").split()
            try:
                if len(parts) != 3:
                    raise ValueError(f"expected 3 values, got {len(parts)}")
                yield np.array([float(p) for p in parts])
            except ValueError as e:
                raise WaveformFormatError(f"line {number}: {e}", byte_offset=offset) from e
        offset += len(line.encode("utf-8"))


def stream_lines(session: StreamSession, lines: Iterable[str], sink: TextIO) -> list[PickEvent]:
    """Live mode: one StepOutput line per F samples, flushed as it is produced"""
    for sample in parse_sample_lines(lines):
        out = session.step(sample)
        if out is not None:
            sink.write(out.to_json() + "\n")
            sink.flush()
    return session.finish()
