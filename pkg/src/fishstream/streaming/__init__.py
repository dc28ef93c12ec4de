from .bench import MIN_BENCH_STEPS, BenchReport, bench_latency
from .replay import ReplaySummary, parse_sample_lines, replay, replay_record, replay_samples, report_output, stream_lines
from .session import StreamConfig, StreamSession, session_init

__all__ = [
    "MIN_BENCH_STEPS",
    "BenchReport",
    "ReplaySummary",
    "StreamConfig",
    "StreamSession",
    "bench_latency",
    "parse_sample_lines",
    "replay",
    "replay_record",
    "replay_samples",
    "report_output",
    "session_init",
    "stream_lines",
]
