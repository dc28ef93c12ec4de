"""Per-step latency benchmark for the recurrent engine
"""

import time
from dataclasses import asdict, dataclass

import numpy as np

from ..core.exceptions import ConfigError
from ..model import FishNetwork
from .session import StreamConfig, StreamSession

MIN_BENCH_STEPS = 100_000


@dataclass
class BenchReport:
    n_steps: int
    decile_mean_us: list[float]
    state_size_start: int
    state_size_end: int
    realtime_factor: float
    flatness: float  # max/min decile mean

    @property
    def flat(self) -> bool:
        return self.flatness <= 1.2

    @property
    def constant_state(self) -> bool:
        return self.state_size_start == self.state_size_end

    def to_dict(self) -> dict:
        out = asdict(self)
        out.update(flat=self.flat, constant_state=self.constant_state)
        return out


def bench_latency(
    network: FishNetwork,
    n_steps: int,
    seed: int = 0,
    min_steps: int = MIN_BENCH_STEPS,
) -> BenchReport:
    """Time n_steps model steps (n_steps * F samples of white noise).

    Auto-reset is disabled so every step runs the full pipeline.
    """
    if n_steps < min_steps:
        raise ConfigError(f"bench needs at least {min_steps} steps, got {n_steps}")
    if n_steps < 10:
        raise ConfigError("bench needs at least 10 steps to form deciles")
    session = StreamSession(network, StreamConfig(auto_reset=False))
    factor = session.factor
    rng = np.random.default_rng(seed)
    size_start = session.state_size

    timings = np.empty(n_steps)
    chunk = 4096
    done = 0
    while done < n_steps:
        count = min(chunk, n_steps - done)
        noise = rng.standard_normal((count * factor, 3))
        for i in range(count):
            block = noise[i * factor : (i + 1) * factor]
            start = time.perf_counter()
            for sample in block:
                session.step(sample)
            timings[done + i] = time.perf_counter() - start
        done += count

    deciles = [float(part.mean() * 1e6) for part in np.array_split(timings, 10)]
    step_seconds = factor / network.cfg.sample_rate_hz
    return BenchReport(
        n_steps=n_steps,
        decile_mean_us=deciles,
        state_size_start=size_start,
        state_size_end=session.state_size,
        realtime_factor=step_seconds / float(timings.mean()),
        flatness=max(deciles) / max(min(deciles), 1e-12),
    )
