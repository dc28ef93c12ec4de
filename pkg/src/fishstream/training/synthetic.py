"""Synthetic three-component records.

AR(1) background noise plus a P and an S arrival, each a Ricker wavelet
truncated to start at its onset followed by a decaying coda. The S-P gap
encodes distance, the horizontal/vertical amplitude ratio encodes
back-azimuth and S amplitude and coda length encode magnitude.
"""

import math
from dataclasses import dataclass, fields
from typing import Any

import numpy as np

from ..core.config import Config
from ..core.exceptions import ConfigError
from ..storage.waveform import WaveformRecord

CODA_AMPLITUDE = 0.5


@dataclass
class SyntheticParams:
    sample_rate_hz: float = 100.0
    length: int = 6000
    noise_ar_coeff: float = 0.9
    noise_scale: float = 1.0
    p_freq_hz: float = 8.0
    s_freq_hz: float = 4.0
    amp_mag_slope: float = 0.5
    p_to_s_amplitude: float = 0.4
    ps_velocity_km_s: float = 8.0
    min_gap_s: float = 1.0
    max_gap_s: float = 12.0
    magnitude_range: tuple[float, float] = (2.0, 6.0)
    p_index_range: tuple[int, int] = (500, 2500)
    noise_fraction: float = 0.1
    p_duration_s: float = 0.8
    coda_base_s: float = 2.0
    coda_mag_slope: float = 0.3
    azimuth_gain: float = 1.0

    def __post_init__(self):
        self.magnitude_range = (float(self.magnitude_range[0]), float(self.magnitude_range[1]))
        self.p_index_range = (int(self.p_index_range[0]), int(self.p_index_range[1]))
        positive = ("sample_rate_hz", "p_freq_hz", "s_freq_hz", "amp_mag_slope", "p_to_s_amplitude",
                    "ps_velocity_km_s", "p_duration_s", "coda_base_s", "azimuth_gain")
        for name in positive:
            if getattr(self, name) <= 0:
                raise ConfigError(f"synthetic.{name} must be positive, got {getattr(self, name)}")
        if self.noise_scale < 0 or self.coda_mag_slope < 0:
            raise ConfigError("synthetic.noise_scale and coda_mag_slope must be >= 0")
        if not 0 <= self.noise_ar_coeff < 1:
            raise ConfigError(f"synthetic.noise_ar_coeff must lie in [0, 1), got {self.noise_ar_coeff}")
        if self.min_gap_s < 1.0 or self.max_gap_s < self.min_gap_s:
            raise ConfigError(f"synthetic: need 1 s <= min_gap_s <= max_gap_s, got {self.min_gap_s}, {self.max_gap_s}")
        if self.p_duration_s >= self.min_gap_s:
            raise ConfigError("synthetic.p_duration_s must be shorter than min_gap_s")
        if not 0 <= self.noise_fraction <= 1:
            raise ConfigError(f"synthetic.noise_fraction must lie in [0, 1], got {self.noise_fraction}")
        lo, hi = self.p_index_range
        if lo < 0 or hi < lo or hi + self.gap_samples(self.max_gap_s) >= self.length:
            raise ConfigError(f"synthetic: p_index_range {self.p_index_range} leaves no room for S in {self.length} samples")

    def gap_samples(self, gap_s: float) -> int:
        return int(round(gap_s * self.sample_rate_hz))

    def coda_seconds(self, magnitude: float) -> float:
        """S coda decay time, growing with magnitude"""
        return self.coda_base_s + self.coda_mag_slope * magnitude

    def s_amplitude(self, magnitude: float) -> float:
        return 10.0 ** (self.amp_mag_slope * magnitude)

    @classmethod
    def from_config(cls, config: Config) -> "SyntheticParams":
        section = config.section("synthetic")
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in section.items() if k in names})


def ricker_onset(n: int, freq_hz: float, sample_rate_hz: float) -> np.ndarray:
    """Ricker wavelet shifted to peak at 1/f, truncated to start at sample 0"""
    tau = np.arange(n) / sample_rate_hz - 1.0 / freq_hz
    arg = (math.pi * freq_hz * tau) ** 2
    wave = (1.0 - 2.0 * arg) * np.exp(-arg)
    wave[np.arange(n) / sample_rate_hz > 2.0 / freq_hz] = 0.0
    return wave


def phase_trace(n: int, freq_hz: float, decay_s: float, sample_rate_hz: float, duration_s: float | None = None) -> np.ndarray:
    """Unit-amplitude arrival of n samples: onset wavelet plus exponential coda"""
    t = np.arange(n) / sample_rate_hz
    trace = ricker_onset(n, freq_hz, sample_rate_hz)
    trace += CODA_AMPLITUDE * np.sin(2.0 * math.pi * freq_hz * t) * np.exp(-t / decay_s)
    if duration_s is not None:
        trace[t >= duration_s] = 0.0
    return trace


def ar1_noise(rng: np.random.Generator, n: int, coeff: float, scale: float, channels: int = 3) -> np.ndarray:
    """Stationary AR(1) noise [channels, n] with marginal std `scale`"""
    out = np.zeros((channels, n))
    if scale == 0 or n == 0:
        return out
    shocks = rng.normal(0.0, scale * math.sqrt(1.0 - coeff * coeff), size=(channels, n))
    out[:, 0] = rng.normal(0.0, scale, size=channels)
    for i in range(1, n):
        out[:, i] = coeff * out[:, i - 1] + shocks[:, i]
    return out


def _modulate(trace: np.ndarray, azimuth: float, gain: float) -> np.ndarray:
    """Z, N, E rows: vertical unmodulated, horizontals by cos/sin of azimuth"""
    return np.stack([trace, gain * math.cos(azimuth) * trace, gain * math.sin(azimuth) * trace])


def synth_record(params: SyntheticParams, rng: np.random.Generator, noise_only: bool = False) -> WaveformRecord:
    n = params.length
    fs = params.sample_rate_hz
    samples = ar1_noise(rng, n, params.noise_ar_coeff, params.noise_scale)
    if noise_only:
        return WaveformRecord(samples=samples, sample_rate_hz=fs, is_noise=True)

    magnitude = float(rng.uniform(*params.magnitude_range))
    p_index = int(rng.integers(params.p_index_range[0], params.p_index_range[1] + 1))
    gap_s = float(rng.uniform(params.min_gap_s, params.max_gap_s))
    s_index = p_index + params.gap_samples(gap_s)
    azimuth = float(rng.uniform(0.0, 2.0 * math.pi))
    distance = params.ps_velocity_km_s * (s_index - p_index) / fs

    s_amp = params.s_amplitude(magnitude)
    p_trace = phase_trace(n - p_index, params.p_freq_hz, params.p_duration_s / 3.0, fs, params.p_duration_s)
    s_trace = phase_trace(n - s_index, params.s_freq_hz, params.coda_seconds(magnitude), fs)
    samples[:, p_index:] += _modulate(params.p_to_s_amplitude * s_amp * p_trace, azimuth, params.azimuth_gain)
    samples[:, s_index:] += _modulate(s_amp * s_trace, azimuth, params.azimuth_gain)

    return WaveformRecord(
        samples=samples,
        sample_rate_hz=fs,
        p_index=p_index,
        s_index=s_index,
        magnitude=magnitude,
        x_km=distance * math.sin(azimuth),
        y_km=distance * math.cos(azimuth),
    )


def record_rng(seed: int, index: int) -> np.random.Generator:
    """Independent stream per record, so any record can be regenerated alone"""
    return np.random.default_rng([seed, index])


def gen_synthetic(params: SyntheticParams, n: int, seed: int) -> list[WaveformRecord]:
    if n < 1:
        raise ConfigError(f"gen_synthetic needs n >= 1, got {n}")
    records = []
    for i in range(n):
        rng = record_rng(seed, i)
        records.append(synth_record(params, rng, noise_only=bool(rng.random() < params.noise_fraction)))
    return records


def clean_oracle(record: WaveformRecord, params: SyntheticParams) -> dict[str, Any]:
    """Recover labels from a noise-free record in closed form.

    P onset is the first nonzero sample; the P arrival is silent after
    p_duration_s, so S onset is the first nonzero sample after that.
    """
    x = record.samples.astype(np.float64)
    active = np.any(x != 0.0, axis=0)
    onsets = np.flatnonzero(active)
    if onsets.size == 0:
        return {"p_index": None, "s_index": None}
    p_index = int(onsets[0])
    p_end = p_index + int(math.ceil(params.p_duration_s * record.sample_rate_hz))
    later = onsets[onsets >= p_end]
    s_index = int(later[0]) if later.size else None

    z, north, east = x
    azimuth = math.atan2(float(np.dot(east, z)), float(np.dot(north, z)))
    result: dict[str, Any] = {"p_index": p_index, "s_index": s_index, "back_azimuth_deg": math.degrees(azimuth) % 360.0}
    if s_index is not None:
        distance = params.ps_velocity_km_s * (s_index - p_index) / record.sample_rate_hz
        result.update(distance_km=distance, x_km=distance * math.sin(azimuth), y_km=distance * math.cos(azimuth))
    return result


@dataclass
class MultiQuakeStream:
    samples: np.ndarray  # [3, L]
    sample_rate_hz: float
    p_indices: list[int]
    s_indices: list[int]


def concat_records(
    records: list[WaveformRecord],
    gap_s: float,
    params: SyntheticParams,
    rng: np.random.Generator,
) -> MultiQuakeStream:
    """Join quake records with `gap_s` seconds of fresh noise between them"""
    fs = params.sample_rate_hz
    pieces, p_indices, s_indices, offset = [], [], [], 0
    for i, record in enumerate(records):
        if i:
            filler = ar1_noise(rng, int(round(gap_s * fs)), params.noise_ar_coeff, params.noise_scale)
            pieces.append(filler)
            offset += filler.shape[1]
        pieces.append(record.samples.astype(np.float64))
        if record.p_index is not None:
            p_indices.append(offset + record.p_index)
        if record.s_index is not None:
            s_indices.append(offset + record.s_index)
        offset += record.n_samples
    return MultiQuakeStream(np.concatenate(pieces, axis=1).astype(np.float32), fs, p_indices, s_indices)
