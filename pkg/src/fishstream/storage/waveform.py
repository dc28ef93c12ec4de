"""FSH1 waveform files.

Layout: b"FSH1", u32 little-endian header length, UTF-8 JSON header, then
channel-planar float32 little-endian samples in Z, N, E order.
"""

import json
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..core.exceptions import FishStreamError, ShapeError, WaveformFormatError

MAGIC = b"FSH1"
CHANNELS = 3
SAMPLE_RATE_HZ = 100.0
_PREFIX = len(MAGIC) + 4


@dataclass
class WaveformRecord:
    """Three-channel (Z, N, E) record with optional labels"""

    samples: np.ndarray  # [3, L] float32
    sample_rate_hz: float = SAMPLE_RATE_HZ
    p_index: int | None = None
    s_index: int | None = None
    magnitude: float | None = None
    x_km: float | None = None
    y_km: float | None = None
    is_noise: bool = False
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        self.samples = np.ascontiguousarray(self.samples, dtype=np.float32)
        if self.samples.ndim != 2 or self.samples.shape[0] != CHANNELS:
            raise ShapeError(f"WaveformRecord: samples must be [{CHANNELS}, L], got {self.samples.shape}")
        if self.is_noise and (self.p_index is not None or self.s_index is not None):
            raise FishStreamError("WaveformRecord: a noise record cannot carry arrival indices")
        if self.p_index is not None and self.s_index is not None and self.p_index >= self.s_index:
            raise FishStreamError(f"WaveformRecord: p_index {self.p_index} must precede s_index {self.s_index}")

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]

    @property
    def duration_s(self) -> float:
        return self.n_samples / self.sample_rate_hz

    @property
    def distance_km(self) -> float | None:
        if self.x_km is None or self.y_km is None:
            return None
        return math.hypot(self.x_km, self.y_km)

    @property
    def back_azimuth_deg(self) -> float | None:
        if self.x_km is None or self.y_km is None:
            return None
        return math.degrees(math.atan2(self.x_km, self.y_km)) % 360.0

    @property
    def ps_gap_s(self) -> float | None:
        if self.p_index is None or self.s_index is None:
            return None
        return (self.s_index - self.p_index) / self.sample_rate_hz

    def header(self) -> dict:
        header = {
            "sample_rate_hz": float(self.sample_rate_hz),
            "n_samples": self.n_samples,
            "channels": CHANNELS,
            "is_noise": bool(self.is_noise),
        }
        for key in ("p_index", "s_index"):
            value = getattr(self, key)
            if value is not None:
                header[key] = int(value)
        for key in ("magnitude", "x_km", "y_km"):
            value = getattr(self, key)
            if value is not None:
                header[key] = float(value)
        header.update(self.extra)
        return header


def encode_waveform(record: WaveformRecord) -> bytes:
    header = json.dumps(record.header(), sort_keys=True, separators=(",", ":")).encode("utf-8")
    payload = record.samples.astype("<f4").tobytes()
    return MAGIC + struct.pack("<I", len(header)) + header + payload


def decode_waveform(data: bytes, require_rate: float | None = SAMPLE_RATE_HZ) -> WaveformRecord:
    if len(data) < len(MAGIC) or data[: len(MAGIC)] != MAGIC:
        raise WaveformFormatError("missing FSH1 magic", byte_offset=0)
    if len(data) < _PREFIX:
        raise WaveformFormatError("truncated header length", byte_offset=len(MAGIC))
    (header_len,) = struct.unpack_from("<I", data, len(MAGIC))
    body = _PREFIX + header_len
    if len(data) < body:
        raise WaveformFormatError(f"header of {header_len} bytes runs past end of file", byte_offset=_PREFIX)

    try:
        header = json.loads(data[_PREFIX:body].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        offset = _PREFIX + getattr(e, "pos", getattr(e, "start", 0))
        raise WaveformFormatError(f"invalid JSON header: {e}", byte_offset=offset) from e
    if not isinstance(header, dict):
        raise WaveformFormatError("header is not a JSON object", byte_offset=_PREFIX)

    for key in ("sample_rate_hz", "n_samples", "channels"):
        if key not in header:
            raise WaveformFormatError(f"header is missing '{key}'", byte_offset=_PREFIX)
    if header["channels"] != CHANNELS:
        raise WaveformFormatError(f"expected {CHANNELS} channels, got {header['channels']}", byte_offset=_PREFIX)
    rate = float(header["sample_rate_hz"])
    if require_rate is not None and rate != require_rate:
        raise WaveformFormatError(f"sample rate {rate} Hz is not the supported {require_rate} Hz", byte_offset=_PREFIX)
    n_samples = int(header["n_samples"])
    if n_samples < 0:
        raise WaveformFormatError(f"negative n_samples {n_samples}", byte_offset=_PREFIX)

    expected = CHANNELS * n_samples * 4
    actual = len(data) - body
    if actual != expected:
        raise WaveformFormatError(
            f"sample payload is {actual} bytes, header promises {expected}", byte_offset=body + min(actual, expected)
        )
    samples = np.frombuffer(data, dtype="<f4", count=CHANNELS * n_samples, offset=body).reshape(CHANNELS, n_samples)

    known = {"sample_rate_hz", "n_samples", "channels", "p_index", "s_index", "magnitude", "x_km", "y_km", "is_noise"}
    try:
        return WaveformRecord(
            samples=samples.astype(np.float32),
            sample_rate_hz=rate,
            p_index=header.get("p_index"),
            s_index=header.get("s_index"),
            magnitude=header.get("magnitude"),
            x_km=header.get("x_km"),
            y_km=header.get("y_km"),
            is_noise=bool(header.get("is_noise", False)),
            extra={k: v for k, v in header.items() if k not in known},
        )
    except FishStreamError as e:
        raise WaveformFormatError(f"inconsistent labels: {e}", byte_offset=_PREFIX) from e


def read_waveform(path: str | Path, require_rate: float | None = SAMPLE_RATE_HZ) -> WaveformRecord:
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        raise FishStreamError(f"Cannot read waveform file {path}: {e}") from e
    return decode_waveform(data, require_rate)


def write_waveform(path: str | Path, record: WaveformRecord):
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(encode_waveform(record))
    except OSError as e:
        raise FishStreamError(f"Cannot write waveform file {path}: {e}") from e
