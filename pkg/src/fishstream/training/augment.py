"""Random crop augmentation around the P arrival
"""

import numpy as np

from ..core.exceptions import ConfigError
from ..storage.waveform import WaveformRecord

PAD_MODES = ("zero", "noise")


def augment_crop(
    rec: WaveformRecord,
    a: int,
    length: int,
    rng: np.random.Generator,
    pad_mode: str = "noise",
) -> WaveformRecord:
    """Crop `length` samples starting uniformly in [p - a, p].

    Starts before sample 0 are clamped to 0. Overrunning the source pads the
    tail with zeros or with white noise matching the pre-event noise level;
    labels that fall past the crop are dropped. Noise records get a uniform
    start anywhere in the record.
    """
    if pad_mode not in PAD_MODES:
        raise ConfigError(f"pad_mode must be one of {PAD_MODES}, got {pad_mode}")
    if a < 0 or length < 1:
        raise ConfigError(f"augment_crop needs a >= 0 and length >= 1, got a={a}, length={length}")

    n = rec.n_samples
    if rec.p_index is None:
        start = int(rng.integers(0, max(n - length, 0) + 1))
    else:
        start = max(int(rng.integers(rec.p_index - a, rec.p_index + 1)), 0)

    piece = rec.samples[:, start : start + length]
    overrun = length - piece.shape[1]
    if overrun > 0:
        if pad_mode == "zero":
            pad = np.zeros((rec.samples.shape[0], overrun), dtype=np.float32)
        else:
            quiet = rec.samples if rec.p_index is None else rec.samples[:, : rec.p_index]
            scale = quiet.std(axis=1, keepdims=True) if quiet.shape[1] > 1 else np.zeros((rec.samples.shape[0], 1))
            pad = (rng.standard_normal((rec.samples.shape[0], overrun)) * scale).astype(np.float32)
        piece = np.concatenate([piece, pad], axis=1)

    def shift(index: int | None) -> int | None:
        if index is None or not 0 <= index - start < length:
            return None
        return index - start

    p_index, s_index = shift(rec.p_index), shift(rec.s_index)
    return WaveformRecord(
        samples=piece.copy(),
        sample_rate_hz=rec.sample_rate_hz,
        p_index=p_index,
        s_index=s_index if p_index is not None else None,
        magnitude=rec.magnitude,
        x_km=rec.x_km,
        y_km=rec.y_km,
        is_noise=rec.is_noise,
    )
