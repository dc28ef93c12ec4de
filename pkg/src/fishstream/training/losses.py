"""Training targets and losses.

Masks and targets are plain numpy arrays, expanded to the full shape of the
output they weight; losses are Tensors on the active tape.
"""

from dataclasses import dataclass

import numpy as np

from ..model import ModelConfig, NetworkOutput, encode_pick_targets
from ..storage.waveform import WaveformRecord
from ..tensor import Tensor, ops


def n_steps_for(length: int, factor: int) -> int:
    return -(-length // factor)


def _span_mask(lo: int, hi: int, n_steps: int, factor: int) -> np.ndarray:
    """1.0 on steps whose sample span [tF, (t+1)F-1] meets [lo, hi]"""
    steps = np.arange(n_steps)
    return ((steps * factor <= hi) & ((steps + 1) * factor - 1 >= lo)).astype(np.float64)


def focus_mask(p_index: int | None, a: int, b: int, length: int, factor: int, full: bool = False) -> np.ndarray:
    """Steps on which location and magnitude regression is active"""
    n_steps = n_steps_for(length, factor)
    if full:
        return np.ones(n_steps)
    if p_index is None:
        return np.zeros(n_steps)
    return _span_mask(p_index - a, p_index + b, n_steps, factor)


def quake_mask(
    p_index: int | None,
    s_index: int | None,
    a: int,
    b: int,
    tail: int,
    length: int,
    factor: int,
) -> np.ndarray:
    """Focus range extended to `tail` samples past S; everything else is noise"""
    n_steps = n_steps_for(length, factor)
    if p_index is None:
        return np.zeros(n_steps)
    hi = p_index + b
    if s_index is not None:
        hi = max(hi, s_index + tail)
    return _span_mask(p_index - a, hi, n_steps, factor)


@dataclass
class TrainTargets:
    picks: np.ndarray  # [N, 2]
    location: np.ndarray  # [N, 2]
    magnitude: np.ndarray  # [N, 1]
    focus: np.ndarray  # [N]
    quake: np.ndarray  # [N]


def build_targets(
    record: WaveformRecord,
    cfg: ModelConfig,
    focus_before: int,
    focus_after: int,
    tail_samples: int,
    full_focus: bool = False,
) -> TrainTargets:
    factor = cfg.downsample_factor
    n = n_steps_for(record.n_samples, factor)
    picks = np.stack(
        [
            encode_pick_targets(record.p_index, n, cfg.bank_size, factor),
            encode_pick_targets(record.s_index, n, cfg.bank_size, factor),
        ],
        axis=1,
    )
    labelled = record.magnitude is not None and record.x_km is not None and record.y_km is not None
    if labelled:
        focus = focus_mask(record.p_index, focus_before, focus_after, record.n_samples, factor, full_focus)
    else:
        focus = np.zeros(n)
    location = np.tile([record.x_km or 0.0, record.y_km or 0.0], (n, 1))
    magnitude = np.full((n, 1), record.magnitude or 0.0)
    quake = quake_mask(record.p_index, record.s_index, focus_before, focus_after, tail_samples, record.n_samples, factor)
    return TrainTargets(picks, location, magnitude, focus, quake)


def _const(array: np.ndarray, like: Tensor) -> Tensor:
    return Tensor(array, dtype=like.dtype)


def _zero(like: Tensor) -> Tensor:
    return Tensor(np.zeros(()), dtype=like.dtype)


def masked_mae(pred: Tensor, target: np.ndarray, mask: np.ndarray) -> Tensor:
    """Mean |pred - target| over masked entries; mask has pred's shape"""
    count = float(mask.sum())
    if count == 0:
        return _zero(pred)
    err = ops.absolute(ops.sub(pred, _const(target, pred)))
    return ops.scale(ops.sum_all(ops.mul(err, _const(mask, pred))), 1.0 / count)


def sea_loss(increments: list[Tensor], quake: np.ndarray, beta: float) -> Tensor:
    """beta * sum over blocks of the mean hidden increment on noise steps"""
    noise = 1.0 - quake
    count = float(noise.sum())
    like = increments[0]
    if beta == 0 or count == 0:
        return _zero(like)
    total = None
    for delta in increments:
        term = ops.sum_all(ops.mul(delta, _const(noise, delta)))
        total = term if total is None else ops.add(total, term)
    assert total is not None
    return ops.scale(total, beta / count)


@dataclass
class LossBreakdown:
    total: Tensor
    l_pick: float
    l_loc: float
    l_mag: float
    l_sea: float

    def as_dict(self) -> dict[str, float]:
        return {
            "loss": self.total.item(),
            "l_pick": self.l_pick,
            "l_loc": self.l_loc,
            "l_mag": self.l_mag,
            "l_sea": self.l_sea,
        }


def task_losses(out: NetworkOutput, targets: TrainTargets) -> tuple[Tensor, Tensor, Tensor]:
    """(l_pick, l_loc, l_mag): pick MSE over all steps, masked MAE otherwise"""
    diff = ops.sub(out.picks, _const(targets.picks, out.picks))
    l_pick = ops.mean_all(ops.mul(diff, diff))
    focus = targets.focus[:, None]
    l_loc = masked_mae(out.location, targets.location, np.repeat(focus, 2, axis=1))
    l_mag = masked_mae(out.magnitude, targets.magnitude, focus)
    return l_pick, l_loc, l_mag


def total_loss(
    out: NetworkOutput,
    targets: TrainTargets,
    weights: tuple[float, float, float],
    beta: float,
) -> LossBreakdown:
    l_pick, l_loc, l_mag = task_losses(out, targets)
    l_sea = sea_loss(out.increments, targets.quake, beta)
    w_pick, w_loc, w_mag = weights
    total = ops.add(
        ops.add(ops.scale(l_pick, w_pick), ops.scale(l_loc, w_loc)),
        ops.add(ops.scale(l_mag, w_mag), l_sea),
    )
    return LossBreakdown(total, l_pick.item(), l_loc.item(), l_mag.item(), l_sea.item())
