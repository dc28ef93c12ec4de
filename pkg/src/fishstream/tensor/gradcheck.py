"""Central finite-difference oracle for tape gradients
"""

from collections.abc import Callable, Sequence

import numpy as np

from .tensor import Tape, Tensor


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-8) -> float:
    """||a - n|| / max(||a||, ||n||, floor)"""
    diff = float(np.linalg.norm((analytic - numeric).ravel()))
    scale = max(float(np.linalg.norm(analytic.ravel())), float(np.linalg.norm(numeric.ravel())), floor)
    return diff / scale


def grad_check(
    f: Callable[[], Tensor],
    params: Sequence[Tensor],
    eps: float = 1e-3,
    max_coords: int | None = None,
    seed: int = 0,
) -> float:
    """Max relative error between tape gradients and central differences.

    f rebuilds the scalar loss from `params` on every call and must be
    deterministic. With `max_coords` only a random subset of coordinates per
    parameter is perturbed; the comparison is restricted to that subset.
    """
    for p in params:
        p.requires_grad = True
        p.zero_grad()

    with Tape() as tape:
        loss = f()
    tape.backward(loss)
    analytic = [np.zeros_like(p.data) if p.grad is None else p.grad.copy() for p in params]

    rng = np.random.default_rng(seed)
    worst = 0.0
    for p, a in zip(params, analytic):
        flat = p.data.reshape(-1)
        coords = np.arange(flat.size)
        if max_coords is not None and flat.size > max_coords:
            coords = np.sort(rng.choice(flat.size, size=max_coords, replace=False))
        numeric = np.zeros(coords.size, dtype=np.float64)
        for n, i in enumerate(coords):
            original = flat[i]
            flat[i] = original + eps
            plus = f().item()
            flat[i] = original - eps
            minus = f().item()
            flat[i] = original
            numeric[n] = (plus - minus) / (2.0 * eps)
        worst = max(worst, relative_error(a.reshape(-1)[coords].astype(np.float64), numeric))

    for p in params:
        p.zero_grad()
    return worst
