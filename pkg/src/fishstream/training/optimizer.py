"""Adam with an optional cosine learning-rate schedule
"""

import math

import numpy as np

from ..core.exceptions import ConfigError
from ..tensor import Tensor

SCHEDULES = ("constant", "cosine")


def learning_rate(base_lr: float, step: int, total_steps: int, schedule: str = "constant") -> float:
    if schedule == "constant":
        return base_lr
    if schedule == "cosine":
        progress = min(step / max(total_steps, 1), 1.0)
        return 0.5 * base_lr * (1.0 + math.cos(math.pi * progress))
    raise ConfigError(f"Unknown lr schedule '{schedule}', expected one of {SCHEDULES}")


class Adam:
    def __init__(
        self,
        params: list[Tensor],
        lr: float = 1e-3,
        betas: tuple[float, float] = (0.9, 0.999),
        eps: float = 1e-8,
    ):
        self.params = params
        self.lr = lr
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p.data, dtype=np.float64) for p in params]
        self.v = [np.zeros_like(p.data, dtype=np.float64) for p in params]

    def step(self, lr: float | None = None):
        """Apply one update from the accumulated grads; params without a grad are skipped"""
        lr = self.lr if lr is None else lr
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for p, m, v in zip(self.params, self.m, self.v):
            if p.grad is None:
                continue
            g = p.grad.astype(np.float64)
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            update = lr * (m / c1) / (np.sqrt(v / c2) + self.eps)
            p.data -= update.astype(p.data.dtype)

    def zero_grad(self):
        for p in self.params:
            p.zero_grad()
