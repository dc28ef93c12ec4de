"""
Tests for Adam and the learning-rate schedules
"""

import numpy as np
import pytest

from fishstream.core.exceptions import ConfigError
from fishstream.tensor import Tape, Tensor, ops
from fishstream.training import Adam, learning_rate


def _quadratic_step(p: Tensor, opt: Adam, lr: float | None = None):
    opt.zero_grad()
    with Tape() as tape:
        loss = ops.sum_all(ops.mul(p, p))
    tape.backward(loss)
    opt.step(lr)


class TestAdam:
    """Test the optimizer update"""

    def test_first_step_moves_by_lr(self):
        p = Tensor(np.array([3.0, -2.0]), requires_grad=True, dtype=np.float64)
        opt = Adam([p], lr=0.1)
        _quadratic_step(p, opt)
        np.testing.assert_allclose(p.data, [2.9, -1.9], atol=1e-6)

    def test_converges_on_quadratic(self):
        p = Tensor(np.array([3.0, -2.0, 0.5]), requires_grad=True, dtype=np.float64)
        opt = Adam([p], lr=0.05)
        for _ in range(400):
            _quadratic_step(p, opt)
        assert np.all(np.abs(p.data) < 0.05)

    def test_step_lr_overrides_default(self):
        p = Tensor(np.array([1.0]), requires_grad=True, dtype=np.float64)
        opt = Adam([p], lr=0.1)
        _quadratic_step(p, opt, lr=0.01)
        assert p.data[0] == pytest.approx(0.99)

    def test_params_without_grad_are_skipped(self):
        p = Tensor(np.array([1.0]), requires_grad=True)
        opt = Adam([p])
        opt.step()
        assert p.data[0] == 1.0

    def test_keeps_parameter_dtype(self):
        p = Tensor(np.array([1.0, 2.0]), requires_grad=True, dtype=np.float32)
        opt = Adam([p], lr=0.1)
        _quadratic_step(p, opt)
        assert p.data.dtype == np.float32


class TestLearningRate:
    """Test schedules"""

    def test_constant(self):
        assert learning_rate(1e-3, 50, 100) == 1e-3

    def test_cosine_endpoints(self):
        assert learning_rate(1e-3, 0, 100, "cosine") == pytest.approx(1e-3)
        assert learning_rate(1e-3, 50, 100, "cosine") == pytest.approx(5e-4)
        assert learning_rate(1e-3, 100, 100, "cosine") == pytest.approx(0.0)
        assert learning_rate(1e-3, 150, 100, "cosine") == pytest.approx(0.0)

    def test_unknown_schedule(self):
        with pytest.raises(ConfigError):
            learning_rate(1e-3, 0, 10, "linear")
