"""
Tests for the tensor type and tape
"""

import numpy as np
import pytest

from fishstream.core.exceptions import ShapeError
from fishstream.tensor import Tape, Tensor, default_dtype, ops, precision


class TestTensor:
    """Tensor construction and tape bookkeeping"""

    def test_default_dtype_is_float32(self):
        """Training and inference run in float32"""
        assert Tensor([1.0, 2.0]).dtype == np.float32

    def test_precision_context(self):
        """precision() switches the dtype of new tensors and restores it"""
        with precision(np.float64):
            assert default_dtype() is np.float64
            assert Tensor.zeros(2, 3).dtype == np.float64
        assert default_dtype() is np.float32

    def test_precision_rejects_ints(self):
        with pytest.raises(ValueError):
            with precision(np.int32):
                pass

    def test_item_needs_scalar(self):
        with pytest.raises(ShapeError):
            Tensor([1.0, 2.0]).item()

    def test_no_tape_no_record(self):
        """Ops outside a tape do not mark outputs"""
        x = Tensor([1.0, 2.0], requires_grad=True)
        y = ops.scale(x, 2.0)
        assert y.tape_id is None
        np.testing.assert_allclose(y.data, [2.0, 4.0])

    def test_backward_simple(self):
        """d/dx sum(x * x) = 2x"""
        with precision(np.float64):
            x = Tensor([1.0, -2.0, 3.0], requires_grad=True)
            with Tape() as tape:
                loss = ops.sum_all(x * x)
            tape.backward(loss)
        np.testing.assert_allclose(x.grad, [2.0, -4.0, 6.0])

    def test_grads_accumulate(self):
        """A second backward adds to existing grads until zero_grad"""
        with precision(np.float64):
            x = Tensor([1.0, 2.0], requires_grad=True)
            for _ in range(2):
                with Tape() as tape:
                    loss = ops.sum_all(ops.scale(x, 3.0))
                tape.backward(loss)
        np.testing.assert_allclose(x.grad, [6.0, 6.0])
        x.zero_grad()
        assert x.grad is None

    def test_reused_input_sums_paths(self):
        """A tensor used twice gets both contributions"""
        with precision(np.float64):
            x = Tensor([[2.0]], requires_grad=True)
            with Tape() as tape:
                loss = ops.sum_all(ops.add(ops.matmul(x, x), x))
            tape.backward(loss)
        np.testing.assert_allclose(x.grad, [[5.0]])

    def test_backward_needs_scalar(self):
        x = Tensor([1.0, 2.0], requires_grad=True)
        with Tape() as tape:
            y = ops.scale(x, 2.0)
        with pytest.raises(ShapeError):
            tape.backward(y)

    def test_backward_foreign_loss(self):
        """A loss recorded on another tape is rejected"""
        x = Tensor([1.0], requires_grad=True)
        with Tape():
            loss = ops.sum_all(x)
        with Tape() as other:
            ops.sum_all(ops.scale(x, 2.0))
        with pytest.raises(ShapeError):
            other.backward(loss)

    def test_constants_get_no_grad(self):
        """Inputs without requires_grad stay untouched"""
        w = Tensor([1.0, 2.0], requires_grad=True)
        c = Tensor([3.0, 4.0])
        with Tape() as tape:
            loss = ops.sum_all(ops.mul(w, c))
        tape.backward(loss)
        assert c.grad is None
        np.testing.assert_allclose(w.grad, [3.0, 4.0])


class TestShapeErrors:
    """Every op names the offending shapes"""

    def test_add_mismatch(self):
        with pytest.raises(ShapeError, match=r"\(2,\) vs \(3,\)"):
            ops.add(Tensor(np.zeros(2)), Tensor(np.zeros(3)))

    def test_matmul_mismatch(self):
        with pytest.raises(ShapeError, match="matmul"):
            ops.matmul(Tensor(np.zeros((2, 3))), Tensor(np.zeros((2, 3))))

    def test_conv_even_kernel(self):
        with pytest.raises(ShapeError):
            ops.conv1d(Tensor(np.zeros((1, 8))), Tensor(np.zeros((1, 1, 2))))

    def test_conv_channel_mismatch(self):
        with pytest.raises(ShapeError):
            ops.conv1d(Tensor(np.zeros((2, 8))), Tensor(np.zeros((1, 3, 3))))

    def test_bias_mismatch(self):
        with pytest.raises(ShapeError):
            ops.add_bias(Tensor(np.zeros((4, 3))), Tensor(np.zeros(4)))

    def test_sliding_max_window(self):
        with pytest.raises(ShapeError):
            ops.sliding_max(Tensor(np.zeros((3, 2))), 4)

    def test_concat_mismatch(self):
        with pytest.raises(ShapeError):
            ops.concat([Tensor(np.zeros((2, 3))), Tensor(np.zeros((2, 4)))], axis=0)


class TestForwardValues:
    """Forward results against direct numpy formulas"""

    def test_conv1d_matches_naive(self, rng):
        x = rng.normal(size=(2, 11))
        w = rng.normal(size=(3, 2, 3))
        with precision(np.float64):
            out = ops.conv1d(Tensor(x), Tensor(w), stride=2, padding=(2, 0)).data
        xp = np.concatenate([np.zeros((2, 2)), x], axis=1)
        expected = np.array([[np.sum(w[o] * xp[:, 2 * j : 2 * j + 3]) for j in range(out.shape[1])] for o in range(3)])
        assert out.shape == (3, 6)
        np.testing.assert_allclose(out, expected, rtol=1e-12)

    def test_causal_mean(self):
        x = np.arange(1.0, 6.0)[None, :]  # 1..5
        with precision(np.float64):
            out = ops.causal_mean(Tensor(x), 2).data
        np.testing.assert_allclose(out, [[0.5, 2.5, 4.5]])

    def test_antisymmetrize(self):
        w = np.array([[[1.0, 5.0, 3.0]]])
        with precision(np.float64):
            out = ops.antisymmetrize(Tensor(w)).data
        np.testing.assert_allclose(out, [[[-1.0, 0.0, 1.0]]])

    def test_sliding_max(self):
        x = np.array([[1.0], [3.0], [2.0], [0.0]])
        with precision(np.float64):
            out = ops.sliding_max(Tensor(x), 2).data
        np.testing.assert_allclose(out[:, 0], [3.0, 3.0, 2.0])

    def test_sigmoid_extremes(self):
        """No overflow for large magnitudes"""
        with precision(np.float64):
            out = ops.sigmoid(Tensor([-1000.0, 0.0, 1000.0])).data
        np.testing.assert_allclose(out, [0.0, 0.5, 1.0])

    def test_gelu_values(self):
        """tanh-approximation gelu: zero at 0, identity for large arguments"""
        with precision(np.float64):
            out = ops.gelu(Tensor([0.0, 10.0])).data
        assert out[0] == 0.0
        assert out[1] == pytest.approx(10.0, abs=1e-3)

    def test_absolute_value(self):
        with precision(np.float64):
            assert ops.absolute(Tensor([-3.5])).data[0] == 3.5

    def test_rmsnorm_zeros_stay_zero(self):
        with precision(np.float64):
            out = ops.rmsnorm(Tensor(np.zeros((2, 4))), Tensor(np.ones(4)), eps=1e-6).data
        np.testing.assert_array_equal(out, np.zeros((2, 4)))

    def test_rmsnorm_constant_is_ones(self):
        with precision(np.float64):
            out = ops.rmsnorm(Tensor(np.full((1, 5), 3.0)), Tensor(np.ones(5)), eps=1e-12).data
        np.testing.assert_allclose(out, np.ones((1, 5)), rtol=1e-9)

    @pytest.mark.parametrize("alpha", [0.5, 2.0, 37.0])
    def test_rmsnorm_scale_invariant(self, rng, alpha):
        x = rng.normal(size=(3, 8))
        gain = rng.normal(size=8)
        with precision(np.float64):
            base = ops.rmsnorm(Tensor(x), Tensor(gain), eps=1e-6).data
            scaled = ops.rmsnorm(Tensor(alpha * x), Tensor(gain), eps=1e-6).data
        np.testing.assert_allclose(scaled, base, atol=1e-5)

    def test_layernorm_values(self):
        with precision(np.float64):
            normalized = ops.layernorm(Tensor([[1.0, -1.0]]), Tensor(np.ones(2)), Tensor(np.zeros(2))).data
            constant = ops.layernorm(Tensor([[4.0, 4.0, 4.0]]), Tensor(np.ones(3)), Tensor(np.zeros(3))).data
        np.testing.assert_allclose(normalized, [[1.0, -1.0]], rtol=1e-4)
        np.testing.assert_array_equal(constant, np.zeros((1, 3)))

    def test_matmul_examples(self):
        b = np.array([[1.0, 2.0], [3.0, 4.0]])
        out = ops.matmul(Tensor(np.eye(2)), Tensor(b)).data
        np.testing.assert_array_equal(out, b)
        out = ops.matmul(Tensor([[1.0, 0.0], [0.0, 0.0]]), Tensor([[5.0, 6.0], [7.0, 8.0]])).data
        np.testing.assert_array_equal(out, [[5.0, 6.0], [0.0, 0.0]])

    def test_matmul_identity_associativity(self, rng):
        """Identity and associativity hold bitwise for small integer inputs"""
        a = Tensor(rng.integers(-8, 9, size=(4, 5)).astype(np.float32))
        b = Tensor(rng.integers(-8, 9, size=(5, 3)).astype(np.float32))
        eye = Tensor(np.eye(5, dtype=np.float32))
        left = ops.matmul(ops.matmul(a, eye), b).data
        np.testing.assert_array_equal(left, ops.matmul(a, b).data)
        c = Tensor(rng.integers(-8, 9, size=(3, 2)).astype(np.float32))
        np.testing.assert_array_equal(
            ops.matmul(ops.matmul(a, b), c).data, ops.matmul(a, ops.matmul(b, c)).data
        )

    def test_conv1d_examples(self):
        with precision(np.float64):
            identity = ops.conv1d(Tensor([[1.0, 2.0, 3.0]]), Tensor([[[1.0]]])).data
            edges = ops.conv1d(Tensor([[1.0, 1.0, 1.0]]), Tensor([[[-1.0, 0.0, 1.0]]]), padding=1).data
        np.testing.assert_array_equal(identity, [[1.0, 2.0, 3.0]])
        np.testing.assert_array_equal(edges, [[1.0, 0.0, -1.0]])
