"""Differentiable operations.

Each op is a Function subclass holding whatever activations its backward
needs. Broadcasting is limited to trailing-axis gain/bias vectors; anything
else must be reshaped explicitly.
"""

from typing import Any

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..core.exceptions import ShapeError
from . import kernels
from .tensor import Tensor, active_tape


class Function:
    """Base class for taped operations"""

    def forward(self, *arrays: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        raise NotImplementedError

    @classmethod
    def apply(cls, *inputs: Tensor, **kwargs: Any) -> Tensor:
        fn = cls(**kwargs)
        out = Tensor(fn.forward(*[t.data for t in inputs]), dtype=inputs[0].data.dtype)
        tape = active_tape()
        if tape is not None and any(t.requires_grad for t in inputs):
            tape.record(fn, inputs, out)
        return out


def _same_shape(op: str, a: Tensor, b: Tensor):
    if a.shape != b.shape:
        raise ShapeError(f"{op}: shape mismatch {a.shape} vs {b.shape}")


# Elementwise ---------------------------------------------------------------

class Add(Function):
    def forward(self, a, b):
        return a + b

    def backward(self, grad):
        return grad, grad


class Sub(Function):
    def forward(self, a, b):
        return a - b

    def backward(self, grad):
        return grad, -grad


class Mul(Function):
    def forward(self, a, b):
        self.a, self.b = a, b
        return a * b

    def backward(self, grad):
        return grad * self.b, grad * self.a


class Scale(Function):
    def __init__(self, factor: float):
        self.factor = factor

    def forward(self, x):
        return x * x.dtype.type(self.factor)

    def backward(self, grad):
        return (grad * grad.dtype.type(self.factor),)


class Abs(Function):
    def forward(self, x):
        self.sign = np.sign(x)  # sign(0) == 0 gives the zero subgradient
        return np.abs(x)

    def backward(self, grad):
        return (grad * self.sign,)


class Gelu(Function):
    def forward(self, x):
        self.x = x
        return kernels.gelu(x)

    def backward(self, grad):
        return (grad * kernels.gelu_grad(self.x),)


class Sigmoid(Function):
    def forward(self, x):
        self.y = kernels.sigmoid(x)
        return self.y

    def backward(self, grad):
        return (grad * self.y * (1.0 - self.y),)


class AddBias(Function):
    """x[..., D] + b[D]"""

    def forward(self, x, b):
        self.lead = tuple(range(x.ndim - 1))
        return x + b

    def backward(self, grad):
        return grad, grad.sum(axis=self.lead)


class MulGain(Function):
    """x[..., D] * g[D]"""

    def forward(self, x, g):
        self.x, self.g = x, g
        self.lead = tuple(range(x.ndim - 1))
        return x * g

    def backward(self, grad):
        return grad * self.g, (grad * self.x).sum(axis=self.lead)


# Reductions and shape plumbing --------------------------------------------

class Sum(Function):
    def __init__(self, axis: int | None = None):
        self.axis = axis

    def forward(self, x):
        self.shape = x.shape
        if self.axis is None:
            return np.asarray(x.sum(), dtype=x.dtype)
        return x.sum(axis=self.axis)

    def backward(self, grad):
        if self.axis is None:
            return (np.full(self.shape, grad, dtype=grad.dtype),)
        return (np.broadcast_to(np.expand_dims(grad, self.axis), self.shape).copy(),)


class Transpose(Function):
    def forward(self, x):
        if x.ndim != 2:
            raise ShapeError(f"transpose needs a 2-D tensor, got shape {x.shape}")
        return np.ascontiguousarray(x.T)

    def backward(self, grad):
        return (np.ascontiguousarray(grad.T),)


class Reshape(Function):
    def __init__(self, shape: tuple[int, ...]):
        self.shape = shape

    def forward(self, x):
        self.in_shape = x.shape
        try:
            return x.reshape(self.shape)
        except ValueError as e:
            raise ShapeError(f"reshape: cannot view {x.shape} as {self.shape}") from e

    def backward(self, grad):
        return (grad.reshape(self.in_shape),)


class GetItem(Function):
    def __init__(self, index: Any):
        self.index = index

    def forward(self, x):
        self.in_shape = x.shape
        return np.ascontiguousarray(x[self.index])

    def backward(self, grad):
        out = np.zeros(self.in_shape, dtype=grad.dtype)
        np.add.at(out, self.index, grad)
        return (out,)


class Concat(Function):
    def __init__(self, axis: int):
        self.axis = axis

    def forward(self, *xs):
        self.sizes = [x.shape[self.axis] for x in xs]
        return np.concatenate(xs, axis=self.axis)

    def backward(self, grad):
        bounds = np.cumsum(self.sizes)[:-1]
        return tuple(np.split(grad, bounds, axis=self.axis))


# Linear algebra ------------------------------------------------------------

class MatMul(Function):
    def forward(self, a, b):
        self.a, self.b = a, b
        return a @ b

    def backward(self, grad):
        return grad @ self.b.T, self.a.T @ grad


class Conv1d(Function):
    """x: [C_in, L], w: [C_out, C_in, K] -> [C_out, L_out]"""

    def __init__(self, stride: int, pad_left: int, pad_right: int):
        self.stride = stride
        self.pad_left = pad_left
        self.pad_right = pad_right

    def forward(self, x, w):
        self.x, self.w = x, w
        out = kernels.conv1d_tm(np.ascontiguousarray(x.T), w, self.stride, self.pad_left, self.pad_right)
        return np.ascontiguousarray(out.T)

    def backward(self, grad):
        c_in, length = self.x.shape
        _, _, kernel = self.w.shape
        l_out = grad.shape[1]
        s = self.stride
        span = s * (l_out - 1) + 1
        padded = length + self.pad_left + self.pad_right
        xp = np.zeros((c_in, padded), dtype=self.x.dtype)
        xp[:, self.pad_left : self.pad_left + length] = self.x
        dxp = np.zeros_like(xp)
        dw = np.zeros_like(self.w)
        for k in range(kernel):
            cols = xp[:, k : k + span : s]
            dw[:, :, k] = grad @ cols.T
            dxp[:, k : k + span : s] += self.w[:, :, k].T @ grad
        return dxp[:, self.pad_left : self.pad_left + length], dw


# Normalization -------------------------------------------------------------

class RMSNorm(Function):
    def __init__(self, eps: float):
        self.eps = eps

    def forward(self, x, gain):
        self.x, self.gain = x, gain
        self.r = kernels.rms_scale(x, self.eps)
        return gain * (x * self.r)

    def backward(self, grad):
        x, r = self.x, self.r
        lead = tuple(range(x.ndim - 1))
        u = grad * self.gain
        dx = r * u - x * (r ** 3) * np.mean(u * x, axis=-1, keepdims=True)
        dgain = (grad * x * r).sum(axis=lead)
        return dx, dgain


class LayerNorm(Function):
    def __init__(self, eps: float):
        self.eps = eps

    def forward(self, x, gain, bias):
        mu = np.mean(x, axis=-1, keepdims=True)
        xc = x - mu
        var = np.mean(xc * xc, axis=-1, keepdims=True)
        self.r = 1.0 / np.sqrt(var + x.dtype.type(self.eps))
        self.xhat = xc * self.r
        self.gain = gain
        return gain * self.xhat + bias

    def backward(self, grad):
        lead = tuple(range(grad.ndim - 1))
        dxhat = grad * self.gain
        dx = self.r * (
            dxhat
            - np.mean(dxhat, axis=-1, keepdims=True)
            - self.xhat * np.mean(dxhat * self.xhat, axis=-1, keepdims=True)
        )
        return dx, (grad * self.xhat).sum(axis=lead), grad.sum(axis=lead)


# Model-specific primitives -------------------------------------------------

class Rotary(Function):
    """Pairwise rotation of x[L, d] by per-row angle tables"""

    def __init__(self, cos: np.ndarray, sin: np.ndarray):
        self.cos, self.sin = cos, sin

    def forward(self, x):
        return kernels.rope_rotate(x, self.cos, self.sin)

    def backward(self, grad):
        return (kernels.rope_rotate(grad, self.cos, -self.sin),)


class CausalMean(Function):
    """Causal stride-window mean, x: [C, L] -> [C, L_out]"""

    def __init__(self, stride: int):
        self.stride = stride

    def forward(self, x):
        self.length = x.shape[1]
        return np.ascontiguousarray(kernels.causal_mean_tm(np.ascontiguousarray(x.T), self.stride).T)

    def backward(self, grad):
        s = self.stride
        c, l_out = grad.shape
        span = s * (l_out - 1) + 1
        dxp = np.zeros((c, self.length + s - 1), dtype=grad.dtype)
        scaled = grad / grad.dtype.type(s)
        for k in range(s):
            dxp[:, k : k + span : s] += scaled
        return (dxp[:, s - 1 :],)


class Antisymmetrize(Function):
    def forward(self, w):
        return kernels.antisymmetric(w)

    def backward(self, grad):
        return (kernels.antisymmetric(grad),)


class SlidingMax(Function):
    """Max over every length-`window` run of rows: x[N, C] -> [N - window + 1, C]"""

    def __init__(self, window: int):
        self.window = window

    def forward(self, x):
        self.in_shape = x.shape
        view = sliding_window_view(x, self.window, axis=0)  # [N-w+1, C, w]
        self.arg = np.argmax(view, axis=-1)
        return np.ascontiguousarray(np.take_along_axis(view, self.arg[..., None], axis=-1)[..., 0])

    def backward(self, grad):
        out = np.zeros(self.in_shape, dtype=grad.dtype)
        rows = self.arg + np.arange(self.arg.shape[0])[:, None]
        cols = np.broadcast_to(np.arange(self.in_shape[1])[None, :], rows.shape)
        np.add.at(out, (rows, cols), grad)
        return (out,)


# Functional API ------------------------------------------------------------

def add(a: Tensor, b: Tensor) -> Tensor:
    _same_shape("add", a, b)
    return Add.apply(a, b)


def sub(a: Tensor, b: Tensor) -> Tensor:
    _same_shape("sub", a, b)
    return Sub.apply(a, b)


def mul(a: Tensor, b: Tensor) -> Tensor:
    _same_shape("mul", a, b)
    return Mul.apply(a, b)


def scale(x: Tensor, factor: float) -> Tensor:
    return Scale.apply(x, factor=factor)


def absolute(x: Tensor) -> Tensor:
    return Abs.apply(x)


def gelu(x: Tensor) -> Tensor:
    return Gelu.apply(x)


def sigmoid(x: Tensor) -> Tensor:
    return Sigmoid.apply(x)


def _trailing(op: str, x: Tensor, v: Tensor):
    if v.ndim != 1 or x.ndim < 1 or x.shape[-1] != v.shape[0]:
        raise ShapeError(f"{op}: trailing vector {v.shape} does not fit {x.shape}")


def add_bias(x: Tensor, bias: Tensor) -> Tensor:
    _trailing("add_bias", x, bias)
    return AddBias.apply(x, bias)


def mul_gain(x: Tensor, gain: Tensor) -> Tensor:
    _trailing("mul_gain", x, gain)
    return MulGain.apply(x, gain)


def sum_all(x: Tensor) -> Tensor:
    return Sum.apply(x)


def sum_axis(x: Tensor, axis: int) -> Tensor:
    return Sum.apply(x, axis=axis)


def mean_all(x: Tensor) -> Tensor:
    return scale(sum_all(x), 1.0 / max(x.size, 1))


def transpose(x: Tensor) -> Tensor:
    return Transpose.apply(x)


def reshape(x: Tensor, *shape: int) -> Tensor:
    return Reshape.apply(x, shape=tuple(shape))


def getitem(x: Tensor, index: Any) -> Tensor:
    return GetItem.apply(x, index=index)


def concat(tensors: list[Tensor], axis: int = 0) -> Tensor:
    if not tensors:
        raise ShapeError("concat needs at least one tensor")
    ref = list(tensors[0].shape)
    for t in tensors[1:]:
        other = list(t.shape)
        if len(other) != len(ref) or any(a != b for i, (a, b) in enumerate(zip(ref, other)) if i != axis % len(ref)):
            raise ShapeError(f"concat: shape mismatch {tuple(ref)} vs {t.shape} along axis {axis}")
    return Concat.apply(*tensors, axis=axis)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: cannot multiply {a.shape} by {b.shape}")
    return MatMul.apply(a, b)


def linear(x: Tensor, weight: Tensor, bias: Tensor | None = None) -> Tensor:
    """x[L, in] @ weight[in, out] (+ bias[out])"""
    out = matmul(x, weight)
    return add_bias(out, bias) if bias is not None else out


def conv1d(x: Tensor, w: Tensor, stride: int = 1, padding: int | tuple[int, int] = 0) -> Tensor:
    if x.ndim != 2 or w.ndim != 3:
        raise ShapeError(f"conv1d: expected x [C_in, L] and w [C_out, C_in, K], got {x.shape} and {w.shape}")
    if x.shape[0] != w.shape[1]:
        raise ShapeError(f"conv1d: input channels {x.shape} do not match kernel {w.shape}")
    kernel = w.shape[2]
    if kernel % 2 == 0:
        raise ShapeError(f"conv1d: kernel length must be odd, got kernel shape {w.shape}")
    if stride < 1:
        raise ShapeError(f"conv1d: stride must be >= 1, got {stride}")
    pad_left, pad_right = (padding, padding) if isinstance(padding, int) else padding
    l_out = kernels.conv_out_length(x.shape[1], kernel, stride, pad_left, pad_right)
    if l_out < 1:
        raise ShapeError(f"conv1d: non-positive output length {l_out} for input {x.shape}, kernel {w.shape}")
    return Conv1d.apply(x, w, stride=stride, pad_left=pad_left, pad_right=pad_right)


def rmsnorm(x: Tensor, gain: Tensor, eps: float = 1e-6) -> Tensor:
    _trailing("rmsnorm", x, gain)
    return RMSNorm.apply(x, gain, eps=eps)


def layernorm(x: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-5) -> Tensor:
    _trailing("layernorm", x, gain)
    _trailing("layernorm", x, bias)
    return LayerNorm.apply(x, gain, bias, eps=eps)


def rotary(x: Tensor, cos: np.ndarray, sin: np.ndarray) -> Tensor:
    if x.ndim != 2 or x.shape[1] % 2 or cos.shape != (x.shape[0], x.shape[1] // 2):
        raise ShapeError(f"rotary: tables {cos.shape} do not fit {x.shape}")
    return Rotary.apply(x, cos=cos, sin=sin)


def causal_mean(x: Tensor, stride: int) -> Tensor:
    if x.ndim != 2:
        raise ShapeError(f"causal_mean: expected [C, L], got {x.shape}")
    return CausalMean.apply(x, stride=stride)


def antisymmetrize(w: Tensor) -> Tensor:
    if w.shape[-1] % 2 == 0:
        raise ShapeError(f"antisymmetrize: tap axis must be odd, got shape {w.shape}")
    return Antisymmetrize.apply(w)


def sliding_max(x: Tensor, window: int) -> Tensor:
    if x.ndim != 2 or not 1 <= window <= x.shape[0]:
        raise ShapeError(f"sliding_max: window {window} does not fit {x.shape}")
    return SlidingMax.apply(x, window=window)
