"""Pure numpy forward kernels.

Shared by the autodiff ops and by the streaming engine, so offline and
online evaluation run the same arithmetic. Row-wise kernels reduce only over
the last (contiguous) axis and the convolution accumulates taps in a fixed
order, which makes a single-row evaluation bit-identical to the matching row
of a whole-sequence evaluation.
"""

import numpy as np

GELU_C = 0.7978845608
GELU_A = 0.044715


def gelu(x: np.ndarray) -> np.ndarray:
    inner = GELU_C * (x + GELU_A * x * x * x)
    return 0.5 * x * (1.0 + np.tanh(inner))


def gelu_grad(x: np.ndarray) -> np.ndarray:
    inner = GELU_C * (x + GELU_A * x * x * x)
    t = np.tanh(inner)
    return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * GELU_C * (1.0 + 3.0 * GELU_A * x * x)


def sigmoid(x: np.ndarray) -> np.ndarray:
    # split by sign so large |x| never overflows exp
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def rms_scale(x: np.ndarray, eps: float) -> np.ndarray:
    """1/sqrt(mean(x^2) + eps) over the last axis, keepdims"""
    ms = np.mean(x * x, axis=-1, keepdims=True)
    return 1.0 / np.sqrt(ms + x.dtype.type(eps))


def rmsnorm(x: np.ndarray, gain: np.ndarray, eps: float) -> np.ndarray:
    return gain * (x * rms_scale(x, eps))


def layernorm(x: np.ndarray, gain: np.ndarray, bias: np.ndarray, eps: float) -> np.ndarray:
    mu = np.mean(x, axis=-1, keepdims=True)
    xc = x - mu
    var = np.mean(xc * xc, axis=-1, keepdims=True)
    return gain * (xc / np.sqrt(var + x.dtype.type(eps))) + bias


def conv_out_length(length: int, kernel: int, stride: int, pad_left: int, pad_right: int) -> int:
    return (length + pad_left + pad_right - kernel) // stride + 1


def conv1d_tm(
    x: np.ndarray,
    w: np.ndarray,
    stride: int = 1,
    pad_left: int = 0,
    pad_right: int = 0,
) -> np.ndarray:
    """Cross-correlation in time-major layout.

    x: [L, C_in]; w: [C_out, C_in, K] -> [L_out, C_out]
    """
    length, c_in = x.shape
    c_out, _, kernel = w.shape
    l_out = conv_out_length(length, kernel, stride, pad_left, pad_right)
    if pad_left or pad_right:
        xp = np.zeros((length + pad_left + pad_right, c_in), dtype=x.dtype)
        xp[pad_left : pad_left + length] = x
    else:
        xp = x
    span = stride * (l_out - 1) + 1
    out = np.zeros((l_out, c_out), dtype=x.dtype)
    for k in range(kernel):
        xk = xp[k : k + span : stride]
        out += (xk[:, None, :] * w[None, :, :, k]).sum(axis=-1)
    return out


def causal_mean_tm(x: np.ndarray, stride: int) -> np.ndarray:
    """Mean over the causal window [j*stride - stride + 1, j*stride] (zero
    history), time-major [L, C] -> [L_out, C]"""
    length, channels = x.shape
    xp = np.zeros((length + stride - 1, channels), dtype=x.dtype)
    xp[stride - 1 :] = x
    return window_mean_tm(xp, stride)


def window_mean_tm(xp: np.ndarray, stride: int) -> np.ndarray:
    """Mean of non-overlapping length-`stride` windows of an already padded
    [L, C] array, one output per window start at 0, stride, 2*stride..."""
    length, channels = xp.shape
    l_out = conv_out_length(length, stride, stride, 0, 0)
    span = stride * (l_out - 1) + 1
    out = np.zeros((l_out, channels), dtype=xp.dtype)
    for k in range(stride):
        out += xp[k : k + span : stride]
    return out / xp.dtype.type(stride)


def antisymmetric(w: np.ndarray) -> np.ndarray:
    """(w - reverse(w)) / 2 along the tap (last) axis"""
    return (w - w[..., ::-1]) * w.dtype.type(0.5)


def rope_angles(positions: np.ndarray, dim: int, base: float, dtype) -> tuple[np.ndarray, np.ndarray]:
    """cos/sin tables [len(positions), dim/2], computed in float64"""
    j = np.arange(dim // 2, dtype=np.float64)
    theta = base ** (-2.0 * j / dim)
    angle = np.asarray(positions, dtype=np.float64)[:, None] * theta[None, :]
    return np.cos(angle).astype(dtype), np.sin(angle).astype(dtype)


def rope_rotate(x: np.ndarray, cos: np.ndarray, sin: np.ndarray) -> np.ndarray:
    """Rotate feature pairs (2j, 2j+1) of x[..., d] by the given angles"""
    even = x[..., 0::2]
    odd = x[..., 1::2]
    out = np.empty_like(x)
    out[..., 0::2] = even * cos - odd * sin
    out[..., 1::2] = even * sin + odd * cos
    return out


def decay_matrix(length: int, gamma: float, dtype) -> np.ndarray:
    """D[i, j] = gamma^(i-j) for j <= i, else 0"""
    idx = np.arange(length)
    diff = idx[:, None] - idx[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        mask = np.where(diff >= 0, np.power(np.float64(gamma), np.maximum(diff, 0)), 0.0)
    return mask.astype(dtype)


def linear(x: np.ndarray, w: np.ndarray, b: np.ndarray | None = None) -> np.ndarray:
    out = x @ w
    if b is not None:
        out = out + b
    return out
