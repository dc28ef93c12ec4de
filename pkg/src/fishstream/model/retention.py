"""Multi-scale retention encoder.

Two evaluations of the same function: `*_parallel` over a whole sequence of
Tensors (training, differentiable) and `*_step` over one numpy row with a
RetentionState (streaming). Retention is unnormalized; q is scaled by
1/sqrt(d) and head h decays its state by gamma_h each step.
"""

from collections.abc import Mapping
from dataclasses import dataclass, field

import numpy as np

from ..core.exceptions import ShapeError, StreamError
from ..tensor import Tensor, default_dtype, kernels, ops
from .config import RetentionConfig
from .params import Initializer, ParameterSet

Weights = ParameterSet | Mapping[str, np.ndarray]


def _array(params: Weights, name: str) -> np.ndarray:
    value = params[name]
    return value.data if isinstance(value, Tensor) else value


def add_retention_params(params: ParameterSet, cfg: RetentionConfig, init: Initializer):
    d, h = cfg.model_dim, cfg.ffn_hidden
    for block in range(cfg.n_blocks):
        prefix = f"encoder.{block}"
        params.add(f"{prefix}.norm1.gain", init.ones(d))
        for proj in ("wq", "wk", "wv", "wg"):
            params.add(f"{prefix}.msr.{proj}", init.normal(d, d, fan_in=d))
        params.add(f"{prefix}.msr.gate_norm.gain", init.ones(d))
        params.add(f"{prefix}.msr.wo", init.normal(d, d, fan_in=d))
        params.add(f"{prefix}.msr.bo", init.zeros(d))
        params.add(f"{prefix}.norm2.gain", init.ones(d))
        params.add(f"{prefix}.ffn.w1", init.normal(d, h, fan_in=d))
        params.add(f"{prefix}.ffn.b1", init.zeros(h))
        params.add(f"{prefix}.ffn.ln.gain", init.ones(h))
        params.add(f"{prefix}.ffn.ln.bias", init.zeros(h))
        params.add(f"{prefix}.ffn.w2", init.normal(h, d, fan_in=h))
        params.add(f"{prefix}.ffn.b2", init.zeros(d))


# Rotary position encoding ------------------------------------------------

def rope_apply(x: np.ndarray, position: int, base: float = 10000.0) -> np.ndarray:
    """Rotate feature pairs of x[..., d] by theta_j * position"""
    x = np.asarray(x)
    dim = x.shape[-1]
    if dim % 2:
        raise ShapeError(f"rope_apply: feature size must be even, got {dim}")
    cos, sin = kernels.rope_angles(np.array([position]), dim, base, x.dtype)
    return kernels.rope_rotate(x, cos[0], sin[0])


# Retention kernels -------------------------------------------------------

def retention_parallel(q: Tensor, k: Tensor, v: Tensor, gamma: float) -> Tensor:
    """O_i = sum_{j<=i} gamma^(i-j) (q_i . k_j / sqrt(d)) v_j"""
    if q.ndim != 2 or q.shape != k.shape or q.shape[0] != v.shape[0]:
        raise ShapeError(f"retention_parallel: incompatible Q {q.shape}, K {k.shape}, V {v.shape}")
    length, dim = q.shape
    scores = ops.matmul(ops.scale(q, 1.0 / np.sqrt(dim)), ops.transpose(k))
    mask = Tensor(kernels.decay_matrix(length, gamma, q.dtype), dtype=q.dtype)
    return ops.matmul(ops.mul(scores, mask), v)


def retention_recurrent_step(
    q: np.ndarray,
    k: np.ndarray,
    v: np.ndarray,
    state: np.ndarray,
    gamma: float,
) -> tuple[np.ndarray, np.ndarray]:
    """H' = gamma*H + v k^T; o = H' q / sqrt(d). Returns (o, H')."""
    dim = q.shape[-1]
    updated = state * state.dtype.type(gamma) + np.outer(v, k)
    return updated @ (q * q.dtype.type(1.0 / np.sqrt(dim))), updated


@dataclass
class RetentionState:
    """Per-block, per-head accumulators plus the rotary step counter"""

    H: np.ndarray  # [n_blocks, n_heads, d_v, d_k]
    position: int = 0
    last_increments: np.ndarray = field(default=None)  # type: ignore[assignment]

    @classmethod
    def zeros(cls, cfg: RetentionConfig, dtype=None) -> "RetentionState":
        dtype = np.dtype(dtype or default_dtype()).type
        d = cfg.head_dim
        return cls(
            H=np.zeros((cfg.n_blocks, cfg.n_heads, d, d), dtype=dtype),
            last_increments=np.zeros((cfg.n_blocks, cfg.n_heads), dtype=np.float64),
        )

    def reset(self):
        self.H[...] = 0
        self.position = 0
        self.last_increments[...] = 0

    def norms(self) -> np.ndarray:
        """Frobenius norm of every head's accumulator, [n_blocks, n_heads]"""
        return np.sqrt(np.sum(self.H.astype(np.float64) ** 2, axis=(-2, -1)))

    @property
    def size(self) -> int:
        return int(self.H.size)


# Parallel (training) mode --------------------------------------------------

@dataclass
class EncoderOutput:
    values: Tensor  # [L, D]
    increments: list[Tensor]  # per block, [L]: sum over heads of ||k_n||^2 ||v_n||^2


def _rotary_tables(length: int, cfg: RetentionConfig, dtype) -> tuple[np.ndarray, np.ndarray]:
    return kernels.rope_angles(np.arange(length), cfg.head_dim, cfg.rope_base, dtype)


def msr_parallel(x: Tensor, block: int, cfg: RetentionConfig, params: ParameterSet) -> tuple[Tensor, Tensor]:
    """Multi-scale retention over x[L, D]; returns (output, increments[L])"""
    if x.ndim != 2 or x.shape[1] != cfg.model_dim:
        raise ShapeError(f"msr_forward: expected [L, {cfg.model_dim}], got {x.shape}")
    prefix = f"encoder.{block}.msr"
    d = cfg.head_dim
    cos, sin = _rotary_tables(x.shape[0], cfg, x.dtype)

    q = ops.matmul(x, params[f"{prefix}.wq"])
    k = ops.matmul(x, params[f"{prefix}.wk"])
    v = ops.matmul(x, params[f"{prefix}.wv"])
    g = ops.matmul(x, params[f"{prefix}.wg"])

    heads = []
    increments = None
    for h, gamma in enumerate(cfg.gammas or []):
        cols = (slice(None), slice(h * d, (h + 1) * d))
        qh = ops.rotary(ops.getitem(q, cols), cos, sin)
        kh = ops.rotary(ops.getitem(k, cols), cos, sin)
        vh = ops.getitem(v, cols)
        heads.append(retention_parallel(qh, kh, vh, gamma))
        delta = ops.mul(ops.sum_axis(ops.mul(kh, kh), 1), ops.sum_axis(ops.mul(vh, vh), 1))
        increments = delta if increments is None else ops.add(increments, delta)

    gate = ops.rmsnorm(g, params[f"{prefix}.gate_norm.gain"], eps=cfg.norm_eps)
    out = ops.mul(gate, ops.concat(heads, axis=1))
    assert increments is not None
    return ops.linear(out, params[f"{prefix}.wo"], params[f"{prefix}.bo"]), increments


def _ffn_parallel(x: Tensor, block: int, params: ParameterSet) -> Tensor:
    prefix = f"encoder.{block}.ffn"
    h = ops.linear(x, params[f"{prefix}.w1"], params[f"{prefix}.b1"])
    h = ops.gelu(ops.layernorm(h, params[f"{prefix}.ln.gain"], params[f"{prefix}.ln.bias"]))
    return ops.linear(h, params[f"{prefix}.w2"], params[f"{prefix}.b2"])


def block_parallel(x: Tensor, block: int, cfg: RetentionConfig, params: ParameterSet) -> tuple[Tensor, Tensor]:
    prefix = f"encoder.{block}"
    msr, increments = msr_parallel(ops.rmsnorm(x, params[f"{prefix}.norm1.gain"], eps=cfg.norm_eps), block, cfg, params)
    y = ops.add(x, msr)
    out = ops.add(_ffn_parallel(ops.rmsnorm(y, params[f"{prefix}.norm2.gain"], eps=cfg.norm_eps), block, params), y)
    return out, increments


def encoder_parallel(x: Tensor, cfg: RetentionConfig, params: ParameterSet) -> EncoderOutput:
    increments = []
    for block in range(cfg.n_blocks):
        x, delta = block_parallel(x, block, cfg, params)
        increments.append(delta)
    return EncoderOutput(x, increments)


# Recurrent (streaming) mode ------------------------------------------------

def msr_step(
    x: np.ndarray,
    block: int,
    cfg: RetentionConfig,
    params: Weights,
    state: RetentionState,
) -> np.ndarray:
    """One step of multi-scale retention on x[D]; updates state.H[block]"""
    prefix = f"encoder.{block}.msr"
    d = cfg.head_dim
    cos, sin = kernels.rope_angles(np.array([state.position]), d, cfg.rope_base, x.dtype)
    cos, sin = cos[0], sin[0]

    q = x @ _array(params, f"{prefix}.wq")
    k = x @ _array(params, f"{prefix}.wk")
    v = x @ _array(params, f"{prefix}.wv")
    g = x @ _array(params, f"{prefix}.wg")

    heads = []
    for h, gamma in enumerate(cfg.gammas or []):
        cols = slice(h * d, (h + 1) * d)
        qh = kernels.rope_rotate(q[cols], cos, sin)
        kh = kernels.rope_rotate(k[cols], cos, sin)
        vh = v[cols]
        o, state.H[block, h] = retention_recurrent_step(qh, kh, vh, state.H[block, h], gamma)
        heads.append(o)
        state.last_increments[block, h] = float(np.dot(kh, kh)) * float(np.dot(vh, vh))

    gate = kernels.rmsnorm(g, _array(params, f"{prefix}.gate_norm.gain"), cfg.norm_eps)
    return kernels.linear(gate * np.concatenate(heads), _array(params, f"{prefix}.wo"), _array(params, f"{prefix}.bo"))


def block_step(x: np.ndarray, block: int, cfg: RetentionConfig, params: Weights, state: RetentionState) -> np.ndarray:
    prefix = f"encoder.{block}"
    eps = cfg.norm_eps
    y = x + msr_step(kernels.rmsnorm(x, _array(params, f"{prefix}.norm1.gain"), eps), block, cfg, params, state)
    h = kernels.rmsnorm(y, _array(params, f"{prefix}.norm2.gain"), eps)
    h = kernels.linear(h, _array(params, f"{prefix}.ffn.w1"), _array(params, f"{prefix}.ffn.b1"))
    h = kernels.gelu(
        kernels.layernorm(h, _array(params, f"{prefix}.ffn.ln.gain"), _array(params, f"{prefix}.ffn.ln.bias"), 1e-5)
    )
    return kernels.linear(h, _array(params, f"{prefix}.ffn.w2"), _array(params, f"{prefix}.ffn.b2")) + y


def encoder_step(x: np.ndarray, cfg: RetentionConfig, params: Weights, state: RetentionState) -> np.ndarray:
    """Advance every block by one embedding row; the rotary position moves once"""
    for block in range(cfg.n_blocks):
        x = block_step(x, block, cfg, params, state)
    state.position += 1
    return x


# Mode dispatch -------------------------------------------------------------

def _check_mode(op: str, x, state: RetentionState | None):
    ndim = x.ndim
    if state is None and ndim != 2:
        raise StreamError(f"{op}: a single step (shape {x.shape}) needs a RetentionState")
    if state is not None and ndim != 1:
        raise StreamError(f"{op}: recurrent mode takes one row of shape [D], got {x.shape}")


def msr_forward(x, block: int, cfg: RetentionConfig, params: Weights, state: RetentionState | None = None):
    """Parallel over Tensor[L, D] without state, recurrent over one row with state"""
    _check_mode("msr_forward", x, state)
    if state is None:
        return msr_parallel(x, block, cfg, params)[0]
    return msr_step(np.asarray(getattr(x, "data", x)), block, cfg, params, state)


def block_forward(x, block: int, cfg: RetentionConfig, params: Weights, state: RetentionState | None = None):
    _check_mode("block_forward", x, state)
    if state is None:
        return block_parallel(x, block, cfg, params)[0]
    return block_step(np.asarray(getattr(x, "data", x)), block, cfg, params, state)


def encoder_forward(x, cfg: RetentionConfig, params: Weights, state: RetentionState | None = None):
    _check_mode("encoder_forward", x, state)
    if state is None:
        return encoder_parallel(x, cfg, params).values
    return encoder_step(np.asarray(getattr(x, "data", x)), cfg, params, state)
