"""Dense tensor with an explicit reverse-mode tape
"""

from collections.abc import Iterator
from contextlib import contextmanager
from contextvars import ContextVar
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any, Optional

import numpy as np

from ..core.exceptions import ShapeError

if TYPE_CHECKING:
    from .ops import Function

_DEFAULT_DTYPE: ContextVar[type] = ContextVar("fishstream_default_dtype", default=np.float32)
_ACTIVE_TAPE: ContextVar[Optional["Tape"]] = ContextVar("fishstream_active_tape", default=None)


def default_dtype() -> type:
    """Floating point type new tensors are created with"""
    return _DEFAULT_DTYPE.get()


@contextmanager
def precision(dtype: Any) -> Iterator[None]:
    """Switch the default real type (float32 for training/inference,
    float64 for gradient-check oracles)"""
    resolved = np.dtype(dtype).type
    if resolved not in (np.float32, np.float64):
        raise ValueError(f"Unsupported precision: {dtype}")
    token = _DEFAULT_DTYPE.set(resolved)
    try:
        yield
    finally:
        _DEFAULT_DTYPE.reset(token)


def active_tape() -> Optional["Tape"]:
    return _ACTIVE_TAPE.get()


class Tensor:
    """Row-major array of reals with an optional gradient buffer"""

    __slots__ = ("data", "grad", "requires_grad", "tape_id", "name")

    def __init__(
        self,
        data: Any,
        requires_grad: bool = False,
        name: str | None = None,
        dtype: Any = None,
    ):
        self.data = np.ascontiguousarray(data, dtype=dtype or default_dtype())
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self.tape_id: int | None = None
        self.name = name

    @classmethod
    def zeros(cls, *shape: int, requires_grad: bool = False, name: str | None = None) -> "Tensor":
        return cls(np.zeros(shape), requires_grad=requires_grad, name=name)

    @classmethod
    def ones(cls, *shape: int, requires_grad: bool = False, name: str | None = None) -> "Tensor":
        return cls(np.ones(shape), requires_grad=requires_grad, name=name)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return int(self.data.size)

    @property
    def dtype(self) -> np.dtype:
        return self.data.dtype

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeError(f"item() needs a single element, got shape {self.shape}")
        return float(self.data.reshape(()))

    def zero_grad(self):
        self.grad = None

    def detach(self) -> "Tensor":
        return Tensor(self.data.copy(), dtype=self.data.dtype)

    def __repr__(self) -> str:
        label = f" {self.name}" if self.name else ""
        return f"<Tensor{label} shape={self.shape} dtype={self.data.dtype} requires_grad={self.requires_grad}>"

    # Operator sugar; implementations live in ops
    def __add__(self, other: "Tensor") -> "Tensor":
        from . import ops
        return ops.add(self, other)

    def __sub__(self, other: "Tensor") -> "Tensor":
        from . import ops
        return ops.sub(self, other)

    def __mul__(self, other: "Tensor | float") -> "Tensor":
        from . import ops
        if isinstance(other, Tensor):
            return ops.mul(self, other)
        return ops.scale(self, float(other))

    def __rmul__(self, other: float) -> "Tensor":
        from . import ops
        return ops.scale(self, float(other))

    def __neg__(self) -> "Tensor":
        from . import ops
        return ops.scale(self, -1.0)

    def __matmul__(self, other: "Tensor") -> "Tensor":
        from . import ops
        return ops.matmul(self, other)

    def __getitem__(self, index: Any) -> "Tensor":
        from . import ops
        return ops.getitem(self, index)

    @property
    def T(self) -> "Tensor":
        from . import ops
        return ops.transpose(self)


@dataclass
class Node:
    """One recorded operation"""

    fn: "Function"
    inputs: tuple[Tensor, ...]
    output: Tensor


@dataclass
class Tape:
    """Ordered record of differentiable operations.

    Used as a context manager; every op applied to a tensor that requires
    grad while the tape is active is appended, so inputs always precede the
    node that consumes them.
    """

    nodes: list[Node] = field(default_factory=list)
    _token: Any = field(default=None, repr=False)

    def __enter__(self) -> "Tape":
        self._token = _ACTIVE_TAPE.set(self)
        return self

    def __exit__(self, *exc: Any) -> None:
        _ACTIVE_TAPE.reset(self._token)
        self._token = None

    def record(self, fn: "Function", inputs: tuple[Tensor, ...], output: Tensor):
        output.tape_id = len(self.nodes)
        output.requires_grad = True
        self.nodes.append(Node(fn, inputs, output))

    def backward(self, loss: Tensor):
        """Accumulate d(loss)/d(leaf) into every leaf tensor's grad"""
        if loss.size != 1:
            raise ShapeError(f"backward needs a scalar loss, got shape {loss.shape}")
        if loss.tape_id is None or loss.tape_id >= len(self.nodes) or self.nodes[loss.tape_id].output is not loss:
            raise ShapeError("loss was not produced on this tape")

        grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
        leaves: dict[int, Tensor] = {}

        for node in reversed(self.nodes[: loss.tape_id + 1]):
            g = grads.pop(id(node.output), None)
            if g is None:
                continue
            input_grads = node.fn.backward(g)
            for tensor, tensor_grad in zip(node.inputs, input_grads):
                if tensor_grad is None or not tensor.requires_grad:
                    continue
                key = id(tensor)
                if key in grads:
                    grads[key] = grads[key] + tensor_grad
                else:
                    grads[key] = tensor_grad
                if tensor.tape_id is None:
                    leaves[key] = tensor

        for key, tensor in leaves.items():
            g = grads[key].astype(tensor.data.dtype, copy=False).reshape(tensor.shape)
            tensor.grad = g.copy() if tensor.grad is None else tensor.grad + g

        self.clear()

    def clear(self):
        for node in self.nodes:
            node.output.tape_id = None
        self.nodes.clear()


def backward(tape: Tape, loss: Tensor):
    """Populate leaf grads with d(loss)/d(leaf) and consume the tape"""
    tape.backward(loss)
