"""Named parameter store
"""

from collections.abc import Iterator

import numpy as np

from ..core.exceptions import CheckpointError
from ..tensor import Tensor


class ParameterSet:
    """Ordered mapping of parameter name -> Tensor.

    Insertion order is the checkpoint blob order.
    """

    def __init__(self):
        self._params: dict[str, Tensor] = {}

    def add(self, name: str, data: np.ndarray) -> Tensor:
        if name in self._params:
            raise KeyError(f"duplicate parameter {name}")
        tensor = Tensor(data, requires_grad=True, name=name)
        self._params[name] = tensor
        return tensor

    def __getitem__(self, name: str) -> Tensor:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __iter__(self) -> Iterator[str]:
        return iter(self._params)

    def __len__(self) -> int:
        return len(self._params)

    def items(self):
        return self._params.items()

    def tensors(self) -> list[Tensor]:
        return list(self._params.values())

    def arrays(self) -> dict[str, np.ndarray]:
        """Read-only numpy views for the streaming engine"""
        views = {}
        for name, t in self._params.items():
            view = t.data.view()
            view.flags.writeable = False
            views[name] = view
        return views

    def zero_grad(self):
        for t in self._params.values():
            t.zero_grad()

    @property
    def num_parameters(self) -> int:
        return sum(t.size for t in self._params.values())

    def load_arrays(self, arrays: dict[str, np.ndarray]):
        """Copy values in place, checking names and shapes"""
        missing = set(self._params) - set(arrays)
        if missing:
            raise CheckpointError(f"missing tensors: {sorted(missing)}")
        unexpected = set(arrays) - set(self._params)
        if unexpected:
            raise CheckpointError(f"unexpected tensors: {sorted(unexpected)}")
        for name, t in self._params.items():
            src = np.asarray(arrays[name])
            if src.shape != t.shape:
                raise CheckpointError(f"tensor {name}: shape {src.shape} does not match model shape {t.shape}")
            t.data[...] = src


class Initializer:
    """Seeded parameter initialization"""

    def __init__(self, seed: int):
        self.rng = np.random.default_rng(seed)

    def normal(self, *shape: int, fan_in: int) -> np.ndarray:
        return self.rng.normal(0.0, 1.0 / np.sqrt(max(fan_in, 1)), size=shape)

    @staticmethod
    def zeros(*shape: int) -> np.ndarray:
        return np.zeros(shape)

    @staticmethod
    def ones(*shape: int) -> np.ndarray:
        return np.ones(shape)

    @staticmethod
    def full(value: float, *shape: int) -> np.ndarray:
        return np.full(shape, value)
