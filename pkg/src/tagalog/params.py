"""Named trainable tensors and their deterministic initialisation."""
from __future__ import annotations

import math
from typing import Iterator

import numpy as np

from .autograd import Tensor
from .errors import NumericalError
from .hashing import fnv1a64, splitmix64_block, u64_to_signed_unit


class ParamStore:
    """Ordered name -> Tensor map; iteration is lexicographic by name."""

    def __init__(self):
        self._params: dict[str, Tensor] = {}

    def add(self, name: str, value: np.ndarray) -> Tensor:
        if name in self._params:
            raise KeyError(f"duplicate parameter {name!r}")
        t = Tensor(np.array(value, dtype=np.float64), requires_grad=True, name=name)
        self._params[name] = t
        return t

    def __getitem__(self, name: str) -> Tensor:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __iter__(self) -> Iterator[str]:
        return iter(sorted(self._params))

    def __len__(self):
        return len(self._params)

    def items(self):
        return [(k, self._params[k]) for k in self]

    def zero_grad(self) -> None:
        for t in self._params.values():
            t.grad = None

    def fill_missing_grads(self) -> None:
        """Give parameters the loss did not touch an explicit zero gradient."""
        for t in self._params.values():
            if t.grad is None:
                t.grad = np.zeros_like(t.data)

    def check_finite(self) -> None:
        for name, t in self.items():
            if t.grad is not None and not np.isfinite(t.grad).all():
                raise NumericalError(f"non-finite gradient in {name}")
            if not np.isfinite(t.data).all():
                raise NumericalError(f"non-finite values in {name}")

    def state(self) -> dict[str, np.ndarray]:
        return {k: t.data.copy() for k, t in self.items()}

    def load_state(self, state: dict[str, np.ndarray]) -> None:
        for k, v in state.items():
            if k not in self._params:
                raise KeyError(f"unknown parameter {k!r}")
            if self._params[k].data.shape != v.shape:
                raise ValueError(f"shape mismatch for {k}: {v.shape} vs {self._params[k].data.shape}")
            self._params[k].data = np.array(v, dtype=np.float64)

    def num_parameters(self) -> int:
        return sum(t.data.size for t in self._params.values())


def init_weight(name: str, shape: tuple, fan_in: int, seed: int) -> np.ndarray:
    """Uniform[-1, 1) / sqrt(fan_in) from a splitmix64 stream keyed by name."""
    n = int(np.prod(shape))
    state = fnv1a64(name) ^ (seed & ((1 << 64) - 1))
    values = u64_to_signed_unit(splitmix64_block(state, n)) / math.sqrt(fan_in)
    return values.reshape(shape)
