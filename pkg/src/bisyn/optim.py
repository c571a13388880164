"""Named parameter storage and the Adam update."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .autodiff import Tensor


class ParamStore:
    """Ordered map of name -> trainable Tensor with per-name gradient slots.

    Insertion order is the iteration order everywhere (init, Adam, dumps),
    which is what makes seeded runs bit-reproducible.
    """

    def __init__(self):
        self._params: dict[str, Tensor] = {}

    def add(self, name: str, array, dtype=np.float32) -> Tensor:
        if name in self._params:
            raise ValueError(f"duplicate parameter {name!r}")
        t = Tensor(np.asarray(array, dtype=dtype), requires_grad=True, dtype=None)
        self._params[name] = t
        return t

    def __getitem__(self, name: str) -> Tensor:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __len__(self) -> int:
        return len(self._params)

    def names(self) -> list[str]:
        return list(self._params)

    def items(self):
        return self._params.items()

    def grad(self, name: str) -> np.ndarray | None:
        return self._params[name].grad

    def zero_grad(self) -> None:
        for t in self._params.values():
            t.grad = None

    def n_values(self) -> int:
        return sum(t.data.size for t in self._params.values())

    def copy(self) -> "ParamStore":
        out = ParamStore()
        for name, t in self._params.items():
            out.add(name, t.data.copy(), dtype=None)
        return out

    def to_dtype(self, dtype) -> "ParamStore":
        out = ParamStore()
        for name, t in self._params.items():
            out.add(name, t.data.astype(dtype), dtype=None)
        return out

    def load_arrays(self, arrays: dict[str, np.ndarray]) -> None:
        """Overwrite parameter values in place; shapes must match."""
        for name, t in self._params.items():
            if name not in arrays:
                raise ValueError(f"missing array for parameter {name!r}")
            a = arrays[name]
            if a.shape != t.data.shape:
                raise ValueError(f"shape mismatch for parameter {name!r}: "
                                 f"{a.shape} vs {t.data.shape}")
            t.data[...] = a


@dataclass
class AdamState:
    """Adam moments plus hyperparameters; t advances once per step."""

    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    l2: float = 1e-5
    t: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def for_store(cls, store: ParamStore, **hyper) -> "AdamState":
        state = cls(**hyper)
        for name, tensor in store.items():
            state.m[name] = np.zeros_like(tensor.data)
            state.v[name] = np.zeros_like(tensor.data)
        return state


def adam_step(store: ParamStore, state: AdamState) -> None:
    """One Adam update with bias correction.

    L2 is added to the raw gradient (l2 * param) before the moment updates.
    Parameters with no gradient are treated as zero-gradient.
    """
    state.t += 1
    t = state.t
    b1, b2 = state.beta1, state.beta2
    bc1 = 1.0 - b1 ** t
    bc2 = 1.0 - b2 ** t
    for name, tensor in store.items():
        g = tensor.grad if tensor.grad is not None else np.zeros_like(tensor.data)
        if g.shape != tensor.data.shape:
            raise ValueError(f"gradient shape mismatch for parameter {name!r}: "
                             f"{g.shape} vs {tensor.data.shape}")
        if state.m[name].shape != tensor.data.shape:
            raise ValueError(f"Adam state shape mismatch for parameter {name!r}")
        if state.l2 != 0.0:
            g = g + state.l2 * tensor.data
        m = state.m[name]
        v = state.v[name]
        m[...] = b1 * m + (1.0 - b1) * g
        v[...] = b2 * v + (1.0 - b2) * g * g
        step = state.lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)
        tensor.data[...] = tensor.data - step
