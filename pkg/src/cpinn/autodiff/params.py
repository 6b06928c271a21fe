"""Flat parameter vectors with a named segment layout.

Optimizers work on one contiguous float64 vector per player; layers see the
same numbers as shaped views.  The layout is the single source of truth for
how the flat vector splits.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import prod

import numpy as np

from ..errors import ContractError

Layout = tuple[tuple[str, tuple[int, ...]], ...]


def layout_size(layout: Layout) -> int:
    return sum(prod(shape) for _, shape in layout)


@dataclass
class ParamVector:
    values: np.ndarray
    layout: Layout

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 1:
            raise ContractError("parameter vector must be flat")
        if self.values.size != layout_size(self.layout):
            raise ContractError(
                f"layout wants {layout_size(self.layout)} values, got {self.values.size}"
            )

    def __len__(self) -> int:
        return self.values.size

    def segments(self) -> list[np.ndarray]:
        out = []
        at = 0
        for _, shape in self.layout:
            n = prod(shape)
            out.append(self.values[at : at + n].reshape(shape))
            at += n
        return out

    @classmethod
    def from_segments(cls, layout: Layout, arrays) -> "ParamVector":
        arrays = list(arrays)
        if len(arrays) != len(layout):
            raise ContractError("segment count does not match layout")
        flat = []
        for (name, shape), a in zip(layout, arrays):
            a = np.asarray(a, dtype=np.float64)
            if a.shape != shape:
                raise ContractError(f"segment {name!r}: expected shape {shape}, got {a.shape}")
            flat.append(a.reshape(-1))
        return cls(np.concatenate(flat) if flat else np.zeros(0), layout)

    def with_values(self, values: np.ndarray) -> "ParamVector":
        return ParamVector(values, self.layout)

    def copy(self) -> "ParamVector":
        return ParamVector(self.values.copy(), self.layout)

    def zeros_like(self) -> "ParamVector":
        return ParamVector(np.zeros_like(self.values), self.layout)
