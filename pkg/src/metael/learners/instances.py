"""Training-instance containers shared by the learners."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class BinaryInstance:
    x: tuple[float, ...]
    y: bool

    @classmethod
    def make(cls, x, y) -> "BinaryInstance":
        return cls(x=tuple(float(v) for v in x), y=bool(y))


@dataclass(frozen=True)
class MultiLabelInstance:
    x: tuple[float, ...]
    labels: frozenset[str]

    @classmethod
    def make(cls, x, labels) -> "MultiLabelInstance":
        return cls(x=tuple(float(v) for v in x), labels=frozenset(labels))


def design_matrix(data: Sequence[BinaryInstance] | Sequence[MultiLabelInstance]) -> np.ndarray:
    if not data:
        raise ValueError("empty training data")
    X = np.asarray([inst.x for inst in data], dtype=np.float64)
    if X.ndim != 2 or X.shape[1] == 0:
        raise ValueError("instances must share a fixed nonzero dimension")
    return X


def binary_targets(data: Sequence[BinaryInstance]) -> np.ndarray:
    return np.asarray([inst.y for inst in data], dtype=np.uint8)
