"""Decision-forest classifier with per-class confidence.

Training and prediction run on the kernel backend selected in
metael._kernels (compiled when available, NumPy otherwise); both backends
are bit-identical, so models and confidences do not depend on the backend.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from metael import _kernels
from metael.learners.instances import BinaryInstance, binary_targets, design_matrix

__all__ = [
    "DecisionForestModel",
    "train_forest",
    "predict_confidence",
    "predict_confidences",
    "predict_label",
]


@dataclass
class DecisionForestModel:
    """Bootstrap ensemble of axis-aligned threshold trees.

    Each tree is a 5-tuple of arrays (feature, threshold, left, right, value);
    leaves have feature = -1 and value = their positive-class fraction (the
    negative fraction is its complement, so the pair sums to 1).
    """

    trees: list[tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]]
    n_trees: int
    feature_dim: int
    rng_seed: int
    max_depth: int = 0
    min_leaf: int = 1
    constant: bool = field(default=False)

    def __eq__(self, other) -> bool:
        if not isinstance(other, DecisionForestModel):
            return NotImplemented
        return (
            self.n_trees == other.n_trees
            and self.feature_dim == other.feature_dim
            and self.rng_seed == other.rng_seed
            and self.max_depth == other.max_depth
            and self.min_leaf == other.min_leaf
            and len(self.trees) == len(other.trees)
            and all(
                all(np.array_equal(a, b) for a, b in zip(t1, t2))
                for t1, t2 in zip(self.trees, other.trees)
            )
        )


def train_forest(
    data: Sequence[BinaryInstance],
    n_trees: int = 100,
    max_depth: int | None = None,
    min_leaf: int = 1,
    seed: int = 0,
) -> DecisionForestModel:
    """Train a seeded forest; single-class data yields a constant model."""
    X = design_matrix(data)
    y = binary_targets(data)
    if n_trees < 1:
        raise ValueError("n_trees must be at least 1")
    if min_leaf < 1:
        raise ValueError("min_leaf must be at least 1")
    depth = 0 if max_depth is None else int(max_depth)
    if depth < 0:
        raise ValueError("max_depth must be None or non-negative")
    trees = _kernels.train_forest(X, y, n_trees, depth, min_leaf, seed)
    single_class = bool(y.min() == y.max())
    return DecisionForestModel(
        trees=trees,
        n_trees=n_trees,
        feature_dim=X.shape[1],
        rng_seed=seed,
        max_depth=depth,
        min_leaf=min_leaf,
        constant=single_class,
    )


def predict_confidences(model: DecisionForestModel, X) -> np.ndarray:
    """Positive-class confidence (mean leaf fraction over trees) per row."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.feature_dim:
        raise ValueError(
            f"expected shape (n, {model.feature_dim}), got {X.shape}"
        )
    return _kernels.predict_forest(model.trees, X)


def predict_confidence(model: DecisionForestModel, x) -> float:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != model.feature_dim:
        raise ValueError(f"expected a vector of length {model.feature_dim}, got shape {x.shape}")
    return float(predict_confidences(model, x.reshape(1, -1))[0])


def predict_label(model: DecisionForestModel, x) -> bool:
    """Confidence at least 0.5 counts as a positive prediction."""
    return predict_confidence(model, x) >= 0.5
