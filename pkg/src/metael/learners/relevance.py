"""Binary-relevance multi-label wrapper: one forest per label."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from metael.learners.forest import DecisionForestModel, predict_confidence, train_forest
from metael.learners.instances import BinaryInstance, MultiLabelInstance

__all__ = [
    "BinaryRelevanceModel",
    "train_binary_relevance",
    "predict_label_confidences",
    "predict_labels",
]


@dataclass
class BinaryRelevanceModel:
    label_order: tuple[str, ...]
    per_label: Mapping[str, DecisionForestModel]

    @property
    def feature_dim(self) -> int:
        return self.per_label[self.label_order[0]].feature_dim

    def __eq__(self, other) -> bool:
        if not isinstance(other, BinaryRelevanceModel):
            return NotImplemented
        return self.label_order == other.label_order and all(
            self.per_label[lab] == other.per_label[lab] for lab in self.label_order
        )


def train_binary_relevance(
    data: Sequence[MultiLabelInstance],
    systems: Sequence[str],
    n_trees: int = 100,
    max_depth: int | None = None,
    min_leaf: int = 1,
    seed: int = 0,
) -> BinaryRelevanceModel:
    """Decompose the multi-label problem into one seeded forest per system.

    Label k's forest trains on membership of system k in each instance's label
    set (empty label sets are valid all-negative examples) with seed
    ``seed + k``, making each per-label training reproducible standalone.
    """
    if not systems:
        raise ValueError("empty systems list")
    if not data:
        raise ValueError("empty training data")
    label_order = tuple(systems)
    per_label = {}
    for k, label in enumerate(label_order):
        binary = [BinaryInstance(x=inst.x, y=label in inst.labels) for inst in data]
        per_label[label] = train_forest(
            binary, n_trees=n_trees, max_depth=max_depth, min_leaf=min_leaf, seed=seed + k
        )
    return BinaryRelevanceModel(label_order=label_order, per_label=per_label)


def predict_label_confidences(model: BinaryRelevanceModel, x) -> dict[str, float]:
    """Per-label positive confidence, keyed in label order; no thresholding."""
    x = np.asarray(x, dtype=np.float64)
    return {label: predict_confidence(model.per_label[label], x) for label in model.label_order}


def predict_labels(model: BinaryRelevanceModel, x) -> set[str]:
    """Labels whose confidence reaches the 0.5 positive threshold."""
    confidences = predict_label_confidences(model, x)
    return {label for label, conf in confidences.items() if conf >= 0.5}
