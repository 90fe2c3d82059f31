"""Versioned JSON serialization for trained models.

The container records a format version, the model kind, its training params
and the full numeric state.  Floats survive the JSON round trip exactly
(shortest-repr encoding), so reloaded models reproduce bit-identical
predictions.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from metael.learners.forest import DecisionForestModel
from metael.learners.margin import MarginModel
from metael.learners.relevance import BinaryRelevanceModel

__all__ = ["FORMAT_VERSION", "model_to_dict", "model_from_dict", "save_model", "load_model"]

FORMAT_VERSION = 1

_TREE_DTYPES = (np.int32, np.float64, np.int32, np.int32, np.float64)


def _tree_to_lists(tree) -> list[list]:
    return [arr.tolist() for arr in tree]


def _tree_from_lists(data) -> tuple[np.ndarray, ...]:
    return tuple(np.asarray(part, dtype=dt) for part, dt in zip(data, _TREE_DTYPES))


def model_to_dict(model) -> dict:
    if isinstance(model, DecisionForestModel):
        return {
            "format_version": FORMAT_VERSION,
            "kind": "decision_forest",
            "n_trees": model.n_trees,
            "feature_dim": model.feature_dim,
            "rng_seed": model.rng_seed,
            "max_depth": model.max_depth,
            "min_leaf": model.min_leaf,
            "constant": model.constant,
            "trees": [_tree_to_lists(t) for t in model.trees],
        }
    if isinstance(model, MarginModel):
        return {
            "format_version": FORMAT_VERSION,
            "kind": "margin",
            "weights": model.weights.tolist(),
            "bias": model.bias,
            "means": model.means.tolist(),
            "stds": model.stds.tolist(),
            "constant_accept": model.constant_accept,
        }
    if isinstance(model, BinaryRelevanceModel):
        return {
            "format_version": FORMAT_VERSION,
            "kind": "binary_relevance",
            "label_order": list(model.label_order),
            "per_label": {lab: model_to_dict(model.per_label[lab]) for lab in model.label_order},
        }
    raise TypeError(f"cannot serialize model of type {type(model).__name__}")


def model_from_dict(data: dict):
    version = data.get("format_version")
    if version != FORMAT_VERSION:
        raise ValueError(f"unsupported model format version {version!r}")
    kind = data.get("kind")
    if kind == "decision_forest":
        return DecisionForestModel(
            trees=[_tree_from_lists(t) for t in data["trees"]],
            n_trees=int(data["n_trees"]),
            feature_dim=int(data["feature_dim"]),
            rng_seed=int(data["rng_seed"]),
            max_depth=int(data["max_depth"]),
            min_leaf=int(data["min_leaf"]),
            constant=bool(data.get("constant", False)),
        )
    if kind == "margin":
        return MarginModel(
            weights=np.asarray(data["weights"], dtype=np.float64),
            bias=float(data["bias"]),
            means=np.asarray(data["means"], dtype=np.float64),
            stds=np.asarray(data["stds"], dtype=np.float64),
            constant_accept=bool(data.get("constant_accept", False)),
        )
    if kind == "binary_relevance":
        return BinaryRelevanceModel(
            label_order=tuple(data["label_order"]),
            per_label={lab: model_from_dict(d) for lab, d in data["per_label"].items()},
        )
    raise ValueError(f"unknown model kind {kind!r}")


def save_model(model, path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model)), encoding="utf-8")


def load_model(path):
    return model_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
