"""In-repo supervised learners: decision forest, max-margin linear classifier,
and a binary-relevance multi-label wrapper."""

from metael.learners.forest import (
    DecisionForestModel,
    predict_confidence,
    predict_confidences,
    predict_label,
    train_forest,
)
from metael.learners.instances import BinaryInstance, MultiLabelInstance
from metael.learners.margin import (
    MarginModel,
    constant_accept_model,
    margin_score,
    predict_margin,
    train_margin,
)
from metael.learners.relevance import (
    BinaryRelevanceModel,
    predict_label_confidences,
    predict_labels,
    train_binary_relevance,
)
from metael.learners.serialize import load_model, model_from_dict, model_to_dict, save_model

__all__ = [
    "BinaryInstance",
    "MultiLabelInstance",
    "DecisionForestModel",
    "train_forest",
    "predict_confidence",
    "predict_confidences",
    "predict_label",
    "MarginModel",
    "train_margin",
    "predict_margin",
    "margin_score",
    "constant_accept_model",
    "BinaryRelevanceModel",
    "train_binary_relevance",
    "predict_label_confidences",
    "predict_labels",
    "model_to_dict",
    "model_from_dict",
    "save_model",
    "load_model",
]
