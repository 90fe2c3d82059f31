"""Tests for the in-repo learners: forest, margin classifier, binary relevance."""

import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from metael.learners import (
    BinaryInstance,
    BinaryRelevanceModel,
    DecisionForestModel,
    MarginModel,
    MultiLabelInstance,
    constant_accept_model,
    load_model,
    margin_score,
    model_from_dict,
    model_to_dict,
    predict_confidence,
    predict_confidences,
    predict_label,
    predict_label_confidences,
    predict_labels,
    predict_margin,
    save_model,
    train_binary_relevance,
    train_forest,
    train_margin,
)


def _blobs(seed: int, n: int = 200, gap: float = 2.0):
    """Two separable 2-D clusters, n // 2 points each."""
    rng = np.random.default_rng(seed)
    half = n // 2
    neg = rng.normal(loc=(-gap, -gap), scale=0.5, size=(half, 2))
    pos = rng.normal(loc=(gap, gap), scale=0.5, size=(half, 2))
    data = [BinaryInstance.make(row, False) for row in neg]
    data += [BinaryInstance.make(row, True) for row in pos]
    return data


def _accuracy(data, predict) -> float:
    hits = sum(1 for inst in data if predict(inst.x) == inst.y)
    return hits / len(data)


# -- decision forest ---------------------------------------------------------


def test_forest_fits_separable_data():
    data = _blobs(seed=3)
    model = train_forest(data, n_trees=20, seed=5)
    acc = _accuracy(data, lambda x: predict_label(model, x))
    assert acc >= 0.95


def test_forest_single_class_is_constant():
    data = [BinaryInstance.make([float(i), 1.0], True) for i in range(6)]
    model = train_forest(data, n_trees=3, seed=0)
    assert model.constant
    assert predict_confidence(model, [0.0, 0.0]) == 1.0
    assert predict_label(model, [100.0, -100.0])

    negatives = [BinaryInstance.make([float(i)], False) for i in range(6)]
    neg_model = train_forest(negatives, n_trees=3, seed=0)
    assert neg_model.constant
    assert predict_confidence(neg_model, [2.0]) == 0.0
    assert not predict_label(neg_model, [2.0])


def test_forest_training_is_deterministic():
    data = _blobs(seed=9, n=80)
    a = train_forest(data, n_trees=8, seed=42)
    b = train_forest(data, n_trees=8, seed=42)
    assert a == b
    probes = np.asarray([inst.x for inst in data])
    assert np.array_equal(predict_confidences(a, probes), predict_confidences(b, probes))

    other = train_forest(data, n_trees=8, seed=43)
    assert not any(
        all(np.array_equal(p, q) for p, q in zip(t1, t2))
        for t1, t2 in zip(a.trees, other.trees)
    )


def test_forest_confidence_averages_leaf_values():
    def leaf(value: float):
        return (
            np.asarray([-1], dtype=np.int32),
            np.asarray([0.0], dtype=np.float64),
            np.asarray([-1], dtype=np.int32),
            np.asarray([-1], dtype=np.int32),
            np.asarray([value], dtype=np.float64),
        )

    model = DecisionForestModel(
        trees=[leaf(0.0), leaf(1.0)], n_trees=2, feature_dim=3, rng_seed=0
    )
    assert predict_confidence(model, [1.0, 2.0, 3.0]) == 0.5
    # ties at the 0.5 threshold resolve to a positive prediction
    assert predict_label(model, [1.0, 2.0, 3.0])


def test_forest_identical_rows_yield_class_fraction():
    data = [BinaryInstance.make([1.0, 1.0], i < 3) for i in range(10)]
    model = train_forest(data, n_trees=1, seed=0)
    conf = predict_confidence(model, [1.0, 1.0])
    assert 0.0 <= conf <= 1.0
    feature, _, _, _, value = model.trees[0]
    assert feature[0] == -1
    assert value[0] == conf


@pytest.mark.parametrize(
    "kwargs",
    [{"n_trees": 0}, {"min_leaf": 0}, {"max_depth": -1}],
)
def test_forest_rejects_bad_params(kwargs):
    data = _blobs(seed=1, n=20)
    with pytest.raises(ValueError):
        train_forest(data, **kwargs)


def test_forest_rejects_empty_and_mismatched_inputs():
    with pytest.raises(ValueError, match="empty training data"):
        train_forest([])
    model = train_forest(_blobs(seed=2, n=20), n_trees=2, seed=0)
    with pytest.raises(ValueError):
        predict_confidence(model, [1.0, 2.0, 3.0])
    with pytest.raises(ValueError):
        predict_confidences(model, np.zeros((4, 5)))


@settings(max_examples=25, deadline=None)
@given(
    seed=st.integers(min_value=0, max_value=2**32),
    n=st.integers(min_value=4, max_value=30),
)
def test_forest_confidences_stay_in_unit_interval(seed, n):
    rng = np.random.default_rng(seed)
    X = rng.integers(0, 3, size=(n, 3)).astype(float)
    y = rng.integers(0, 2, size=n).astype(bool)
    data = [BinaryInstance.make(x, t) for x, t in zip(X, y)]
    model = train_forest(data, n_trees=4, seed=seed % 1000)
    conf = predict_confidences(model, X)
    assert np.all(conf >= 0.0) and np.all(conf <= 1.0)


# -- max-margin classifier ---------------------------------------------------


def test_margin_two_point_fixture_converges_exactly():
    """Symmetric pair: the optimizer lands on weight 1, bias 0 in one update."""
    data = [BinaryInstance.make([-1.0], False), BinaryInstance.make([1.0], True)]
    model = train_margin(data)
    assert np.array_equal(model.weights, [1.0])
    assert model.bias == 0.0
    assert np.array_equal(model.means, [0.0])
    assert np.array_equal(model.stds, [1.0])
    assert margin_score(model, [0.25]) == 0.25
    assert predict_margin(model, [0.5]) and not predict_margin(model, [-0.5])


def test_margin_standardizes_per_feature():
    data = [BinaryInstance.make([-1.0, -2.0], False), BinaryInstance.make([1.0, 2.0], True)]
    model = train_margin(data)
    assert np.array_equal(model.stds, [1.0, 2.0])
    assert np.array_equal(model.weights, [0.5, 0.5])
    assert model.bias == 0.0


def test_margin_fits_separable_blobs():
    data = _blobs(seed=17, n=40, gap=3.0)
    model = train_margin(data, seed=1)
    assert _accuracy(data, lambda x: predict_margin(model, x)) == 1.0


def test_margin_constant_feature_keeps_unit_std():
    data = [
        BinaryInstance.make([-2.0, 7.0], False),
        BinaryInstance.make([-1.0, 7.0], False),
        BinaryInstance.make([1.0, 7.0], True),
        BinaryInstance.make([2.0, 7.0], True),
    ]
    model = train_margin(data)
    assert model.stds[1] == 1.0
    assert np.isfinite(model.weights).all()
    assert _accuracy(data, lambda x: predict_margin(model, x)) == 1.0


def test_margin_single_class_raises():
    data = [BinaryInstance.make([float(i)], True) for i in range(4)]
    with pytest.raises(ValueError, match="both classes"):
        train_margin(data)


def test_margin_rejects_nonpositive_c():
    data = [BinaryInstance.make([-1.0], False), BinaryInstance.make([1.0], True)]
    with pytest.raises(ValueError, match="positive"):
        train_margin(data, c=0.0)


def test_margin_zero_score_is_positive():
    model = MarginModel(
        weights=np.zeros(2), bias=0.0, means=np.zeros(2), stds=np.ones(2)
    )
    assert margin_score(model, [3.0, -4.0]) == 0.0
    assert predict_margin(model, [3.0, -4.0])


def test_constant_accept_model_accepts_everything():
    model = constant_accept_model(4)
    assert model.constant_accept
    assert model.feature_dim == 4
    assert margin_score(model, [0.0, 0.0, 0.0, 0.0]) == 1.0
    assert predict_margin(model, [-9.0, 5.0, 0.0, 1e6])


def test_margin_training_is_deterministic():
    data = _blobs(seed=23, n=30, gap=1.2)
    assert train_margin(data, seed=7) == train_margin(data, seed=7)


# -- binary relevance --------------------------------------------------------


def _multilabel_data(seed: int, n: int = 40, labels=("alpha", "beta", "gamma")):
    rng = np.random.default_rng(seed)
    X = rng.uniform(0.0, 1.0, size=(n, 4))
    data = []
    for row in X:
        active = frozenset(lab for k, lab in enumerate(labels) if row[k] > 0.5)
        data.append(MultiLabelInstance.make(row, active))
    return data


def test_binary_relevance_matches_standalone_forests():
    systems = ("alpha", "beta", "gamma")
    data = _multilabel_data(seed=31)
    model = train_binary_relevance(data, systems, n_trees=7, seed=11)
    assert model.label_order == systems
    for k, label in enumerate(systems):
        binary = [BinaryInstance(x=inst.x, y=label in inst.labels) for inst in data]
        standalone = train_forest(binary, n_trees=7, seed=11 + k)
        assert model.per_label[label] == standalone


def test_binary_relevance_confidences_and_thresholding():
    systems = ("alpha", "beta")
    data = _multilabel_data(seed=37, labels=systems)
    model = train_binary_relevance(data, systems, n_trees=9, seed=2)
    x = data[0].x
    conf = predict_label_confidences(model, x)
    assert tuple(conf) == systems
    for label in systems:
        assert conf[label] == predict_confidence(model.per_label[label], x)
    assert predict_labels(model, x) == {lab for lab, c in conf.items() if c >= 0.5}


def test_binary_relevance_accepts_empty_label_sets():
    data = [
        MultiLabelInstance.make([0.0, 0.0], []),
        MultiLabelInstance.make([1.0, 1.0], ["alpha"]),
        MultiLabelInstance.make([1.0, 0.0], ["alpha"]),
        MultiLabelInstance.make([0.0, 1.0], []),
    ]
    model = train_binary_relevance(data, ("alpha",), n_trees=3, seed=0)
    assert not model.per_label["alpha"].constant


def test_binary_relevance_rejects_empty_inputs():
    data = _multilabel_data(seed=5, n=4)
    with pytest.raises(ValueError, match="systems"):
        train_binary_relevance(data, ())
    with pytest.raises(ValueError, match="training data"):
        train_binary_relevance([], ("alpha",))


# -- serialization -----------------------------------------------------------


def test_forest_roundtrip_preserves_predictions():
    data = _blobs(seed=41, n=60)
    model = train_forest(data, n_trees=6, max_depth=4, min_leaf=2, seed=13)
    restored = model_from_dict(json.loads(json.dumps(model_to_dict(model))))
    assert restored == model
    probes = np.asarray([inst.x for inst in data])
    assert np.array_equal(predict_confidences(model, probes), predict_confidences(restored, probes))
    for tree in restored.trees:
        assert tree[0].dtype == np.int32 and tree[1].dtype == np.float64


def test_margin_roundtrip_preserves_scores():
    data = _blobs(seed=43, n=30, gap=1.5)
    model = train_margin(data, seed=3)
    restored = model_from_dict(json.loads(json.dumps(model_to_dict(model))))
    assert restored == model
    for inst in data[:5]:
        assert margin_score(restored, inst.x) == margin_score(model, inst.x)


def test_binary_relevance_roundtrip_via_file(tmp_path):
    systems = ("alpha", "beta")
    data = _multilabel_data(seed=47, labels=systems)
    model = train_binary_relevance(data, systems, n_trees=5, seed=8)
    path = tmp_path / "model.json"
    save_model(model, path)
    restored = load_model(path)
    assert isinstance(restored, BinaryRelevanceModel)
    assert restored == model
    x = data[0].x
    assert predict_label_confidences(restored, x) == predict_label_confidences(model, x)


def test_constant_accept_roundtrip():
    model = constant_accept_model(3)
    restored = model_from_dict(model_to_dict(model))
    assert restored == model
    assert restored.constant_accept


def test_serialize_rejects_bad_payloads():
    with pytest.raises(TypeError):
        model_to_dict(object())
    with pytest.raises(ValueError, match="version"):
        model_from_dict({"format_version": 99, "kind": "margin"})
    with pytest.raises(ValueError, match="kind"):
        model_from_dict({"format_version": 1, "kind": "mystery"})
