"""Unification pipeline: train per-mention system selectors, then merge the
outputs of several entity-linking systems into one annotation set.

Training labels every aligned gold-bearing mention group with the systems
that linked it correctly, fits one multi-label relevance forest over those
labels and one per-system margin classifier.  Annotation walks the test
groups and picks a provider per group: a lone recogniser is trusted (LOOSE)
or vetted by its margin classifier (STRICT), unanimous groups short-circuit
to the consensus, and contested groups go to the relevance forest restricted
to the systems actually present.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Mapping, Sequence

from metael.alignment import MentionGroup
from metael.corpus import EntityAnnotation, GroundTruth
from metael.features import (
    FEATURE_NAMES,
    CandidateDictionary,
    CorpusIndex,
    Featurizer,
    SystemTrainingStats,
    build_training_stats,
)
from metael.learners import (
    BinaryInstance,
    BinaryRelevanceModel,
    MarginModel,
    MultiLabelInstance,
    constant_accept_model,
    model_from_dict,
    model_to_dict,
    predict_label_confidences,
    predict_margin,
    train_binary_relevance,
    train_margin,
)

__all__ = [
    "PATH_AGREEMENT",
    "PATH_BINARY_ACCEPTED",
    "PATH_PREDICTED",
    "PATH_SINGLE_SYSTEM",
    "MetaElConfig",
    "MetaElModel",
    "Provenance",
    "UnifiedAnnotationSet",
    "annotate_loose",
    "annotate_strict",
    "label_binary_instances",
    "label_multilabel_instances",
    "train_metael",
]

MODEL_FORMAT_VERSION = 1

PATH_SINGLE_SYSTEM = "single-system"
PATH_AGREEMENT = "agreement"
PATH_PREDICTED = "predicted"
PATH_BINARY_ACCEPTED = "binary-accepted"

_ALIGNMENT_MODES = ("strong", "overlap")


@dataclass(frozen=True)
class MetaElConfig:
    """Pipeline hyperparameters; ``features=None`` keeps every feature."""

    alignment_mode: str = "strong"
    features: tuple[str, ...] | None = None
    n_trees: int = 100
    max_depth: int | None = None
    min_leaf: int = 1
    c: float = 1.0
    tol: float = 1e-3
    max_passes: int = 5
    seed: int = 0
    short_circuit_unanimous: bool = True
    include_empty_label_sets: bool = True

    def __post_init__(self) -> None:
        if self.alignment_mode not in _ALIGNMENT_MODES:
            raise ValueError(f"unknown alignment mode {self.alignment_mode!r}")
        if self.features is not None:
            object.__setattr__(self, "features", tuple(self.features))
            if not self.features:
                raise ValueError("feature mask keeps no features")
            unknown = set(self.features) - set(FEATURE_NAMES)
            if unknown:
                raise ValueError(f"unknown feature name(s): {sorted(unknown)}")
        if self.n_trees < 1:
            raise ValueError("n_trees must be at least 1")
        if self.min_leaf < 1:
            raise ValueError("min_leaf must be at least 1")
        if self.max_passes < 1:
            raise ValueError("max_passes must be at least 1")
        if self.c <= 0:
            raise ValueError("c must be positive")

    def with_features(self, features: Sequence[str] | None) -> "MetaElConfig":
        return replace(self, features=None if features is None else tuple(features))

    def to_dict(self) -> dict:
        return {
            "alignment_mode": self.alignment_mode,
            "features": None if self.features is None else list(self.features),
            "n_trees": self.n_trees,
            "max_depth": self.max_depth,
            "min_leaf": self.min_leaf,
            "c": self.c,
            "tol": self.tol,
            "max_passes": self.max_passes,
            "seed": self.seed,
            "short_circuit_unanimous": self.short_circuit_unanimous,
            "include_empty_label_sets": self.include_empty_label_sets,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, object]) -> "MetaElConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config field(s): {sorted(unknown)}")
        return cls(**data)


@dataclass(frozen=True)
class Provenance:
    """Which system supplied an emitted annotation, and by which decision."""

    system_id: str
    path: str


@dataclass(frozen=True)
class UnifiedAnnotationSet:
    """Merged annotations with parallel per-annotation provenance."""

    annotations: tuple[EntityAnnotation, ...]
    provenance: tuple[Provenance, ...]

    def __post_init__(self) -> None:
        if len(self.annotations) != len(self.provenance):
            raise ValueError("annotations and provenance must be parallel")

    def extras(self) -> list[dict[str, str]]:
        """Per-record provenance fields for the JSON-Lines writer."""
        return [{"system": p.system_id, "path": p.path} for p in self.provenance]


@dataclass
class MetaElModel:
    """Trained selector: relevance forest, per-system vetting classifiers,
    the training statistics they share, and the configuration."""

    br: BinaryRelevanceModel
    per_system_binary: Mapping[str, MarginModel]
    stats: SystemTrainingStats
    systems: tuple[str, ...]
    config: MetaElConfig

    @property
    def constant_accept_systems(self) -> tuple[str, ...]:
        """Systems whose vetting classifier fell back to always-accept
        because their training labels had a single class."""
        return tuple(s for s in self.systems if self.per_system_binary[s].constant_accept)

    def to_dict(self) -> dict:
        return {
            "format_version": MODEL_FORMAT_VERSION,
            "kind": "metael",
            "systems": list(self.systems),
            "config": self.config.to_dict(),
            "stats": self.stats.to_dict(),
            "br": model_to_dict(self.br),
            "per_system_binary": {s: model_to_dict(self.per_system_binary[s]) for s in self.systems},
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "MetaElModel":
        version = data.get("format_version")
        if version != MODEL_FORMAT_VERSION:
            raise ValueError(f"unsupported model format version {version!r}")
        if data.get("kind") != "metael":
            raise ValueError(f"unknown model kind {data.get('kind')!r}")
        systems = tuple(data["systems"])
        config = MetaElConfig.from_dict(data["config"])
        return cls(
            br=model_from_dict(data["br"]),
            per_system_binary={s: model_from_dict(data["per_system_binary"][s]) for s in systems},
            stats=SystemTrainingStats.from_dict(data["stats"]),
            systems=systems,
            config=config,
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "MetaElModel":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def label_multilabel_instances(
    groups: Sequence[MentionGroup],
    featurizer: Featurizer,
    include_empty_label_sets: bool = True,
) -> list[MultiLabelInstance]:
    """One instance per gold-bearing group with at least two recognisers,
    labelled with the systems whose entity matches the gold link.

    Groups where every recogniser is wrong keep their empty label set unless
    ``include_empty_label_sets`` is off.
    """
    instances = []
    for group in groups:
        if group.gold_entity is None or len(group.annotations) < 2:
            continue
        labels = frozenset(
            sys for sys, ann in group.annotations.items() if ann.entity == group.gold_entity
        )
        if not labels and not include_empty_label_sets:
            continue
        instances.append(MultiLabelInstance.make(featurizer.vector(group), labels))
    return instances


def label_binary_instances(
    groups: Sequence[MentionGroup],
    system_id: str,
    featurizer: Featurizer,
) -> list[BinaryInstance]:
    """Per gold-bearing group where the system answered: was it right?"""
    instances = []
    for group in groups:
        if group.gold_entity is None:
            continue
        ann = group.annotations.get(system_id)
        if ann is None:
            continue
        instances.append(
            BinaryInstance.make(featurizer.vector(group), ann.entity == group.gold_entity)
        )
    return instances


def train_metael(
    train_groups: Sequence[MentionGroup],
    systems: Sequence[str],
    candidates: CandidateDictionary,
    config: MetaElConfig | None = None,
    *,
    corpus_index: CorpusIndex,
    ground_truth: GroundTruth | None = None,
) -> MetaElModel:
    """Train the full selector on aligned training groups.

    ``corpus_index`` must index the training corpus; gold-less groups still
    contribute recognised counts to the training statistics.  A system with
    single-class vetting labels gets a flagged constant-accept classifier.
    """
    systems = tuple(systems)
    if not systems:
        raise ValueError("empty systems list")
    if config is None:
        config = MetaElConfig()
    stats = build_training_stats(train_groups, systems, ground_truth)
    featurizer = Featurizer(corpus_index, candidates, stats, systems, config.features)

    multilabel = label_multilabel_instances(
        train_groups, featurizer, include_empty_label_sets=config.include_empty_label_sets
    )
    if not multilabel:
        raise ValueError("empty training data")
    br = train_binary_relevance(
        multilabel,
        systems,
        n_trees=config.n_trees,
        max_depth=config.max_depth,
        min_leaf=config.min_leaf,
        seed=config.seed,
    )

    per_system_binary = {}
    for sys_id in systems:
        binary = label_binary_instances(train_groups, sys_id, featurizer)
        classes = {inst.y for inst in binary}
        if len(classes) < 2:
            per_system_binary[sys_id] = constant_accept_model(featurizer.dim)
        else:
            per_system_binary[sys_id] = train_margin(
                binary, c=config.c, tol=config.tol, max_passes=config.max_passes, seed=config.seed
            )

    return MetaElModel(
        br=br,
        per_system_binary=per_system_binary,
        stats=stats,
        systems=systems,
        config=config,
    )


def _select_provider(
    model: MetaElModel, group: MentionGroup, featurizer: Featurizer, strict: bool
) -> tuple[str, str] | None:
    """Returns (system_id, decision path) or None when the group is skipped."""
    unknown = set(group.annotations) - set(model.systems)
    if unknown:
        raise ValueError(f"group names system(s) unknown to the model: {sorted(unknown)}")
    present = [s for s in model.systems if s in group.annotations]
    if not present:
        return None

    if len(present) == 1:
        only = present[0]
        if not strict:
            return only, PATH_SINGLE_SYSTEM
        vetter = model.per_system_binary[only]
        if predict_margin(vetter, featurizer.vector(group)):
            return only, PATH_BINARY_ACCEPTED
        return None

    entities = {group.annotations[s].entity for s in present}
    if len(entities) == 1 and model.config.short_circuit_unanimous:
        return present[0], PATH_AGREEMENT

    confidences = predict_label_confidences(model.br, featurizer.vector(group))
    best_conf = max(confidences[s] for s in present)
    tied = [s for s in present if confidences[s] == best_conf]
    # exact confidence ties go to the system with the best training score;
    # max() keeps the earliest system on a residual tie
    chosen = max(tied, key=lambda s: model.stats.overall_f1[s])
    return chosen, PATH_PREDICTED


def _annotate(
    model: MetaElModel,
    groups: Sequence[MentionGroup],
    corpus_index: CorpusIndex,
    candidates: CandidateDictionary,
    strict: bool,
) -> UnifiedAnnotationSet:
    featurizer = Featurizer(
        corpus_index, candidates, model.stats, model.systems, model.config.features
    )
    annotations = []
    provenance = []
    for group in groups:
        selected = _select_provider(model, group, featurizer, strict)
        if selected is None:
            continue
        system_id, path = selected
        entity = group.annotations[system_id].entity
        annotations.append(EntityAnnotation(mention=group.mention, entity=entity))
        provenance.append(Provenance(system_id=system_id, path=path))
    return UnifiedAnnotationSet(tuple(annotations), tuple(provenance))


def annotate_loose(
    model: MetaElModel,
    groups: Sequence[MentionGroup],
    *,
    corpus_index: CorpusIndex,
    candidates: CandidateDictionary,
) -> UnifiedAnnotationSet:
    """High-recall unification: lone recognisers are trusted as-is."""
    return _annotate(model, groups, corpus_index, candidates, strict=False)


def annotate_strict(
    model: MetaElModel,
    groups: Sequence[MentionGroup],
    *,
    corpus_index: CorpusIndex,
    candidates: CandidateDictionary,
) -> UnifiedAnnotationSet:
    """High-precision unification: lone recognisers must pass their system's
    vetting classifier; everything else matches the loose path."""
    return _annotate(model, groups, corpus_index, candidates, strict=True)
