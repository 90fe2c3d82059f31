"""metael: per-mention ensemble combination of entity-linking system outputs."""

from metael._kernels import BACKEND
from metael.alignment import MentionGroup, agreement_statistics, build_mention_groups
from metael.corpus import (
    AnnotationSet,
    Document,
    EntityAnnotation,
    GroundTruth,
    LoadError,
    Mention,
    canonicalize_entity,
    load_annotation_set,
    load_corpus,
    load_ground_truth,
)
from metael.features import (
    CandidateDictionary,
    CorpusIndex,
    Featurizer,
    SystemTrainingStats,
    build_training_stats,
)
from metael.pipeline import (
    MetaElConfig,
    MetaElModel,
    UnifiedAnnotationSet,
    annotate_loose,
    annotate_strict,
    train_metael,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "AnnotationSet",
    "CandidateDictionary",
    "CorpusIndex",
    "Document",
    "EntityAnnotation",
    "Featurizer",
    "GroundTruth",
    "LoadError",
    "Mention",
    "MentionGroup",
    "MetaElConfig",
    "MetaElModel",
    "SystemTrainingStats",
    "UnifiedAnnotationSet",
    "agreement_statistics",
    "annotate_loose",
    "annotate_strict",
    "build_mention_groups",
    "build_training_stats",
    "canonicalize_entity",
    "load_annotation_set",
    "load_corpus",
    "load_ground_truth",
    "train_metael",
    "__version__",
]
