"""The ten corpus-derived features describing a mention and its annotators.

Surface family: word count, in-document occurrence count, document frequency,
candidate-entity count, and the per-system training-correctness pair (correct
count and correct ratio).  Mention family: relative character position and
enclosing sentence length.  Document family: document word count and number
of aligned mention groups.

Feature vectors are laid out scalars-first, then one (correct_count,
correct_ratio) pair per system in a fixed system order; see ``vectorize``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from metael.alignment import MentionGroup
from metael.corpus import Document, GroundTruth, LoadError, normalize_surface
from metael.evaluation import prf_from_counts

__all__ = [
    "FEATURE_NAMES",
    "FEATURE_FAMILIES",
    "PER_SYSTEM_FEATURES",
    "SENTENCE_BOUNDARIES",
    "CandidateDictionary",
    "SystemTrainingStats",
    "CorpusIndex",
    "FeatureVector",
    "Featurizer",
    "build_training_stats",
    "extract_features",
    "vectorize",
    "vector_layout",
]

FEATURE_NAMES = (
    "surface_word_count",
    "surface_frequency",
    "surface_doc_frequency",
    "candidate_count",
    "correct_count",
    "correct_ratio",
    "position_ratio",
    "sentence_length",
    "doc_word_count",
    "doc_entity_count",
)

FEATURE_FAMILIES: Mapping[str, tuple[str, ...]] = {
    "surface": (
        "surface_word_count",
        "surface_frequency",
        "surface_doc_frequency",
        "candidate_count",
        "correct_count",
        "correct_ratio",
    ),
    "mention": ("position_ratio", "sentence_length"),
    "document": ("doc_word_count", "doc_entity_count"),
}

PER_SYSTEM_FEATURES = ("correct_count", "correct_ratio")

_SCALAR_LAYOUT = (
    "surface_word_count",
    "surface_frequency",
    "surface_doc_frequency",
    "candidate_count",
    "position_ratio",
    "sentence_length",
    "doc_word_count",
    "doc_entity_count",
)

SENTENCE_BOUNDARIES = frozenset(".!?;")


class CandidateDictionary:
    """Surface form → number of candidate entities in the reference KB.

    Keys are normalized (whitespace-collapsed, lower-cased); unknown surfaces
    look up as 0.
    """

    def __init__(self, counts: Mapping[str, int] | None = None) -> None:
        self._counts: dict[str, int] = {}
        for surface, count in (counts or {}).items():
            if count < 0:
                raise LoadError(f"negative candidate count for {surface!r}")
            self._counts[normalize_surface(surface)] = int(count)

    @classmethod
    def load_tsv(cls, path) -> "CandidateDictionary":
        counts: dict[str, int] = {}
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                parts = line.rstrip("\n").split("\t")
                if len(parts) != 2:
                    raise LoadError(f"{path}:{lineno}: expected surface<TAB>count")
                surface, raw = parts
                try:
                    count = int(raw)
                except ValueError as exc:
                    raise LoadError(f"{path}:{lineno}: count {raw!r} is not an integer") from exc
                if count < 0:
                    raise LoadError(f"{path}:{lineno}: negative candidate count")
                counts[normalize_surface(surface)] = count
        return cls(counts)

    def write_tsv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for surface in sorted(self._counts):
                fh.write(f"{surface}\t{self._counts[surface]}\n")

    def lookup(self, surface: str) -> int:
        return self._counts.get(normalize_surface(surface), 0)

    def __len__(self) -> int:
        return len(self._counts)


@dataclass(frozen=True)
class SystemTrainingStats:
    """Per-system correctness bookkeeping gathered from a training corpus."""

    systems: tuple[str, ...]
    surface_counts: Mapping[str, Mapping[str, tuple[int, int]]]
    overall_precision: Mapping[str, float]
    overall_f1: Mapping[str, float]

    def correct_count(self, system: str, surface: str) -> int:
        pair = self.surface_counts[system].get(normalize_surface(surface))
        return pair[0] if pair else 0

    def correct_ratio(self, system: str, surface: str) -> float:
        """Fraction of training occurrences the system got right; backs off to
        the system's overall training precision for unseen surfaces."""
        pair = self.surface_counts[system].get(normalize_surface(surface))
        if pair is None or pair[0] + pair[1] == 0:
            return self.overall_precision[system]
        return pair[0] / (pair[0] + pair[1])

    def to_dict(self) -> dict:
        return {
            "systems": list(self.systems),
            "surface_counts": {
                sys: {surf: list(pair) for surf, pair in counts.items()}
                for sys, counts in self.surface_counts.items()
            },
            "overall_precision": dict(self.overall_precision),
            "overall_f1": dict(self.overall_f1),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SystemTrainingStats":
        return cls(
            systems=tuple(data["systems"]),
            surface_counts={
                sys: {surf: (int(a), int(b)) for surf, (a, b) in counts.items()}
                for sys, counts in data["surface_counts"].items()
            },
            overall_precision={k: float(v) for k, v in data["overall_precision"].items()},
            overall_f1={k: float(v) for k, v in data["overall_f1"].items()},
        )


def build_training_stats(
    groups: Sequence[MentionGroup],
    systems: Sequence[str],
    ground_truth: GroundTruth | None = None,
) -> SystemTrainingStats:
    """Collect per-surface correctness counts and overall training P/F1.

    Surface counts come from gold-bearing groups only; groups without gold
    still count toward each system's recognised total.  When ``ground_truth``
    is given its size is the recall denominator (covering gold mentions no
    system recognised); otherwise the gold-bearing group count is used.
    """
    if not systems:
        raise ValueError("empty systems list")
    systems = tuple(systems)
    counts: dict[str, dict[str, list[int]]] = {s: {} for s in systems}
    recognised = {s: 0 for s in systems}
    correct = {s: 0 for s in systems}
    gold_groups = 0
    for group in groups:
        for sys_id, ann in group.annotations.items():
            if sys_id not in counts:
                raise ValueError(f"group mentions unknown system {sys_id!r}")
            recognised[sys_id] += 1
        if group.gold_entity is None:
            continue
        gold_groups += 1
        surface = normalize_surface(group.mention.surface)
        for sys_id, ann in group.annotations.items():
            pair = counts[sys_id].setdefault(surface, [0, 0])
            if ann.entity == group.gold_entity:
                pair[0] += 1
                correct[sys_id] += 1
            else:
                pair[1] += 1

    gt_total = len(ground_truth.annotations) if ground_truth is not None else gold_groups
    precision = {}
    f1 = {}
    for s in systems:
        score = prf_from_counts(correct[s], recognised[s], gt_total)
        precision[s] = score.precision
        f1[s] = score.f1
    return SystemTrainingStats(
        systems=systems,
        surface_counts={s: {k: (v[0], v[1]) for k, v in counts[s].items()} for s in systems},
        overall_precision=precision,
        overall_f1=f1,
    )


def _count_overlapping(text: str, needle: str) -> int:
    count = 0
    start = 0
    while True:
        i = text.find(needle, start)
        if i < 0:
            return count
        count += 1
        start = i + 1


class CorpusIndex:
    """Per-corpus statistics needed by feature extraction.

    Build one per corpus from its documents and the aligned mention groups;
    document frequencies are computed lazily and cached.
    """

    def __init__(self, documents: Mapping[str, Document], group_counts: Mapping[str, int]):
        self._documents = dict(documents)
        self._lower = {doc_id: doc.text.lower() for doc_id, doc in self._documents.items()}
        self._word_counts = {doc_id: len(doc.text.split()) for doc_id, doc in self._documents.items()}
        self._group_counts = dict(group_counts)
        self._df_cache: dict[str, int] = {}

    @classmethod
    def build(cls, corpus: Iterable[Document], groups: Iterable[MentionGroup]) -> "CorpusIndex":
        documents = {doc.id: doc for doc in corpus}
        group_counts: dict[str, int] = {}
        for group in groups:
            # recognised entities only: zero-recogniser gold groups don't count
            if group.recognised_by == 0:
                continue
            group_counts[group.mention.doc_id] = group_counts.get(group.mention.doc_id, 0) + 1
        return cls(documents, group_counts)

    def __contains__(self, doc_id: str) -> bool:
        return doc_id in self._documents

    def document(self, doc_id: str) -> Document:
        return self._documents[doc_id]

    def word_count(self, doc_id: str) -> int:
        return self._word_counts[doc_id]

    def group_count(self, doc_id: str) -> int:
        return self._group_counts.get(doc_id, 0)

    def occurrence_count(self, doc_id: str, surface: str) -> int:
        """Case-insensitive occurrences of the surface in the document,
        overlapping starts counted separately."""
        return _count_overlapping(self._lower[doc_id], surface.lower())

    def doc_frequency(self, surface: str) -> int:
        """Number of corpus documents containing the surface (case-insensitive)."""
        needle = surface.lower()
        cached = self._df_cache.get(needle)
        if cached is None:
            cached = sum(1 for text in self._lower.values() if needle in text)
            self._df_cache[needle] = cached
        return cached

    def sentence_length(self, doc_id: str, position: int, surface_len: int) -> int:
        """Character length of the sentence enclosing [position, position+len).

        Sentence boundaries are the punctuation marks . ! ? ; with document
        start and end acting as boundaries.  The closing boundary is searched
        from the mention's last character, so a mention-final mark ends its
        own sentence.
        """
        text = self._documents[doc_id].text
        end = position + surface_len
        start = 0
        for i in range(position - 1, -1, -1):
            if text[i] in SENTENCE_BOUNDARIES:
                start = i + 1
                break
        stop = len(text)
        for i in range(end - 1, len(text)):
            if text[i] in SENTENCE_BOUNDARIES:
                stop = i + 1
                break
        return stop - start


@dataclass(frozen=True)
class FeatureVector:
    surface_word_count: int
    surface_frequency: int
    surface_doc_frequency: int
    candidate_count: int
    position_ratio: float
    sentence_length: int
    doc_word_count: int
    doc_entity_count: int
    correct_count: Mapping[str, int]
    correct_ratio: Mapping[str, float]


def extract_features(
    group: MentionGroup,
    corpus_index: CorpusIndex,
    cand: CandidateDictionary,
    stats: SystemTrainingStats,
    systems: Sequence[str],
) -> FeatureVector:
    """Compute the feature vector for one mention group (pure function).

    The mention's own occurrence clamps surface_frequency and
    surface_doc_frequency to at least 1, which matters only when the
    annotated surface differs from the document text in whitespace.
    """
    mention = group.mention
    if mention.doc_id not in corpus_index:
        raise ValueError(f"document {mention.doc_id!r} not present in the corpus index")
    text_len = len(corpus_index.document(mention.doc_id).text)
    return FeatureVector(
        surface_word_count=len(mention.surface.split()),
        surface_frequency=max(1, corpus_index.occurrence_count(mention.doc_id, mention.surface)),
        surface_doc_frequency=max(1, corpus_index.doc_frequency(mention.surface)),
        candidate_count=cand.lookup(mention.surface),
        position_ratio=mention.position / text_len,
        sentence_length=corpus_index.sentence_length(
            mention.doc_id, mention.position, len(mention.surface)
        ),
        doc_word_count=corpus_index.word_count(mention.doc_id),
        doc_entity_count=corpus_index.group_count(mention.doc_id),
        correct_count={s: stats.correct_count(s, mention.surface) for s in systems},
        correct_ratio={s: stats.correct_ratio(s, mention.surface) for s in systems},
    )


def _check_mask(features: Sequence[str] | None) -> tuple[str, ...]:
    if features is None:
        return FEATURE_NAMES
    unknown = [f for f in features if f not in FEATURE_NAMES]
    if unknown:
        raise ValueError(f"unknown feature names: {unknown}")
    if not features:
        raise ValueError("feature mask keeps no features")
    return tuple(features)


def vector_layout(systems: Sequence[str], features: Sequence[str] | None = None) -> list[str]:
    """Column names of the numeric vector for this system order and mask."""
    kept = set(_check_mask(features))
    cols = [name for name in _SCALAR_LAYOUT if name in kept]
    for s in systems:
        for name in PER_SYSTEM_FEATURES:
            if name in kept:
                cols.append(f"{name}[{s}]")
    return cols


def vectorize(
    fv: FeatureVector, systems: Sequence[str], features: Sequence[str] | None = None
) -> np.ndarray:
    """Order the feature vector numerically: the eight scalars, then one
    (correct_count, correct_ratio) pair per system; masked features are
    dropped column-wise."""
    if set(fv.correct_count) != set(systems) or set(fv.correct_ratio) != set(systems):
        raise ValueError("system ordering mismatch between feature vector and systems list")
    kept = set(_check_mask(features))
    values = []
    scalars = {
        "surface_word_count": fv.surface_word_count,
        "surface_frequency": fv.surface_frequency,
        "surface_doc_frequency": fv.surface_doc_frequency,
        "candidate_count": fv.candidate_count,
        "position_ratio": fv.position_ratio,
        "sentence_length": fv.sentence_length,
        "doc_word_count": fv.doc_word_count,
        "doc_entity_count": fv.doc_entity_count,
    }
    for name in _SCALAR_LAYOUT:
        if name in kept:
            values.append(float(scalars[name]))
    for s in systems:
        if "correct_count" in kept:
            values.append(float(fv.correct_count[s]))
        if "correct_ratio" in kept:
            values.append(float(fv.correct_ratio[s]))
    if not values:
        raise ValueError("feature mask produced an empty vector")
    return np.asarray(values, dtype=np.float64)


class Featurizer:
    """Binds corpus index, candidate dictionary, training stats, system order
    and an optional feature mask into a single group → vector callable."""

    def __init__(
        self,
        corpus_index: CorpusIndex,
        candidates: CandidateDictionary,
        stats: SystemTrainingStats,
        systems: Sequence[str],
        features: Sequence[str] | None = None,
    ) -> None:
        self.corpus_index = corpus_index
        self.candidates = candidates
        self.stats = stats
        self.systems = tuple(systems)
        self.features = _check_mask(features)

    @property
    def dim(self) -> int:
        return len(vector_layout(self.systems, self.features))

    def extract(self, group: MentionGroup) -> FeatureVector:
        return extract_features(group, self.corpus_index, self.candidates, self.stats, self.systems)

    def vector(self, group: MentionGroup) -> np.ndarray:
        return vectorize(self.extract(group), self.systems, self.features)

    def matrix(self, groups: Sequence[MentionGroup]) -> np.ndarray:
        if not groups:
            return np.empty((0, self.dim), dtype=np.float64)
        return np.stack([self.vector(g) for g in groups])
