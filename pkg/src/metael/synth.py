"""Seeded synthetic corpus generator for self-contained experiments.

Documents are strings of invented entity words (3-4 syllables, capitalized,
some two-word surfaces) separated by short lowercase fillers, with one theme
entity planted several times per document.  Each simulated system recognises
a fraction of the gold mentions and answers correctly with a probability that
depends on its regime:

- ``multiword``: accurate on surfaces of two or more words
- ``early``: accurate on mentions in the first 30% of the document
- ``frequent``: accurate on surfaces planted at least twice in the document

The regimes line up with extractable features, so a selector can learn which
system to trust per mention.  All output is a pure function of the seed and
parameters.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from random import Random
from typing import Sequence

from metael.corpus import Document, EntityAnnotation, Mention, write_annotations, write_documents
from metael.features import CandidateDictionary

__all__ = ["DEFAULT_PROFILES", "REGIMES", "SystemProfile", "generate"]

REGIMES = ("multiword", "early", "frequent")

_EARLY_CUTOFF = 0.3

_SYLLABLES = (
    "ba", "be", "bi", "bo", "bu", "da", "de", "di", "do", "du",
    "ka", "ke", "ki", "ko", "ku", "la", "le", "li", "lo", "lu",
    "ma", "me", "mi", "mo", "mu", "na", "ne", "ni", "no", "nu",
    "ra", "re", "ri", "ro", "ru", "sa", "se", "si", "so", "su",
    "ta", "te", "ti", "to", "tu", "va", "ve", "vi", "vo", "vu",
    "za", "ze", "zi", "zo", "zu",
)

_FILLERS = ("im", "ox", "ek", "ul", "ors", "ath", "um", "ist")

_TERMINATORS = ".!?;"


@dataclass(frozen=True)
class SystemProfile:
    """Behaviour of one simulated system.

    ``recognition`` is the chance of annotating a gold mention at all;
    ``strong_accuracy``/``weak_accuracy`` apply inside/outside the system's
    regime; ``spurious_rate`` adds annotations on filler words.
    """

    system_id: str
    regime: str
    recognition: float = 0.75
    strong_accuracy: float = 0.95
    weak_accuracy: float = 0.45
    spurious_rate: float = 0.0

    def __post_init__(self) -> None:
        if not self.system_id:
            raise ValueError("system_id must be nonempty")
        if self.regime not in REGIMES:
            raise ValueError(f"unknown regime {self.regime!r}")
        for name in ("recognition", "strong_accuracy", "weak_accuracy", "spurious_rate"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be within [0, 1], got {value}")


DEFAULT_PROFILES = (
    SystemProfile(system_id="alpha", regime="multiword", recognition=0.8),
    SystemProfile(system_id="beta", regime="early", recognition=0.75),
    SystemProfile(system_id="gamma", regime="frequent", recognition=0.7),
)


def _make_entities(rng: Random, vocab_size: int, two_word_share: float = 0.35) -> list[str]:
    """Invent entity surfaces; no surface is a substring of another, so
    corpus frequency counts stay exact."""
    words: list[str] = []

    def fresh_word() -> str:
        while True:
            w = "".join(rng.choice(_SYLLABLES) for _ in range(rng.randint(3, 4)))
            if any(w in u or u in w for u in words):
                continue
            words.append(w)
            return w.capitalize()

    entities = []
    for _ in range(vocab_size):
        if rng.random() < two_word_share:
            entities.append(f"{fresh_word()} {fresh_word()}")
        else:
            entities.append(fresh_word())
    return entities


def _build_document(rng: Random, doc_id: str, entities, slots_range, theme_range):
    n_slots = rng.randint(*slots_range)
    theme = rng.choice(entities)
    n_theme = min(rng.randint(*theme_range), n_slots)
    slots = [theme] * n_theme + [rng.choice(entities) for _ in range(n_slots - n_theme)]
    rng.shuffle(slots)

    parts: list[str] = []
    pos = 0
    planted: list[tuple[str, int]] = []
    fillers: list[tuple[str, int]] = []
    for i, entity in enumerate(slots):
        for _ in range(rng.randint(1, 3)):
            word = rng.choice(_FILLERS)
            fillers.append((word, pos))
            parts.append(word + " ")
            pos += len(word) + 1
        planted.append((entity, pos))
        parts.append(entity)
        pos += len(entity)
        last = i == len(slots) - 1
        if last or rng.random() < 0.45:
            parts.append(rng.choice(_TERMINATORS))
            pos += 1
        if not last:
            parts.append(" ")
            pos += 1
    return Document(id=doc_id, text="".join(parts)), planted, fillers


def _regime_active(regime: str, text_len: int, surface: str, position: int, plant_counts) -> bool:
    if regime == "multiword":
        return len(surface.split()) >= 2
    if regime == "early":
        return position / text_len < _EARLY_CUTOFF
    return plant_counts[surface] >= 2


def _simulate_system(rng: Random, profile: SystemProfile, doc, planted, fillers, entities):
    plant_counts = Counter(surface for surface, _ in planted)
    annotations = []
    for surface, position in planted:
        if rng.random() >= profile.recognition:
            continue
        active = _regime_active(profile.regime, len(doc.text), surface, position, plant_counts)
        accuracy = profile.strong_accuracy if active else profile.weak_accuracy
        if rng.random() < accuracy:
            entity = surface
        else:
            entity = rng.choice([e for e in entities if e != surface])
        mention = Mention(doc_id=doc.id, surface=surface, position=position)
        annotations.append(EntityAnnotation(mention=mention, entity=entity))
    if profile.spurious_rate > 0.0:
        for word, position in fillers:
            if rng.random() < profile.spurious_rate:
                mention = Mention(doc_id=doc.id, surface=word, position=position)
                annotations.append(EntityAnnotation(mention=mention, entity=rng.choice(entities)))
    return annotations


def generate(
    out_dir: str | Path,
    n_docs: int = 200,
    vocab_size: int = 40,
    profiles: Sequence[SystemProfile] = DEFAULT_PROFILES,
    seed: int = 0,
    mention_slots: tuple[int, int] = (4, 8),
    theme_repeats: tuple[int, int] = (2, 4),
) -> dict:
    """Generate a train/test corpus with ground truth, per-system annotation
    files, a candidate dictionary, and a ready-to-run config.json.

    Returns the config dict that was written.  Entity identifiers equal their
    surfaces, so gold checking needs no external knowledge base.
    """
    if n_docs < 2:
        raise ValueError("n_docs must be at least 2 (one per split)")
    if vocab_size < 2:
        raise ValueError("vocab_size must be at least 2")
    if not profiles:
        raise ValueError("at least one system profile required")
    ids = [p.system_id for p in profiles]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate system_id in profiles")

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = Random(seed)

    entities = _make_entities(rng, vocab_size)
    candidates = CandidateDictionary({surface: rng.randint(1, 30) for surface in entities})

    documents = []
    gold: list[EntityAnnotation] = []
    per_system: dict[str, list[EntityAnnotation]] = {p.system_id: [] for p in profiles}
    for d in range(n_docs):
        doc, planted, fillers = _build_document(
            rng, f"doc{d:05d}", entities, mention_slots, theme_repeats
        )
        documents.append(doc)
        for surface, position in planted:
            mention = Mention(doc_id=doc.id, surface=surface, position=position)
            gold.append(EntityAnnotation(mention=mention, entity=surface))
        for profile in profiles:
            per_system[profile.system_id].extend(
                _simulate_system(rng, profile, doc, planted, fillers, entities)
            )

    n_train = n_docs // 2
    train_ids = {doc.id for doc in documents[:n_train]}

    def split(annotations):
        train = [a for a in annotations if a.mention.doc_id in train_ids]
        test = [a for a in annotations if a.mention.doc_id not in train_ids]
        return train, test

    write_documents(out / "documents_train.jsonl", documents[:n_train])
    write_documents(out / "documents_test.jsonl", documents[n_train:])
    gt_train, gt_test = split(gold)
    write_annotations(out / "gt_train.jsonl", gt_train)
    write_annotations(out / "gt_test.jsonl", gt_test)
    system_files = {"train": {}, "test": {}}
    for profile in profiles:
        sys_train, sys_test = split(per_system[profile.system_id])
        train_name = f"system_{profile.system_id}_train.jsonl"
        test_name = f"system_{profile.system_id}_test.jsonl"
        write_annotations(out / train_name, sys_train)
        write_annotations(out / test_name, sys_test)
        system_files["train"][profile.system_id] = train_name
        system_files["test"][profile.system_id] = test_name
    candidates.write_tsv(out / "candidates.tsv")

    config = {
        "train": {
            "documents": "documents_train.jsonl",
            "ground_truth": "gt_train.jsonl",
            "systems": system_files["train"],
        },
        "test": {
            "documents": "documents_test.jsonl",
            "ground_truth": "gt_test.jsonl",
            "systems": system_files["test"],
        },
        "systems_order": ids,
        "alignment_mode": "strong",
        "candidates": "candidates.tsv",
        "params": {"seed": seed},
        "output_dir": "out",
    }
    (out / "config.json").write_text(json.dumps(config, indent=2) + "\n", encoding="utf-8")
    return config
