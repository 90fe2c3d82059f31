"""Corpus data model and JSON-Lines I/O for documents, annotations and ground truth.

File formats (all UTF-8, one JSON object per line, unknown fields ignored):

* documents:   ``{"id": str, "text": str}``
* annotations: ``{"doc": str, "start": int, "surface": str, "entity": str|null}``

System outputs and ground truth share the annotation format; a null entity is
only permitted in ground-truth files (the record is dropped at load, as are
the literal entity values ``NULL`` and ``OOKB``).
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence
from urllib.parse import unquote


class LoadError(ValueError):
    """An input file failed validation; the message names the offending record."""


_WS_RUN = re.compile(r"\s+")
# "http(s)://host/wiki/Title" or "host/resource/Title" style KB URIs; the
# scheme-less form requires a dotted host so entity names containing slashes
# (e.g. "AC/DC") are never mistaken for URIs.
_KB_PREFIX = re.compile(r"^(?:https?://[^/\s]+|[\w.-]+\.[A-Za-z]{2,})/(?:wiki|resource)/")


def normalize_whitespace(text: str) -> str:
    """Collapse every whitespace run to a single space."""
    return _WS_RUN.sub(" ", text)


def normalize_surface(surface: str) -> str:
    """Normalization used for surface-form lookups: collapse whitespace, strip, lower-case."""
    return normalize_whitespace(surface).strip().lower()


def canonicalize_entity(raw: str) -> str:
    """Reduce an entity reference to its canonical knowledge-base title form.

    Strips recognized KB URI prefixes, percent-decodes, maps underscores to
    spaces, collapses whitespace and upper-cases the first character.  The
    prefix-strip and percent-decode are iterated to a fixed point so the
    function is idempotent.
    """
    value = raw
    for _ in range(16):
        stripped = _KB_PREFIX.sub("", value, count=1)
        decoded = unquote(stripped)
        if decoded == value:
            break
        value = decoded
    value = normalize_whitespace(value.replace("_", " ")).strip()
    if not value:
        raise LoadError(f"entity {raw!r} is empty after canonicalization")
    return value[0].upper() + value[1:]


@dataclass(frozen=True, slots=True)
class Document:
    id: str
    text: str


@dataclass(frozen=True, slots=True)
class Mention:
    """An entity occurrence: document, surface form and 0-based character offset."""

    doc_id: str
    surface: str
    position: int

    @property
    def end(self) -> int:
        return self.position + len(self.surface)

    def key(self) -> tuple[str, int, str]:
        """Identity triple used for exact alignment (surface whitespace-normalized)."""
        return (self.doc_id, self.position, normalize_whitespace(self.surface))


@dataclass(frozen=True, slots=True)
class EntityAnnotation:
    mention: Mention
    entity: str


@dataclass(frozen=True, slots=True)
class AnnotationSet:
    """All annotations produced by one EL system on one corpus."""

    system_id: str
    annotations: tuple[EntityAnnotation, ...]


@dataclass(frozen=True, slots=True)
class GroundTruth:
    annotations: tuple[EntityAnnotation, ...]


def doc_map(corpus: Iterable[Document]) -> dict[str, Document]:
    return {d.id: d for d in corpus}


def _read_jsonl(path: str | Path) -> Iterator[tuple[int, dict]]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise LoadError(f"{path}:{lineno}: invalid JSON ({exc})") from exc
            if not isinstance(obj, dict):
                raise LoadError(f"{path}:{lineno}: expected a JSON object")
            yield lineno, obj


def load_corpus(path: str | Path) -> list[Document]:
    """Load documents from JSON Lines; ids must be unique and texts nonempty."""
    documents: list[Document] = []
    seen: set[str] = set()
    for lineno, obj in _read_jsonl(path):
        doc_id = obj.get("id")
        text = obj.get("text")
        if not isinstance(doc_id, str) or not doc_id:
            raise LoadError(f"{path}:{lineno}: missing or empty document id")
        if not isinstance(text, str) or len(text) < 1:
            raise LoadError(f"{path}:{lineno}: document {doc_id!r} has empty text")
        if doc_id in seen:
            raise LoadError(f"{path}:{lineno}: duplicate document id {doc_id!r}")
        seen.add(doc_id)
        documents.append(Document(id=doc_id, text=text))
    return documents


def _parse_mention(obj: dict, docs: Mapping[str, Document], path, lineno) -> Mention:
    doc_id = obj.get("doc")
    start = obj.get("start")
    surface = obj.get("surface")
    if not isinstance(doc_id, str) or not isinstance(surface, str) or not isinstance(start, int):
        raise LoadError(f"{path}:{lineno}: malformed record (need doc:str, start:int, surface:str)")
    if not surface:
        raise LoadError(f"{path}:{lineno}: empty surface form")
    doc = docs.get(doc_id)
    if doc is None:
        raise LoadError(f"{path}:{lineno}: unknown document id {doc_id!r}")
    if start < 0 or start > len(doc.text) - len(surface):
        raise LoadError(
            f"{path}:{lineno}: position {start} out of range for surface "
            f"{surface!r} in document {doc_id!r}"
        )
    snippet = doc.text[start : start + len(surface)]
    if normalize_whitespace(snippet) != normalize_whitespace(surface):
        raise LoadError(
            f"{path}:{lineno}: surface {surface!r} does not match document text "
            f"{snippet!r} at position {start} in {doc_id!r}"
        )
    return Mention(doc_id=doc_id, surface=surface, position=start)


def _load_annotations(
    path: str | Path,
    corpus: Sequence[Document] | Mapping[str, Document],
    allow_null: bool,
) -> list[EntityAnnotation]:
    docs = corpus if isinstance(corpus, Mapping) else doc_map(corpus)
    annotations: list[EntityAnnotation] = []
    seen: set[tuple[str, int, str]] = set()
    for lineno, obj in _read_jsonl(path):
        raw_entity = obj.get("entity")
        if raw_entity is None:
            if not allow_null:
                raise LoadError(f"{path}:{lineno}: null entity only permitted in ground-truth files")
            continue
        if not isinstance(raw_entity, str):
            raise LoadError(f"{path}:{lineno}: entity must be a string or null")
        if allow_null and raw_entity in ("NULL", "OOKB"):
            continue
        mention = _parse_mention(obj, docs, path, lineno)
        triple = (mention.doc_id, mention.position, mention.surface)
        if triple in seen:
            raise LoadError(f"{path}:{lineno}: duplicate annotation for mention {triple}")
        seen.add(triple)
        try:
            entity = canonicalize_entity(raw_entity)
        except LoadError as exc:
            raise LoadError(f"{path}:{lineno}: {exc}") from exc
        annotations.append(EntityAnnotation(mention=mention, entity=entity))
    return annotations


def load_annotation_set(
    path: str | Path,
    system_id: str,
    corpus: Sequence[Document] | Mapping[str, Document],
) -> AnnotationSet:
    """Load one system's annotations, validating every mention against the corpus."""
    return AnnotationSet(
        system_id=system_id,
        annotations=tuple(_load_annotations(path, corpus, allow_null=False)),
    )


def load_ground_truth(
    path: str | Path,
    corpus: Sequence[Document] | Mapping[str, Document],
) -> GroundTruth:
    """Load ground truth; null/NULL/OOKB entries are dropped at load."""
    return GroundTruth(annotations=tuple(_load_annotations(path, corpus, allow_null=True)))


def write_documents(path: str | Path, documents: Iterable[Document]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for doc in documents:
            fh.write(json.dumps({"id": doc.id, "text": doc.text}, ensure_ascii=False) + "\n")


def write_annotations(
    path: str | Path,
    annotations: Iterable[EntityAnnotation],
    extras: Iterable[Mapping[str, object]] | None = None,
) -> None:
    """Write annotations in the shared JSON-Lines format.

    ``extras`` supplies additional per-record fields (e.g. provenance); readers
    ignore unknown fields, so decorated files stay loadable.
    """
    extra_iter = iter(extras) if extras is not None else None
    with open(path, "w", encoding="utf-8") as fh:
        for ann in annotations:
            record: dict[str, object] = {
                "doc": ann.mention.doc_id,
                "start": ann.mention.position,
                "surface": ann.mention.surface,
                "entity": ann.entity,
            }
            if extra_iter is not None:
                record.update(next(extra_iter))
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")
