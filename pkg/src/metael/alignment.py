"""Alignment of annotations from multiple systems into per-mention groups.

Two matching modes:

* ``strong``: annotations belong to the same group iff they share document,
  start offset and whitespace-normalized surface form.
* ``overlap``: per document, groups are the connected components of character
  span overlap (touching spans do not overlap).

A group's representative mention is the ground-truth mention when the group
contains one, otherwise the member with the longest surface (ties: smallest
position, then lexicographic surface).  Groups come back sorted by
(document, position, surface).  Mentions present only in the ground truth do
not form groups; recall against them is handled by the evaluation layer.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from metael.corpus import AnnotationSet, EntityAnnotation, GroundTruth, Mention

__all__ = [
    "MentionGroup",
    "AgreementRow",
    "AgreementStatistics",
    "build_mention_groups",
    "agreement_statistics",
    "render_agreement_table",
]


@dataclass(frozen=True)
class MentionGroup:
    """All systems' annotations for one mention, plus the gold entity if known."""

    mention: Mention
    annotations: Mapping[str, EntityAnnotation] = field(default_factory=dict)
    gold_entity: str | None = None

    @property
    def recognised_by(self) -> int:
        return len(self.annotations)

    @property
    def entities(self) -> tuple[str, ...]:
        """Distinct proposed entities, sorted."""
        return tuple(sorted({a.entity for a in self.annotations.values()}))

    @property
    def unanimous(self) -> bool:
        return len(self.entities) == 1


def _mention_rank(m: Mention) -> tuple[int, int, str]:
    return (-len(m.surface), m.position, m.surface)


def _strong_groups(
    systems: Sequence[AnnotationSet], ground_truth: GroundTruth | None
) -> list[MentionGroup]:
    members: dict[tuple, dict[str, EntityAnnotation]] = {}
    reps: dict[tuple, Mention] = {}
    for aset in systems:
        for ann in aset.annotations:
            key = ann.mention.key()
            members.setdefault(key, {})[aset.system_id] = ann
            reps.setdefault(key, ann.mention)
    gold: dict[tuple, str] = {}
    if ground_truth is not None:
        for ann in ground_truth.annotations:
            key = ann.mention.key()
            gold.setdefault(key, ann.entity)
            reps[key] = ann.mention
            # gold mentions no system recognised stay as zero-recogniser groups
            members.setdefault(key, {})
    return [
        MentionGroup(mention=reps[key], annotations=members[key], gold_entity=gold.get(key))
        for key in members
    ]


def _overlap_groups(
    systems: Sequence[AnnotationSet], ground_truth: GroundTruth | None
) -> list[MentionGroup]:
    # items: (mention, system_id or None for gold, annotation)
    by_doc: dict[str, list[tuple[Mention, str | None, EntityAnnotation]]] = {}
    for aset in systems:
        for ann in aset.annotations:
            by_doc.setdefault(ann.mention.doc_id, []).append((ann.mention, aset.system_id, ann))
    if ground_truth is not None:
        for ann in ground_truth.annotations:
            by_doc.setdefault(ann.mention.doc_id, []).append((ann.mention, None, ann))

    system_order = {aset.system_id: i for i, aset in enumerate(systems)}
    groups: list[MentionGroup] = []
    for items in by_doc.values():
        items.sort(key=lambda it: (it[0].position, it[0].end, it[1] is not None))
        component: list[tuple[Mention, str | None, EntityAnnotation]] = []
        max_end = -1
        for item in items:
            if component and item[0].position >= max_end:
                groups.append(_finish_component(component, system_order))
                component = []
                max_end = -1
            component.append(item)
            max_end = max(max_end, item[0].end)
        if component:
            groups.append(_finish_component(component, system_order))
    return groups


def _finish_component(component, system_order) -> MentionGroup:
    golds = [it for it in component if it[1] is None]
    per_system: dict[str, EntityAnnotation] = {}
    for mention, sys_id, ann in component:
        if sys_id is None:
            continue
        prev = per_system.get(sys_id)
        if prev is None or _mention_rank(mention) < _mention_rank(prev.mention):
            per_system[sys_id] = ann
    if not per_system:
        # gold-only component: keep it as a zero-recogniser group
        return MentionGroup(mention=golds[0][0], gold_entity=golds[0][2].entity)
    per_system = dict(sorted(per_system.items(), key=lambda kv: system_order[kv[0]]))
    if golds:
        rep = golds[0][0]
        gold_entity = golds[0][2].entity
    else:
        rep = min((ann.mention for ann in per_system.values()), key=_mention_rank)
        gold_entity = None
    return MentionGroup(mention=rep, annotations=per_system, gold_entity=gold_entity)


def build_mention_groups(
    systems: Sequence[AnnotationSet],
    ground_truth: GroundTruth | None = None,
    mode: str = "strong",
) -> list[MentionGroup]:
    """Align the systems' annotations into one group per mention."""
    if mode == "strong":
        groups = _strong_groups(systems, ground_truth)
    elif mode == "overlap":
        groups = _overlap_groups(systems, ground_truth)
    else:
        raise ValueError(f"unknown matching mode {mode!r} (expected 'strong' or 'overlap')")
    groups.sort(key=lambda g: (g.mention.doc_id, g.mention.position, g.mention.surface))
    return groups


@dataclass(frozen=True)
class AgreementRow:
    recognised_by: int
    groups: int
    share_of_total: float
    unanimous: int
    unanimous_share: float


@dataclass(frozen=True)
class AgreementStatistics:
    n_systems: int
    total_groups: int
    with_gold: int
    rows: tuple[AgreementRow, ...]

    def to_dict(self) -> dict:
        return {
            "n_systems": self.n_systems,
            "total_groups": self.total_groups,
            "with_gold": self.with_gold,
            "rows": [
                {
                    "recognised_by": r.recognised_by,
                    "groups": r.groups,
                    "share_of_total": r.share_of_total,
                    "unanimous": r.unanimous,
                    "unanimous_share": r.unanimous_share,
                }
                for r in self.rows
            ],
        }


def agreement_statistics(groups: Iterable[MentionGroup], n_systems: int) -> AgreementStatistics:
    """How often the systems recognise the same mention and propose the same entity."""
    groups = list(groups)
    total = len(groups)
    rows = []
    for r in range(n_systems, -1, -1):
        sel = [g for g in groups if g.recognised_by == r]
        unanimous = sum(1 for g in sel if g.unanimous)
        rows.append(
            AgreementRow(
                recognised_by=r,
                groups=len(sel),
                share_of_total=len(sel) / total if total else 0.0,
                unanimous=unanimous,
                unanimous_share=unanimous / len(sel) if sel else 0.0,
            )
        )
    with_gold = sum(1 for g in groups if g.gold_entity is not None)
    return AgreementStatistics(
        n_systems=n_systems, total_groups=total, with_gold=with_gold, rows=tuple(rows)
    )


def render_agreement_table(stats: AgreementStatistics) -> str:
    lines = [f"{'recognised':>10}  {'groups':>8}  {'share':>7}  {'unanimous':>9}  {'share':>7}"]
    for row in stats.rows:
        lines.append(
            f"{row.recognised_by}/{stats.n_systems:<8}  {row.groups:>8}  "
            f"{row.share_of_total:>6.1%}  {row.unanimous:>9}  {row.unanimous_share:>6.1%}"
        )
    lines.append(f"{'total':>10}  {stats.total_groups:>8}  {'':>7}  {stats.with_gold:>9} with gold")
    return "\n".join(lines)
