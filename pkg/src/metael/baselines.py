"""Reference combination strategies over aligned mention groups.

Each policy picks at most one (entity, providing system) per group.  Random
choices use a per-group generator derived from (seed, doc id, position), so
results never depend on the order groups are processed in.

Draw protocol for ``random`` and ``majority_random`` (fixed, so independent
reimplementations can replay it): one draw for a plurality tie over the
sorted tied entities, then one draw for the provider over the sorted
supporters of the chosen entity; ``random`` draws once over the sorted
present systems.
"""

from __future__ import annotations

import hashlib
import random
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

from metael.alignment import MentionGroup
from metael.corpus import EntityAnnotation
from metael.features import SystemTrainingStats
from metael.pipeline import Provenance, UnifiedAnnotationSet

__all__ = ["BASELINE_KINDS", "BaselinePolicy", "apply_baseline", "group_rng"]

BASELINE_KINDS = (
    "random",
    "best_system",
    "majority_random",
    "majority_best",
    "weighted_voting",
    "weighted_voting_all",
    "upper_bound",
)

_PRIORLESS = ("random", "upper_bound")
_VOTE_AGGREGATES = ("sum", "mean")


@dataclass(frozen=True)
class BaselinePolicy:
    kind: str
    priors: SystemTrainingStats | None = None
    seed: int = 0
    vote_aggregate: str = "sum"

    def __post_init__(self) -> None:
        if self.kind not in BASELINE_KINDS:
            raise ValueError(f"unknown baseline kind {self.kind!r}")
        if self.priors is None and self.kind not in _PRIORLESS:
            raise ValueError(f"baseline {self.kind!r} needs training priors")
        if self.vote_aggregate not in _VOTE_AGGREGATES:
            raise ValueError(f"vote_aggregate must be one of {_VOTE_AGGREGATES}")


def group_rng(seed: int, group: MentionGroup) -> random.Random:
    """Seeded generator unique to (seed, doc, position); order-independent."""
    key = f"{seed}|{group.mention.doc_id}|{group.mention.position}".encode("utf-8")
    digest = hashlib.blake2b(key, digest_size=8).digest()
    return random.Random(int.from_bytes(digest, "big"))


def _ranked_best(systems, f1_by_system) -> str:
    return min(systems, key=lambda s: (-f1_by_system[s], s))


def _plurality_winners(group: MentionGroup, present: Sequence[str]) -> list[str]:
    counts = Counter(group.annotations[s].entity for s in present)
    top = max(counts.values())
    return sorted(e for e, c in counts.items() if c == top)


def _supporters(group: MentionGroup, present: Sequence[str], entity: str) -> list[str]:
    return sorted(s for s in present if group.annotations[s].entity == entity)


def _select_random(group, present, rng):
    provider = rng.choice(sorted(present))
    return group.annotations[provider].entity, provider


def _select_best_system(group, present, priors):
    provider = _ranked_best(present, priors.overall_f1)
    return group.annotations[provider].entity, provider


def _select_majority_random(group, present, rng):
    winners = _plurality_winners(group, present)
    entity = winners[0] if len(winners) == 1 else rng.choice(winners)
    provider = rng.choice(_supporters(group, present, entity))
    return entity, provider


def _select_majority_best(group, present, priors):
    # ties are settled by the strongest supporter of any tied entity, so the
    # emitted entity always keeps a plurality vote count
    winners = set(_plurality_winners(group, present))
    candidates = [s for s in present if group.annotations[s].entity in winners]
    provider = _ranked_best(candidates, priors.overall_f1)
    return group.annotations[provider].entity, provider


def _select_weighted(group, present, priors, aggregate, filtered):
    votes: dict[str, list[float]] = {}
    for s in present:
        votes.setdefault(group.annotations[s].entity, []).append(priors.overall_precision[s])
    if aggregate == "sum":
        scores = {e: sum(ws) for e, ws in votes.items()}
    else:
        scores = {e: sum(ws) / len(ws) for e, ws in votes.items()}
    best = max(scores.values())
    if filtered and best < max(priors.overall_precision.values()):
        return None
    entity = min(e for e, score in scores.items() if score == best)
    return entity, _supporters(group, present, entity)[0]


def _select_upper_bound(group, present):
    matching = _supporters(group, present, group.gold_entity)
    if not matching:
        return None
    return group.gold_entity, matching[0]


def apply_baseline(policy: BaselinePolicy, groups: Sequence[MentionGroup]) -> UnifiedAnnotationSet:
    """Run the policy over every group; provenance records the policy kind."""
    if policy.kind == "upper_bound" and not any(g.gold_entity is not None for g in groups):
        raise ValueError("upper_bound requires gold-bearing groups")

    annotations = []
    provenance = []
    for group in groups:
        present = sorted(group.annotations)
        if not present:
            continue
        if policy.kind == "random":
            selected = _select_random(group, present, group_rng(policy.seed, group))
        elif policy.kind == "best_system":
            selected = _select_best_system(group, present, policy.priors)
        elif policy.kind == "majority_random":
            selected = _select_majority_random(group, present, group_rng(policy.seed, group))
        elif policy.kind == "majority_best":
            selected = _select_majority_best(group, present, policy.priors)
        elif policy.kind == "weighted_voting":
            selected = _select_weighted(group, present, policy.priors, policy.vote_aggregate, True)
        elif policy.kind == "weighted_voting_all":
            selected = _select_weighted(group, present, policy.priors, policy.vote_aggregate, False)
        else:
            selected = None if group.gold_entity is None else _select_upper_bound(group, present)
        if selected is None:
            continue
        entity, provider = selected
        annotations.append(EntityAnnotation(mention=group.mention, entity=entity))
        provenance.append(Provenance(system_id=provider, path=policy.kind))
    return UnifiedAnnotationSet(tuple(annotations), tuple(provenance))
