"""Scoring, significance testing, and the feature-ablation protocol.

Covers micro precision/recall/F1 of unified annotation sets against ground
truth, multi-label and binary classification reports for the selection task,
a paired t-test over contiguous ground-truth splits, and the 17-row feature
ablation table.
"""

from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import scipy.stats

from metael.corpus import EntityAnnotation, GroundTruth

__all__ = [
    "PrfScore",
    "MultiLabelReport",
    "BinaryReport",
    "SignificanceResult",
    "AblationRow",
    "prf_from_counts",
    "el_prf",
    "multilabel_metrics",
    "binary_metrics",
    "t_from_differences",
    "paired_t_test",
    "split_ground_truth",
    "default_ablation_masks",
    "ablation_run",
    "render_prf_table",
    "render_ablation_table",
    "rows_to_csv",
]


@dataclass(frozen=True)
class PrfScore:
    precision: float
    recall: float
    f1: float
    correct: int
    recognised: int
    gt_total: int

    def to_dict(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "correct": self.correct,
            "recognised": self.recognised,
            "gt_total": self.gt_total,
        }


def prf_from_counts(correct: int, recognised: int, gt_total: int) -> PrfScore:
    """Micro precision/recall/F1; empty denominators score 0 by convention."""
    precision = correct / recognised if recognised else 0.0
    recall = correct / gt_total if gt_total else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return PrfScore(precision, recall, f1, correct, recognised, gt_total)


def _annotations_of(output) -> Sequence[EntityAnnotation]:
    return getattr(output, "annotations", output)


def _match_annotations(
    annotations: Sequence[EntityAnnotation], gold: Sequence[EntityAnnotation], mode: str
) -> list[int | None]:
    """For each output annotation, the index of the gold it correctly matches.

    ``strong``: same mention key and equal entity.  ``overlap``: entity equal
    and character spans overlap; each gold annotation is creditable once
    (greedy in document order).  Incorrect or unmatched annotations map to
    None.
    """
    if mode == "strong":
        by_key = {g.mention.key(): i for i, g in enumerate(gold)}
        out: list[int | None] = []
        for ann in annotations:
            gi = by_key.get(ann.mention.key())
            out.append(gi if gi is not None and gold[gi].entity == ann.entity else None)
        return out
    if mode != "overlap":
        raise ValueError(f"unknown matching mode {mode!r} (expected 'strong' or 'overlap')")

    gold_by_doc: dict[str, list[int]] = {}
    for i, g in enumerate(gold):
        gold_by_doc.setdefault(g.mention.doc_id, []).append(i)
    for lst in gold_by_doc.values():
        lst.sort(key=lambda i: gold[i].mention.position)
    consumed: set[int] = set()
    out = []
    order = sorted(range(len(annotations)), key=lambda i: annotations[i].mention.key())
    matched: dict[int, int] = {}
    for ai in order:
        ann = annotations[ai]
        for gi in gold_by_doc.get(ann.mention.doc_id, ()):
            if gi in consumed:
                continue
            g = gold[gi]
            if (
                ann.mention.position < g.mention.end
                and g.mention.position < ann.mention.end
                and g.entity == ann.entity
            ):
                consumed.add(gi)
                matched[ai] = gi
                break
    for i in range(len(annotations)):
        out.append(matched.get(i))
    return out


def el_prf(output, gt: GroundTruth, mode: str = "strong") -> PrfScore:
    """Score a unified annotation set (or plain annotation list) against gold."""
    annotations = _annotations_of(output)
    gold = list(gt.annotations)
    matches = _match_annotations(annotations, gold, mode)
    correct = sum(1 for m in matches if m is not None)
    return prf_from_counts(correct, len(annotations), len(gold))


@dataclass(frozen=True)
class MultiLabelReport:
    jaccard: float
    hamming_loss: float
    exact_match: float
    per_class: Mapping[str, PrfScore]
    real_prediction_accuracy: float

    def to_dict(self) -> dict:
        return {
            "jaccard": self.jaccard,
            "hamming_loss": self.hamming_loss,
            "exact_match": self.exact_match,
            "per_class": {k: v.to_dict() for k, v in self.per_class.items()},
            "real_prediction_accuracy": self.real_prediction_accuracy,
        }


def multilabel_metrics(
    predicted: Sequence[frozenset | set],
    truth: Sequence[frozenset | set],
    n_labels: int,
    chosen: Sequence[str | None] | None = None,
    groups: Sequence | None = None,
) -> MultiLabelReport:
    """Instance-averaged multi-label metrics over aligned label-set lists.

    An instance with both sets empty counts as perfectly predicted (Jaccard 1).
    ``chosen``/``groups`` feed real prediction accuracy: among instances where
    a system was chosen, the fraction whose chosen system proposed the group's
    gold entity.  With no chosen instances the accuracy reports 0.
    """
    if len(predicted) != len(truth):
        raise ValueError(f"length mismatch: {len(predicted)} predictions vs {len(truth)} truths")
    if chosen is not None and groups is not None and not len(chosen) == len(groups) == len(truth):
        raise ValueError("chosen/groups must align with the instance lists")

    jaccard_sum = 0.0
    hamming_sum = 0.0
    exact = 0
    for p, t in zip(predicted, truth):
        p, t = set(p), set(t)
        union = p | t
        jaccard_sum += len(p & t) / len(union) if union else 1.0
        hamming_sum += len(p ^ t) / n_labels
        exact += p == t

    n = len(truth)
    labels = sorted({lab for s in predicted for lab in s} | {lab for s in truth for lab in s})
    per_class = {}
    for lab in labels:
        correct = sum(1 for p, t in zip(predicted, truth) if lab in p and lab in t)
        recognised = sum(1 for p in predicted if lab in p)
        gt_total = sum(1 for t in truth if lab in t)
        per_class[lab] = prf_from_counts(correct, recognised, gt_total)

    rpa = 0.0
    if chosen is not None and groups is not None:
        sel = [(c, g) for c, g in zip(chosen, groups) if c is not None]
        if sel:
            hits = sum(
                1
                for c, g in sel
                if c in g.annotations and g.annotations[c].entity == g.gold_entity
            )
            rpa = hits / len(sel)

    return MultiLabelReport(
        jaccard=jaccard_sum / n if n else 0.0,
        hamming_loss=hamming_sum / n if n else 0.0,
        exact_match=exact / n if n else 0.0,
        per_class=per_class,
        real_prediction_accuracy=rpa,
    )


@dataclass(frozen=True)
class BinaryReport:
    true_class: PrfScore
    false_class: PrfScore
    macro_f1: float

    def to_dict(self) -> dict:
        return {
            "true_class": self.true_class.to_dict(),
            "false_class": self.false_class.to_dict(),
            "macro_f1": self.macro_f1,
        }


def binary_metrics(predictions: Sequence[bool], truth: Sequence[bool]) -> BinaryReport:
    """Per-class PRF over the two outcomes plus their unweighted mean F1.

    A class absent from the truth contributes F1 = 0 if it was ever predicted
    and is excluded from the macro average otherwise.
    """
    if len(predictions) != len(truth):
        raise ValueError(f"length mismatch: {len(predictions)} predictions vs {len(truth)} truths")
    if not truth:
        raise ValueError("empty input")
    scores = {}
    f1s = []
    for cls in (True, False):
        correct = sum(1 for p, t in zip(predictions, truth) if p == cls and t == cls)
        recognised = sum(1 for p in predictions if p == cls)
        gt_total = sum(1 for t in truth if t == cls)
        score = prf_from_counts(correct, recognised, gt_total)
        scores[cls] = score
        if gt_total > 0 or recognised > 0:
            f1s.append(score.f1)
    return BinaryReport(
        true_class=scores[True],
        false_class=scores[False],
        macro_f1=sum(f1s) / len(f1s) if f1s else 0.0,
    )


@dataclass(frozen=True)
class SignificanceResult:
    split_scores_a: tuple[float, ...]
    split_scores_b: tuple[float, ...]
    t_statistic: float
    p_value: float
    alpha: float
    degenerate: bool = False

    @property
    def significant(self) -> bool:
        return self.p_value < self.alpha

    def to_dict(self) -> dict:
        return {
            "split_scores_a": list(self.split_scores_a),
            "split_scores_b": list(self.split_scores_b),
            "t_statistic": self.t_statistic,
            "p_value": self.p_value,
            "alpha": self.alpha,
            "degenerate": self.degenerate,
            "significant": self.significant,
        }


def t_from_differences(diffs: Sequence[float]) -> tuple[float, float, bool]:
    """Two-tailed paired t statistic and p-value for a vector of differences.

    Zero variance is degenerate: p = 1 when every difference is 0, else p = 0
    (t reported as signed infinity).
    """
    k = len(diffs)
    if k < 2:
        raise ValueError("need at least two paired scores")
    mean = sum(diffs) / k
    var = sum((d - mean) ** 2 for d in diffs) / (k - 1)
    if var == 0.0:
        if mean == 0.0:
            return 0.0, 1.0, True
        return math.copysign(math.inf, mean), 0.0, True
    t = mean / math.sqrt(var / k)
    p = 2.0 * float(scipy.stats.t.sf(abs(t), k - 1))
    return t, p, False


def split_ground_truth(
    gt: GroundTruth, n_splits: int, shuffle_seed: int | None = None
) -> list[list[EntityAnnotation]]:
    """Partition gold annotations into n_splits contiguous splits of near-equal size.

    Annotations are ordered by (document, position); the remainder is spread
    over the first splits, one extra each.  ``shuffle_seed`` shuffles the
    order first (the default keeps document order).
    """
    ordered = sorted(gt.annotations, key=lambda a: (a.mention.doc_id, a.mention.position))
    if len(ordered) < n_splits:
        raise ValueError(f"{len(ordered)} gold annotations cannot fill {n_splits} splits")
    if shuffle_seed is not None:
        import random

        random.Random(shuffle_seed).shuffle(ordered)
    base, extra = divmod(len(ordered), n_splits)
    splits = []
    start = 0
    for i in range(n_splits):
        size = base + (1 if i < extra else 0)
        splits.append(ordered[start : start + size])
        start += size
    return splits


def _split_scores(
    output, gold_splits: Sequence[Sequence[EntityAnnotation]], mode: str
) -> list[float]:
    annotations = _annotations_of(output)
    flat: list[EntityAnnotation] = []
    split_of: list[int] = []
    for si, split in enumerate(gold_splits):
        for g in split:
            flat.append(g)
            split_of.append(si)
    order = sorted(range(len(flat)), key=lambda i: (flat[i].mention.doc_id, flat[i].mention.position))
    flat = [flat[i] for i in order]
    split_of = [split_of[i] for i in order]
    keys = [(g.mention.doc_id, g.mention.position) for g in flat]

    matches = _match_annotations(annotations, flat, mode)
    correct = [0] * len(gold_splits)
    recognised = [0] * len(gold_splits)
    for ann, gi in zip(annotations, matches):
        if gi is not None:
            si = split_of[gi]
            correct[si] += 1
        else:
            # bin an unmatched annotation with its nearest gold neighbour
            pos = bisect_left(keys, (ann.mention.doc_id, ann.mention.position))
            si = split_of[min(pos, len(keys) - 1)]
        recognised[si] += 1
    return [
        prf_from_counts(correct[i], recognised[i], len(gold_splits[i])).f1
        for i in range(len(gold_splits))
    ]


def paired_t_test(
    output_a,
    output_b,
    gt: GroundTruth,
    n_splits: int = 20,
    alpha: float = 0.05,
    mode: str = "strong",
    shuffle_seed: int | None = None,
) -> SignificanceResult:
    """Two-tailed paired t-test on per-split F1 of two unified annotation sets."""
    gold_splits = split_ground_truth(gt, n_splits, shuffle_seed)
    scores_a = _split_scores(output_a, gold_splits, mode)
    scores_b = _split_scores(output_b, gold_splits, mode)
    diffs = [a - b for a, b in zip(scores_a, scores_b)]
    t, p, degenerate = t_from_differences(diffs)
    return SignificanceResult(
        split_scores_a=tuple(scores_a),
        split_scores_b=tuple(scores_b),
        t_statistic=t,
        p_value=p,
        alpha=alpha,
        degenerate=degenerate,
    )


@dataclass(frozen=True)
class AblationRow:
    name: str
    features: tuple[str, ...]
    score: PrfScore

    def to_dict(self) -> dict:
        return {"name": self.name, "features": list(self.features), "score": self.score.to_dict()}


def default_ablation_masks() -> list[tuple[str, tuple[str, ...]]]:
    """The 17-row protocol: all features, family singles, family pairs, leave-one-out."""
    from metael.features import FEATURE_FAMILIES, FEATURE_NAMES

    surface = FEATURE_FAMILIES["surface"]
    mention = FEATURE_FAMILIES["mention"]
    document = FEATURE_FAMILIES["document"]
    masks: list[tuple[str, tuple[str, ...]]] = [("all features", tuple(FEATURE_NAMES))]
    masks.append(("surface only", surface))
    masks.append(("mention only", mention))
    masks.append(("document only", document))
    masks.append(("surface + mention", surface + mention))
    masks.append(("surface + document", surface + document))
    masks.append(("mention + document", mention + document))
    for name in FEATURE_NAMES:
        masks.append((f"all except {name}", tuple(f for f in FEATURE_NAMES if f != name)))
    return masks


def ablation_run(
    train_groups,
    test_groups,
    systems: Sequence[str],
    cand,
    masks: Sequence[tuple[str, Sequence[str]]] | None = None,
    *,
    train_index,
    test_index,
    test_gt: GroundTruth,
    params=None,
    train_ground_truth: GroundTruth | None = None,
) -> list[AblationRow]:
    """Retrain the LOOSE pipeline once per feature mask and score each run.

    Every retrain uses the same seed (from ``params``) so the all-features row
    reproduces the standard pipeline exactly.
    """
    from metael import pipeline

    if masks is None:
        masks = default_ablation_masks()
    rows = []
    base_config = params if params is not None else pipeline.MetaElConfig()
    for name, mask in masks:
        mask = tuple(mask)
        if not mask:
            raise ValueError(f"ablation mask {name!r} keeps no features")
        config = base_config.with_features(mask)
        model = pipeline.train_metael(
            train_groups,
            systems,
            cand,
            config,
            corpus_index=train_index,
            ground_truth=train_ground_truth,
        )
        output = pipeline.annotate_loose(
            model, test_groups, corpus_index=test_index, candidates=cand
        )
        score = el_prf(output, test_gt, mode=config.alignment_mode)
        rows.append(AblationRow(name=name, features=mask, score=score))
    return rows


def render_prf_table(rows: Sequence[tuple[str, PrfScore]]) -> str:
    width = max((len(name) for name, _ in rows), default=6)
    lines = [f"{'method':<{width}}  {'P':>7}  {'R':>7}  {'F1':>7}"]
    for name, s in rows:
        lines.append(f"{name:<{width}}  {s.precision:>7.1%}  {s.recall:>7.1%}  {s.f1:>7.1%}")
    return "\n".join(lines)


def render_ablation_table(rows: Sequence[AblationRow]) -> str:
    return render_prf_table([(r.name, r.score) for r in rows])


def rows_to_csv(rows: Sequence[tuple[str, PrfScore]]) -> str:
    lines = ["name,precision,recall,f1,correct,recognised,gt_total"]
    for name, s in rows:
        lines.append(
            f"{name},{s.precision:.6f},{s.recall:.6f},{s.f1:.6f},"
            f"{s.correct},{s.recognised},{s.gt_total}"
        )
    return "\n".join(lines) + "\n"
