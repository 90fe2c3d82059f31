"""Command-line front end: stats | train | annotate | evaluate | ablate | ttest | synth.

All commands read a single JSON run configuration (paths resolved relative to
the config file) plus a few flag overrides, and are fully deterministic given
the config and its seeds.  Exit codes: 0 success, 1 validation error, 2 I/O
error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path

from metael.alignment import (
    MentionGroup,
    agreement_statistics,
    build_mention_groups,
    render_agreement_table,
)
from metael.baselines import BASELINE_KINDS, BaselinePolicy, apply_baseline
from metael.corpus import (
    Document,
    GroundTruth,
    LoadError,
    load_annotation_set,
    load_corpus,
    load_ground_truth,
    write_annotations,
)
from metael.evaluation import (
    ablation_run,
    el_prf,
    paired_t_test,
    render_ablation_table,
    render_prf_table,
    rows_to_csv,
)
from metael.features import CandidateDictionary, CorpusIndex, build_training_stats
from metael.pipeline import (
    MetaElConfig,
    MetaElModel,
    annotate_loose,
    annotate_strict,
    train_metael,
)
from metael.synth import DEFAULT_PROFILES, SystemProfile, generate

STRATEGIES = ("loose", "strict") + BASELINE_KINDS

# params keys consumed by baseline strategies rather than the learner config
_BASELINE_PARAM_KEYS = ("vote_aggregate",)


@dataclass(frozen=True)
class SplitPaths:
    documents: Path
    ground_truth: Path | None
    systems: dict[str, Path]


@dataclass(frozen=True)
class RunConfig:
    """One run artifact: corpus paths, system order, learner params, output dir."""

    train: SplitPaths
    test: SplitPaths
    systems_order: tuple[str, ...]
    alignment_mode: str
    candidates: Path | None
    params: dict
    output_dir: Path
    base_dir: Path

    @classmethod
    def from_file(cls, path: str | Path) -> "RunConfig":
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"missing config file: {path}")
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise LoadError(f"{path}: not valid JSON ({exc})") from exc
        if not isinstance(data, dict):
            raise LoadError(f"{path}: config must be a JSON object")
        base = path.parent

        def resolve(rel: str) -> Path:
            return (base / rel).resolve()

        def split(name: str) -> SplitPaths:
            section = data.get(name)
            if not isinstance(section, dict) or "documents" not in section:
                raise LoadError(f"{path}: config section {name!r} needs a 'documents' path")
            gt = section.get("ground_truth")
            systems = section.get("systems", {})
            if not isinstance(systems, dict):
                raise LoadError(f"{path}: {name}.systems must map system id to path")
            return SplitPaths(
                documents=resolve(section["documents"]),
                ground_truth=resolve(gt) if gt else None,
                systems={sys_id: resolve(p) for sys_id, p in systems.items()},
            )

        train = split("train")
        test = split("test")
        order = tuple(data.get("systems_order", ()))
        if not order:
            raise LoadError(f"{path}: config needs a non-empty 'systems_order' list")
        for name, section in (("train", train), ("test", test)):
            if set(section.systems) != set(order):
                raise LoadError(
                    f"{path}: {name}.systems must list exactly the systems in systems_order"
                )
        params = data.get("params", {})
        if not isinstance(params, dict):
            raise LoadError(f"{path}: 'params' must be a JSON object")
        candidates = data.get("candidates")
        return cls(
            train=train,
            test=test,
            systems_order=order,
            alignment_mode=data.get("alignment_mode", "strong"),
            candidates=resolve(candidates) if candidates else None,
            params=dict(params),
            output_dir=resolve(data.get("output_dir", "out")),
            base_dir=base,
        )


def _require(path: Path, kind: str) -> Path:
    if not path.exists():
        raise FileNotFoundError(f"missing {kind} file: {path}")
    return path


@dataclass
class LoadedSplit:
    documents: list[Document]
    ground_truth: GroundTruth | None
    groups: list[MentionGroup]
    index: CorpusIndex


def _load_split(config: RunConfig, name: str, *, need_gt: bool) -> LoadedSplit:
    split = config.train if name == "train" else config.test
    docs = load_corpus(_require(split.documents, f"{name} documents"))
    gt = None
    if split.ground_truth is not None:
        gt = load_ground_truth(_require(split.ground_truth, f"{name} ground truth"), docs)
    elif need_gt:
        raise ValueError(f"config has no ground truth for the {name} split")
    sets = [
        load_annotation_set(_require(split.systems[s], f"{name} annotation"), s, docs)
        for s in config.systems_order
    ]
    groups = build_mention_groups(sets, gt, mode=config.alignment_mode)
    return LoadedSplit(docs, gt, groups, CorpusIndex.build(docs, groups))


def _load_candidates(config: RunConfig) -> CandidateDictionary:
    if config.candidates is None:
        raise ValueError("config has no candidate dictionary ('candidates' path)")
    return CandidateDictionary.load_tsv(_require(config.candidates, "candidate dictionary"))


def _learner_config(config: RunConfig) -> MetaElConfig:
    params = {k: v for k, v in config.params.items() if k not in _BASELINE_PARAM_KEYS}
    params.setdefault("alignment_mode", config.alignment_mode)
    return MetaElConfig.from_dict(params)


def _apply_overrides(config: RunConfig, args: argparse.Namespace) -> RunConfig:
    updates: dict = {}
    if getattr(args, "output_dir", None):
        updates["output_dir"] = Path(args.output_dir).resolve()
    if getattr(args, "alignment_mode", None):
        updates["alignment_mode"] = args.alignment_mode
    if getattr(args, "seed", None) is not None:
        updates["params"] = dict(config.params, seed=args.seed)
    if not updates:
        return config
    from dataclasses import replace

    return replace(config, **updates)


def _out_dir(config: RunConfig) -> Path:
    config.output_dir.mkdir(parents=True, exist_ok=True)
    return config.output_dir


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def cmd_stats(args: argparse.Namespace) -> int:
    config = _apply_overrides(RunConfig.from_file(args.config), args)
    loaded = _load_split(config, args.split, need_gt=False)
    stats = agreement_statistics(loaded.groups, len(config.systems_order))
    table = render_agreement_table(stats)
    out = _out_dir(config)
    _write_json(out / f"agreement_{args.split}.json", stats.to_dict())
    (out / f"agreement_{args.split}.txt").write_text(table + "\n", encoding="utf-8")
    print(table)
    print(f"wrote {out / f'agreement_{args.split}.json'}")
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    config = _apply_overrides(RunConfig.from_file(args.config), args)
    loaded = _load_split(config, "train", need_gt=True)
    assert loaded.ground_truth is not None
    if not loaded.ground_truth.annotations:
        raise ValueError("training ground truth is empty")
    cand = _load_candidates(config)
    learner = _learner_config(config)
    model = train_metael(
        loaded.groups,
        config.systems_order,
        cand,
        learner,
        corpus_index=loaded.index,
        ground_truth=loaded.ground_truth,
    )
    out = _out_dir(config)
    model_path = Path(args.model_out) if args.model_out else out / "model.json"
    model.save(model_path)

    balance = {}
    for sys_id in config.systems_order:
        accept = reject = 0
        for group in loaded.groups:
            ann = group.annotations.get(sys_id)
            if ann is None or group.gold_entity is None:
                continue
            if ann.entity == group.gold_entity:
                accept += 1
            else:
                reject += 1
        balance[sys_id] = {"accept": accept, "reject": reject}
    summary = {
        "systems": list(config.systems_order),
        "binary_class_balance": balance,
        "overall_precision": dict(model.stats.overall_precision),
        "overall_f1": dict(model.stats.overall_f1),
        "constant_accept_systems": list(model.constant_accept_systems),
        "model_path": str(model_path),
    }
    _write_json(out / "training_summary.json", summary)
    for sys_id in config.systems_order:
        b = balance[sys_id]
        print(
            f"{sys_id}: accept={b['accept']} reject={b['reject']} "
            f"P={model.stats.overall_precision[sys_id]:.4f} "
            f"F1={model.stats.overall_f1[sys_id]:.4f}"
        )
    if model.constant_accept_systems:
        print("constant-accept fallback for: " + ", ".join(model.constant_accept_systems))
    print(f"wrote {model_path}")
    return 0


def _baseline_output(config: RunConfig, loaded: LoadedSplit, strategy: str, seed: int):
    priors = None
    if strategy not in ("random", "upper_bound"):
        train = _load_split(config, "train", need_gt=True)
        priors = build_training_stats(
            train.groups, config.systems_order, ground_truth=train.ground_truth
        )
    if strategy == "upper_bound" and loaded.ground_truth is None:
        raise ValueError("upper_bound needs ground truth for the annotated split")
    policy = BaselinePolicy(
        kind=strategy,
        priors=priors,
        seed=seed,
        vote_aggregate=config.params.get("vote_aggregate", "sum"),
    )
    return apply_baseline(policy, loaded.groups)


def cmd_annotate(args: argparse.Namespace) -> int:
    config = _apply_overrides(RunConfig.from_file(args.config), args)
    loaded = _load_split(config, args.split, need_gt=False)
    if args.strategy in ("loose", "strict"):
        model_path = Path(args.model) if args.model else config.output_dir / "model.json"
        model = MetaElModel.load(_require(model_path, "model"))
        if model.systems != config.systems_order:
            raise ValueError(
                f"model systems {list(model.systems)} do not match "
                f"config systems_order {list(config.systems_order)}"
            )
        cand = _load_candidates(config)
        annotate = annotate_loose if args.strategy == "loose" else annotate_strict
        output = annotate(model, loaded.groups, corpus_index=loaded.index, candidates=cand)
    else:
        seed = int(config.params.get("seed", 0))
        output = _baseline_output(config, loaded, args.strategy, seed)
    out = _out_dir(config)
    out_path = Path(args.output) if args.output else out / f"annotations_{args.strategy}.jsonl"
    write_annotations(out_path, output.annotations, extras=output.extras())
    print(f"{args.strategy}: {len(output.annotations)} annotations -> {out_path}")
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    config = _apply_overrides(RunConfig.from_file(args.config), args)
    loaded = _load_split(config, args.split, need_gt=True)
    assert loaded.ground_truth is not None
    outputs = []
    for raw in args.outputs:
        path = _require(Path(raw), "annotation output")
        outputs.append((path.stem, load_annotation_set(path, path.stem, loaded.documents)))
    rows = [
        (name, el_prf(annotation_set, loaded.ground_truth, mode=config.alignment_mode))
        for name, annotation_set in outputs
    ]
    significance = []
    for i in range(len(outputs)):
        for j in range(i + 1, len(outputs)):
            result = paired_t_test(
                outputs[i][1],
                outputs[j][1],
                loaded.ground_truth,
                n_splits=args.splits,
                mode=config.alignment_mode,
            )
            significance.append(
                {"a": outputs[i][0], "b": outputs[j][0], **result.to_dict()}
            )
    report = {
        "scores": {name: score.to_dict() for name, score in rows},
        "significance": significance,
        "n_splits": args.splits,
    }
    out = _out_dir(config)
    _write_json(out / "evaluation.json", report)
    table = render_prf_table(rows)
    lines = [table]
    for entry in significance:
        mark = "significant" if entry["significant"] else "not significant"
        lines.append(
            f"{entry['a']} vs {entry['b']}: t={entry['t_statistic']:.3f} "
            f"p={entry['p_value']:.4f} ({mark})"
        )
    text = "\n".join(lines)
    (out / "evaluation.txt").write_text(text + "\n", encoding="utf-8")
    print(text)
    return 0


def cmd_ablate(args: argparse.Namespace) -> int:
    config = _apply_overrides(RunConfig.from_file(args.config), args)
    train = _load_split(config, "train", need_gt=True)
    test = _load_split(config, "test", need_gt=True)
    assert test.ground_truth is not None
    cand = _load_candidates(config)
    rows = ablation_run(
        train.groups,
        test.groups,
        config.systems_order,
        cand,
        train_index=train.index,
        test_index=test.index,
        test_gt=test.ground_truth,
        params=_learner_config(config),
        train_ground_truth=train.ground_truth,
    )
    out = _out_dir(config)
    _write_json(out / "ablation.json", [r.to_dict() for r in rows])
    table = render_ablation_table(rows)
    (out / "ablation.txt").write_text(table + "\n", encoding="utf-8")
    if args.csv:
        Path(args.csv).write_text(
            rows_to_csv([(r.name, r.score) for r in rows]), encoding="utf-8"
        )
    print(table)
    return 0


def cmd_ttest(args: argparse.Namespace) -> int:
    config = _apply_overrides(RunConfig.from_file(args.config), args)
    loaded = _load_split(config, args.split, need_gt=True)
    assert loaded.ground_truth is not None
    path_a = _require(Path(args.outputs[0]), "annotation output")
    path_b = _require(Path(args.outputs[1]), "annotation output")
    set_a = load_annotation_set(path_a, path_a.stem, loaded.documents)
    set_b = load_annotation_set(path_b, path_b.stem, loaded.documents)
    result = paired_t_test(
        set_a,
        set_b,
        loaded.ground_truth,
        n_splits=args.splits,
        mode=config.alignment_mode,
        shuffle_seed=args.shuffle_seed,
    )
    out = _out_dir(config)
    _write_json(out / "ttest.json", {"a": path_a.stem, "b": path_b.stem, **result.to_dict()})
    mark = "significant" if result.significant else "not significant"
    print(f"t={result.t_statistic:.4f} p={result.p_value:.6f} ({mark})")
    return 0


def _load_profiles(path: str) -> tuple[SystemProfile, ...]:
    raw = json.loads(_require(Path(path), "profiles").read_text(encoding="utf-8"))
    if not isinstance(raw, list):
        raise ValueError(f"{path}: profiles file must be a JSON list")
    return tuple(SystemProfile(**entry) for entry in raw)


def cmd_synth(args: argparse.Namespace) -> int:
    profiles = _load_profiles(args.profiles) if args.profiles else DEFAULT_PROFILES
    config = generate(
        args.out,
        n_docs=args.docs,
        vocab_size=args.vocab,
        profiles=profiles,
        seed=args.seed,
    )
    print(f"generated {args.docs} documents for {len(config['systems_order'])} systems")
    print(f"wrote {Path(args.out) / 'config.json'}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="metael",
        description="Combine the outputs of several entity-linking systems per mention.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, *, split_default: str | None = "test") -> None:
        p.add_argument("--config", required=True, help="run configuration JSON")
        p.add_argument("--output-dir", help="override the config's output directory")
        p.add_argument(
            "--alignment-mode", choices=("strong", "overlap"), help="override alignment mode"
        )
        p.add_argument("--seed", type=int, help="override params.seed")
        if split_default is not None:
            p.add_argument(
                "--split",
                choices=("train", "test"),
                default=split_default,
                help=f"corpus split to use (default {split_default})",
            )

    p = sub.add_parser("stats", help="alignment and agreement statistics")
    common(p)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("train", help="train the selection model on the train split")
    common(p, split_default=None)
    p.add_argument("--model-out", help="model file path (default <output_dir>/model.json)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("annotate", help="produce a unified annotation set")
    common(p)
    p.add_argument("--strategy", required=True, choices=STRATEGIES)
    p.add_argument("--model", help="trained model path (loose/strict)")
    p.add_argument("--output", help="output annotation file path")
    p.set_defaults(func=cmd_annotate)

    p = sub.add_parser("evaluate", help="score annotation outputs against ground truth")
    common(p)
    p.add_argument("outputs", nargs="+", help="annotation files to score")
    p.add_argument("--splits", type=int, default=20, help="splits for significance testing")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("ablate", help="feature-ablation protocol (17 rows)")
    common(p, split_default=None)
    p.add_argument("--csv", help="also export the table as CSV to this path")
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("ttest", help="paired significance test between two outputs")
    common(p)
    p.add_argument("outputs", nargs=2, help="two annotation files to compare")
    p.add_argument("--splits", type=int, default=20)
    p.add_argument(
        "--shuffle-seed",
        type=int,
        default=None,
        help="shuffle gold annotations before splitting (default: document order)",
    )
    p.set_defaults(func=cmd_ttest)

    p = sub.add_parser("synth", help="generate a seeded synthetic corpus")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--docs", type=int, default=200, help="number of documents")
    p.add_argument("--vocab", type=int, default=40, help="entity vocabulary size")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--profiles", help="JSON list of system strength profiles")
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (LoadError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
