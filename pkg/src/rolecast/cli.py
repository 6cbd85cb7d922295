"""Command-line surface for the pipeline.

Exit codes: 0 success, 1 validation failure (bad data, bad resources,
fingerprint mismatch), 2 configuration error (argparse uses 2 as well).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .corpus import ROLE_ORDER, Role, load_dataset, save_dataset
from .errors import ConfigError, RolecastError
from .evalreport import (
    ConfusionMatrix,
    ablation_run,
    accuracy,
    cross_validate,
    feature_distribution,
    per_role_metrics,
    render_report,
)
from .hybrid import (
    FEATURE_GROUPS,
    HybridConfig,
    _AssemblyContext,
    assemble_bf,
    load_hybrid,
    predict_role,
    save_hybrid,
    train_hybrid,
)
from .resources import load_resources, resolve_resource_dir
from .synth import default_synthetic_spec, generate_synthetic_corpus
from .tweetfeat import build_ktop_vocabulary, export_vocabulary, ktop_score_vector

PROG = "rolecast"


def _json_line(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True, ensure_ascii=False)


def _add_resource_flag(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--resources",
        metavar="DIR",
        default=None,
        help="resource directory (default: $ROLECAST_RESOURCES, then built-in)",
    )


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--classifier", choices=["tree", "forest", "adaboost"], default="forest")
    parser.add_argument("--k", type=int, default=20, help="k-top words per role")
    parser.add_argument(
        "--window",
        choices=["10", "30", "50", "all"],
        default="all",
        help="tweet window for the tweet scores",
    )
    parser.add_argument(
        "--image-mode", choices=["external", "fallback", "uniform"], default="fallback"
    )
    parser.add_argument("--image-probs", metavar="FILE", default=None)
    parser.add_argument("--mode", choices=["tri", "bi"], default="tri")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--stacking", choices=["oof", "resub"], default="oof")
    parser.add_argument("--inner-folds", type=int, default=5)
    parser.add_argument("--trees", type=int, default=100, help="forest size")
    parser.add_argument("--stages", type=int, default=50, help="adaboost stages")
    parser.add_argument("--max-depth", type=int, default=None)
    parser.add_argument("--min-leaf", type=int, default=1)
    parser.add_argument("--min-tweets", type=int, default=1)


def _config_from_args(args, drop=frozenset()) -> HybridConfig:
    window = None if args.window == "all" else int(args.window)
    config = HybridConfig(
        classifier=args.classifier,
        k=args.k,
        window=window,
        image_mode=args.image_mode,
        mode=args.mode,
        seed=args.seed,
        stacking=args.stacking,
        inner_folds=args.inner_folds,
        n_trees=args.trees,
        boost_stages=args.stages,
        max_depth=args.max_depth,
        min_samples_leaf=args.min_leaf,
        drop=frozenset(drop),
    )
    config.validate()
    return config


def _load_resources(args):
    return load_resources(resolve_resource_dir(args.resources))


def cmd_validate(args) -> int:
    corpus = load_dataset(args.dataset, require_labels=args.require_labels, min_tweets=args.min_tweets)
    counts = ", ".join(f"{role.value}: {n}" for role, n in sorted(corpus.role_counts().items(), key=lambda kv: kv[0].value))
    print(f"ok: {len(corpus)} records" + (f" ({counts})" if counts else ""))
    if corpus.dropped_min_tweets:
        print(f"dropped {corpus.dropped_min_tweets} record(s) below --min-tweets {args.min_tweets}")
    return 0


def cmd_featurize(args) -> int:
    resources = _load_resources(args)
    corpus = load_dataset(args.dataset, require_labels=True, min_tweets=args.min_tweets)
    window = None if args.window == "all" else int(args.window)
    if args.k < 1:
        raise ConfigError(f"k must be >= 1, got {args.k}")
    roles = corpus.roles_present()
    vocab = build_ktop_vocabulary(corpus, args.k, resources.stoplist, roles)
    ctx = _AssemblyContext(corpus, None)
    out = Path(args.out)
    lines = []
    for rec in corpus:
        bf = assemble_bf(
            rec,
            resources,
            window=window,
            imputed_brightness=ctx.brightness_mean,
            image_stats=ctx.stats[rec.user_id],
        )
        af = ktop_score_vector(rec.tweets, vocab)
        lines.append(
            _json_line(
                {
                    "user_id": rec.user_id,
                    "label": rec.label.value if rec.label else None,
                    "bf": [float(v) for v in bf],
                    "af": [float(v) for v in af],
                }
            )
        )
    out.write_text("\n".join(lines) + "\n", encoding="utf-8")
    vocab_path = out.with_name(out.name + ".vocab.txt")
    export_vocabulary(vocab, vocab_path)
    print(f"wrote {len(lines)} feature rows to {out} (vocabulary: {vocab_path})")
    return 0


def cmd_train(args) -> int:
    resources = _load_resources(args)
    config = _config_from_args(args)
    corpus = load_dataset(args.dataset, require_labels=True, min_tweets=args.min_tweets)
    model = train_hybrid(corpus, resources, config, external_probs=args.image_probs)
    save_hybrid(model, args.out)
    print(f"trained {config.mode} model ({config.classifier}) on {len(corpus)} users -> {args.out}")
    return 0


def cmd_evaluate(args) -> int:
    resources = _load_resources(args)
    config = _config_from_args(args)
    if args.folds < 2:
        raise ConfigError(f"--folds must be >= 2, got {args.folds}")
    corpus = load_dataset(args.dataset, require_labels=True, min_tweets=args.min_tweets)
    report = cross_validate(
        corpus, resources, config, n_folds=args.folds, external_probs=args.image_probs
    )
    prefix = Path(args.out_prefix)
    # timing stays out of the written reports so repeated runs are byte-identical
    prefix.with_suffix(".json").write_text(
        render_report(report, "json", include_timing=False), encoding="utf-8"
    )
    prefix.with_suffix(".md").write_text(render_report(report, "markdown"), encoding="utf-8")
    print(f"accuracy {report.accuracy:.3f} over {args.folds} folds -> {prefix}.json, {prefix}.md")
    if report.timing_seconds is not None:
        print(f"elapsed {report.timing_seconds:.1f}s", file=sys.stderr)
    return 0


def cmd_ablate(args) -> int:
    resources = _load_resources(args)
    drop: set[str] = set()
    for chunk in args.drop or []:
        for name in chunk.split(","):
            name = name.strip()
            if not name:
                continue
            if name.lower() == "all":
                drop.update(FEATURE_GROUPS)
            else:
                drop.add(name.upper())
    config = _config_from_args(args, drop=drop)
    if args.folds < 2:
        raise ConfigError(f"--folds must be >= 2, got {args.folds}")
    corpus = load_dataset(args.dataset, require_labels=True, min_tweets=args.min_tweets)
    report = ablation_run(
        corpus, resources, config, drop, n_folds=args.folds, external_probs=args.image_probs
    )
    prefix = Path(args.out_prefix)
    prefix.with_suffix(".json").write_text(
        render_report(report, "json", include_timing=False), encoding="utf-8"
    )
    prefix.with_suffix(".md").write_text(render_report(report, "markdown"), encoding="utf-8")
    print(f"{report.label()}: accuracy {report.accuracy:.3f} -> {prefix}.json, {prefix}.md")
    return 0


def cmd_predict(args) -> int:
    resources = _load_resources(args)
    model = load_hybrid(args.model, resources)
    corpus = load_dataset(args.dataset, require_labels=False, min_tweets=args.min_tweets)
    lines = []
    predictions = []
    for rec in corpus:
        prediction = predict_role(model, rec, resources)
        predictions.append((rec, prediction))
        lines.append(
            _json_line(
                {
                    "user_id": prediction.user_id,
                    "role": prediction.role.value,
                    "probs": list(prediction.probabilities),
                    "channels": {
                        name: list(vec)
                        for name, vec in prediction.channel_probabilities.items()
                    },
                    "flags": list(prediction.flags),
                }
            )
        )
    Path(args.out).write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {len(lines)} predictions to {args.out}")
    labeled = [
        (rec, pred) for rec, pred in predictions if rec.label is not None
    ]
    if labeled and len(labeled) == len(predictions) and all(
        rec.label in model.roles for rec, _ in labeled
    ):
        cm = ConfusionMatrix.empty(model.roles)
        for rec, pred in labeled:
            cm.add(rec.label, pred.role)
        print("confusion matrix (rows = true, cols = predicted):")
        header = " ".join(f"{r.value:>8}" for r in model.roles)
        print(f"{'':>8} {header}")
        for i, role in enumerate(model.roles):
            row = " ".join(f"{int(v):>8}" for v in cm.counts[i])
            print(f"{role.value:>8} {row}")
        print(f"accuracy {accuracy(cm):.3f}")
        for role, m in per_role_metrics(cm).items():
            print(f"{role.value}: R {m.recall:.3f} P {m.precision:.3f} F1 {m.f1:.3f}")
    return 0


def cmd_analyze(args) -> int:
    resources = _load_resources(args)
    corpus = load_dataset(args.dataset, require_labels=True, min_tweets=args.min_tweets)
    window = None if args.window == "all" else int(args.window)
    report = feature_distribution(corpus, resources, args.feature, window=window)
    text = json.dumps(report, sort_keys=True, indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"wrote distribution report to {args.out}")
    else:
        print(text, end="")
    return 0


def cmd_synth(args) -> int:
    roles = ROLE_ORDER if args.mode == "tri" else (Role.MALE, Role.FEMALE)
    groups = None
    if args.signal_groups:
        groups = {g.strip().upper() for chunk in args.signal_groups for g in chunk.split(",") if g.strip()}
    spec = default_synthetic_spec(
        args.separability, image_dir=args.image_dir, signal_groups=groups, roles=roles
    )
    corpus = generate_synthetic_corpus(spec, args.users, args.seed)
    save_dataset(corpus, args.out)
    print(f"wrote {len(corpus)} synthetic users to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=PROG,
        description="Classify social-media users as male-, female-, or brand-related.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="validate a dataset file")
    p.add_argument("dataset")
    p.add_argument("--require-labels", action="store_true")
    p.add_argument("--min-tweets", type=int, default=1)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("featurize", help="dump per-user feature vectors")
    p.add_argument("dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--k", type=int, default=20)
    p.add_argument("--window", choices=["10", "30", "50", "all"], default="all")
    p.add_argument("--min-tweets", type=int, default=1)
    _add_resource_flag(p)
    p.set_defaults(func=cmd_featurize)

    p = sub.add_parser("train", help="train a hybrid model")
    p.add_argument("dataset")
    p.add_argument("--out", required=True)
    _add_config_flags(p)
    _add_resource_flag(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="stratified cross-validation")
    p.add_argument("dataset")
    p.add_argument("--out-prefix", required=True)
    p.add_argument("--folds", type=int, default=10)
    _add_config_flags(p)
    _add_resource_flag(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("ablate", help="cross-validate with feature groups removed")
    p.add_argument("dataset")
    p.add_argument("--out-prefix", required=True)
    p.add_argument("--drop", action="append", metavar="GROUPS", help="e.g. BF1 or BF1,AF1")
    p.add_argument("--folds", type=int, default=10)
    _add_config_flags(p)
    _add_resource_flag(p)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("predict", help="predict roles with a trained model")
    p.add_argument("model")
    p.add_argument("dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--min-tweets", type=int, default=1)
    _add_resource_flag(p)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("analyze", help="per-role feature distributions and t-tests")
    p.add_argument("dataset")
    p.add_argument("--feature", required=True)
    p.add_argument("--window", choices=["10", "30", "50", "all"], default="all")
    p.add_argument("--out", default=None)
    p.add_argument("--min-tweets", type=int, default=1)
    _add_resource_flag(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("synth", help="generate a synthetic labeled dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--users", type=int, default=300)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--separability", type=float, default=1.0)
    p.add_argument("--image-dir", default=None)
    p.add_argument("--signal-groups", action="append", default=None)
    p.add_argument("--mode", choices=["tri", "bi"], default="tri")
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"{PROG}: configuration error: {exc}", file=sys.stderr)
        return 2
    except RolecastError as exc:
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
