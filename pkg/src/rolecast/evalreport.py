"""Confusion matrices, per-role metrics, cross-validated runs, and reports."""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, replace

import numpy as np
from scipy import stats as scipy_stats

from .corpus import Role, UserCorpus, stratified_folds
from .errors import ConfigError, DataFormatError
from .hybrid import HybridConfig, predict_role, train_hybrid
from .imagechannel import record_image_stats
from .learners import derive_seed
from .resources import ResourceBundle
from .tweetfeat import tweet_scores

__all__ = [
    "ConfusionMatrix",
    "RoleMetrics",
    "CVReport",
    "per_role_metrics",
    "accuracy",
    "cross_validate",
    "ablation_run",
    "render_report",
    "parse_report",
    "feature_distribution",
]

REPORT_SCHEMA_VERSION = 1

GROUP_LABELS = {
    "BF1": "name",
    "BF2": "description",
    "BF3": "relationship",
    "BF4": "profile image",
    "BF5": "tweet",
    "AF1": "tweet",
    "IMG": "image channel",
}


@dataclass
class ConfusionMatrix:
    """Counts indexed [true role, predicted role] in a fixed role order."""

    roles: tuple[Role, ...]
    counts: np.ndarray

    @classmethod
    def empty(cls, roles: tuple[Role, ...]) -> "ConfusionMatrix":
        n = len(roles)
        return cls(roles=roles, counts=np.zeros((n, n), dtype=np.int64))

    def add(self, true: Role, predicted: Role) -> None:
        self.counts[self.roles.index(true), self.roles.index(predicted)] += 1

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        if self.roles != other.roles:
            raise DataFormatError("cannot add confusion matrices over different roles")
        return ConfusionMatrix(roles=self.roles, counts=self.counts + other.counts)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, ConfusionMatrix)
            and self.roles == other.roles
            and np.array_equal(self.counts, other.counts)
        )

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True)
class RoleMetrics:
    recall: float
    precision: float
    f1: float
    degenerate: tuple[str, ...] = ()


def per_role_metrics(cm: ConfusionMatrix) -> dict[Role, RoleMetrics]:
    """Recall, precision, and F1 per role; zero denominators yield 0 with a flag."""
    out: dict[Role, RoleMetrics] = {}
    counts = cm.counts
    for i, role in enumerate(cm.roles):
        flags: list[str] = []
        row = int(counts[i].sum())
        col = int(counts[:, i].sum())
        diag = int(counts[i, i])
        if row > 0:
            recall = diag / row
        else:
            recall = 0.0
            flags.append("recall_zero_denominator")
        if col > 0:
            precision = diag / col
        else:
            precision = 0.0
            flags.append("precision_zero_denominator")
        if recall + precision > 0:
            f1 = 2 * recall * precision / (recall + precision)
        else:
            f1 = 0.0
            flags.append("f1_zero_denominator")
        out[role] = RoleMetrics(
            recall=recall, precision=precision, f1=f1, degenerate=tuple(flags)
        )
    return out


def accuracy(cm: ConfusionMatrix) -> float:
    """Trace over total."""
    total = cm.total
    if total == 0:
        raise DataFormatError("confusion matrix is empty")
    return float(np.trace(cm.counts)) / total


@dataclass
class CVReport:
    roles: tuple[Role, ...]
    n_folds: int
    config: dict
    fold_matrices: list[ConfusionMatrix]
    pooled: ConfusionMatrix
    per_role: dict[Role, RoleMetrics]
    accuracy: float
    per_fold_accuracy: list[float]
    per_fold_metrics: list[dict[Role, RoleMetrics]]
    channel_accuracy: dict[str, float]
    timing_seconds: float | None = None

    def label(self) -> str:
        drop = sorted(self.config.get("drop", ()))
        if not drop:
            return "All Features"
        parts = [f"{g} ({GROUP_LABELS[g]})" if g in GROUP_LABELS else g for g in drop]
        return "Without " + " + ".join(parts)


def cross_validate(
    corpus: UserCorpus,
    resources: ResourceBundle,
    config: HybridConfig = HybridConfig(),
    n_folds: int = 10,
    external_probs=None,
) -> CVReport:
    """Stratified k-fold evaluation of the hybrid model.

    Each fold trains on the complement and predicts the held-out users; the
    pooled matrix is the elementwise sum of fold matrices.
    """
    config.validate()
    started = time.perf_counter()
    roles = config.roles()
    assignment = stratified_folds(corpus, n_folds, config.seed)
    # image stats depend only on file contents, so they are shared across folds
    stats_cache = {rec.user_id: record_image_stats(rec) for rec in corpus}
    fold_matrices: list[ConfusionMatrix] = []
    channel_hits: dict[str, int] = {}
    channel_total = 0
    for fold in range(n_folds):
        train_corpus = corpus.subset(assignment.train_ids(fold))
        test_corpus = corpus.subset(assignment.fold_ids(fold))
        fold_config = replace(config, seed=derive_seed(config.seed, "fold", fold))
        try:
            model = train_hybrid(
                train_corpus,
                resources,
                fold_config,
                external_probs=external_probs,
                image_stats_cache=stats_cache,
            )
        except (DataFormatError, ConfigError) as exc:
            raise type(exc)(f"fold {fold}: {exc}") from exc
        cm = ConfusionMatrix.empty(roles)
        for rec in test_corpus:
            prediction = predict_role(model, rec, resources)
            assert rec.label is not None
            cm.add(rec.label, prediction.role)
            channel_total += 1
            for name, probs in prediction.channel_probabilities.items():
                guess = roles[int(np.argmax(probs))]
                if guess == rec.label:
                    channel_hits[name] = channel_hits.get(name, 0) + 1
                else:
                    channel_hits.setdefault(name, 0)
        fold_matrices.append(cm)
    pooled = fold_matrices[0]
    for cm in fold_matrices[1:]:
        pooled = pooled + cm
    elapsed = time.perf_counter() - started
    return CVReport(
        roles=roles,
        n_folds=n_folds,
        config=config.to_dict(),
        fold_matrices=fold_matrices,
        pooled=pooled,
        per_role=per_role_metrics(pooled),
        accuracy=accuracy(pooled),
        per_fold_accuracy=[accuracy(cm) for cm in fold_matrices],
        per_fold_metrics=[per_role_metrics(cm) for cm in fold_matrices],
        channel_accuracy={
            name: hits / channel_total for name, hits in sorted(channel_hits.items())
        },
        timing_seconds=elapsed,
    )


def ablation_run(
    corpus: UserCorpus,
    resources: ResourceBundle,
    config: HybridConfig,
    drop,
    n_folds: int = 10,
    external_probs=None,
) -> CVReport:
    """Cross-validate with the named feature groups excluded."""
    dropped = replace(config, drop=frozenset(drop))
    return cross_validate(
        corpus, resources, dropped, n_folds=n_folds, external_probs=external_probs
    )


def _metrics_to_dict(metrics: dict[Role, RoleMetrics]) -> dict:
    return {
        role.value: {
            "recall": m.recall,
            "precision": m.precision,
            "f1": m.f1,
            "degenerate": list(m.degenerate),
        }
        for role, m in metrics.items()
    }


def _metrics_from_dict(obj: dict) -> dict[Role, RoleMetrics]:
    return {
        Role(name): RoleMetrics(
            recall=m["recall"],
            precision=m["precision"],
            f1=m["f1"],
            degenerate=tuple(m["degenerate"]),
        )
        for name, m in obj.items()
    }


def render_report(report: CVReport, fmt: str, include_timing: bool = True) -> str:
    """Render a CVReport as versioned JSON or a paper-style markdown table."""
    if fmt == "json":
        payload = {
            "schema_version": REPORT_SCHEMA_VERSION,
            "kind": "cv_report",
            "label": report.label(),
            "roles": [r.value for r in report.roles],
            "n_folds": report.n_folds,
            "config": report.config,
            "accuracy": report.accuracy,
            "per_role": _metrics_to_dict(report.per_role),
            "pooled_matrix": report.pooled.counts.tolist(),
            "fold_matrices": [cm.counts.tolist() for cm in report.fold_matrices],
            "per_fold_accuracy": report.per_fold_accuracy,
            "per_fold_metrics": [_metrics_to_dict(m) for m in report.per_fold_metrics],
            "channel_accuracy": report.channel_accuracy,
            "timing_seconds": report.timing_seconds if include_timing else None,
        }
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if fmt == "markdown":
        lines = [f"## {report.label()}", ""]
        lines.append("| Role | R | P | F1 |")
        lines.append("|------|-------|-------|-------|")
        for role in report.roles:
            m = report.per_role[role]
            lines.append(
                f"| {role.value} | {m.recall:.3f} | {m.precision:.3f} | {m.f1:.3f} |"
            )
        lines.append("")
        lines.append(f"Accuracy: {report.accuracy:.3f}")
        if report.channel_accuracy:
            channels = ", ".join(
                f"{name} {acc:.3f}" for name, acc in report.channel_accuracy.items()
            )
            lines.append(f"Channel accuracy: {channels}")
        return "\n".join(lines) + "\n"
    raise ConfigError(f"unknown report format {fmt!r}")


def parse_report(text: str) -> CVReport:
    """Inverse of the JSON rendering."""
    obj = json.loads(text)
    if obj.get("kind") != "cv_report":
        raise DataFormatError("not a cv_report document")
    if obj.get("schema_version") != REPORT_SCHEMA_VERSION:
        raise DataFormatError(f"unsupported schema version {obj.get('schema_version')!r}")
    roles = tuple(Role(r) for r in obj["roles"])
    fold_matrices = [
        ConfusionMatrix(roles=roles, counts=np.array(m, dtype=np.int64))
        for m in obj["fold_matrices"]
    ]
    pooled = ConfusionMatrix(roles=roles, counts=np.array(obj["pooled_matrix"], dtype=np.int64))
    return CVReport(
        roles=roles,
        n_folds=obj["n_folds"],
        config=obj["config"],
        fold_matrices=fold_matrices,
        pooled=pooled,
        per_role=_metrics_from_dict(obj["per_role"]),
        accuracy=obj["accuracy"],
        per_fold_accuracy=list(obj["per_fold_accuracy"]),
        per_fold_metrics=[_metrics_from_dict(m) for m in obj["per_fold_metrics"]],
        channel_accuracy=dict(obj["channel_accuracy"]),
        timing_seconds=obj["timing_seconds"],
    )


_ANALYZE_FEATURES = ("fp_tweet", "brightness")


def feature_distribution(
    corpus: UserCorpus,
    resources: ResourceBundle,
    feature: str,
    window: int | None = None,
    bins: int = 30,
) -> dict:
    """Per-role distribution summary and pairwise Welch t-tests for one feature.

    Both supported features live in [0, 1], so the 30-bin histogram uses that
    fixed range. Users lacking the feature (no image) are excluded.
    """
    if feature not in _ANALYZE_FEATURES:
        raise ConfigError(f"unknown feature {feature!r}; choose from {_ANALYZE_FEATURES}")
    values: dict[Role, list[float]] = {}
    for rec in corpus:
        if rec.label is None:
            raise DataFormatError(f"user {rec.user_id!r} has no label")
        if feature == "fp_tweet":
            value = tweet_scores(
                rec.tweets,
                resources.first_person,
                resources.interjections,
                resources.emotions,
                window,
            ).fp_tweet
        else:
            stats = record_image_stats(rec)
            if stats is None:
                continue
            value = float(stats[0])
        values.setdefault(rec.label, []).append(value)
    per_role = {}
    for role, vals in sorted(values.items(), key=lambda kv: kv[0].value):
        arr = np.asarray(vals, dtype=np.float64)
        hist, _ = np.histogram(arr, bins=bins, range=(0.0, 1.0))
        per_role[role.value] = {
            "n": int(arr.size),
            "mean": float(arr.mean()),
            "sd": float(arr.std(ddof=1)) if arr.size > 1 else 0.0,
            "quartiles": [float(q) for q in np.percentile(arr, [25, 50, 75])],
            "histogram": hist.tolist(),
        }
    pairwise = {}
    present = [role for role in values if len(values[role]) > 1]
    present.sort(key=lambda r: r.value)
    for i, a in enumerate(present):
        for b in present[i + 1 :]:
            result = scipy_stats.ttest_ind(values[a], values[b], equal_var=False)
            pairwise[f"{a.value}_vs_{b.value}"] = float(result.pvalue)
    return {
        "schema_version": REPORT_SCHEMA_VERSION,
        "kind": "feature_distribution",
        "feature": feature,
        "bins": bins,
        "range": [0.0, 1.0],
        "per_role": per_role,
        "pairwise_welch_p": pairwise,
    }
