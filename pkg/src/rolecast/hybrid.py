"""The hybrid classifier: feature channels, stacking, training, prediction.

Channel layout: tri-class mode trains separate basic-feature and k-top-word
channels plus the image channel; bi-class mode merges basic and k-top features
into a single channel. The final classifier is trained on concatenated channel
probability vectors, by default produced out-of-fold to avoid leakage.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .corpus import BI_ROLES, ROLE_ORDER, Role, UserCorpus, UserRecord
from .errors import ConfigError, DataFormatError, ResourceError
from .imagechannel import (
    ImageProbSource,
    build_fallback_source,
    channel_probs,
    external_source,
    load_external_probs,
    record_image_stats,
    uniform_source,
)
from .learners import (
    BoostParams,
    ForestParams,
    TreeParams,
    derive_seed,
    model_from_dict,
    model_to_dict,
    predict_proba,
    train_adaboost,
    train_decision_tree,
    train_random_forest,
)
from .namefeat import display_name_score, screen_name_score
from .profilefeat import (
    description_first_person_score,
    description_term_count,
    tff_score,
)
from .resources import ResourceBundle
from .tweetfeat import KTopVocabulary, build_ktop_vocabulary, ktop_score_vector, tweet_scores

__all__ = [
    "BF_FEATURE_NAMES",
    "BF_GROUPS",
    "FEATURE_GROUPS",
    "HybridConfig",
    "HybridModel",
    "RolePrediction",
    "assemble_bf",
    "out_of_fold_probs",
    "train_hybrid",
    "train_binary_variant",
    "predict_role",
    "save_hybrid",
    "load_hybrid",
]

HYBRID_FORMAT = "rolecast-hybrid"
HYBRID_VERSION = 1

BF_FEATURE_NAMES: tuple[str, ...] = (
    "score_d_name",
    "score_s_name",
    "score_fp_desc",
    "score_tf_desc",
    "score_tff",
    "score_b_image",
    "score_fp_tweet",
    "score_i_tweet",
    "score_e_tweet",
)

BF_GROUPS: dict[str, tuple[str, ...]] = {
    "BF1": ("score_d_name", "score_s_name"),
    "BF2": ("score_fp_desc", "score_tf_desc"),
    "BF3": ("score_tff",),
    "BF4": ("score_b_image",),
    "BF5": ("score_fp_tweet", "score_i_tweet", "score_e_tweet"),
}

FEATURE_GROUPS: tuple[str, ...] = ("BF1", "BF2", "BF3", "BF4", "BF5", "AF1", "IMG")

_CLASSIFIERS = ("tree", "forest", "adaboost")
_WINDOWS = (None, 10, 30, 50)


@dataclass(frozen=True)
class HybridConfig:
    classifier: str = "forest"
    k: int = 20
    window: int | None = None  # None = all tweets
    image_mode: str = "fallback"  # external | fallback | uniform
    mode: str = "tri"  # tri | bi
    seed: int = 0
    stacking: str = "oof"  # oof | resub
    inner_folds: int = 5
    n_trees: int = 100
    boost_stages: int = 50
    max_depth: int | None = None
    min_samples_leaf: int = 1
    drop: frozenset[str] = field(default_factory=frozenset)

    def validate(self) -> None:
        if self.classifier not in _CLASSIFIERS:
            raise ConfigError(f"classifier must be one of {_CLASSIFIERS}, got {self.classifier!r}")
        if self.k < 1:
            raise ConfigError(f"k must be >= 1, got {self.k}")
        if self.window not in _WINDOWS:
            raise ConfigError(f"window must be one of 10/30/50/all, got {self.window!r}")
        if self.image_mode not in ("external", "fallback", "uniform"):
            raise ConfigError(f"unknown image mode {self.image_mode!r}")
        if self.mode not in ("tri", "bi"):
            raise ConfigError(f"mode must be tri or bi, got {self.mode!r}")
        if self.stacking not in ("oof", "resub"):
            raise ConfigError(f"stacking must be oof or resub, got {self.stacking!r}")
        if self.inner_folds < 2:
            raise ConfigError(f"inner_folds must be >= 2, got {self.inner_folds}")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError(f"seed must be a non-negative integer, got {self.seed!r}")
        if self.n_trees < 1 or self.boost_stages < 1 or self.min_samples_leaf < 1:
            raise ConfigError("n_trees, boost_stages, and min_samples_leaf must be >= 1")
        if self.max_depth is not None and self.max_depth < 1:
            raise ConfigError(f"max_depth must be >= 1 or unset, got {self.max_depth}")
        bad = self.drop - set(FEATURE_GROUPS)
        if bad:
            raise ConfigError(f"unknown feature group(s): {', '.join(sorted(bad))}")
        if not self.channel_names():
            raise ConfigError("configuration drops every channel")

    def roles(self) -> tuple[Role, ...]:
        return ROLE_ORDER if self.mode == "tri" else BI_ROLES

    def kept_bf_features(self) -> tuple[str, ...]:
        dropped = {name for g in self.drop if g in BF_GROUPS for name in BF_GROUPS[g]}
        return tuple(n for n in BF_FEATURE_NAMES if n not in dropped)

    def channel_names(self) -> tuple[str, ...]:
        has_bf = bool(self.kept_bf_features())
        has_af = "AF1" not in self.drop
        names: list[str] = []
        if self.mode == "tri":
            if has_bf:
                names.append("bf")
            if has_af:
                names.append("af")
        else:
            if has_bf or has_af:
                names.append("merged")
        if "IMG" not in self.drop:
            names.append("image")
        return tuple(names)

    def to_dict(self) -> dict:
        return {
            "classifier": self.classifier,
            "k": self.k,
            "window": self.window,
            "image_mode": self.image_mode,
            "mode": self.mode,
            "seed": self.seed,
            "stacking": self.stacking,
            "inner_folds": self.inner_folds,
            "n_trees": self.n_trees,
            "boost_stages": self.boost_stages,
            "max_depth": self.max_depth,
            "min_samples_leaf": self.min_samples_leaf,
            "drop": sorted(self.drop),
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "HybridConfig":
        data = dict(obj)
        data["drop"] = frozenset(data.get("drop", ()))
        return cls(**data)


def assemble_bf(
    record: UserRecord,
    resources: ResourceBundle,
    window: int | None = None,
    imputed_brightness: float = 0.5,
    image_stats: np.ndarray | None = None,
    drop: frozenset[str] = frozenset(),
) -> np.ndarray:
    """The basic-feature vector in fixed order, minus any dropped groups.

    ``imputed_brightness`` is used when the record has no profile image (the
    trainer passes the training-set mean). ``image_stats`` may carry
    precomputed statistics; its first entry is the brightness.
    """
    keep = {
        name
        for group, names in BF_GROUPS.items()
        if group not in drop
        for name in names
    }
    values: dict[str, float] = {}
    if "score_d_name" in keep:
        values["score_d_name"] = display_name_score(record.display_name, resources.names)
    if "score_s_name" in keep:
        values["score_s_name"] = screen_name_score(
            record.screen_name, resources.names, resources.lexicon
        )
    if "score_fp_desc" in keep:
        values["score_fp_desc"] = float(
            description_first_person_score(
                record.description, resources.first_person, resources.brand_words
            )
        )
    if "score_tf_desc" in keep:
        values["score_tf_desc"] = float(description_term_count(record.description))
    if "score_tff" in keep:
        values["score_tff"] = tff_score(record.followers, record.friends)
    if "score_b_image" in keep:
        if image_stats is not None:
            values["score_b_image"] = float(image_stats[0])
        elif record.image_path is not None:
            stats = record_image_stats(record)
            assert stats is not None
            values["score_b_image"] = float(stats[0])
        else:
            values["score_b_image"] = float(imputed_brightness)
    if keep & set(BF_GROUPS["BF5"]):
        scores = tweet_scores(
            record.tweets,
            resources.first_person,
            resources.interjections,
            resources.emotions,
            window,
        )
        values["score_fp_tweet"] = scores.fp_tweet
        values["score_i_tweet"] = scores.i_tweet
        values["score_e_tweet"] = scores.e_tweet
    names = tuple(n for n in BF_FEATURE_NAMES if n in keep)
    return np.array([values[n] for n in names], dtype=np.float64)


def _fit_learner(config: HybridConfig, n_classes: int):
    """A (X, y, seed) -> model closure for the configured classifier type."""
    if config.classifier == "tree":
        params = TreeParams(max_depth=config.max_depth, min_samples_leaf=config.min_samples_leaf)
        return lambda X, y, seed: train_decision_tree(
            X, y, params=params, seed=seed, n_classes=n_classes
        )
    if config.classifier == "forest":
        params = ForestParams(
            n_trees=config.n_trees,
            max_depth=config.max_depth,
            min_samples_leaf=config.min_samples_leaf,
        )
        return lambda X, y, seed: train_random_forest(
            X, y, params=params, seed=seed, n_classes=n_classes
        )
    params = BoostParams(n_stages=config.boost_stages)
    return lambda X, y, seed: train_adaboost(X, y, params=params, seed=seed, n_classes=n_classes)


def _stratified_label_folds(y: np.ndarray, n_folds: int, seed: int) -> np.ndarray:
    """Per-row fold indices, class-balanced; complements must cover all classes."""
    if n_folds < 2:
        raise DataFormatError(f"inner folds must be >= 2, got {n_folds}")
    n_folds = min(n_folds, len(y))
    rng = np.random.default_rng(seed)
    folds = np.empty(len(y), dtype=np.int64)
    for cls in np.unique(y):
        positions = np.flatnonzero(y == cls)
        positions = positions[rng.permutation(len(positions))]
        folds[positions] = np.arange(len(positions)) % n_folds
    classes = set(np.unique(y))
    for f in range(n_folds):
        train_classes = set(np.unique(y[folds != f]))
        if train_classes != classes:
            raise DataFormatError(
                f"stratification infeasible: fold {f} leaves a class with no training rows"
            )
    return folds


def out_of_fold_probs(X, y, fit, inner_folds: int, seed: int) -> np.ndarray:
    """Per-row probabilities from models that never saw their row.

    ``fit`` is a (X, y, seed) -> model callable; each inner fold is predicted
    by a model trained on its complement.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    folds = _stratified_label_folds(y, inner_folds, derive_seed(seed, "oof-folds"))
    out: np.ndarray | None = None
    for f in range(folds.max() + 1):
        test = folds == f
        if not test.any():
            continue
        train = ~test
        model = fit(X[train], y[train], derive_seed(seed, "oof-fit", int(f)))
        probs = predict_proba(model, X[test])
        if out is None:
            out = np.zeros((len(y), probs.shape[1]), dtype=np.float64)
        out[test] = probs
    assert out is not None
    return out


@dataclass
class RolePrediction:
    user_id: str
    role: Role
    probabilities: tuple[float, ...]
    channel_probabilities: dict[str, tuple[float, ...]]
    flags: tuple[str, ...] = ()


@dataclass
class HybridModel:
    roles: tuple[Role, ...]
    config: HybridConfig
    bf_feature_names: tuple[str, ...]
    vocab: KTopVocabulary | None
    channel_models: dict[str, object]  # "bf"/"af"/"merged" -> learner model
    image_source: ImageProbSource | None
    final_model: object
    brightness_mean: float
    fingerprints: dict[str, str]

    def channel_names(self) -> tuple[str, ...]:
        return self.config.channel_names()


class _AssemblyContext:
    """Per-training-corpus feature context: image stats and the brightness mean."""

    def __init__(self, corpus: UserCorpus, stats_cache: dict[str, np.ndarray | None] | None):
        self.stats: dict[str, np.ndarray | None] = {}
        for rec in corpus:
            if stats_cache is not None and rec.user_id in stats_cache:
                self.stats[rec.user_id] = stats_cache[rec.user_id]
            else:
                self.stats[rec.user_id] = record_image_stats(rec)
        present = [s[0] for s in self.stats.values() if s is not None]
        self.brightness_mean = float(np.mean(present)) if present else 0.5


def _check_labels(corpus: UserCorpus, roles: tuple[Role, ...]) -> np.ndarray:
    role_to_idx = {role: i for i, role in enumerate(roles)}
    y = np.empty(len(corpus), dtype=np.int64)
    for i, rec in enumerate(corpus):
        if rec.label is None:
            raise DataFormatError(f"user {rec.user_id!r} has no label")
        if rec.label not in role_to_idx:
            raise DataFormatError(
                f"user {rec.user_id!r} has label {rec.label.value!r}, "
                f"outside roles {[r.value for r in roles]}"
            )
        y[i] = role_to_idx[rec.label]
    for role in roles:
        if role_to_idx[role] not in y:
            raise DataFormatError(f"role {role.value!r} absent from training corpus")
    return y


def train_hybrid(
    corpus: UserCorpus,
    resources: ResourceBundle,
    config: HybridConfig = HybridConfig(),
    external_probs: dict[str, tuple[float, ...]] | str | Path | None = None,
    image_stats_cache: dict[str, np.ndarray | None] | None = None,
) -> HybridModel:
    """Train all channels and the final stacked classifier on a labeled corpus.

    Channel probabilities used to train the final classifier come from
    out-of-fold predictions (or resubstitution when configured). External and
    uniform image sources contribute their per-user probabilities directly;
    a trained fallback source is stacked out-of-fold like the other channels.
    """
    config.validate()
    roles = config.roles()
    n_classes = len(roles)
    y = _check_labels(corpus, roles)
    ctx = _AssemblyContext(corpus, image_stats_cache)
    seed = config.seed
    fit = _fit_learner(config, n_classes)

    kept_bf = config.kept_bf_features()
    x_bf: np.ndarray | None = None
    if kept_bf:
        x_bf = np.stack(
            [
                assemble_bf(
                    rec,
                    resources,
                    window=config.window,
                    imputed_brightness=ctx.brightness_mean,
                    image_stats=ctx.stats[rec.user_id],
                    drop=config.drop,
                )
                for rec in corpus
            ]
        )

    vocab: KTopVocabulary | None = None
    x_af: np.ndarray | None = None
    if "AF1" not in config.drop:
        vocab = build_ktop_vocabulary(corpus, config.k, resources.stoplist, roles)
        x_af = np.stack([ktop_score_vector(rec.tweets, vocab) for rec in corpus])

    if config.mode == "tri":
        channel_features = [("bf", x_bf), ("af", x_af)]
    else:
        parts = [x for x in (x_bf, x_af) if x is not None]
        merged = np.hstack(parts) if parts else None
        channel_features = [("merged", merged)]
    channel_features = [(name, X) for name, X in channel_features if X is not None]

    channel_models: dict[str, object] = {}
    blocks: list[np.ndarray] = []
    for name, X in channel_features:
        channel_models[name] = fit(X, y, derive_seed(seed, name))
        if config.stacking == "oof":
            blocks.append(
                out_of_fold_probs(X, y, fit, config.inner_folds, derive_seed(seed, name, "x"))
            )
        else:
            blocks.append(predict_proba(channel_models[name], X))

    image_source: ImageProbSource | None = None
    if "IMG" not in config.drop:
        if config.image_mode == "uniform":
            image_source = uniform_source(n_classes)
        elif config.image_mode == "external":
            if isinstance(external_probs, (str, Path)):
                probs_map = load_external_probs(external_probs, n_classes)
            elif external_probs is not None:
                probs_map = dict(external_probs)
            else:
                # fall back to probabilities inlined in the dataset
                probs_map = {
                    rec.user_id: rec.image_probs
                    for rec in corpus
                    if rec.image_probs is not None
                }
                if n_classes != 3:
                    raise ConfigError(
                        "inline image_probs are tri-class; bi-class external mode "
                        "needs a 2-column probability file"
                    )
                if not probs_map:
                    raise ConfigError(
                        "external image mode needs a probability file or inline image_probs"
                    )
            image_source = external_source(probs_map, n_classes)
        else:
            image_source = build_fallback_source(
                [ctx.stats[rec.user_id] for rec in corpus],
                y,
                n_classes,
                ForestParams(n_trees=config.n_trees),
                derive_seed(seed, "image"),
            )
        if image_source.mode == "fallback" and config.stacking == "oof":
            # resubstitution probabilities from the fallback forest are
            # near-perfect on its own training rows and would make the stacker
            # over-trust the image channel; stack it out-of-fold like the rest
            assert image_source.impute_stats is not None
            impute = np.array(image_source.impute_stats, dtype=np.float64)
            stats_matrix = np.stack(
                [
                    ctx.stats[rec.user_id] if ctx.stats[rec.user_id] is not None else impute
                    for rec in corpus
                ]
            )
            fallback_fit = lambda XX, yy, s: train_random_forest(
                XX, yy, params=ForestParams(n_trees=config.n_trees), seed=s, n_classes=n_classes
            )
            image_block = out_of_fold_probs(
                stats_matrix, y, fallback_fit, config.inner_folds, derive_seed(seed, "image", "x")
            )
        else:
            image_block = np.stack(
                [
                    channel_probs(rec, image_source, stats=ctx.stats[rec.user_id])[0]
                    for rec in corpus
                ]
            )
        blocks.append(image_block)

    stacked = np.hstack(blocks)
    expected = len(config.channel_names()) * n_classes
    assert stacked.shape[1] == expected, (stacked.shape, expected)
    final_model = fit(stacked, y, derive_seed(seed, "final"))

    return HybridModel(
        roles=roles,
        config=config,
        bf_feature_names=kept_bf,
        vocab=vocab,
        channel_models=channel_models,
        image_source=image_source,
        final_model=final_model,
        brightness_mean=ctx.brightness_mean,
        fingerprints=resources.fingerprints(),
    )


def train_binary_variant(
    corpus: UserCorpus,
    resources: ResourceBundle,
    config: HybridConfig = HybridConfig(),
    external_probs: dict[str, tuple[float, ...]] | str | Path | None = None,
    image_stats_cache: dict[str, np.ndarray | None] | None = None,
) -> HybridModel:
    """The two-class variant: merged basic+k-top channel plus the image channel."""
    return train_hybrid(
        corpus,
        resources,
        replace(config, mode="bi"),
        external_probs=external_probs,
        image_stats_cache=image_stats_cache,
    )


def predict_role(
    model: HybridModel, record: UserRecord, resources: ResourceBundle
) -> RolePrediction:
    """Predict one user's role with full per-channel provenance."""
    config = model.config
    flags: list[str] = []
    stats = record_image_stats(record)

    x_bf: np.ndarray | None = None
    if model.bf_feature_names:
        if "score_b_image" in model.bf_feature_names and stats is None:
            flags.append("imputed_brightness")
        x_bf = assemble_bf(
            record,
            resources,
            window=config.window,
            imputed_brightness=model.brightness_mean,
            image_stats=stats,
            drop=config.drop,
        )
    x_af: np.ndarray | None = None
    if model.vocab is not None:
        x_af = ktop_score_vector(record.tweets, model.vocab)

    channel_vectors: dict[str, np.ndarray] = {}
    for name in model.channel_names():
        if name == "image":
            assert model.image_source is not None
            probs, flagged = channel_probs(record, model.image_source, stats=stats)
            if flagged:
                flags.append("image_channel_degraded")
            channel_vectors[name] = probs
        else:
            if name == "bf":
                x = x_bf
            elif name == "af":
                x = x_af
            else:
                parts = [p for p in (x_bf, x_af) if p is not None]
                x = np.concatenate(parts)
            assert x is not None
            channel_vectors[name] = predict_proba(model.channel_models[name], x)

    z = np.concatenate([channel_vectors[name] for name in model.channel_names()])
    final = predict_proba(model.final_model, z)
    winner = int(np.argmax(final))  # ties resolve to the lower class index
    return RolePrediction(
        user_id=record.user_id,
        role=model.roles[winner],
        probabilities=tuple(float(p) for p in final),
        channel_probabilities={
            name: tuple(float(p) for p in vec) for name, vec in channel_vectors.items()
        },
        flags=tuple(flags),
    )


def _image_source_to_dict(source: ImageProbSource | None) -> dict | None:
    if source is None:
        return None
    return {
        "mode": source.mode,
        "n_classes": source.n_classes,
        "external": (
            {uid: list(vec) for uid, vec in source.external.items()}
            if source.external is not None
            else None
        ),
        "model": model_to_dict(source.model) if source.model is not None else None,
        "impute_stats": list(source.impute_stats) if source.impute_stats is not None else None,
    }


def _image_source_from_dict(obj: dict | None) -> ImageProbSource | None:
    if obj is None:
        return None
    return ImageProbSource(
        mode=obj["mode"],
        n_classes=obj["n_classes"],
        external=(
            {uid: tuple(vec) for uid, vec in obj["external"].items()}
            if obj["external"] is not None
            else None
        ),
        model=model_from_dict(obj["model"]) if obj["model"] is not None else None,
        impute_stats=tuple(obj["impute_stats"]) if obj["impute_stats"] is not None else None,
    )


def save_hybrid(model: HybridModel, path: str | Path) -> None:
    """Serialize the full hybrid bundle (components, vocabulary, fingerprints)."""
    payload = {
        "format": HYBRID_FORMAT,
        "version": HYBRID_VERSION,
        "roles": [r.value for r in model.roles],
        "config": model.config.to_dict(),
        "bf_feature_names": list(model.bf_feature_names),
        "vocab": (
            {
                "k": model.vocab.k,
                "roles": [r.value for r in model.vocab.roles],
                "words": list(model.vocab.words),
            }
            if model.vocab is not None
            else None
        ),
        "channel_models": {
            name: model_to_dict(m) for name, m in model.channel_models.items()
        },
        "image_source": _image_source_to_dict(model.image_source),
        "final_model": model_to_dict(model.final_model),
        "brightness_mean": model.brightness_mean,
        "fingerprints": dict(model.fingerprints),
    }
    Path(path).write_text(
        json.dumps(payload, sort_keys=True, separators=(",", ":")) + "\n", encoding="utf-8"
    )


def load_hybrid(path: str | Path, resources: ResourceBundle) -> HybridModel:
    """Load a hybrid bundle, verifying resource fingerprints match."""
    path = Path(path)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise DataFormatError(f"cannot read model {path}: {exc}") from exc
    if payload.get("format") != HYBRID_FORMAT:
        raise DataFormatError(f"{path}: not a {HYBRID_FORMAT} file")
    if payload.get("version") != HYBRID_VERSION:
        raise DataFormatError(f"{path}: unsupported version {payload.get('version')!r}")
    stored = payload["fingerprints"]
    current = resources.fingerprints()
    mismatched = sorted(k for k in stored if stored[k] != current.get(k))
    if mismatched:
        raise ResourceError(
            "resource fingerprint mismatch: " + ", ".join(mismatched)
        )
    vocab_obj = payload["vocab"]
    return HybridModel(
        roles=tuple(Role(r) for r in payload["roles"]),
        config=HybridConfig.from_dict(payload["config"]),
        bf_feature_names=tuple(payload["bf_feature_names"]),
        vocab=(
            KTopVocabulary(
                k=vocab_obj["k"],
                roles=tuple(Role(r) for r in vocab_obj["roles"]),
                words=tuple(vocab_obj["words"]),
            )
            if vocab_obj is not None
            else None
        ),
        channel_models={
            name: model_from_dict(obj) for name, obj in payload["channel_models"].items()
        },
        image_source=_image_source_from_dict(payload["image_source"]),
        final_model=model_from_dict(payload["final_model"]),
        brightness_mean=payload["brightness_mean"],
        fingerprints=dict(stored),
    )
