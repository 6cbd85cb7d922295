"""Per-user image-channel probability vectors.

Probabilities come from an external per-user file (the drop-in point for a
real image classifier), from a built-in random-forest fallback over simple
image statistics, or from a uniform stub.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import UserRecord
from .errors import ConfigError, DataFormatError
from .learners import ForestModel, ForestParams, predict_proba, train_random_forest
from .profilefeat import load_image_rgb

__all__ = [
    "IMAGE_STAT_DIM",
    "ImageProbSource",
    "image_stat_vector",
    "record_image_stats",
    "load_external_probs",
    "uniform_source",
    "external_source",
    "build_fallback_source",
    "channel_probs",
]

IMAGE_STAT_DIM = 7


def image_stat_vector(rgb: np.ndarray) -> np.ndarray:
    """7 statistics of an RGB raster: mean V, then mean and std of each channel.

    All values are normalized to [0, 1].
    """
    arr = np.asarray(rgb, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise DataFormatError(f"expected an RGB raster of shape (H, W, 3), got {arr.shape}")
    if arr.shape[0] == 0 or arr.shape[1] == 0:
        raise DataFormatError("image has no pixels")
    scaled = arr / 255.0
    v_mean = scaled.max(axis=2).mean()
    out = np.empty(IMAGE_STAT_DIM, dtype=np.float64)
    out[0] = v_mean
    for c in range(3):
        channel = scaled[:, :, c]
        out[1 + 2 * c] = channel.mean()
        out[2 + 2 * c] = channel.std()
    return out


def record_image_stats(record: UserRecord) -> np.ndarray | None:
    """Image statistics for a record, or None when it has no image."""
    if record.image_path is None:
        return None
    return image_stat_vector(load_image_rgb(record.image_path))


def load_external_probs(path: str | Path, n_classes: int = 3) -> dict[str, tuple[float, ...]]:
    """Parse an external probability file: ``user_id p1 ... pN`` per line.

    Vectors whose sum falls within [0.99, 1.01] are renormalized; anything
    else is rejected.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataFormatError(f"cannot read probability file {path}: {exc}") from exc
    out: dict[str, tuple[float, ...]] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 1 + n_classes:
            raise DataFormatError(
                f"{path}:{lineno}: expected user_id plus {n_classes} probabilities"
            )
        user_id = parts[0]
        try:
            probs = [float(p) for p in parts[1:]]
        except ValueError:
            raise DataFormatError(f"{path}:{lineno}: non-numeric probability") from None
        if any(p < 0 for p in probs):
            raise DataFormatError(f"{path}:{lineno}: negative probability")
        total = sum(probs)
        if not 0.99 <= total <= 1.01:
            raise DataFormatError(
                f"{path}:{lineno}: probabilities sum to {total!r}, outside [0.99, 1.01]"
            )
        if user_id in out:
            raise DataFormatError(f"{path}:{lineno}: duplicate user_id {user_id!r}")
        out[user_id] = tuple(p / total for p in probs)
    if not out:
        raise DataFormatError(f"{path}: no probability lines found")
    return out


@dataclass(frozen=True)
class ImageProbSource:
    """Where image-channel probabilities come from: external, fallback, or uniform."""

    mode: str  # "external" | "fallback" | "uniform"
    n_classes: int
    external: dict[str, tuple[float, ...]] | None = None
    model: ForestModel | None = None
    impute_stats: tuple[float, ...] | None = None


def uniform_source(n_classes: int) -> ImageProbSource:
    return ImageProbSource(mode="uniform", n_classes=n_classes)


def external_source(probs: dict[str, tuple[float, ...]], n_classes: int) -> ImageProbSource:
    for user_id, vec in probs.items():
        if len(vec) != n_classes:
            raise DataFormatError(
                f"external probabilities for {user_id!r} have {len(vec)} entries, "
                f"expected {n_classes}"
            )
    return ImageProbSource(mode="external", n_classes=n_classes, external=dict(probs))


def build_fallback_source(
    stats: list[np.ndarray | None],
    y: np.ndarray,
    n_classes: int,
    params: ForestParams,
    seed: int,
) -> ImageProbSource:
    """Train the fallback forest on available image statistics.

    Users without images are imputed with the mean statistics of those that
    have them; training with no images at all is a configuration error.
    """
    present = [s for s in stats if s is not None]
    if not present:
        raise ConfigError("fallback image mode needs at least one decodable profile image")
    mean_stats = np.mean(np.stack(present), axis=0)
    X = np.stack([s if s is not None else mean_stats for s in stats])
    model = train_random_forest(X, y, params=params, seed=seed, n_classes=n_classes)
    return ImageProbSource(
        mode="fallback",
        n_classes=n_classes,
        model=model,
        impute_stats=tuple(float(v) for v in mean_stats),
    )


def channel_probs(
    record: UserRecord,
    source: ImageProbSource,
    stats: np.ndarray | None = None,
) -> tuple[np.ndarray, bool]:
    """Probability vector for one user, plus a flag for degraded lookups.

    The flag is set when an external map is missing the user (uniform is
    substituted) or when fallback statistics had to be imputed. ``stats`` may
    carry precomputed image statistics to avoid re-decoding.
    """
    k = source.n_classes
    if source.mode == "uniform":
        return np.full(k, 1.0 / k), False
    if source.mode == "external":
        assert source.external is not None
        vec = source.external.get(record.user_id)
        if vec is None:
            return np.full(k, 1.0 / k), True
        return np.array(vec, dtype=np.float64), False
    if source.mode == "fallback":
        assert source.model is not None
        flagged = False
        if stats is None:
            stats = record_image_stats(record)
        if stats is None:
            if source.impute_stats is None:
                raise ConfigError(
                    f"user {record.user_id!r} has no image and no imputation is configured"
                )
            stats = np.array(source.impute_stats, dtype=np.float64)
            flagged = True
        return predict_proba(source.model, stats), flagged
    raise ConfigError(f"unknown image source mode {source.mode!r}")
