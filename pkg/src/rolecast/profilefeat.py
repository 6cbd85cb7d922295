"""Description, relationship, and profile-image brightness features."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .corpus import WordList
from .errors import DataFormatError

__all__ = [
    "ProfileFeatures",
    "profile_features",
    "strip_entities",
    "description_first_person_score",
    "description_term_count",
    "tff_score",
    "image_brightness",
    "load_image_rgb",
]

_WORD = re.compile(r"[a-z0-9]+(?:'[a-z0-9]+)*")
_URL_TOKEN = re.compile(r"^(?:\w+://|www\.)", re.IGNORECASE)


@dataclass(frozen=True)
class ProfileFeatures:
    fp_desc: int  # -1, 0, or 1
    tf_desc: int
    tff: float
    brightness: float  # in [0, 1]

    def __post_init__(self) -> None:
        if self.fp_desc not in (-1, 0, 1):
            raise DataFormatError(f"fp_desc must be -1, 0, or 1, got {self.fp_desc}")
        if self.tf_desc < 0:
            raise DataFormatError(f"tf_desc must be >= 0, got {self.tf_desc}")
        if not 0.0 <= self.brightness <= 1.0:
            raise DataFormatError(f"brightness must be in [0, 1], got {self.brightness}")


def profile_features(
    description: str,
    followers: int,
    friends: int,
    brightness: float,
    first: WordList,
    brand: WordList,
) -> ProfileFeatures:
    """Bundle the description, relationship, and brightness features."""
    return ProfileFeatures(
        fp_desc=description_first_person_score(description, first, brand),
        tf_desc=description_term_count(description),
        tff=tff_score(followers, friends),
        brightness=brightness,
    )


def strip_entities(text: str) -> str:
    """Drop hashtag, mention, and URL tokens; rejoin the rest with single spaces."""
    kept = [
        tok
        for tok in text.split()
        if not tok.startswith("#") and not tok.startswith("@") and not _URL_TOKEN.match(tok)
    ]
    return " ".join(kept)


def _words(text: str) -> list[str]:
    return _WORD.findall(text.lower())


def description_first_person_score(
    description: str, first: WordList, brand: WordList
) -> int:
    """1 if only first-person words hit, -1 if only brand words hit, else 0."""
    tokens = _words(description)
    has_first = any(t in first for t in tokens)
    has_brand = any(t in brand for t in tokens)
    if has_first and not has_brand:
        return 1
    if has_brand and not has_first:
        return -1
    return 0


def description_term_count(description: str) -> int:
    """Number of tokens left after removing hashtags, mentions, and URLs."""
    return len(_words(strip_entities(description)))


def tff_score(followers: int, friends: int) -> float:
    """ln((followers^2 + 1) / (friends + 1)); the +1 terms keep zero counts legal."""
    if followers < 0 or friends < 0:
        raise DataFormatError("follower/friend counts must be >= 0")
    return math.log((followers * followers + 1) / (friends + 1))


def image_brightness(rgb: np.ndarray) -> float:
    """Mean HSV value channel of an RGB raster: per pixel max(R,G,B)/255."""
    arr = np.asarray(rgb)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise DataFormatError(f"expected an RGB raster of shape (H, W, 3), got {arr.shape}")
    if arr.shape[0] == 0 or arr.shape[1] == 0:
        raise DataFormatError("image has no pixels")
    v = arr.astype(np.float64).max(axis=2) / 255.0
    return float(v.mean())


def load_image_rgb(path: str | Path) -> np.ndarray:
    """Decode a PNG/JPEG file to an RGB uint8 array, compositing alpha over white."""
    path = Path(path)
    try:
        with Image.open(path) as img:
            img.load()
            if img.mode in ("RGBA", "LA", "PA") or (
                img.mode == "P" and "transparency" in img.info
            ):
                rgba = img.convert("RGBA")
                background = Image.new("RGBA", rgba.size, (255, 255, 255, 255))
                img = Image.alpha_composite(background, rgba)
            rgb = img.convert("RGB")
            return np.asarray(rgb, dtype=np.uint8)
    except (UnidentifiedImageError, OSError) as exc:
        raise DataFormatError(f"cannot decode image {path}: {exc}") from exc
