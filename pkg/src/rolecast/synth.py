"""Deterministic synthetic corpora with role-correlated signals.

A separability dial in [0, 1] controls how often each user draws role-specific
attributes instead of shared ones; at 0 every role is identically distributed,
at 1 every active signal group is fully role-typical. Signal groups can be
restricted to plant signal in a single feature family.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .corpus import ROLE_ORDER, Role, UserCorpus, UserRecord
from .errors import ConfigError
from .hybrid import FEATURE_GROUPS

__all__ = ["RoleProfile", "SyntheticSpec", "default_synthetic_spec", "generate_synthetic_corpus"]


@dataclass(frozen=True)
class RoleProfile:
    name_pool: tuple[str, ...]
    display_suffixes: tuple[str, ...]
    screen_styles: tuple[str, ...]  # templates over {name} and {digits}
    description_templates: tuple[str, ...]  # templates over {word}
    followers_mu: float
    followers_sigma: float
    friends_mu: float
    friends_sigma: float
    fp_rate: float
    interjection_rate: float
    emotion_rate: float
    markers: tuple[str, ...]
    hashtag_rate: float
    brightness: float
    channel_fractions: tuple[float, float, float]

    def validate(self) -> None:
        if not (self.name_pool and self.screen_styles and self.description_templates):
            raise ConfigError("role profile pools must be non-empty")
        for rate in (self.fp_rate, self.interjection_rate, self.emotion_rate, self.hashtag_rate):
            if not 0.0 <= rate <= 1.0:
                raise ConfigError(f"rates must be in [0, 1], got {rate}")
        if not 0.0 <= self.brightness <= 1.0:
            raise ConfigError(f"brightness must be in [0, 1], got {self.brightness}")
        if not self.markers:
            raise ConfigError("marker pool must be non-empty")


@dataclass(frozen=True)
class SyntheticSpec:
    profiles: dict[Role, RoleProfile]
    shared: RoleProfile
    separability: float
    roles: tuple[Role, ...] = ROLE_ORDER
    signal_groups: frozenset[str] = field(default_factory=lambda: frozenset(FEATURE_GROUPS))
    tweets_min: int = 8
    tweets_max: int = 14
    image_dir: str | None = None
    image_size: int = 8

    def validate(self) -> None:
        if not 0.0 <= self.separability <= 1.0:
            raise ConfigError(f"separability must be in [0, 1], got {self.separability}")
        if not self.roles:
            raise ConfigError("spec needs at least one role")
        for role in self.roles:
            if role not in self.profiles:
                raise ConfigError(f"no profile for role {role.value!r}")
            self.profiles[role].validate()
        self.shared.validate()
        unknown = self.signal_groups - set(FEATURE_GROUPS)
        if unknown:
            raise ConfigError(f"unknown signal group(s): {', '.join(sorted(unknown))}")
        if self.tweets_min < 1 or self.tweets_max < self.tweets_min:
            raise ConfigError("tweet count range is invalid")
        if self.image_size < 1:
            raise ConfigError("image_size must be >= 1")


_STOP_FILLERS = (
    "the",
    "and",
    "a",
    "to",
    "of",
    "in",
    "for",
    "on",
    "at",
    "with",
    "this",
    "that",
    "is",
    "it",
    "was",
    "so",
    "but",
    "just",
    "not",
    "all",
    "out",
    "up",
    "now",
    "then",
    "about",
    "over",
)

_FILLERS = (
    "coffee",
    "weather",
    "lunch",
    "weekend",
    "morning",
    "watching",
    "reading",
    "walking",
    "thinking",
    "evening",
    "nice",
    "city",
    "music",
    "movie",
    "dinner",
    "photo",
    "friends",
    "park",
    "street",
    "waiting",
    "sunset",
    "train",
    "river",
    "cloud",
    "coat",
    "boots",
    "bookshelf",
    "snack",
    "chair",
    "lamp",
    "road",
    "bridge",
    "tree",
    "leaf",
    "stone",
    "glass",
    "plate",
    "bottle",
    "ticket",
    "wallet",
)

_FP_WORDS = ("i", "my", "me", "i'm", "am", "mine")
_INTERJECTIONS = ("wow", "oh", "hey", "yay", "ugh", "omg", "haha")
_EMOTION_WORDS = ("happy", "love", "excited", "sad", "amazing", "beautiful", "grateful")

_MALE_NAMES = (
    "john",
    "michael",
    "david",
    "james",
    "robert",
    "william",
    "thomas",
    "daniel",
    "matthew",
    "andrew",
    "kevin",
    "brian",
    "jack",
    "henry",
    "samuel",
    "oliver",
    "liam",
    "noah",
    "ethan",
    "lucas",
)
_FEMALE_NAMES = (
    "mary",
    "emma",
    "olivia",
    "sophia",
    "emily",
    "hannah",
    "sarah",
    "jessica",
    "grace",
    "chloe",
    "anna",
    "laura",
    "rachel",
    "julia",
    "natalie",
    "samantha",
    "isabella",
    "mia",
    "charlotte",
    "lucy",
)
_BRAND_WORDS = ("acme", "lumen", "nexa", "orbix", "zentro", "velto", "kravo", "mintia")
_NEUTRAL_NAMES = ("zephyr", "nimbus", "quartz", "pixelroot", "echofox", "novawisp")
_SURNAMES = ("smith", "johnson", "walker", "turner", "brooks", "hayes")

_MALE_MARKERS = (
    "football",
    "touchdown",
    "gaming",
    "engine",
    "server",
    "playoffs",
    "barbecue",
    "garage",
    "codebase",
    "league",
)
_FEMALE_MARKERS = (
    "fashion",
    "makeup",
    "yoga",
    "recipe",
    "dress",
    "skincare",
    "brunch",
    "journal",
    "bouquet",
    "knitting",
)
_BRAND_MARKERS = (
    "sale",
    "discount",
    "giveaway",
    "launch",
    "voucher",
    "restock",
    "clearance",
    "bundle",
    "promo",
    "shipping",
)
_SHARED_MARKERS = (
    "update",
    "moment",
    "story",
    "season",
    "project",
    "journey",
    "detail",
    "corner",
    "window",
    "garden",
)


def default_synthetic_spec(
    separability: float,
    image_dir: str | Path | None = None,
    signal_groups=None,
    roles: tuple[Role, ...] = ROLE_ORDER,
) -> SyntheticSpec:
    """The stock three-role (or two-role) spec used by the test harness."""
    male = RoleProfile(
        name_pool=_MALE_NAMES,
        display_suffixes=_SURNAMES,
        screen_styles=("{name}{digits}", "{name}_{digits}", "real{name}"),
        description_templates=(
            "i'm a {word} fan",
            "my life is {word}",
            "i am into {word} these days",
        ),
        followers_mu=5.7,
        followers_sigma=0.7,
        friends_mu=5.7,
        friends_sigma=0.7,
        fp_rate=0.35,
        interjection_rate=0.10,
        emotion_rate=0.10,
        markers=_MALE_MARKERS,
        hashtag_rate=0.15,
        brightness=0.36,
        channel_fractions=(0.70, 0.82, 1.0),
    )
    female = RoleProfile(
        name_pool=_FEMALE_NAMES,
        display_suffixes=_SURNAMES,
        screen_styles=("{name}{digits}", "{name}_{digits}", "its{name}"),
        description_templates=(
            "i'm all about {word}",
            "my {word} diary",
            "me and my {word} adventures",
        ),
        followers_mu=5.4,
        followers_sigma=0.7,
        friends_mu=5.9,
        friends_sigma=0.7,
        fp_rate=0.55,
        interjection_rate=0.30,
        emotion_rate=0.40,
        markers=_FEMALE_MARKERS,
        hashtag_rate=0.15,
        brightness=0.52,
        channel_fractions=(1.0, 0.78, 0.86),
    )
    brand = RoleProfile(
        name_pool=_BRAND_WORDS,
        display_suffixes=("official", "store", "news", "shop", "hq"),
        screen_styles=("{name}official", "{name}hq", "{name}{digits}"),
        description_templates=(
            "official account of {word}",
            "the official {word} news feed",
            "official {word} deals and offers",
        ),
        followers_mu=9.2,
        followers_sigma=0.6,
        friends_mu=3.9,
        friends_sigma=0.6,
        fp_rate=0.04,
        interjection_rate=0.04,
        emotion_rate=0.08,
        markers=_BRAND_MARKERS,
        hashtag_rate=0.35,
        brightness=0.78,
        channel_fractions=(0.84, 1.0, 0.72),
    )
    shared = RoleProfile(
        name_pool=_NEUTRAL_NAMES,
        display_suffixes=_SURNAMES,
        screen_styles=("{name}{digits}", "the{name}"),
        description_templates=(
            "just another {word} account",
            "daily {word} and more",
            "{word} content for everyone",
        ),
        followers_mu=5.7,
        followers_sigma=0.7,
        friends_mu=5.7,
        friends_sigma=0.7,
        fp_rate=0.25,
        interjection_rate=0.15,
        emotion_rate=0.20,
        markers=_SHARED_MARKERS,
        hashtag_rate=0.15,
        brightness=0.50,
        channel_fractions=(1.0, 1.0, 1.0),
    )
    return SyntheticSpec(
        profiles={Role.MALE: male, Role.FEMALE: female, Role.BRAND: brand},
        shared=shared,
        separability=separability,
        roles=roles,
        signal_groups=(
            frozenset(FEATURE_GROUPS) if signal_groups is None else frozenset(signal_groups)
        ),
        image_dir=str(image_dir) if image_dir is not None else None,
    )


def _pick(rng: np.random.Generator, pool):
    return pool[int(rng.integers(0, len(pool)))]


def _write_image(
    path: Path, rng: np.random.Generator, brightness: float, fractions, size: int
) -> None:
    level = brightness * 255.0
    base = np.array(fractions, dtype=np.float64) * level
    noise = rng.normal(0.0, 10.0, size=(size, size, 3))
    arr = np.clip(base[None, None, :] + noise, 0, 255).astype(np.uint8)
    Image.fromarray(arr, "RGB").save(path)


def generate_synthetic_corpus(spec: SyntheticSpec, n_users: int, seed: int) -> UserCorpus:
    """Generate a labeled corpus; identical (spec, n_users, seed) give identical output."""
    spec.validate()
    if n_users < 1:
        raise ConfigError(f"n_users must be >= 1, got {n_users}")
    rng = np.random.default_rng(seed)
    image_dir = Path(spec.image_dir) if spec.image_dir is not None else None
    if image_dir is not None:
        image_dir.mkdir(parents=True, exist_ok=True)
    s = spec.separability
    records: list[UserRecord] = []
    for i in range(n_users):
        role = spec.roles[i % len(spec.roles)]
        role_profile = spec.profiles[role]

        def group_profile(group: str) -> RoleProfile:
            if group in spec.signal_groups and rng.random() < s:
                return role_profile
            return spec.shared

        p_name = group_profile("BF1")
        p_desc = group_profile("BF2")
        p_counts = group_profile("BF3")
        p_bright = group_profile("BF4")
        p_rates = group_profile("BF5")
        p_markers = group_profile("AF1")
        p_image = group_profile("IMG")

        name = _pick(rng, p_name.name_pool)
        display = f"{name.title()} {_pick(rng, p_name.display_suffixes).title()}"
        digits = str(int(rng.integers(10, 9999)))
        screen = _pick(rng, p_name.screen_styles).format(name=name, digits=digits)
        description = _pick(rng, p_desc.description_templates).format(
            word=_pick(rng, p_desc.markers)
        )
        followers = int(rng.lognormal(p_counts.followers_mu, p_counts.followers_sigma))
        friends = int(rng.lognormal(p_counts.friends_mu, p_counts.friends_sigma))

        n_tweets = int(rng.integers(spec.tweets_min, spec.tweets_max + 1))
        tweets: list[str] = []
        for _ in range(n_tweets):
            words = [_pick(rng, _STOP_FILLERS) for _ in range(int(rng.integers(2, 5)))]
            words += [_pick(rng, _FILLERS) for _ in range(int(rng.integers(1, 3)))]
            words.append(_pick(rng, p_markers.markers))
            if rng.random() < 0.4:
                words.append(_pick(rng, p_markers.markers))
            if rng.random() < p_rates.fp_rate:
                words.append(_pick(rng, _FP_WORDS))
            if rng.random() < p_rates.interjection_rate:
                words.append(_pick(rng, _INTERJECTIONS))
            if rng.random() < p_rates.emotion_rate:
                words.append(_pick(rng, _EMOTION_WORDS))
            if rng.random() < p_markers.hashtag_rate:
                words.append("#" + _pick(rng, p_markers.markers))
            order = rng.permutation(len(words))
            tweets.append(" ".join(words[j] for j in order))

        image_path: str | None = None
        if image_dir is not None:
            user_brightness = float(
                np.clip(rng.normal(p_bright.brightness, 0.06), 0.05, 0.98)
            )
            path = image_dir / f"u{i:05d}.png"
            _write_image(path, rng, user_brightness, p_image.channel_fractions, spec.image_size)
            image_path = str(path)

        records.append(
            UserRecord(
                user_id=f"u{i:05d}",
                screen_name=screen,
                display_name=display,
                description=description,
                followers=followers,
                friends=friends,
                tweets=tuple(tweets),
                label=role,
                image_path=image_path,
            )
        )
    return UserCorpus(records)
