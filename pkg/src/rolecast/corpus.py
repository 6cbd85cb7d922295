"""Datasets, name dictionaries, word lists, and stratified fold assignment.

Datasets are UTF-8 line-delimited JSON records, one user per line. Tweets are
inlined as a string array, newest first. Loaded corpora are treated as
immutable after construction.
"""

from __future__ import annotations

import csv
import enum
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataFormatError

__all__ = [
    "Role",
    "ROLE_ORDER",
    "BI_ROLES",
    "UserRecord",
    "UserCorpus",
    "NameDictionary",
    "WordList",
    "WordListKind",
    "FoldAssignment",
    "load_dataset",
    "save_dataset",
    "load_name_dictionary",
    "load_word_list",
    "stratified_folds",
]


class Role(enum.Enum):
    MALE = "male"
    FEMALE = "female"
    BRAND = "brand"

    def __str__(self) -> str:
        return self.value


ROLE_ORDER: tuple[Role, ...] = (Role.MALE, Role.FEMALE, Role.BRAND)
BI_ROLES: tuple[Role, ...] = (Role.MALE, Role.FEMALE)

_DATASET_FIELDS = {
    "user_id",
    "label",
    "display_name",
    "screen_name",
    "description",
    "followers",
    "friends",
    "tweets",
    "image_path",
    "image_probs",
}


@dataclass(frozen=True)
class UserRecord:
    """One social-media user: profile fields, tweet texts, optional image data."""

    user_id: str
    screen_name: str
    display_name: str = ""
    description: str = ""
    followers: int = 0
    friends: int = 0
    tweets: tuple[str, ...] = ()
    label: Role | None = None
    image_path: str | None = None
    image_probs: tuple[float, ...] | None = None

    def validate(self) -> None:
        if not isinstance(self.user_id, str) or not self.user_id:
            raise DataFormatError("user_id must be a non-empty string")
        if not isinstance(self.screen_name, str) or not self.screen_name:
            raise DataFormatError("screen_name must be a non-empty string")
        for name in ("followers", "friends"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int):
                raise DataFormatError(f"{name} must be an integer")
            if value < 0:
                raise DataFormatError(f"{name} must be >= 0, got {value}")
        if not all(isinstance(t, str) for t in self.tweets):
            raise DataFormatError("tweets must be an array of strings")
        if self.image_probs is not None:
            probs = self.image_probs
            if len(probs) != 3:
                raise DataFormatError("image_probs must have exactly 3 entries")
            if any(p < 0 for p in probs):
                raise DataFormatError("image_probs entries must be >= 0")
            if abs(sum(probs) - 1.0) > 1e-6:
                raise DataFormatError(f"image_probs must sum to 1, got {sum(probs)!r}")

    def to_json_dict(self) -> dict:
        out: dict = {
            "user_id": self.user_id,
            "screen_name": self.screen_name,
            "display_name": self.display_name,
            "description": self.description,
            "followers": self.followers,
            "friends": self.friends,
            "tweets": list(self.tweets),
        }
        if self.label is not None:
            out["label"] = self.label.value
        if self.image_path is not None:
            out["image_path"] = self.image_path
        if self.image_probs is not None:
            out["image_probs"] = list(self.image_probs)
        return out


def _record_from_json(obj: dict) -> UserRecord:
    if not isinstance(obj, dict):
        raise DataFormatError("record must be a JSON object")
    unknown = set(obj) - _DATASET_FIELDS
    if unknown:
        raise DataFormatError(f"unknown field(s): {', '.join(sorted(unknown))}")
    label = None
    if "label" in obj and obj["label"] is not None:
        try:
            label = Role(obj["label"])
        except ValueError:
            raise DataFormatError(
                f"label must be one of male/female/brand, got {obj['label']!r}"
            ) from None
    tweets = obj.get("tweets", [])
    if not isinstance(tweets, list):
        raise DataFormatError("tweets must be an array of strings")
    probs = obj.get("image_probs")
    if probs is not None:
        if not isinstance(probs, list) or not all(
            isinstance(p, (int, float)) and not isinstance(p, bool) for p in probs
        ):
            raise DataFormatError("image_probs must be an array of numbers")
        probs = tuple(float(p) for p in probs)
    record = UserRecord(
        user_id=obj.get("user_id", ""),
        screen_name=obj.get("screen_name", ""),
        display_name=obj.get("display_name", ""),
        description=obj.get("description", ""),
        followers=obj.get("followers", 0),
        friends=obj.get("friends", 0),
        tweets=tuple(tweets),
        label=label,
        image_path=obj.get("image_path"),
        image_probs=probs,
    )
    record.validate()
    return record


@dataclass
class UserCorpus:
    """An ordered, id-indexed collection of validated user records."""

    records: list[UserRecord]
    dropped_min_tweets: int = 0
    _by_id: dict[str, UserRecord] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        by_id: dict[str, UserRecord] = {}
        for rec in self.records:
            if rec.user_id in by_id:
                raise DataFormatError(f"duplicate user_id {rec.user_id!r}")
            by_id[rec.user_id] = rec
        self._by_id = by_id

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def get(self, user_id: str) -> UserRecord:
        return self._by_id[user_id]

    def __contains__(self, user_id: str) -> bool:
        return user_id in self._by_id

    def subset(self, user_ids) -> "UserCorpus":
        wanted = set(user_ids)
        return UserCorpus([r for r in self.records if r.user_id in wanted])

    def roles_present(self) -> tuple[Role, ...]:
        present = {r.label for r in self.records if r.label is not None}
        return tuple(role for role in ROLE_ORDER if role in present)

    def role_counts(self) -> dict[Role, int]:
        counts: dict[Role, int] = {}
        for rec in self.records:
            if rec.label is not None:
                counts[rec.label] = counts.get(rec.label, 0) + 1
        return counts


def load_dataset(
    path: str | Path, require_labels: bool = False, min_tweets: int = 1
) -> UserCorpus:
    """Load and validate a line-delimited user dataset.

    Records with fewer than ``min_tweets`` tweets are dropped (counted in
    ``UserCorpus.dropped_min_tweets``); every other violation raises
    :class:`DataFormatError` with the offending line number.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataFormatError(f"cannot read dataset {path}: {exc}") from exc
    records: list[UserRecord] = []
    seen: dict[str, int] = {}
    dropped = 0
    any_line = False
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        any_line = True
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DataFormatError(f"{path}:{lineno}: invalid JSON: {exc.msg}") from exc
        try:
            record = _record_from_json(obj)
        except DataFormatError as exc:
            raise DataFormatError(f"{path}:{lineno}: {exc}") from None
        if record.user_id in seen:
            raise DataFormatError(
                f"{path}:{lineno}: duplicate user_id {record.user_id!r} "
                f"(first seen on line {seen[record.user_id]})"
            )
        seen[record.user_id] = lineno
        if require_labels and record.label is None:
            raise DataFormatError(f"{path}:{lineno}: missing label")
        if len(record.tweets) < min_tweets:
            dropped += 1
            continue
        records.append(record)
    if not any_line:
        raise DataFormatError(f"{path}: dataset is empty")
    return UserCorpus(records, dropped_min_tweets=dropped)


def save_dataset(corpus: UserCorpus, path: str | Path) -> None:
    """Write a corpus back out as line-delimited JSON (round-trips exactly)."""
    lines = [
        json.dumps(rec.to_json_dict(), sort_keys=True, ensure_ascii=False)
        for rec in corpus
    ]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


@dataclass(frozen=True)
class NameDictionary:
    """Lowercased first names with per-gender frequencies (tf_f, tf_m)."""

    entries: dict[str, tuple[int, int]]

    def __contains__(self, name: str) -> bool:
        return name in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def frequencies(self, name: str) -> tuple[int, int]:
        """(female_frequency, male_frequency) for a known name."""
        return self.entries[name]

    def canonical_lines(self) -> list[str]:
        return [
            f"{name},{tf_f},{tf_m}"
            for name, (tf_f, tf_m) in sorted(self.entries.items())
        ]


def load_name_dictionary(paths: list[str | Path]) -> NameDictionary:
    """Load and merge CSV name files (``name,gender,frequency``, gender F or M).

    Rows for the same (name, gender) aggregate by summing frequencies, so the
    merge is order-independent across files.
    """
    if not paths:
        raise DataFormatError("no name dictionary files given")
    entries: dict[str, list[int]] = {}
    for path in paths:
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise DataFormatError(f"cannot read name dictionary {path}: {exc}") from exc
        reader = csv.reader(text.splitlines())
        for lineno, row in enumerate(reader, start=1):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 3:
                raise DataFormatError(
                    f"{path}:{lineno}: expected 3 columns (name,gender,frequency)"
                )
            name, gender, freq_text = (c.strip() for c in row)
            name = name.lower()
            if not name or any(ch.isspace() for ch in name):
                raise DataFormatError(f"{path}:{lineno}: invalid name {row[0]!r}")
            if gender not in ("F", "M"):
                raise DataFormatError(
                    f"{path}:{lineno}: gender must be F or M, got {gender!r}"
                )
            try:
                freq = int(freq_text)
            except ValueError:
                raise DataFormatError(
                    f"{path}:{lineno}: frequency must be an integer, got {freq_text!r}"
                ) from None
            if freq <= 0:
                raise DataFormatError(f"{path}:{lineno}: frequency must be > 0")
            slot = entries.setdefault(name, [0, 0])
            slot[0 if gender == "F" else 1] += freq
    if not entries:
        raise DataFormatError("name dictionary is empty")
    return NameDictionary({name: (f, m) for name, (f, m) in entries.items()})


class WordListKind(enum.Enum):
    FIRST_PERSON = "first_person"
    BRAND_WORD = "brand_word"
    INTERJECTION = "interjection"
    EMOTION = "emotion"


@dataclass(frozen=True)
class WordList:
    kind: WordListKind
    words: frozenset[str]

    def __contains__(self, word: str) -> bool:
        return word in self.words


def load_word_list(path: str | Path, kind: WordListKind) -> WordList:
    """Load a one-token-per-line word list; ``#`` starts a comment line."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataFormatError(f"cannot read word list {path}: {exc}") from exc
    words: set[str] = set()
    for lineno, line in enumerate(text.splitlines(), start=1):
        token = line.strip()
        if not token or token.startswith("#"):
            continue
        if any(ch.isspace() for ch in token):
            raise DataFormatError(f"{path}:{lineno}: token contains whitespace: {token!r}")
        words.add(token.lower())
    if not words:
        raise DataFormatError(f"{path}: word list is empty")
    return WordList(kind=kind, words=frozenset(words))


@dataclass(frozen=True)
class FoldAssignment:
    n_folds: int
    assignment: dict[str, int]

    def fold_ids(self, fold: int) -> list[str]:
        return [uid for uid, f in self.assignment.items() if f == fold]

    def train_ids(self, fold: int) -> list[str]:
        return [uid for uid, f in self.assignment.items() if f != fold]


def stratified_folds(corpus: UserCorpus, n_folds: int, seed: int) -> FoldAssignment:
    """Deterministic stratified fold assignment over a labeled corpus.

    Users of each class are shuffled with the seed and dealt round-robin, so
    per-fold class counts differ from exact proportionality by at most one.
    """
    if n_folds < 2:
        raise DataFormatError(f"n_folds must be >= 2, got {n_folds}")
    by_role: dict[Role, list[str]] = {}
    for rec in corpus:
        if rec.label is None:
            raise DataFormatError(f"user {rec.user_id!r} has no label")
        by_role.setdefault(rec.label, []).append(rec.user_id)
    for role, ids in by_role.items():
        if len(ids) < n_folds:
            raise DataFormatError(
                f"class {role.value!r} has {len(ids)} users, fewer than {n_folds} folds"
            )
    rng = np.random.default_rng(seed)
    assignment: dict[str, int] = {}
    for role in ROLE_ORDER:
        ids = by_role.get(role)
        if not ids:
            continue
        order = rng.permutation(len(ids))
        for pos, idx in enumerate(order):
            assignment[ids[idx]] = pos % n_folds
    return FoldAssignment(n_folds=n_folds, assignment=assignment)
