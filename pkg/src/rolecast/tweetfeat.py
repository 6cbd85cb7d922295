"""Tweet-collection scores and the k-top-words vocabulary and score vector."""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from .corpus import Role, UserCorpus, WordList
from .errors import DataFormatError

__all__ = [
    "EMOTICONS",
    "tokenize_tweet",
    "select_window",
    "TweetScores",
    "list_match_score",
    "tweet_scores",
    "KTopVocabulary",
    "build_ktop_vocabulary",
    "ktop_score_vector",
    "export_vocabulary",
    "parse_vocabulary",
    "load_stoplist",
]

# fixed emoticon set, matched before word splitting and kept as single tokens
EMOTICONS = (
    ":-)",
    ":-(",
    ";-)",
    ":')",
    ":'(",
    ":)",
    ":(",
    ":d",
    ":p",
    ":o",
    ":3",
    ":/",
    ":|",
    ";)",
    "<3",
    "=)",
    "=(",
    "xd",
)

_EMOTICON_ALT = "|".join(re.escape(e) for e in EMOTICONS)
_TOKEN_RE = re.compile(
    r"""
    (?P<url>https?://\S+|www\.\S+)
    |(?P<mention>@\w+)
    |(?P<hashtag>\#\w+)
    |(?P<emoticon>{emoticons})
    |(?P<word>[a-z0-9]+(?:'[a-z0-9]+)*)
    """.format(emoticons=_EMOTICON_ALT),
    re.VERBOSE | re.IGNORECASE,
)


@lru_cache(maxsize=262144)
def _tokenize_cached(text: str) -> tuple[str, ...]:
    tokens: list[str] = []
    for match in _TOKEN_RE.finditer(text):
        kind = match.lastgroup
        if kind in ("url", "mention"):
            continue
        tokens.append(match.group().lower())
    return tuple(tokens)


def tokenize_tweet(text: str) -> list[str]:
    """Lowercased tweet tokens: words, hashtags, and emoticons.

    URLs and @-mentions are dropped; hashtags keep their '#'; apostrophes stay
    word-internal, so "I'm" survives as one token. Results are memoized; the
    same tweet text is tokenized once per process.
    """
    return list(_tokenize_cached(text))


def select_window(tweets, window: int | None):
    """The ``window`` most recent tweets (records store newest first), or all."""
    tweets = list(tweets)
    if not tweets:
        raise DataFormatError("tweet collection is empty")
    if window is None:
        return tweets
    if window < 1:
        raise DataFormatError(f"window must be >= 1, got {window}")
    return tweets[:window]


@dataclass(frozen=True)
class TweetScores:
    fp_tweet: float
    i_tweet: float
    e_tweet: float


def list_match_score(tweets, word_list: WordList, window: int | None = None) -> float:
    """Fraction of windowed tweets whose token set intersects the word list."""
    selected = select_window(tweets, window)
    hits = sum(
        1 for tweet in selected if not set(tokenize_tweet(tweet)).isdisjoint(word_list.words)
    )
    return hits / len(selected)


def tweet_scores(
    tweets,
    first: WordList,
    interjections: WordList,
    emotions: WordList,
    window: int | None = None,
) -> TweetScores:
    """First-person, interjection, and emotion scores over one tweet window."""
    selected = select_window(tweets, window)
    token_sets = [set(tokenize_tweet(t)) for t in selected]
    n = len(token_sets)

    def fraction(words: frozenset[str]) -> float:
        return sum(1 for ts in token_sets if not ts.isdisjoint(words)) / n

    return TweetScores(
        fp_tweet=fraction(first.words),
        i_tweet=fraction(interjections.words),
        e_tweet=fraction(emotions.words),
    )


_ALPHA_TOKEN = re.compile(r"[a-z]+(?:'[a-z]+)*")


def _is_candidate(token: str, stoplist: frozenset[str]) -> bool:
    # content tokens: hashtags, emoticons, and non-stoplist alphabetic words
    if token.startswith("#"):
        return True
    if token in EMOTICONS:
        return True
    return bool(_ALPHA_TOKEN.fullmatch(token)) and token not in stoplist


@dataclass(frozen=True)
class KTopVocabulary:
    """Top-k content words per role, concatenated in role order."""

    k: int
    roles: tuple[Role, ...]
    words: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(self.words) != self.k * len(self.roles):
            raise DataFormatError(
                f"vocabulary length {len(self.words)} != k*roles = {self.k * len(self.roles)}"
            )

    def block(self, role: Role) -> tuple[str, ...]:
        i = self.roles.index(role)
        return self.words[i * self.k : (i + 1) * self.k]


def build_ktop_vocabulary(
    corpus: UserCorpus,
    k: int,
    stoplist: frozenset[str],
    roles: tuple[Role, ...] | None = None,
) -> KTopVocabulary:
    """Rank candidate tokens per role by distinct-user count; take the top k each.

    Ties break lexicographically. Only the given (training) corpus is consulted,
    and the same word may appear in more than one role block.
    """
    if k < 1:
        raise DataFormatError(f"k must be >= 1, got {k}")
    if roles is None:
        roles = corpus.roles_present()
    user_counts: dict[Role, dict[str, int]] = {role: {} for role in roles}
    seen_roles = set()
    for rec in corpus:
        if rec.label is None or rec.label not in user_counts:
            continue
        seen_roles.add(rec.label)
        tokens = set()
        for tweet in rec.tweets:
            tokens.update(tokenize_tweet(tweet))
        counts = user_counts[rec.label]
        for token in tokens:
            if _is_candidate(token, stoplist):
                counts[token] = counts.get(token, 0) + 1
    words: list[str] = []
    for role in roles:
        if role not in seen_roles:
            raise DataFormatError(f"no users of role {role.value!r} in training corpus")
        counts = user_counts[role]
        if len(counts) < k:
            raise DataFormatError(
                f"role {role.value!r} has only {len(counts)} candidate words, need {k}"
            )
        ranked = sorted(counts.items(), key=lambda item: (-item[1], item[0]))
        words.extend(word for word, _ in ranked[:k])
    return KTopVocabulary(k=k, roles=tuple(roles), words=tuple(words))


def ktop_score_vector(tweets, vocab: KTopVocabulary) -> np.ndarray:
    """Per vocabulary word: fraction of the user's tweets containing it."""
    tweets = list(tweets)
    if not tweets:
        raise DataFormatError("tweet collection is empty")
    token_sets = [set(tokenize_tweet(t)) for t in tweets]
    n = len(token_sets)
    out = np.empty(len(vocab.words), dtype=np.float64)
    for j, word in enumerate(vocab.words):
        out[j] = sum(1 for ts in token_sets if word in ts) / n
    return out


def export_vocabulary(vocab: KTopVocabulary, path: str | Path) -> None:
    """Write the vocabulary as text with role-block comment annotations."""
    lines = [f"# k = {vocab.k}"]
    for role in vocab.roles:
        lines.append(f"# role: {role.value}")
        lines.extend(vocab.block(role))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def parse_vocabulary(path: str | Path) -> KTopVocabulary:
    """Inverse of :func:`export_vocabulary`."""
    path = Path(path)
    k: int | None = None
    roles: list[Role] = []
    words: list[str] = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        if line.startswith("# k ="):
            k = int(line.split("=", 1)[1])
        elif line.startswith("# role:"):
            roles.append(Role(line.split(":", 1)[1].strip()))
        elif line.startswith("#"):
            continue
        else:
            words.append(line)
    if k is None or not roles:
        raise DataFormatError(f"{path}: not a vocabulary export")
    return KTopVocabulary(k=k, roles=tuple(roles), words=tuple(words))


def load_stoplist(path: str | Path) -> frozenset[str]:
    """Stoplist file: one word per line, '#' comments allowed."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataFormatError(f"cannot read stoplist {path}: {exc}") from exc
    words = {
        line.strip().lower()
        for line in text.splitlines()
        if line.strip() and not line.strip().startswith("#")
    }
    if not words:
        raise DataFormatError(f"{path}: stoplist is empty")
    return frozenset(words)
