"""Display-name and screen-name gender scores, with screen-name segmentation.

The screen-name splitter runs four strategies (greedy matching against three
vocabularies, plus a dynamic-programming splitter over a ranked lexicon) and
keeps the candidate with the fewest tokens.
"""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass
from pathlib import Path

from .corpus import NameDictionary
from .errors import DataFormatError

__all__ = [
    "Lexicon",
    "load_lexicon",
    "Segmentation",
    "SegmentationMethod",
    "name_score",
    "display_name_score",
    "greedy_dictionary_split",
    "dp_word_split",
    "segmentation_cost",
    "segment_screen_name",
    "screen_name_score",
]

_NON_ALPHA = re.compile(r"[^a-z]+")
_NON_ALPHA_STRIP = re.compile(r"[^a-z]")


@dataclass(frozen=True)
class Lexicon:
    """Words ranked by frequency (rank 1 = most frequent), Zipf-style costs.

    A word of rank r costs log(r * log(N + 1)); a single character outside the
    lexicon costs a fixed penalty strictly above the most expensive word.
    """

    ranks: dict[str, int]
    max_word_len: int
    char_penalty: float

    @classmethod
    def from_words(cls, words: list[str]) -> "Lexicon":
        ranks: dict[str, int] = {}
        for word in words:
            word = word.lower()
            if not word or any(ch.isspace() for ch in word):
                raise DataFormatError(f"invalid lexicon word {word!r}")
            if word in ranks:
                raise DataFormatError(f"duplicate lexicon word {word!r}")
            ranks[word] = len(ranks) + 1
        if not ranks:
            raise DataFormatError("lexicon is empty")
        n = len(ranks)
        worst = math.log(n * math.log(n + 1))
        return cls(
            ranks=ranks,
            max_word_len=max(len(w) for w in ranks),
            char_penalty=worst + 1.0,
        )

    def __contains__(self, word: str) -> bool:
        return word in self.ranks

    def __len__(self) -> int:
        return len(self.ranks)

    def word_cost(self, word: str) -> float:
        return math.log(self.ranks[word] * math.log(len(self.ranks) + 1))

    def words(self) -> list[str]:
        """Words in rank order."""
        return sorted(self.ranks, key=self.ranks.get)


def load_lexicon(path: str | Path) -> Lexicon:
    """Load a lexicon file: one word per line, line order defines rank."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataFormatError(f"cannot read lexicon {path}: {exc}") from exc
    words = [line.strip() for line in text.splitlines() if line.strip()]
    return Lexicon.from_words(words)


class SegmentationMethod(enum.Enum):
    NAME_BASED = "name_based"
    WORD_BASED = "word_based"
    NAME_WORD_BASED = "name_word_based"
    DP_SPLIT = "dp_split"


@dataclass(frozen=True)
class Segmentation:
    method: SegmentationMethod
    tokens: tuple[str, ...]


def name_score(term: str, dictionary: NameDictionary) -> float:
    """Gender score in [-1, 1]: (tf_f - tf_m) / max(tf_f, tf_m), 0 if absent."""
    if term not in dictionary:
        return 0.0
    tf_f, tf_m = dictionary.frequencies(term)
    return (tf_f - tf_m) / max(tf_f, tf_m)


def display_name_score(display_name: str, dictionary: NameDictionary) -> float:
    """Score of the first display-name token found in the dictionary, else 0."""
    for token in _NON_ALPHA.split(display_name.lower()):
        if token and token in dictionary:
            return name_score(token, dictionary)
    return 0.0


def greedy_dictionary_split(s: str, vocab) -> list[str]:
    """Left-to-right longest-match split of ``s`` against ``vocab``.

    Characters that start no vocabulary word are emitted as single-character
    tokens. ``s`` must already be lowercase with unwanted characters stripped.
    """
    if not s:
        return []
    max_len = max((len(w) for w in vocab), default=1)
    tokens: list[str] = []
    i = 0
    n = len(s)
    while i < n:
        match = None
        for length in range(min(max_len, n - i), 0, -1):
            piece = s[i : i + length]
            if piece in vocab:
                match = piece
                break
        if match is None:
            match = s[i]
        tokens.append(match)
        i += len(match)
    return tokens


def segmentation_cost(tokens, lexicon: Lexicon) -> float:
    """Total cost of a candidate segmentation under the lexicon's cost model.

    Multi-character tokens outside the lexicon are not representable and cost
    infinity.
    """
    total = 0.0
    for token in tokens:
        if token in lexicon:
            total += lexicon.word_cost(token)
        elif len(token) == 1:
            total += lexicon.char_penalty
        else:
            return math.inf
    return total


def dp_word_split(s: str, lexicon: Lexicon) -> list[str]:
    """Minimum-cost segmentation of ``s`` into lexicon words and single chars.

    Ties break toward fewer tokens, then leftmost-longest tokens.
    """
    n = len(s)
    if n == 0:
        return []
    inf = math.inf
    # best[i] = (cost, n_tokens, first_token_len) for the suffix s[i:]
    cost = [inf] * (n + 1)
    ntok = [0] * (n + 1)
    first_len = [0] * (n + 1)
    cost[n] = 0.0
    for i in range(n - 1, -1, -1):
        best = (inf, 0, 0)
        limit = min(lexicon.max_word_len, n - i)
        for length in range(1, limit + 1):
            piece = s[i : i + length]
            if piece in lexicon:
                piece_cost = lexicon.word_cost(piece)
            elif length == 1:
                piece_cost = lexicon.char_penalty
            else:
                continue
            tail = i + length
            if cost[tail] == inf:
                continue
            cand = (piece_cost + cost[tail], 1 + ntok[tail], length)
            # lower cost, then fewer tokens, then longer first token
            if (
                cand[0] < best[0]
                or (cand[0] == best[0] and cand[1] < best[1])
                or (cand[0] == best[0] and cand[1] == best[1] and cand[2] > best[2])
            ):
                best = cand
        cost[i], ntok[i], first_len[i] = best
    tokens: list[str] = []
    i = 0
    while i < n:
        length = first_len[i]
        tokens.append(s[i : i + length])
        i += length
    return tokens


def segment_screen_name(
    screen_name: str, dictionary: NameDictionary, lexicon: Lexicon
) -> Segmentation:
    """Run all four splitting methods and keep the fewest-token candidate.

    The three greedy methods see the screen name with non-alphabetic characters
    stripped; the DP splitter sees the full lowercased string. Ties break by
    fixed priority: word-based, name-word-based, name-based, DP.
    """
    if not screen_name:
        raise DataFormatError("screen name is empty")
    lowered = screen_name.lower()
    alpha = _NON_ALPHA_STRIP.sub("", lowered)
    name_vocab = dictionary.entries
    word_vocab = lexicon.ranks
    union_vocab = set(name_vocab) | set(word_vocab)
    candidates = [
        Segmentation(
            SegmentationMethod.WORD_BASED,
            tuple(greedy_dictionary_split(alpha, word_vocab)),
        ),
        Segmentation(
            SegmentationMethod.NAME_WORD_BASED,
            tuple(greedy_dictionary_split(alpha, union_vocab)),
        ),
        Segmentation(
            SegmentationMethod.NAME_BASED,
            tuple(greedy_dictionary_split(alpha, name_vocab)),
        ),
        Segmentation(SegmentationMethod.DP_SPLIT, tuple(dp_word_split(lowered, lexicon))),
    ]
    # a method whose input stripped to nothing yields no tokens and is not a
    # valid candidate for a non-empty screen name
    valid = [c for c in candidates if c.tokens]
    best = valid[0]
    for cand in valid[1:]:
        if len(cand.tokens) < len(best.tokens):
            best = cand
    return best


def screen_name_score(
    screen_name: str, dictionary: NameDictionary, lexicon: Lexicon
) -> float:
    """Segment the screen name, then score the first token found in the dictionary."""
    segmentation = segment_screen_name(screen_name, dictionary, lexicon)
    for token in segmentation.tokens:
        if token in dictionary:
            return name_score(token, dictionary)
    return 0.0
