import math

import numpy as np
import pytest

from rolecast import load_resources
from rolecast.corpus import (
    NameDictionary,
    Role,
    UserCorpus,
    UserRecord,
    WordList,
    WordListKind,
)
from rolecast.namefeat import Lexicon


@pytest.fixture(scope="session")
def resources():
    return load_resources()


@pytest.fixture(scope="session")
def table2_names():
    # exactly the name vocabulary implied by the published parsing examples
    return NameDictionary(
        {
            "clem": (1, 418),
            "son": (1, 50),
            "john": (445, 256166),
            "tom": (1, 9182),
            "my": (10, 10),
            "tommy": (712, 48217),
        }
    )


@pytest.fixture(scope="session")
def table2_lexicon():
    return Lexicon.from_words(["john", "on", "cl", "ems", "clemson", "tommy"])


def make_user(
    i: int,
    role: Role | None = None,
    tweets=("hello world",),
    **overrides,
) -> UserRecord:
    fields = {
        "user_id": f"user{i}",
        "screen_name": f"screen{i}",
        "display_name": f"Display {i}",
        "description": "",
        "followers": 10,
        "friends": 10,
        "tweets": tuple(tweets),
        "label": role,
    }
    fields.update(overrides)
    return UserRecord(**fields)


def make_corpus(n_per_role: int, roles=(Role.MALE, Role.FEMALE, Role.BRAND)) -> UserCorpus:
    records = []
    i = 0
    for role in roles:
        for _ in range(n_per_role):
            records.append(make_user(i, role))
            i += 1
    return UserCorpus(records)


@pytest.fixture()
def word_lists():
    return {
        "first": WordList(WordListKind.FIRST_PERSON, frozenset({"i", "am", "my", "me", "mine", "i'm"})),
        "brand": WordList(WordListKind.BRAND_WORD, frozenset({"official"})),
        "interj": WordList(WordListKind.INTERJECTION, frozenset({"wow", "oh", "hey"})),
        "emot": WordList(WordListKind.EMOTION, frozenset({"happy", "sad", "love"})),
    }


def brute_force_min_cost(s: str, lexicon: Lexicon) -> float:
    """Exhaustive minimum segmentation cost over all 2^(n-1) cut sets."""
    n = len(s)
    assert n >= 1
    best = math.inf
    for mask in range(1 << (n - 1)):
        cost = 0.0
        start = 0
        ok = True
        for i in range(n):
            if i == n - 1 or (mask >> i) & 1:
                piece = s[start : i + 1]
                if piece in lexicon:
                    cost += lexicon.word_cost(piece)
                elif len(piece) == 1:
                    cost += lexicon.char_penalty
                else:
                    ok = False
                    break
                start = i + 1
        if ok and cost < best:
            best = cost
    return best


def brute_force_best_split(X, y, n_classes: int):
    """Independent enumeration oracle for the Gini split search."""

    def gini(labels):
        total = len(labels)
        g = 1.0
        for c in range(n_classes):
            p = sum(1 for v in labels if v == c) / total
            g -= p * p
        return g

    X = np.asarray(X, dtype=np.float64)
    y = list(y)
    n, d = X.shape
    parent = gini(y)
    best = None
    for f in range(d):
        values = sorted(set(X[:, f]))
        for a, b in zip(values, values[1:]):
            thr = (a + b) / 2.0
            left = [y[i] for i in range(n) if X[i, f] <= thr]
            right = [y[i] for i in range(n) if X[i, f] > thr]
            if not left or not right:
                continue
            dec = parent - (len(left) * gini(left) + len(right) * gini(right)) / n
            if dec > 0.0 and (best is None or dec > best[2]):
                best = (f, thr, dec)
    return best
