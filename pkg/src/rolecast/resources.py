"""Resource bundles: name dictionary, lexicon, word lists, and stoplist.

Resolution order for the resource directory is: explicit flag, then the
ROLECAST_RESOURCES environment variable, then the packaged defaults.
"""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass
from pathlib import Path

from .corpus import NameDictionary, WordList, WordListKind, load_name_dictionary, load_word_list
from .errors import ResourceError
from .namefeat import Lexicon, load_lexicon
from .tweetfeat import load_stoplist

__all__ = ["ResourceBundle", "load_resources", "resolve_resource_dir", "RESOURCE_FILES"]

ENV_VAR = "ROLECAST_RESOURCES"

RESOURCE_FILES = {
    "names": "names.csv",
    "lexicon": "lexicon.txt",
    "first_person": "first_person.txt",
    "brand_words": "brand_words.txt",
    "interjections": "interjections.txt",
    "emotions": "emotions.txt",
    "stoplist": "stoplist.txt",
}

_DEFAULT_DIR = Path(__file__).parent / "data"


@dataclass(frozen=True)
class ResourceBundle:
    names: NameDictionary
    lexicon: Lexicon
    first_person: WordList
    brand_words: WordList
    interjections: WordList
    emotions: WordList
    stoplist: frozenset[str]

    def fingerprints(self) -> dict[str, str]:
        """Content hashes of each resource in canonical form.

        Used to pin trained models to the resources they were built with.
        """

        def digest(lines) -> str:
            h = hashlib.sha256()
            for line in lines:
                h.update(line.encode("utf-8"))
                h.update(b"\n")
            return h.hexdigest()

        return {
            "names": digest(self.names.canonical_lines()),
            "lexicon": digest(self.lexicon.words()),
            "first_person": digest(sorted(self.first_person.words)),
            "brand_words": digest(sorted(self.brand_words.words)),
            "interjections": digest(sorted(self.interjections.words)),
            "emotions": digest(sorted(self.emotions.words)),
            "stoplist": digest(sorted(self.stoplist)),
        }


def resolve_resource_dir(flag_value: str | None) -> Path | None:
    """Pick the resource directory: flag beats env var beats packaged defaults."""
    if flag_value:
        return Path(flag_value)
    env = os.environ.get(ENV_VAR)
    if env:
        return Path(env)
    return None


def load_resources(directory: str | Path | None = None) -> ResourceBundle:
    """Load a resource bundle from a directory, or the packaged defaults."""
    base = Path(directory) if directory is not None else _DEFAULT_DIR
    missing = [
        fname for fname in RESOURCE_FILES.values() if not (base / fname).is_file()
    ]
    if missing:
        raise ResourceError(
            f"resource directory {base} is missing: {', '.join(sorted(missing))}"
        )
    return ResourceBundle(
        names=load_name_dictionary([base / RESOURCE_FILES["names"]]),
        lexicon=load_lexicon(base / RESOURCE_FILES["lexicon"]),
        first_person=load_word_list(
            base / RESOURCE_FILES["first_person"], WordListKind.FIRST_PERSON
        ),
        brand_words=load_word_list(
            base / RESOURCE_FILES["brand_words"], WordListKind.BRAND_WORD
        ),
        interjections=load_word_list(
            base / RESOURCE_FILES["interjections"], WordListKind.INTERJECTION
        ),
        emotions=load_word_list(base / RESOURCE_FILES["emotions"], WordListKind.EMOTION),
        stoplist=load_stoplist(base / RESOURCE_FILES["stoplist"]),
    )
