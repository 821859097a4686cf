# textproc.py  –  Sentence segmentation, tokenization and syllable counting
#
# Every metric and the corpus loader go through these rules, so scores are
# reproducible bit for bit.  All functions are pure.

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator, Optional, Tuple

from config import DEFAULT_ABBREVIATIONS
from errors import EmptyInputError, NonAlphabeticError, TextError

# A terminator only ends a sentence when whitespace and then a letter follow.
_BOUNDARY_RE = re.compile(r"[.!?](?=\s+[^\W\d_])")

# Words keep intra-word apostrophes and hyphens; every other symbol is its own token.
_TOKEN_RE = re.compile(r"\w+(?:['’\-]\w+)*|[^\w\s]")

_VOWEL_GROUP_RE = re.compile(r"[aeiouy]+")


@dataclass(frozen=True)
class TokenizedText:
    tokens: Tuple[str, ...]
    source_char_len: int

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self) -> Iterator[str]:
        return iter(self.tokens)

    def text(self) -> str:
        return " ".join(self.tokens)


@dataclass(frozen=True)
class SentenceList:
    sentences: Tuple[str, ...]

    def __post_init__(self):
        if isinstance(self.sentences, str):
            raise TextError("SentenceList needs a sequence of sentences, not a string")
        object.__setattr__(self, "sentences", tuple(self.sentences))
        for sentence in self.sentences:
            if not isinstance(sentence, str) or not sentence or sentence != sentence.strip():
                raise TextError(f"sentences must be non-empty trimmed strings: {sentence!r}")

    def __len__(self) -> int:
        return len(self.sentences)

    def __iter__(self) -> Iterator[str]:
        return iter(self.sentences)

    def __getitem__(self, index: int) -> str:
        return self.sentences[index]

    def join(self) -> str:
        return " ".join(self.sentences)

    @classmethod
    def of(cls, sentences: Iterable[str]) -> "SentenceList":
        """Build from raw strings, trimming each and dropping blanks."""
        return cls(tuple(s.strip() for s in sentences if s and s.strip()))


@lru_cache(maxsize=32)
def _abbreviation_re(abbreviations: Tuple[str, ...]) -> Optional[re.Pattern]:
    # Only abbreviations ending in a terminator can suppress a boundary.
    stripped = (a.strip() for a in abbreviations)
    usable = sorted({a for a in stripped if a and a[-1] in ".!?"}, key=len, reverse=True)
    if not usable:
        return None
    parts = [re.escape(a).replace(r"\ ", r"\s+") for a in usable]
    return re.compile(r"(?<!\w)(?:" + "|".join(parts) + r")\Z")


def segment_sentences(text: str, abbreviations: Optional[Iterable[str]] = None) -> SentenceList:
    """Split *text* at '.', '!' or '?' followed by whitespace and a letter.

    A terminator that closes one of *abbreviations* (default: the seed list
    in config) never splits.  Sentences are trimmed; nothing but whitespace
    is ever dropped.
    """
    if text is None or not text.strip():
        raise EmptyInputError("cannot segment empty text")

    abbrev_re = _abbreviation_re(tuple(abbreviations) if abbreviations is not None else DEFAULT_ABBREVIATIONS)

    sentences = []
    start = 0
    for match in _BOUNDARY_RE.finditer(text):
        end = match.end()
        chunk = text[start:end]
        if abbrev_re is not None and abbrev_re.search(chunk):
            continue
        sentences.append(chunk.strip())
        start = end

    tail = text[start:].strip()
    if tail:
        sentences.append(tail)
    return SentenceList(tuple(sentences))


def tokenize(text: str) -> TokenizedText:
    """Lowercase word/punctuation tokens; ``tokenize("") -> []``."""
    if not text:
        return TokenizedText(tokens=(), source_char_len=0)
    return TokenizedText(tokens=tuple(_TOKEN_RE.findall(text.lower())), source_char_len=len(text))


def is_word(token: str) -> bool:
    """Tokens with at least one letter count as words for readability."""
    return any(ch.isalpha() for ch in token)


def count_syllables(word: str) -> int:
    """Vowel-group syllable estimate.

    Count maximal runs of a/e/i/o/u/y, drop one for a silent final 'e'
    (but not '-le'), never below one.
    """
    letters = "".join(ch for ch in word.lower() if ch.isalpha())
    if not letters:
        raise NonAlphabeticError(f"no letters in token {word!r}")

    count = len(_VOWEL_GROUP_RE.findall(letters))
    if letters.endswith("e") and not letters.endswith("le"):
        count -= 1
    return max(1, count)
