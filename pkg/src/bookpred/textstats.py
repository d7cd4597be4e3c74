"""Sentence segmentation, word tokenization, and count statistics.

Everything here is rule-based and deterministic so that downstream
readability scores are reproducible byte for byte. The rules are fixed:

* sentences split at runs of ``.`` ``!`` ``?`` followed by whitespace,
  or at blank-line paragraph breaks, with a short abbreviation list
  suppressing false splits;
* words are maximal runs of letters and digits, allowing internal
  apostrophes and hyphens;
* syllables are counted as maximal vowel groups (a, e, i, o, u, y) with
  the terminal silent-e rule, floored at 1.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

__all__ = [
    "Sentence",
    "TextCounts",
    "segment_sentences",
    "tokenize_words",
    "count_syllables",
    "compute_counts",
    "counts_from_sentences",
]

# Abbreviations that end in '.' but do not end a sentence.
_ABBREVIATIONS = frozenset(
    {"mr.", "mrs.", "dr.", "st.", "vs.", "etc.", "e.g.", "i.e."}
)

_TERMINATORS = ".!?"

# Letters/digits (no underscore), with internal apostrophes or hyphens.
_WORD_RE = re.compile(r"[^\W_]+(?:['’-][^\W_]+)*", re.UNICODE)

_VOWELS = frozenset("aeiouy")


@dataclass(frozen=True)
class Sentence:
    """One sentence of a document; ``text`` is whitespace-normalized."""

    text: str
    index: int


@dataclass(frozen=True)
class TextCounts:
    """The five count statistics every readability formula consumes."""

    words: int
    characters: int
    sentences: int
    syllables: int
    polysyllables: int


def _ends_with_abbreviation(chunk: str) -> bool:
    parts = chunk.split()
    if not parts:
        return False
    token = parts[-1].lstrip("\"'“”‘’([{")
    return token.lower() in _ABBREVIATIONS


def segment_sentences(text: str) -> list[Sentence]:
    """Split ``text`` into sentences.

    Boundaries are runs of ``.!?`` followed by whitespace (or end of
    text) and blank-line paragraph breaks. A trailing abbreviation
    (Mr., Mrs., Dr., St., vs., etc., e.g., i.e.) suppresses the split.
    Empty segments are dropped; each sentence keeps every one of its
    non-whitespace characters, internal whitespace collapsed to single
    spaces.
    """
    sentences: list[Sentence] = []

    def flush(segment: str) -> None:
        normalized = " ".join(segment.split())
        if normalized:
            sentences.append(Sentence(text=normalized, index=len(sentences)))

    n = len(text)
    start = 0
    i = 0
    while i < n:
        ch = text[i]
        if ch in _TERMINATORS:
            j = i
            while j + 1 < n and text[j + 1] in _TERMINATORS:
                j += 1
            at_end = j + 1 >= n
            if at_end or text[j + 1].isspace():
                if not _ends_with_abbreviation(text[start : j + 1]):
                    flush(text[start : j + 1])
                    start = j + 1
            i = j + 1
        elif ch == "\n":
            # A blank line (newline, optional spaces, newline) is a
            # paragraph break and therefore a sentence boundary.
            k = i + 1
            while k < n and text[k] in " \t\r":
                k += 1
            if k < n and text[k] == "\n":
                flush(text[start:i])
                start = i
                i = k + 1
            else:
                i += 1
        else:
            i += 1
    flush(text[start:])
    return sentences


def tokenize_words(sentence: str) -> list[str]:
    """Return the words of ``sentence``: maximal runs of letters and
    digits, allowing internal apostrophes and hyphens. Case preserved."""
    return _WORD_RE.findall(sentence)


def count_syllables(word: str) -> int:
    """Heuristic syllable count for one word.

    Lowercases, counts maximal vowel groups (a, e, i, o, u, y),
    subtracts one for a terminal silent "e" unless the word ends in
    "le" after a consonant, and floors the result at 1. Purely numeric
    tokens count as 1.
    """
    if not word:
        raise ValueError("count_syllables: empty word")
    w = word.lower()
    if w.isdigit():
        return 1
    groups = 0
    prev_vowel = False
    for ch in w:
        is_vowel = ch in _VOWELS
        if is_vowel and not prev_vowel:
            groups += 1
        prev_vowel = is_vowel
    if groups > 1 and w.endswith("e"):
        consonant_le = len(w) >= 3 and w.endswith("le") and w[-3] not in _VOWELS
        if not consonant_le:
            groups -= 1
    return max(groups, 1)


def counts_from_sentences(sentences: list[Sentence]) -> TextCounts:
    """Aggregate counts over pre-segmented sentences.

    Characters are letters and digits inside words only; punctuation,
    whitespace, and in-word apostrophes/hyphens are excluded.
    Polysyllables are words of three or more syllables.
    """
    words = 0
    characters = 0
    syllables = 0
    polysyllables = 0
    for sentence in sentences:
        for token in tokenize_words(sentence.text):
            words += 1
            characters += sum(1 for ch in token if ch.isalnum())
            syl = count_syllables(token)
            syllables += syl
            if syl >= 3:
                polysyllables += 1
    return TextCounts(
        words=words,
        characters=characters,
        sentences=len(sentences),
        syllables=syllables,
        polysyllables=polysyllables,
    )


def compute_counts(text: str) -> TextCounts:
    """Segment ``text`` and return its aggregate count statistics."""
    return counts_from_sentences(segment_sentences(text))
