"""The five readability indices and the 5-dimensional score vector.

Score order is fixed everywhere (training, attribution, serialization):
``[FRES, FKG, SMOG, CLI, ARI]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .textstats import TextCounts

__all__ = [
    "INDEX_NAMES",
    "ReadabilityVector",
    "ReadabilityScaler",
    "fres",
    "fkg",
    "smog",
    "cli_index",
    "ari",
    "readability_vector",
    "fit_scaler",
    "apply_scaler",
]

INDEX_NAMES = ("fres", "fkg", "smog", "cli", "ari")


@dataclass(frozen=True)
class ReadabilityVector:
    """The five scores in fixed order [FRES, FKG, SMOG, CLI, ARI]."""

    fres: float
    fkg: float
    smog: float
    cli: float
    ari: float

    def as_array(self) -> np.ndarray:
        return np.array([self.fres, self.fkg, self.smog, self.cli, self.ari])

    @classmethod
    def from_array(cls, values) -> "ReadabilityVector":
        v = np.asarray(values, dtype=float)
        if v.shape != (5,):
            raise ValueError(f"readability vector must have 5 components, got shape {v.shape}")
        return cls(*(float(x) for x in v))


def _require(counts: TextCounts, words: bool = False, sentences: bool = False) -> None:
    if words and counts.words <= 0:
        raise ValueError("readability index undefined for zero words")
    if sentences and counts.sentences <= 0:
        raise ValueError("readability index undefined for zero sentences")


def fres(c: TextCounts) -> float:
    """Flesch Reading Ease. Higher means easier text."""
    _require(c, words=True, sentences=True)
    return 206.835 - 1.015 * (c.words / c.sentences) - 84.6 * (c.syllables / c.words)


def fkg(c: TextCounts, negative_syllable_term: bool = False) -> float:
    """Flesch-Kincaid Grade. Higher means harder text.

    ``negative_syllable_term`` flips the syllable coefficient to -11.8,
    a sign variant that circulates in some sources; the default +11.8
    is the standard grade formula.
    """
    _require(c, words=True, sentences=True)
    coeff = -11.8 if negative_syllable_term else 11.8
    return 0.39 * (c.words / c.sentences) + coeff * (c.syllables / c.words) - 15.59


def smog(c: TextCounts) -> float:
    """SMOG grade, from polysyllable density per sentence."""
    _require(c, sentences=True)
    return 1.0430 * math.sqrt(c.polysyllables * 30.0 / c.sentences) + 3.1291


def cli_index(c: TextCounts) -> float:
    """Coleman-Liau index, from characters and sentences per 100 words."""
    _require(c, words=True)
    chars_per_100 = 100.0 * c.characters / c.words
    sents_per_100 = 100.0 * c.sentences / c.words
    return 0.0588 * chars_per_100 - 0.296 * sents_per_100 - 15.8


def ari(c: TextCounts) -> float:
    """Automated Readability Index."""
    _require(c, words=True, sentences=True)
    return 4.71 * (c.characters / c.words) + 0.5 * (c.words / c.sentences) - 21.43


def readability_vector(c: TextCounts, negative_syllable_term: bool = False) -> ReadabilityVector:
    """All five indices in fixed order [FRES, FKG, SMOG, CLI, ARI]."""
    return ReadabilityVector(
        fres=fres(c),
        fkg=fkg(c, negative_syllable_term=negative_syllable_term),
        smog=smog(c),
        cli=cli_index(c),
        ari=ari(c),
    )


@dataclass(frozen=True)
class ReadabilityScaler:
    """Per-component z-scoring statistics, fit on the training set.

    Population standard deviation; components with std below 1e-12 are
    replaced by 1 so constant scores scale to exactly zero.
    """

    mean: np.ndarray
    std: np.ndarray


def fit_scaler(train_vectors: list[ReadabilityVector]) -> ReadabilityScaler:
    if len(train_vectors) < 2:
        raise ValueError("fit_scaler needs at least 2 training vectors")
    matrix = np.stack([v.as_array() for v in train_vectors])
    mean = matrix.mean(axis=0)
    std = matrix.std(axis=0)  # population std
    std = np.where(std < 1e-12, 1.0, std)
    return ReadabilityScaler(mean=mean, std=std)


def apply_scaler(scaler: ReadabilityScaler, v: ReadabilityVector) -> ReadabilityVector:
    scaled = (v.as_array() - scaler.mean) / scaler.std
    return ReadabilityVector.from_array(scaled)
