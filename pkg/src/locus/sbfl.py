"""Spectrum-based fault localization: Tarantula, Ochiai and DStar."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .core import Ranking, SpectrumMatrix, TallyCounts, rank, tally

TECHNIQUES = ("dstar", "ochiai", "tarantula")


def tarantula(t: TallyCounts) -> float:
    if t.ef == 0:
        return 0.0
    fail_ratio = t.ef / t.failed
    pass_ratio = t.ep / t.passed if t.passed else 0.0
    return fail_ratio / (fail_ratio + pass_ratio)


def ochiai(t: TallyCounts) -> float:
    if t.ef == 0:
        return 0.0
    return t.ef / math.sqrt(t.failed * (t.ef + t.ep))


def dstar(t: TallyCounts, star: int = 2) -> float:
    """``ef**star / (ep + nf)``; infinite when only failing tests matter."""
    if t.ef == 0:
        return 0.0
    denominator = t.ep + t.nf
    if denominator == 0:
        return math.inf
    return t.ef**star / denominator


@dataclass(frozen=True)
class SbflScoreTriple:
    tarantula: float
    ochiai: float
    dstar: float


def score_triple(t: TallyCounts, star: int = 2) -> SbflScoreTriple:
    return SbflScoreTriple(tarantula(t), ochiai(t), dstar(t, star))


def sbfl_scores(matrix: SpectrumMatrix, star: int = 2) -> dict[str, dict]:
    """Statement scores for all three formulas from a single tally pass."""
    tallies = tally(matrix)
    return {
        "dstar": {e: dstar(t, star) for e, t in tallies.items()},
        "ochiai": {e: ochiai(t) for e, t in tallies.items()},
        "tarantula": {e: tarantula(t) for e, t in tallies.items()},
    }


def sbfl_localize(matrix: SpectrumMatrix, star: int = 2) -> dict[str, Ranking]:
    return {name: rank(scores) for name, scores in sbfl_scores(matrix, star).items()}
