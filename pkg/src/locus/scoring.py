"""Turn collected analysis data into per-technique rankings.

Live runs and replays from a run store both go through :func:`rank_family`,
so a replay differs from the original run only if the stored data does.
"""

from __future__ import annotations

from .core import Entity, Ranking, SpectrumMatrix, rank, to_function_granularity
from .mbfl import metallaxis, muse
from .ps import critical_predicates
from .sbfl import sbfl_scores
from .st import st_localize

FAMILIES = {
    "sbfl": ("dstar", "ochiai", "tarantula"),
    "mbfl": ("metallaxis", "muse"),
    "ps": ("ps",),
    "st": ("st",),
}
GRANULARITIES = ("statement", "function")


def family_of(technique: str) -> str:
    for family, techniques in FAMILIES.items():
        if technique in techniques:
            return family
    raise ValueError(f"unknown technique {technique!r}")


def _lift(scores: dict[Entity, float], functions, granularity: str, include_unscored: bool = True) -> Ranking:
    if granularity == "function":
        scores = to_function_granularity(scores, [fn for fn, _ in functions], include_unscored)
    return rank(scores)


def rank_family(
    family: str,
    *,
    granularity: str = "statement",
    functions=(),
    matrix: SpectrumMatrix | None = None,
    kills=None,
    flips=None,
    traces=None,
    star: int = 2,
) -> dict[str, Ranking]:
    """Rankings for every technique of ``family``.

    ``functions`` is a sequence of ``(function Entity, owned statement lines)``
    describing the target program (test code excluded).
    """
    if granularity not in GRANULARITIES:
        raise ValueError(f"unknown granularity {granularity!r}")
    if family == "sbfl":
        return {t: _lift(s, functions, granularity) for t, s in sbfl_scores(matrix, star).items()}
    if family == "mbfl":
        failed, passed = len(matrix.failing), len(matrix.passing)
        return {
            "metallaxis": _lift(metallaxis(kills, failed, passed), functions, granularity),
            "muse": _lift(muse(kills, failed, passed), functions, granularity),
        }
    if family == "ps":
        scores = {c.location: float(len(c.fixed_tests)) for c in critical_predicates(flips)}
        return {"ps": _lift(scores, functions, granularity, include_unscored=False)}
    if family == "st":
        fns = [fn for fn, _ in functions]
        owned = {fn: lines for fn, lines in functions}
        return {"st": st_localize(traces, fns, granularity, owned)}
    raise ValueError(f"unknown family {family!r}")
