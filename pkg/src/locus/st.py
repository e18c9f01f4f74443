"""Stack-trace fault localization.

Functions on the stack of a crashing test are suspicious, the more so the
closer they are to the crash site: the frame at depth ``d`` (0 = innermost)
contributes ``1 / (d + 1)`` and a function keeps its best contribution over
all traces.  Frames of test functions are ignored.
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping

from .core import Entity, Ranking, StackTrace, owning_function, rank


class UnknownFunction(Exception):
    pass


def is_test_frame(function: str) -> bool:
    return function.split(".", 1)[0].startswith("test_")


def function_scores(crashing: Iterable[tuple[str, StackTrace]], functions: Iterable[Entity]) -> dict[Entity, float]:
    by_key = {(fn.file, fn.name): fn for fn in functions}
    scores: dict[Entity, float] = {}
    for test_id, trace in crashing:
        depth = 0
        for frame in trace.frames:
            if is_test_frame(frame.function):
                continue
            fn = by_key.get((frame.file, frame.function))
            if fn is None:
                raise UnknownFunction(f"{test_id}: frame {frame.file}:{frame.function} is not in the program")
            scores[fn] = max(scores.get(fn, 0.0), 1.0 / (depth + 1))
            depth += 1
    return scores


def st_localize(
    crashing: Iterable[tuple[str, StackTrace]],
    functions: Iterable[Entity],
    granularity: str = "statement",
    owned_lines: Mapping[Entity, Iterable[int]] | None = None,
) -> Ranking:
    """Rank functions, or their statements, by stack depth in crashing tests.

    At statement granularity every statement of a scored function inherits
    the function's score.  ``owned_lines`` gives each function's statement
    lines; without it every line of the span counts, attributed to the
    innermost enclosing function.
    """
    functions = list(functions)
    fn_scores = function_scores(crashing, functions)
    if granularity == "function":
        return rank(fn_scores)
    stmt_scores: dict[Entity, float] = {}
    if owned_lines is not None:
        for fn, score in fn_scores.items():
            for line in owned_lines.get(fn, ()):
                stmt = Entity.statement(fn.file, line)
                stmt_scores[stmt] = max(stmt_scores.get(stmt, 0.0), score)
    else:
        owner = owning_function(functions)
        for fn, score in fn_scores.items():
            for line in range(fn.start, fn.end + 1):
                if owner(fn.file, line) == fn:
                    stmt_scores[Entity.statement(fn.file, line)] = score
    return rank(stmt_scores)
