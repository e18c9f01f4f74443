"""Shared data model: entities, test outcomes, spectra, tallies and rankings."""

from __future__ import annotations

import enum
import math
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field


class NoFailingTests(Exception):
    """Fault localization needs at least one failing test."""


class OverlappingSpans(Exception):
    pass


class DuplicateTest(Exception):
    pass


class Kind(str, enum.Enum):
    STATEMENT = "statement"
    FUNCTION = "function"


@dataclass(frozen=True)
class Entity:
    """A localizable program unit.

    Statements are identified by ``(file, line)``, functions by
    ``(file, name)``; a function's span does not take part in identity.
    """

    kind: Kind
    file: str
    line: int = 0
    name: str = ""
    start: int = field(default=0, compare=False)
    end: int = field(default=0, compare=False)

    def __post_init__(self):
        if self.kind is Kind.STATEMENT:
            if self.line < 1:
                raise ValueError(f"statement line must be positive, got {self.line}")
        elif not self.name or not (1 <= self.start <= self.end):
            raise ValueError(f"bad function entity {self.name!r} [{self.start}, {self.end}]")

    @classmethod
    def statement(cls, file: str, line: int) -> Entity:
        return cls(Kind.STATEMENT, file, line)

    @classmethod
    def function(cls, file: str, name: str, start: int, end: int) -> Entity:
        return cls(Kind.FUNCTION, file, name=name, start=start, end=end)

    @property
    def is_function(self) -> bool:
        return self.kind is Kind.FUNCTION

    @property
    def sort_key(self) -> tuple:
        line = self.start if self.is_function else self.line
        return (self.file, line, self.name)

    def contains(self, line: int) -> bool:
        return self.is_function and self.start <= line <= self.end

    def render(self) -> str:
        if self.is_function:
            return f"{self.file}:{self.name}:{self.start}-{self.end}"
        return f"{self.file}:{self.line}"

    def __str__(self) -> str:
        return self.render()


class Status(str, enum.Enum):
    PASS = "pass"
    FAIL = "fail"
    CRASH = "crash"

    @property
    def failing(self) -> bool:
        return self is not Status.PASS


@dataclass(frozen=True)
class Frame:
    function: str
    file: str
    line: int


@dataclass(frozen=True)
class StackTrace:
    """Active frames at a crash, innermost (crash site) first."""

    frames: tuple[Frame, ...]

    def __post_init__(self):
        if not self.frames:
            raise ValueError("a stack trace needs at least one frame")


@dataclass(frozen=True)
class TestOutcome:
    status: Status
    detail: str | None = None
    stack: StackTrace | None = None

    __test__ = False  # not a pytest class

    def __post_init__(self):
        if self.status is Status.CRASH and self.stack is None:
            raise ValueError("a crash outcome needs a stack trace")
        if self.status is not Status.CRASH and self.stack is not None:
            raise ValueError("only crash outcomes carry a stack trace")

    @property
    def failing(self) -> bool:
        return self.status.failing


PASS = TestOutcome(Status.PASS)


@dataclass(frozen=True)
class PredicateInstance:
    """One dynamic evaluation of a branch condition."""

    location: Entity
    index: int  # occurrence number of this location within the run
    observed: bool


@dataclass(frozen=True)
class Mutant:
    """A single syntactic change at a statement location."""

    id: str
    location: Entity
    operator: str
    description: str  # "before -> after"


@dataclass(frozen=True)
class ExecutionRecord:
    test_id: str
    outcome: TestOutcome
    covered: frozenset[Entity] = frozenset()


@dataclass(frozen=True)
class SpectrumMatrix:
    records: tuple[ExecutionRecord, ...] = ()

    def __post_init__(self):
        seen = set()
        for rec in self.records:
            if rec.test_id in seen:
                raise DuplicateTest(rec.test_id)
            seen.add(rec.test_id)

    @property
    def failing(self) -> list[ExecutionRecord]:
        return [r for r in self.records if r.outcome.failing]

    @property
    def passing(self) -> list[ExecutionRecord]:
        return [r for r in self.records if not r.outcome.failing]

    @property
    def entities(self) -> set[Entity]:
        out: set[Entity] = set()
        for rec in self.records:
            out |= rec.covered
        return out

    def __len__(self) -> int:
        return len(self.records)


@dataclass(frozen=True)
class TallyCounts:
    ef: int
    ep: int
    nf: int
    np: int

    def __post_init__(self):
        if min(self.ef, self.ep, self.nf, self.np) < 0:
            raise ValueError(f"negative tally {self}")

    @property
    def failed(self) -> int:
        return self.ef + self.nf

    @property
    def passed(self) -> int:
        return self.ep + self.np


def tally(matrix: SpectrumMatrix) -> dict[Entity, TallyCounts]:
    failing = matrix.failing
    if not failing:
        raise NoFailingTests("no failing test in the spectrum")
    total_f, total_p = len(failing), len(matrix.records) - len(failing)
    ef: dict[Entity, int] = {}
    ep: dict[Entity, int] = {}
    for rec in matrix.records:
        counts = ef if rec.outcome.failing else ep
        for entity in rec.covered:
            counts[entity] = counts.get(entity, 0) + 1
    out = {}
    for entity in ef.keys() | ep.keys():
        f, p = ef.get(entity, 0), ep.get(entity, 0)
        out[entity] = TallyCounts(f, p, total_f - f, total_p - p)
    return out


@dataclass(frozen=True)
class RankEntry:
    entity: Entity
    score: float
    rank: int


@dataclass(frozen=True)
class Ranking:
    """Entities ordered by non-increasing score.

    Ties share a rank using standard competition numbering (1, 1, 3); inside
    a tie group entities are ordered by ``Entity.sort_key``.
    """

    entries: tuple[RankEntry, ...] = ()

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def scores(self) -> dict[Entity, float]:
        return {e.entity: e.score for e in self.entries}

    def top(self) -> set[Entity]:
        return {e.entity for e in self.entries if e.rank == 1}

    def top_lines(self) -> set[int]:
        return {e.line for e in self.top()}

    def entry(self, entity: Entity) -> RankEntry | None:
        for e in self.entries:
            if e.entity == entity:
                return e
        return None


def rank(scores: Mapping[Entity, float]) -> Ranking:
    for entity, score in scores.items():
        if math.isnan(score):
            raise ValueError(f"NaN score for {entity}")
    ordered = sorted(scores.items(), key=lambda kv: (-kv[1], kv[0].sort_key))
    entries = []
    for i, (entity, score) in enumerate(ordered):
        if i and score == entries[-1].score:
            r = entries[-1].rank
        else:
            r = i + 1
        entries.append(RankEntry(entity, score, r))
    return Ranking(tuple(entries))


def _innermost(functions: Iterable[Entity]) -> dict[tuple[str, int], Entity]:
    """Map each (file, line) to the innermost function span containing it."""
    owner: dict[tuple[str, int], Entity] = {}
    for fn in sorted(functions, key=lambda f: (f.end - f.start, f.sort_key)):
        for line in range(fn.start, fn.end + 1):
            key = (fn.file, line)
            prev = owner.get(key)
            if prev is None:
                owner[key] = fn
            elif not (prev.start >= fn.start and prev.end <= fn.end):
                raise OverlappingSpans(f"{prev.render()} and {fn.render()} both claim line {line}")
            elif (prev.start, prev.end) == (fn.start, fn.end):
                raise OverlappingSpans(f"{prev.render()} and {fn.render()} have the same span")
    return owner


def owning_function(functions: Iterable[Entity]):
    """Return a lookup ``(file, line) -> function Entity | None``."""
    owner = _innermost(functions)
    return lambda file, line: owner.get((file, line))


def to_function_granularity(
    stmt_scores: Mapping[Entity, float],
    functions: Iterable[Entity],
    include_unscored: bool = True,
) -> dict[Entity, float]:
    """Lift statement scores to functions by taking the max.

    Properly nested spans are allowed; a statement belongs to the innermost
    function containing it.  Spans that partially overlap raise
    :class:`OverlappingSpans`.
    """
    functions = list(functions)
    owner = _innermost(functions)
    out: dict[Entity, float] = {}
    for stmt, score in stmt_scores.items():
        fn = owner.get((stmt.file, stmt.line))
        if fn is None:
            continue
        out[fn] = max(out.get(fn, -math.inf), score)
    if include_unscored:
        for fn in functions:
            out.setdefault(fn, 0.0)
    return out
