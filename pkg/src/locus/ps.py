"""Predicate switching.

For every failing test, re-run it with exactly one dynamic branch decision
negated.  A branch location whose flip makes a failing test pass is a
critical predicate; its score is the number of failing tests it fixes.
"""

from __future__ import annotations

from collections.abc import Iterable
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from .core import Entity, NoFailingTests, PredicateInstance, Ranking, Status, TestOutcome, rank

DEFAULT_BUDGET = 10_000


@dataclass(frozen=True)
class Flip:
    """One switched re-execution and its outcome."""

    test_id: str
    location: Entity
    index: int
    status: Status


@dataclass(frozen=True)
class CriticalPredicate:
    location: Entity
    fixed_tests: frozenset[str]
    witness: tuple[str, int]  # (test_id, instance index)


@dataclass(frozen=True)
class PsSearch:
    instances: dict[str, tuple[PredicateInstance, ...]]
    flips: tuple[Flip, ...]

    def critical(self) -> list[CriticalPredicate]:
        return critical_predicates(self.flips)

    def ranking(self) -> Ranking:
        return ps_rank(self.flips)


def record_instances(program, test: str, executor) -> list[PredicateInstance]:
    return list(executor.trace(program, test).predicate_instances)


def switch_and_run(program, test: str, flip: tuple[Entity, int], executor) -> TestOutcome:
    return executor.run(program, test, flip=flip)


def _candidates(instances, budget: int | None):
    ordered = list(reversed(instances))  # last executed first
    return ordered if budget is None else ordered[:budget]


def _search_test(args) -> tuple[str, tuple[PredicateInstance, ...], list[Flip]]:
    program, test, executor, budget = args
    instances = tuple(record_instances(program, test, executor))
    flips = []
    for inst in _candidates(instances, budget):
        outcome = switch_and_run(program, test, (inst.location, inst.index), executor)
        flips.append(Flip(test, inst.location, inst.index, outcome.status))
    return test, instances, flips


def ps_search(program, failing_tests: Iterable[str], executor, budget: int | None = DEFAULT_BUDGET, jobs: int = 1) -> PsSearch:
    """Try single-instance flips for every failing test.

    ``budget`` caps the flips per test (``None`` means every instance).  The
    flip log is ordered by ``(test_id, instance order)`` of the search,
    independent of ``jobs``.
    """
    tests = sorted(set(failing_tests))
    if not tests:
        raise NoFailingTests("predicate switching needs a failing test")
    work = [(program, t, executor, budget) for t in tests]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_search_test, work))
    else:
        results = [_search_test(w) for w in work]
    instances = {t: inst for t, inst, _ in results}
    flips = tuple(f for _, _, fs in results for f in fs)
    return PsSearch(instances, flips)


def critical_predicates(flips: Iterable[Flip]) -> list[CriticalPredicate]:
    fixed: dict[Entity, set[str]] = {}
    witness: dict[Entity, tuple[str, int]] = {}
    for f in flips:
        if f.status is Status.PASS:
            fixed.setdefault(f.location, set()).add(f.test_id)
            witness.setdefault(f.location, (f.test_id, f.index))
    return [
        CriticalPredicate(loc, frozenset(fixed[loc]), witness[loc])
        for loc in sorted(fixed, key=lambda e: e.sort_key)
    ]


def ps_rank(flips: Iterable[Flip]) -> Ranking:
    return rank({c.location: float(len(c.fixed_tests)) for c in critical_predicates(flips)})


def ps_localize(program, failing_tests, executor, budget: int | None = DEFAULT_BUDGET, jobs: int = 1) -> Ranking:
    return ps_search(program, failing_tests, executor, budget, jobs).ranking()
