"""Mutation-based fault localization: kill matrices, Metallaxis and Muse."""

from __future__ import annotations

import enum
import math
from collections.abc import Iterable, Mapping
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from .core import Entity, Mutant, Status, TestOutcome

TECHNIQUES = ("metallaxis", "muse")


class Change(str, enum.Enum):
    UNCHANGED = "unchanged"
    FAIL_TO_PASS = "f2p"
    PASS_TO_FAIL = "p2f"
    FAIL_CHANGED = "fail_changed"  # Fail <-> Crash


def classify(baseline: Status, mutated: Status) -> Change:
    """Compare one test's status on the original program and on a mutant.

    Only status changes count; a failing test that fails with a different
    message is unchanged.
    """
    if not baseline.failing:
        return Change.UNCHANGED if not mutated.failing else Change.PASS_TO_FAIL
    if not mutated.failing:
        return Change.FAIL_TO_PASS
    return Change.UNCHANGED if baseline is mutated else Change.FAIL_CHANGED


@dataclass(frozen=True)
class KillRecord:
    mutant_id: str
    location: Entity
    changes: Mapping[str, Change] = field(default_factory=dict, hash=False)

    def _count(self, *kinds: Change) -> int:
        return sum(1 for c in self.changes.values() if c in kinds)

    @property
    def f2p(self) -> int:
        return self._count(Change.FAIL_TO_PASS)

    @property
    def p2f(self) -> int:
        return self._count(Change.PASS_TO_FAIL)

    @property
    def f_kill(self) -> int:
        return self._count(Change.FAIL_TO_PASS, Change.FAIL_CHANGED)

    @property
    def p_kill(self) -> int:
        return self.p2f


def generate_mutants(program, failing_covered: Iterable[Entity], operators=None):
    """Mutants of ``program`` located on statements covered by a failing test.

    Returns ``(Mutant, mutated_program)`` pairs in enumeration order.
    """
    from .minilang import ALL_OPERATORS, mutate

    wanted = set(failing_covered)
    pairs = mutate(program, operators or ALL_OPERATORS)
    return [(m, p) for m, p in pairs if m.location in wanted]


def _run_mutant(args):
    mutant, program, tests, baseline, executor = args
    changes = {}
    for test in tests:
        outcome: TestOutcome = executor.run(program, test)
        changes[test] = classify(baseline[test].status, outcome.status)
    return KillRecord(mutant.id, mutant.location, changes)


def build_kill_matrix(mutants, tests, baseline: Mapping[str, TestOutcome], executor, jobs: int = 1) -> list[KillRecord]:
    """Run every test against every mutant.

    ``mutants`` holds ``(Mutant, mutated_program)`` pairs and ``executor.run``
    returns the :class:`TestOutcome` of one test on one program.  Records come
    back in mutant order whatever ``jobs`` is.
    """
    tests = list(tests)
    missing = [t for t in tests if t not in baseline]
    if missing:
        raise ValueError(f"no baseline outcome for {missing}")
    work = [(m, p, tests, baseline, executor) for m, p in mutants]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_run_mutant, work))
    return [_run_mutant(w) for w in work]


def _group(kills: Iterable[KillRecord], score) -> dict[Entity, list[float]]:
    by_location: dict[Entity, list[float]] = {}
    for k in kills:
        by_location.setdefault(k.location, []).append(score(k))
    return by_location


def metallaxis(kills: Iterable[KillRecord], failed: int, passed: int) -> dict[Entity, float]:
    """Ochiai over mutant kills; a location takes its best mutant's score."""
    if failed < 1:
        raise ValueError("Metallaxis needs at least one failing test")

    def score(k: KillRecord) -> float:
        if k.f_kill == 0:
            return 0.0
        return k.f_kill / math.sqrt(failed * (k.f_kill + k.p_kill))

    return {loc: max(scores) for loc, scores in _group(kills, score).items()}


def muse(kills: Iterable[KillRecord], failed: int, passed: int) -> dict[Entity, float]:
    """Muse: reward fail-to-pass flips, penalize pass-to-fail flips; mean per location."""
    if failed < 1:
        raise ValueError("Muse needs at least one failing test")
    kills = list(kills)
    f2p_total = sum(k.f2p for k in kills)
    p2f_total = sum(k.p2f for k in kills)
    alpha = 0.0
    if p2f_total and passed:
        alpha = (f2p_total / failed) * (passed / p2f_total)

    def score(k: KillRecord) -> float:
        penalty = alpha * k.p2f / passed if passed else 0.0
        return k.f2p / failed - penalty

    return {loc: math.fsum(s) / len(s) for loc, s in _group(kills, score).items()}
