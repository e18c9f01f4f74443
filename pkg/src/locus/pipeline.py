"""End-to-end runs on ``.ml1`` projects: run tests, collect data, rank, write CSVs."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from pathlib import Path

from . import ingest
from .core import DuplicateTest, Entity, ExecutionRecord, NoFailingTests, Ranking, SpectrumMatrix, Status
from .mbfl import build_kill_matrix, generate_mutants
from .minilang import DEFAULT_STEP_BUDGET, ParseFailure, Program, UnknownTest, function_table, link, parse_unresolved
from .minilang.runner import Executor
from .ps import DEFAULT_BUDGET, ps_search, switch_and_run
from .scoring import FAMILIES, GRANULARITIES, rank_family

SOURCE_SUFFIX = ".ml1"


class ParseErrors(Exception):
    """One or more source files failed to parse."""

    def __init__(self, failures: list[ParseFailure]):
        self.failures = failures
        super().__init__("\n".join(str(f) for f in failures))


class NotActuallyFailing(Exception):
    pass


@dataclass
class RunConfig:
    src: Path
    family: str = "sbfl"
    granularity: str = "statement"
    failing_list: tuple[str, ...] | None = None
    output: Path = Path("locus-run")
    dstar_exponent: int = 2
    ps_budget: int | None = DEFAULT_BUDGET
    step_budget: int = DEFAULT_STEP_BUDGET
    jobs: int = 1
    tests: Path | None = None  # extra test file or directory outside ``src``

    def __post_init__(self):
        self.src = Path(self.src)
        self.output = Path(self.output)
        if self.tests is not None:
            self.tests = Path(self.tests)
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if self.granularity not in GRANULARITIES:
            raise ValueError(f"unknown granularity {self.granularity!r}")


@dataclass
class RunReport:
    store: ingest.RunStore
    rankings: dict[str, Ranking]
    seconds: float
    executed: list[str] = field(default_factory=list)


# -- project loading ---------------------------------------------------------------


def source_files(src: Path) -> list[Path]:
    src = Path(src)
    if src.is_file():
        return [src]
    return sorted(src.rglob(f"*{SOURCE_SUFFIX}"))


def _key(path: Path, root: Path) -> str:
    try:
        return path.relative_to(root).as_posix()
    except ValueError:
        return path.name


def _parse_files(src: Path, tests: Path | None = None) -> list[Program]:
    src = Path(src)
    root = src.parent if src.is_file() else src
    paths = source_files(src)
    if tests is not None:
        paths += [p for p in source_files(tests) if p not in paths]
    programs, failures = [], []
    for path in paths:
        key = _key(path, root)
        try:
            programs.append(parse_unresolved(path.read_text(encoding="utf-8"), key))
        except ParseFailure as exc:
            failures.append(exc)
    if failures:
        raise ParseErrors(failures)
    return programs


def _check_duplicate_tests(programs: list[Program]) -> None:
    seen: dict[str, str] = {}
    for program in programs:
        for fn in program.functions:
            if fn.is_test:
                if fn.name in seen:
                    raise DuplicateTest(f"test {fn.name!r} defined in {seen[fn.name]} and {fn.file}")
                seen[fn.name] = fn.file


def load_project(src, tests=None) -> Program:
    """Parse and link every source file under ``src`` (plus ``tests``, if given)."""
    programs = _parse_files(src, tests)
    _check_duplicate_tests(programs)
    try:
        return link(programs)
    except ParseFailure as exc:
        raise ParseErrors([exc]) from None


def discover_tests(src, tests=None) -> list[str]:
    """Names of all zero-argument ``test_*`` functions under ``src``, sorted."""
    programs = _parse_files(src, tests)
    _check_duplicate_tests(programs)
    return sorted(fn.name for p in programs for fn in p.functions if fn.is_test and not fn.params)


def target_functions(program: Program) -> list[tuple[Entity, tuple[int, ...]]]:
    return [
        (Entity.function(f.file, f.qualname, f.start, f.end), f.lines)
        for f in function_table(program)
        if not f.is_test
    ]


def restrict_failing(family: str, failing_list, discovered: list[str]) -> list[str]:
    """Tests to execute for ``family`` given an optional failing-test list."""
    if failing_list is None:
        return list(discovered)
    unknown = [t for t in failing_list if t not in discovered]
    if unknown:
        raise UnknownTest(", ".join(unknown))
    if family in ("st", "ps"):
        return sorted(set(failing_list))
    return list(discovered)


def _select_records(records: list[ExecutionRecord], failing_list) -> list[ExecutionRecord]:
    """Apply the failing-list contract to freshly executed records."""
    if failing_list is None:
        return records
    wanted = set(failing_list)
    for rec in records:
        if rec.test_id in wanted and not rec.outcome.failing:
            raise NotActuallyFailing(rec.test_id)
    # failing tests outside the list belong to other bugs; leave them out
    return [r for r in records if r.test_id in wanted or not r.outcome.failing]


# -- the run -----------------------------------------------------------------------


def _execute(program, tests, executor: Executor, trace: bool) -> list[ExecutionRecord]:
    records = []
    for test in tests:
        if trace:
            result = executor.trace(program, test)
            records.append(ExecutionRecord(test, result.outcome, result.covered_entities()))
        else:
            records.append(ExecutionRecord(test, executor.run(program, test)))
    return records


def run(config: RunConfig) -> RunReport:
    program = load_project(config.src, config.tests)
    discovered = sorted(program.test_names)
    to_run = restrict_failing(config.family, config.failing_list, discovered)

    store = ingest.RunStore.create(config.output)
    store.write_config(
        {
            "family": config.family,
            "granularity": config.granularity,
            "dstar_exponent": config.dstar_exponent,
            "ps_budget": config.ps_budget,
            "step_budget": config.step_budget,
            "failing_list": list(config.failing_list) if config.failing_list is not None else None,
        }
    )
    functions = target_functions(program)
    store.append(ingest.FUNCTIONS, (ingest.function_to_json(fn, lines) for fn, lines in functions))
    executor = Executor(config.step_budget)
    family = config.family

    started = time.perf_counter()
    records = _execute(program, to_run, executor, trace=family in ("sbfl", "mbfl"))
    records = _select_records(records, config.failing_list)
    matrix = SpectrumMatrix(tuple(records))
    store.append(ingest.TESTS, (ingest.record_to_json(r) for r in records))
    data: dict = {}

    if family in ("sbfl", "mbfl", "ps") and not matrix.failing:
        raise NoFailingTests(f"no failing test among {len(records)} executed")
    if family == "sbfl":
        data["matrix"] = matrix
    elif family == "mbfl":
        failing_covered = set().union(*(r.covered for r in matrix.failing))
        mutants = generate_mutants(program, failing_covered)
        store.append(ingest.MUTANTS, (ingest.mutant_to_json(m) for m, _ in mutants))
        baseline = {r.test_id: r.outcome for r in records}
        kills = build_kill_matrix(mutants, [r.test_id for r in records], baseline, executor, config.jobs)
        ingest.write_kills(kills, store.path(ingest.KILLS), append=True)
        data.update(matrix=matrix, kills=kills)
    elif family == "ps":
        search = ps_search(program, [r.test_id for r in matrix.failing], executor, config.ps_budget, config.jobs)
        store.append(
            ingest.PS_INSTANCES,
            (ingest.instance_to_json(t, i) for t in sorted(search.instances) for i in search.instances[t]),
        )
        store.append(ingest.PS_FLIPS, (ingest.flip_to_json(f) for f in search.flips))
        for crit in search.critical():
            test, index = crit.witness
            outcome = switch_and_run(program, test, (crit.location, index), executor)
            if outcome.status is not Status.PASS:
                raise RuntimeError(f"predicate switch witness {crit.location} / {test}#{index} did not replay")
        data["flips"] = search.flips
    else:
        traces = [(r.test_id, r.outcome.stack) for r in records if r.outcome.status is Status.CRASH]
        store.append(ingest.TRACES, (ingest.trace_to_json(t, s) for t, s in traces))
        data["traces"] = traces

    rankings = rank_family(
        family, granularity=config.granularity, functions=functions, star=config.dstar_exponent, **data
    )
    for technique, ranking in rankings.items():
        ingest.write_ranking_csv(ranking, store.csv_path(technique))
    seconds = time.perf_counter() - started
    store.append(ingest.TIMINGS, [{"family": family, "seconds": seconds}])
    return RunReport(store, rankings, seconds, [r.test_id for r in records])
