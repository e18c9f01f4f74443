"""Score rankings against known bug locations over a corpus of fixtures.

The headline metric is the @n count: how many bugs have their faulty entity
within the first ``n`` inspected entities.  Ties are charged at their
expected inspection position, assuming a uniformly random order inside each
tie group.  With several faulty entities the best one counts.
"""

from __future__ import annotations

import csv
import io
import json
import math
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from pathlib import Path

from . import ingest
from .core import Entity, Ranking, owning_function
from .ingest import MissingStage
from .pipeline import RunConfig, load_project, run, target_functions
from .scoring import FAMILIES


class MissingBug(Exception):
    pass


@dataclass(frozen=True)
class GroundTruth:
    bug_id: str
    faulty_entities: frozenset[Entity]

    def __post_init__(self):
        if not self.faulty_entities:
            raise ValueError(f"{self.bug_id}: ground truth needs at least one entity")


def expected_rank(ranking: Ranking, truth: GroundTruth | Iterable[Entity]) -> float:
    faulty = truth.faulty_entities if isinstance(truth, GroundTruth) else frozenset(truth)
    scores = ranking.scores()
    best = math.inf
    for entity in faulty:
        if entity not in scores:
            continue
        s = scores[entity]
        above = sum(1 for v in scores.values() if v > s)
        tied = sum(1 for v in scores.values() if v == s)
        best = min(best, above + (tied + 1) / 2)
    return best


def at_n(rankings: Mapping[str, Ranking], truths: Mapping[str, GroundTruth], n: int = 5) -> int:
    missing = sorted(set(rankings) ^ set(truths))
    if missing:
        raise MissingBug(", ".join(missing))
    return sum(1 for bug, r in rankings.items() if expected_rank(r, truths[bug]) <= n)


def time_report(store: ingest.RunStore) -> dict[str, float]:
    """Wall-clock seconds per family recorded in ``store``."""
    if not store.has(ingest.TIMINGS):
        raise MissingStage(f"{store.root}: no {ingest.TIMINGS}")
    return store.timings()


def to_functions(truth: GroundTruth, functions: Iterable[Entity]) -> GroundTruth:
    """Lift statement-level ground truth to the functions owning it."""
    owner = owning_function(functions)
    lifted = set()
    for e in truth.faulty_entities:
        if e.is_function:
            lifted.add(e)
            continue
        fn = owner(e.file, e.line)
        if fn is None:
            raise ValueError(f"{truth.bug_id}: {e.render()} lies outside every function")
        lifted.add(fn)
    return GroundTruth(truth.bug_id, frozenset(lifted))


def check_truth(truth: GroundTruth, functions) -> None:
    """Every faulty entity must be a statement or function of the program."""
    known = {Entity.statement(fn.file, line) for fn, lines in functions for line in lines}
    known |= {fn for fn, _ in functions}
    unknown = [e.render() for e in truth.faulty_entities if e not in known]
    if unknown:
        raise ValueError(f"{truth.bug_id}: not in the program: {', '.join(sorted(unknown))}")


# -- corpus manifests ------------------------------------------------------------


@dataclass(frozen=True)
class Bug:
    bug_id: str
    program: Path
    tests: Path | None
    truth: GroundTruth
    failing_list: tuple[str, ...] | None = None


def load_manifest(path) -> list[Bug]:
    """Read a corpus manifest; paths in it are relative to the manifest."""
    path = Path(path)
    base = path.parent
    data = json.loads(path.read_text(encoding="utf-8"))
    bugs = []
    for i, item in enumerate(data.get("bugs", data) if isinstance(data, dict) else data):
        try:
            bug_id = item["bug_id"]
            entities = frozenset(
                Entity.statement(e["file"], int(e["line"])) for e in item["ground_truth"]
            )
            bugs.append(
                Bug(
                    bug_id,
                    base / item["program"],
                    base / item["tests"] if item.get("tests") else None,
                    GroundTruth(bug_id, entities),
                    tuple(item["failing_list"]) if item.get("failing_list") else None,
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ingest.FormatError(path, i + 1, f"bad manifest entry: {exc}") from None
    ids = [b.bug_id for b in bugs]
    if len(set(ids)) != len(ids):
        raise ingest.FormatError(path, 0, "duplicate bug_id")
    return bugs


@dataclass(frozen=True)
class EvalRow:
    bug_id: str
    technique: str
    granularity: str
    expected_rank: float
    seconds: float


@dataclass
class EvalReport:
    rows: list[EvalRow] = field(default_factory=list)
    n: int = 5

    def techniques(self) -> list[str]:
        return list(dict.fromkeys(r.technique for r in self.rows))

    def at_n(self, technique: str, n: int | None = None) -> int:
        n = self.n if n is None else n
        return sum(1 for r in self.rows if r.technique == technique and r.expected_rank <= n)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["bug_id", "technique", "granularity", "expected_rank", "seconds"])
        for r in self.rows:
            w.writerow([r.bug_id, r.technique, r.granularity, ingest.format_score(r.expected_rank), f"{r.seconds:.6f}"])
        return buf.getvalue()

    def table(self) -> str:
        bugs = list(dict.fromkeys(r.bug_id for r in self.rows))
        techs = self.techniques()
        cell = {(r.bug_id, r.technique): r.expected_rank for r in self.rows}
        width = max([len("technique"), *map(len, techs)])
        cols = [max(6, len(b)) for b in bugs]
        lines = [
            "technique".ljust(width) + "".join(f"  {b:>{c}}" for b, c in zip(bugs, cols)) + f"  {'@' + str(self.n):>4}"
        ]
        for t in techs:
            vals = []
            for b, c in zip(bugs, cols):
                e = cell.get((b, t))
                vals.append(f"  {'-' if e is None or math.isinf(e) else f'{e:g}':>{c}}")
            lines.append(t.ljust(width) + "".join(vals) + f"  {self.at_n(t):>4}")
        lines.append("(expected rank of the best faulty entity; '-' = not ranked)")
        return "\n".join(lines) + "\n"


def evaluate_corpus(
    manifest,
    families: Iterable[str] = tuple(FAMILIES),
    granularity: str = "statement",
    output: Path | None = None,
    n: int = 5,
    **run_options,
) -> EvalReport:
    """Run every family on every bug of the corpus and collect expected ranks.

    Run stores go to ``output/<bug_id>/<family>``; by default next to the
    manifest under ``eval-runs``.
    """
    manifest = Path(manifest)
    output = Path(output) if output is not None else manifest.parent / "eval-runs"
    report = EvalReport(n=n)
    for bug in load_manifest(manifest):
        functions = target_functions(load_project(bug.program, bug.tests))
        check_truth(bug.truth, functions)
        truth = bug.truth
        if granularity == "function":
            truth = to_functions(truth, [fn for fn, _ in functions])
        for family in families:
            cfg = RunConfig(
                bug.program,
                family=family,
                granularity=granularity,
                failing_list=bug.failing_list,
                output=output / bug.bug_id / family,
                tests=bug.tests,
                **run_options,
            )
            result = run(cfg)
            for technique, ranking in result.rankings.items():
                report.rows.append(
                    EvalRow(bug.bug_id, technique, granularity, expected_rank(ranking, truth), result.seconds)
                )
    return report
