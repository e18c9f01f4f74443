"""On-disk formats: JSON Lines stage files, the ranked CSV and the run store.

All files are UTF-8 with LF line endings.  A run store is a directory of
stage files from which every final CSV can be re-derived.
"""

from __future__ import annotations

import csv
import io
import json
import math
from collections.abc import Iterable
from pathlib import Path

from .core import (
    DuplicateTest,
    Entity,
    ExecutionRecord,
    Frame,
    Mutant,
    PredicateInstance,
    Ranking,
    SpectrumMatrix,
    StackTrace,
    Status,
    TestOutcome,
)
from .mbfl import Change, KillRecord
from .ps import Flip


class FormatError(Exception):
    def __init__(self, path, lineno: int, reason: str):
        self.path = str(path)
        self.lineno = lineno
        self.reason = reason
        super().__init__(f"{path}:{lineno}: {reason}")


class MissingStage(Exception):
    pass


class IoFailure(Exception):
    pass


# -- JSON Lines helpers ----------------------------------------------------------


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def write_jsonl(path, objs: Iterable[dict], append: bool = False) -> None:
    try:
        with open(path, "a" if append else "w", encoding="utf-8", newline="\n") as fh:
            for obj in objs:
                fh.write(_dumps(obj) + "\n")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def read_jsonl(path) -> list[tuple[int, dict]]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(path, lineno, f"invalid JSON: {exc.msg}") from None
            if not isinstance(obj, dict):
                raise FormatError(path, lineno, "expected a JSON object")
            out.append((lineno, obj))
    return out


def _field(obj, key, kind, path, lineno):
    if key not in obj:
        raise FormatError(path, lineno, f"missing field {key!r}")
    value = obj[key]
    if kind is int and (type(value) is not int or value < 1):
        raise FormatError(path, lineno, f"{key!r} must be a positive integer")
    if kind is not int and not isinstance(value, kind):
        raise FormatError(path, lineno, f"{key!r} has the wrong type")
    return value


# -- entities, outcomes, records -------------------------------------------------


def statement_to_json(e: Entity) -> dict:
    return {"file": e.file, "line": e.line}


def function_to_json(e: Entity, lines: Iterable[int] = ()) -> dict:
    return {"file": e.file, "name": e.name, "start": e.start, "end": e.end, "lines": sorted(lines)}


def function_from_json(obj, path="<functions>", lineno=0) -> tuple[Entity, tuple[int, ...]]:
    try:
        fn = Entity.function(
            _field(obj, "file", str, path, lineno),
            _field(obj, "name", str, path, lineno),
            _field(obj, "start", int, path, lineno),
            _field(obj, "end", int, path, lineno),
        )
    except ValueError as exc:
        raise FormatError(path, lineno, str(exc)) from None
    return fn, tuple(obj.get("lines", ()))


def _statement_from_json(obj, path, lineno) -> Entity:
    if not isinstance(obj, dict):
        raise FormatError(path, lineno, "covered entries must be objects")
    return Entity.statement(_field(obj, "file", str, path, lineno), _field(obj, "line", int, path, lineno))


def _frames_from_json(frames, path, lineno) -> StackTrace:
    if not isinstance(frames, list) or not frames:
        raise FormatError(path, lineno, "stack must be a nonempty list of frames")
    out = []
    for fr in frames:
        if not isinstance(fr, dict):
            raise FormatError(path, lineno, "frames must be objects")
        out.append(
            Frame(
                _field(fr, "function", str, path, lineno),
                _field(fr, "file", str, path, lineno),
                _field(fr, "line", int, path, lineno),
            )
        )
    return StackTrace(tuple(out))


def _frames_to_json(trace: StackTrace) -> list[dict]:
    return [{"function": f.function, "file": f.file, "line": f.line} for f in trace.frames]


def record_to_json(rec: ExecutionRecord) -> dict:
    obj = {
        "test_id": rec.test_id,
        "outcome": rec.outcome.status.value,
        "covered": [statement_to_json(e) for e in sorted(rec.covered, key=lambda e: e.sort_key)],
    }
    if rec.outcome.stack is not None:
        obj["stack"] = _frames_to_json(rec.outcome.stack)
    if rec.outcome.detail is not None:
        obj["detail"] = rec.outcome.detail
    return obj


def record_from_json(obj, path="<spectrum>", lineno=0) -> ExecutionRecord:
    test_id = _field(obj, "test_id", str, path, lineno)
    try:
        status = Status(_field(obj, "outcome", str, path, lineno))
    except ValueError:
        raise FormatError(path, lineno, f"outcome must be pass, fail or crash, got {obj['outcome']!r}") from None
    stack = None
    if status is Status.CRASH:
        if "stack" not in obj:
            raise FormatError(path, lineno, "crash outcome without a stack")
        stack = _frames_from_json(obj["stack"], path, lineno)
    elif obj.get("stack") is not None:
        raise FormatError(path, lineno, "only crash outcomes may carry a stack")
    covered = obj.get("covered", [])
    if not isinstance(covered, list):
        raise FormatError(path, lineno, "covered must be a list")
    detail = obj.get("detail")
    return ExecutionRecord(
        test_id,
        TestOutcome(status, detail, stack),
        frozenset(_statement_from_json(c, path, lineno) for c in covered),
    )


def read_spectrum(path) -> SpectrumMatrix:
    records = []
    seen: dict[str, int] = {}
    for lineno, obj in read_jsonl(path):
        rec = record_from_json(obj, path, lineno)
        if rec.test_id in seen:
            raise DuplicateTest(f"{path}:{lineno}: test {rec.test_id!r} already defined on line {seen[rec.test_id]}")
        seen[rec.test_id] = lineno
        records.append(rec)
    return SpectrumMatrix(tuple(records))


def write_spectrum(matrix: SpectrumMatrix, path, append: bool = False) -> None:
    write_jsonl(path, (record_to_json(r) for r in matrix.records), append)


# -- mutants and kills -------------------------------------------------------------


def mutant_to_json(m: Mutant) -> dict:
    return {"id": m.id, "file": m.location.file, "line": m.location.line, "operator": m.operator, "description": m.description}


def mutant_from_json(obj, path="<mutants>", lineno=0) -> Mutant:
    loc = Entity.statement(_field(obj, "file", str, path, lineno), _field(obj, "line", int, path, lineno))
    return Mutant(_field(obj, "id", str, path, lineno), loc, obj.get("operator", ""), obj.get("description", ""))


def kill_to_json(k: KillRecord) -> dict:
    return {
        "mutant_id": k.mutant_id,
        "file": k.location.file,
        "line": k.location.line,
        "changes": {t: c.value for t, c in sorted(k.changes.items())},
    }


def kill_from_json(obj, path="<kills>", lineno=0) -> KillRecord:
    loc = Entity.statement(_field(obj, "file", str, path, lineno), _field(obj, "line", int, path, lineno))
    raw = _field(obj, "changes", dict, path, lineno)
    try:
        changes = {t: Change(c) for t, c in raw.items()}
    except ValueError as exc:
        raise FormatError(path, lineno, str(exc)) from None
    return KillRecord(_field(obj, "mutant_id", str, path, lineno), loc, changes)


def read_kills(path) -> list[KillRecord]:
    return [kill_from_json(obj, path, lineno) for lineno, obj in read_jsonl(path)]


def write_kills(kills: Iterable[KillRecord], path, append: bool = False) -> None:
    write_jsonl(path, (kill_to_json(k) for k in kills), append)


# -- predicate switching and traces ------------------------------------------------


def instance_to_json(test_id: str, inst: PredicateInstance) -> dict:
    return {"test_id": test_id, "file": inst.location.file, "line": inst.location.line, "index": inst.index, "observed": inst.observed}


def flip_to_json(f: Flip) -> dict:
    return {"test_id": f.test_id, "file": f.location.file, "line": f.location.line, "index": f.index, "outcome": f.status.value}


def flip_from_json(obj, path="<flips>", lineno=0) -> Flip:
    loc = Entity.statement(_field(obj, "file", str, path, lineno), _field(obj, "line", int, path, lineno))
    index = obj.get("index")
    if type(index) is not int or index < 0:
        raise FormatError(path, lineno, "'index' must be a non-negative integer")
    try:
        status = Status(_field(obj, "outcome", str, path, lineno))
    except ValueError:
        raise FormatError(path, lineno, "bad outcome") from None
    return Flip(_field(obj, "test_id", str, path, lineno), loc, index, status)


def trace_to_json(test_id: str, trace: StackTrace) -> dict:
    return {"test_id": test_id, "frames": _frames_to_json(trace)}


def trace_from_json(obj, path="<traces>", lineno=0) -> tuple[str, StackTrace]:
    return _field(obj, "test_id", str, path, lineno), _frames_from_json(obj.get("frames"), path, lineno)


def read_traces(path) -> list[tuple[str, StackTrace]]:
    return [trace_from_json(obj, path, lineno) for lineno, obj in read_jsonl(path)]


# -- ranked CSV ----------------------------------------------------------------------


def format_score(score: float) -> str:
    if math.isinf(score):
        return "inf" if score > 0 else "-inf"
    return f"{score:.6f}"


def ranking_csv(ranking: Ranking) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["rank", "entity", "score"])
    for e in ranking.entries:
        writer.writerow([e.rank, e.entity.render(), format_score(e.score)])
    return buf.getvalue()


def write_ranking_csv(ranking: Ranking, path) -> None:
    try:
        Path(path).write_bytes(ranking_csv(ranking).encode("utf-8"))
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def read_ranking_csv(path) -> list[tuple[int, str, str]]:
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["rank", "entity", "score"]:
        raise FormatError(path, 1, "expected header rank,entity,score")
    return [(int(r[0]), r[1], r[2]) for r in rows[1:]]


# -- run store -----------------------------------------------------------------------

TESTS = "tests.jsonl"
MUTANTS = "mutants.jsonl"
KILLS = "kills.jsonl"
PS_INSTANCES = "ps_instances.jsonl"
PS_FLIPS = "ps_flips.jsonl"
TRACES = "traces.jsonl"
FUNCTIONS = "functions.jsonl"
TIMINGS = "timings.jsonl"
CONFIG = "config.json"
STAGES = (TESTS, MUTANTS, KILLS, PS_INSTANCES, PS_FLIPS, TRACES, FUNCTIONS, TIMINGS, CONFIG)


class RunStore:
    """A directory of append-only stage files for one run."""

    def __init__(self, root):
        self.root = Path(root)

    @classmethod
    def create(cls, root) -> RunStore:
        store = cls(root)
        store.root.mkdir(parents=True, exist_ok=True)
        for stale in [*STAGES, *(p.name for p in store.root.glob("scores_*.csv"))]:
            (store.root / stale).unlink(missing_ok=True)
        return store

    def path(self, stage: str) -> Path:
        return self.root / stage

    def has(self, stage: str) -> bool:
        return self.path(stage).is_file()

    def require(self, stage: str) -> Path:
        if not self.has(stage):
            raise MissingStage(f"{self.root}: stage file {stage} is missing")
        return self.path(stage)

    def append(self, stage: str, objs: Iterable[dict]) -> None:
        write_jsonl(self.path(stage), objs, append=True)

    def touch(self, stage: str) -> None:
        self.path(stage).touch()

    def rows(self, stage: str) -> list[tuple[int, dict]]:
        return read_jsonl(self.require(stage))

    def write_config(self, config: dict) -> None:
        self.path(CONFIG).write_text(_dumps(config) + "\n", encoding="utf-8")

    def config(self) -> dict:
        if not self.has(CONFIG):
            return {}
        return json.loads(self.path(CONFIG).read_text(encoding="utf-8"))

    def csv_path(self, technique: str) -> Path:
        return self.root / f"scores_{technique}.csv"

    # typed readers

    def spectrum(self) -> SpectrumMatrix:
        return read_spectrum(self.require(TESTS))

    def kills(self) -> list[KillRecord]:
        return read_kills(self.require(KILLS))

    def flips(self) -> list[Flip]:
        return [flip_from_json(obj, self.path(PS_FLIPS), n) for n, obj in self.rows(PS_FLIPS)]

    def traces(self) -> list[tuple[str, StackTrace]]:
        return read_traces(self.require(TRACES))

    def functions(self) -> list[tuple[Entity, tuple[int, ...]]]:
        return [function_from_json(obj, self.path(FUNCTIONS), n) for n, obj in self.rows(FUNCTIONS)]

    def timings(self) -> dict[str, float]:
        return {obj["family"]: float(obj["seconds"]) for _, obj in self.rows(TIMINGS)}


def replay(store: RunStore, technique: str, overrides: dict | None = None) -> Ranking:
    """Recompute one technique's ranking from the stage files alone.

    ``overrides`` replaces entries of the stored run config (granularity,
    dstar exponent) to rescore the same data differently.
    """
    from .scoring import family_of, rank_family

    family = family_of(technique)
    config = {**store.config(), **(overrides or {})}
    granularity = config.get("granularity", "statement")
    functions = store.functions() if (family == "st" or granularity == "function") else []
    data = {}
    if family == "sbfl":
        data["matrix"] = store.spectrum()
    elif family == "mbfl":
        data["kills"] = store.kills()
        data["matrix"] = store.spectrum()
    elif family == "ps":
        data["flips"] = store.flips()
    else:
        data["traces"] = store.traces()
    rankings = rank_family(
        family, granularity=granularity, functions=functions, star=config.get("dstar_exponent", 2), **data
    )
    return rankings[technique]
