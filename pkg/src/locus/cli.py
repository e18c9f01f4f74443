"""Command-line front end: ``locus run``, ``locus score`` and ``locus eval``.

Exit codes: 0 on success, 1 when there is no failing test to localize,
2 on parse or input-format errors (and other user errors).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import ingest
from .core import DuplicateTest, NoFailingTests
from .evaluation import MissingBug, evaluate_corpus
from .minilang import DEFAULT_STEP_BUDGET, ParseFailure, UnknownTest
from .pipeline import NotActuallyFailing, ParseErrors, RunConfig, run
from .ps import DEFAULT_BUDGET
from .scoring import FAMILIES, GRANULARITIES, rank_family

EXIT_OK, EXIT_NO_FAILING, EXIT_INPUT = 0, 1, 2


def parse_failing_list(value: str | None) -> tuple[str, ...] | None:
    """``--failing-list`` takes comma-separated ids or a file of ids (one per line or comma-separated)."""
    if value is None:
        return None
    path = Path(value)
    text = path.read_text(encoding="utf-8") if path.is_file() else value
    items = [t.strip() for chunk in text.splitlines() for t in chunk.split(",")]
    return tuple(t for t in items if t and not t.startswith("#"))


def _budget(value: str) -> int | None:
    if value.lower() in ("none", "unlimited", "0"):
        return None
    n = int(value)
    if n < 0:
        raise argparse.ArgumentTypeError("budget must be non-negative")
    return n


def _positive(value: str) -> int:
    n = int(value)
    if n < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return n


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="locus", description="Fault localization for .ml1 programs.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--family", choices=tuple(FAMILIES), default="sbfl")
        p.add_argument("--granularity", choices=GRANULARITIES, default="statement")
        p.add_argument("--dstar-exponent", type=int, default=2)

    def execution(p):
        p.add_argument("--ps-budget", type=_budget, default=DEFAULT_BUDGET, help="flips per failing test; 'none' for unlimited")
        p.add_argument("--step-budget", type=_positive, default=DEFAULT_STEP_BUDGET, help="interpreter steps per test run")
        p.add_argument("--jobs", type=_positive, default=1, help="worker processes for mutants and flips")

    p_run = sub.add_parser("run", help="run tests and localize")
    p_run.add_argument("--src", required=True, type=Path, help=".ml1 file or directory")
    common(p_run)
    p_run.add_argument("--failing-list", default=None, help="comma-separated test names or a file of them")
    p_run.add_argument("--output", type=Path, default=Path("locus-run"), help="run store directory")
    execution(p_run)

    p_score = sub.add_parser("score", help="score stored or external data without executing tests")
    p_score.add_argument("--from", dest="source", required=True, type=Path, help="run store directory or spectrum .jsonl")
    p_score.add_argument("--family", choices=tuple(FAMILIES), default=None)
    p_score.add_argument("--granularity", choices=GRANULARITIES, default=None)
    p_score.add_argument("--dstar-exponent", type=int, default=None)
    p_score.add_argument("--output", type=Path, default=None, help="where to write CSVs (default: the store)")

    p_eval = sub.add_parser("eval", help="evaluate families over a corpus manifest")
    p_eval.add_argument("--corpus", required=True, type=Path, help="manifest.json")
    p_eval.add_argument("--family", choices=tuple(FAMILIES), action="append", default=None, help="repeatable; default all")
    p_eval.add_argument("--granularity", choices=GRANULARITIES, default="statement")
    p_eval.add_argument("--dstar-exponent", type=int, default=2)
    p_eval.add_argument("--at-n", type=int, default=5)
    p_eval.add_argument("--output", type=Path, default=None)
    execution(p_eval)
    return parser


def cmd_run(args) -> int:
    config = RunConfig(
        args.src,
        family=args.family,
        granularity=args.granularity,
        failing_list=parse_failing_list(args.failing_list),
        output=args.output,
        dstar_exponent=args.dstar_exponent,
        ps_budget=args.ps_budget,
        step_budget=args.step_budget,
        jobs=args.jobs,
    )
    report = run(config)
    for technique, ranking in report.rankings.items():
        path = report.store.csv_path(technique)
        print(f"{technique}: {len(ranking)} entities -> {path}")
    print(f"{args.family}: {len(report.executed)} tests, {report.seconds:.3f} s")
    return EXIT_OK


def _write_rankings(rankings, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    for technique, ranking in rankings.items():
        path = out / f"scores_{technique}.csv"
        ingest.write_ranking_csv(ranking, path)
        print(f"{technique}: {len(ranking)} entities -> {path}")


def _score_store(args) -> int:
    store = ingest.RunStore(args.source)
    family = args.family or store.config().get("family")
    if family is None:
        raise ingest.MissingStage(f"{store.root}: no {ingest.CONFIG}; pass --family")
    overrides = {}
    if args.granularity is not None:
        overrides["granularity"] = args.granularity
    if args.dstar_exponent is not None:
        overrides["dstar_exponent"] = args.dstar_exponent
    rankings = {t: ingest.replay(store, t, overrides) for t in FAMILIES[family]}
    _write_rankings(rankings, args.output or store.root)
    return EXIT_OK


def _score_spectrum(args) -> int:
    # a bare spectrum has neither function spans nor mutants, so only SBFL at statement level
    if (args.family or "sbfl") != "sbfl" or (args.granularity or "statement") != "statement":
        raise ValueError("a spectrum file can only be scored with --family sbfl --granularity statement")
    matrix = ingest.read_spectrum(args.source)
    star = 2 if args.dstar_exponent is None else args.dstar_exponent
    _write_rankings(rank_family("sbfl", matrix=matrix, star=star), args.output or args.source.parent)
    return EXIT_OK


def cmd_score(args) -> int:
    if args.source.is_dir():
        return _score_store(args)
    return _score_spectrum(args)


def cmd_eval(args) -> int:
    families = tuple(args.family) if args.family else tuple(FAMILIES)
    report = evaluate_corpus(
        args.corpus,
        families=families,
        granularity=args.granularity,
        output=args.output,
        n=args.at_n,
        dstar_exponent=args.dstar_exponent,
        ps_budget=args.ps_budget,
        step_budget=args.step_budget,
        jobs=args.jobs,
    )
    out = args.output or args.corpus.parent / "eval-runs"
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.csv").write_text(report.to_csv(), encoding="utf-8")
    sys.stdout.write(report.table())
    print(f"report: {out / 'report.csv'}")
    return EXIT_OK


COMMANDS = {"run": cmd_run, "score": cmd_score, "eval": cmd_eval}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except NoFailingTests as exc:
        print(f"locus: no failing tests: {exc}", file=sys.stderr)
        return EXIT_NO_FAILING
    except ParseErrors as exc:
        for failure in exc.failures:
            print(f"locus: parse error: {failure}", file=sys.stderr)
        return EXIT_INPUT
    except (ParseFailure, ingest.FormatError) as exc:
        print(f"locus: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (DuplicateTest, UnknownTest, NotActuallyFailing, MissingBug, ingest.MissingStage) as exc:
        print(f"locus: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ValueError, OSError) as exc:
        print(f"locus: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
