"""Property suites.

The ``prop_*`` functions are hypothesis tests that the acceptance module also
calls directly.
"""

from __future__ import annotations

import math
import tempfile
from pathlib import Path

from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from locus import ingest
from locus.core import (
    Entity,
    ExecutionRecord,
    Frame,
    Ranking,
    SpectrumMatrix,
    StackTrace,
    Status,
    TestOutcome,
    owning_function,
    rank,
    tally,
)
from locus.evaluation import GroundTruth, at_n, expected_rank
from locus.mbfl import Change, KillRecord, classify, metallaxis, muse
from locus.minilang import DEFAULT_STEP_BUDGET, approx, execute_test, parse, to_source
from locus.minilang.nodes import Assert, Assign, Binary, If, Let, Num, Return, Var, While
from locus.pipeline import RunConfig, run
from locus.sbfl import sbfl_scores
from locus.scoring import FAMILIES
from locus.st import st_localize

from progen import generate, programs

FILE = "p.ml1"
lines = st.integers(min_value=1, max_value=30)
entities = lines.map(lambda n: Entity.statement(FILE, n))


def _ranks(r: Ranking):
    return [(e.entity, e.rank) for e in r]


# -- rankings --------------------------------------------------------------------

MONOTONE = [
    lambda x: 3 * x + 7,
    lambda x: x**3,
    lambda x: 2.0**x,
    lambda x: math.atan(x / 1000),
    lambda x: -1.0 / (x + 2000),
]


@settings(max_examples=200, deadline=None)
@given(st.dictionaries(entities, st.integers(-1000, 1000), max_size=25), st.sampled_from(range(len(MONOTONE))))
def prop_rank_invariant_under_monotone_transform(scores, which):
    f = MONOTONE[which]
    assert _ranks(rank(scores)) == _ranks(rank({e: f(s) for e, s in scores.items()}))


@settings(max_examples=200, deadline=None)
@given(st.dictionaries(entities, st.integers(-50, 50), min_size=1, max_size=25), st.frozensets(entities, min_size=1, max_size=3))
def prop_expected_rank_invariant_under_monotone_transform(scores, faulty):
    truth = GroundTruth("b", faulty)
    assert expected_rank(rank(scores), truth) == expected_rank(rank({e: s**3 + 5 for e, s in scores.items()}), truth)


@settings(max_examples=100, deadline=None)
@given(st.lists(entities, min_size=1, max_size=20, unique=True))
def prop_expected_rank_without_ties_is_index(order):
    r = rank({e: float(len(order) - i) for i, e in enumerate(order)})
    for i, e in enumerate(order):
        assert expected_rank(r, [e]) == i + 1


@settings(max_examples=100, deadline=None)
@given(
    st.lists(st.tuples(st.dictionaries(entities, st.integers(0, 5), max_size=10), st.frozensets(entities, min_size=1, max_size=2)), min_size=1, max_size=6),
    st.integers(0, 12),
)
def prop_at_n_monotone(bugs, n):
    rankings = {str(i): rank(s) for i, (s, _) in enumerate(bugs)}
    truths = {str(i): GroundTruth(str(i), t) for i, (_, t) in enumerate(bugs)}
    assert at_n(rankings, truths, n) <= at_n(rankings, truths, n + 1)


# -- SBFL ----------------------------------------------------------------------


@st.composite
def spectra(draw, min_failing=1):
    n_fail = draw(st.integers(min_failing, 5))
    n_pass = draw(st.integers(0, 5))
    records = []
    for i in range(n_fail + n_pass):
        covered = draw(st.frozensets(entities, max_size=12))
        status = Status.FAIL if i < n_fail else Status.PASS
        records.append(ExecutionRecord(f"t{i}", TestOutcome(status), covered))
    return SpectrumMatrix(tuple(records))


@settings(max_examples=200, deadline=None)
@given(spectra())
def prop_identical_tally_identical_score(matrix):
    tallies = tally(matrix)
    scores = sbfl_scores(matrix)
    groups: dict = {}
    for e, t in tallies.items():
        groups.setdefault(t, []).append(e)
    for members in groups.values():
        for technique in scores.values():
            assert len({technique[e] for e in members}) == 1
    # and entities covered only and by all failing tests top every formula
    F = len(matrix.failing)
    for e, t in tallies.items():
        if t.ef == F and t.ep == 0:
            for technique in scores.values():
                assert technique[e] == max(technique.values())


@settings(max_examples=200, deadline=None)
@given(spectra())
def prop_tally_invariants(matrix):
    F, P = len(matrix.failing), len(matrix.passing)
    for t in tally(matrix).values():
        assert t.ef + t.nf == F and t.ep + t.np == P
        assert min(t.ef, t.ep, t.nf, t.np) >= 0


@settings(max_examples=100, deadline=None)
@given(spectra(min_failing=0))
def prop_spectrum_round_trip(matrix):
    with tempfile.TemporaryDirectory() as d:
        path = f"{d}/s.jsonl"
        ingest.write_spectrum(matrix, path)
        assert ingest.read_spectrum(path) == matrix


# -- MBFL ------------------------------------------------------------------------

statuses = st.sampled_from(list(Status))


@given(statuses, statuses)
def prop_kill_symmetry(a, b):
    killed = classify(a, b) is not Change.UNCHANGED
    assert killed == (classify(b, a) is not Change.UNCHANGED)
    # pass/fail direction swaps, failing-to-failing changes stay put
    swap = {Change.FAIL_TO_PASS: Change.PASS_TO_FAIL, Change.PASS_TO_FAIL: Change.FAIL_TO_PASS}
    assert classify(b, a) is swap.get(classify(a, b), classify(a, b))


changes = st.sampled_from(list(Change))
kill_records = st.builds(
    lambda i, line, ch: KillRecord(f"m{i}", Entity.statement(FILE, line), {f"t{j}": c for j, c in enumerate(ch)}),
    st.integers(0, 999),
    st.integers(1, 6),
    st.lists(changes, min_size=4, max_size=4),
)


@settings(max_examples=200, deadline=None)
@given(st.lists(kill_records, min_size=1, max_size=8), st.data())
def prop_metallaxis_duplication_invariant(kills, data):
    dup = data.draw(st.sampled_from(kills))
    more = [*kills, dup]
    assert metallaxis(more, 2, 2) == metallaxis(kills, 2, 2)


def prop_muse_not_duplication_invariant():
    # one good and one useless mutant at a location: duplicating the useless one drags the mean down
    good = KillRecord("m1", Entity.statement(FILE, 1), {"f": Change.FAIL_TO_PASS, "p": Change.UNCHANGED})
    dud = KillRecord("m2", Entity.statement(FILE, 1), {"f": Change.UNCHANGED, "p": Change.UNCHANGED})
    loc = Entity.statement(FILE, 1)
    assert muse([good, dud], 1, 1)[loc] == 0.5
    assert muse([good, dud, dud], 1, 1)[loc] == 1 / 3
    assert metallaxis([good, dud, dud], 1, 1)[loc] == metallaxis([good, dud], 1, 1)[loc] == 1.0


@settings(max_examples=100, deadline=None)
@given(st.lists(kill_records, max_size=8))
def prop_kill_round_trip(kills):
    with tempfile.TemporaryDirectory() as d:
        ingest.write_kills(kills, f"{d}/k.jsonl")
        back = ingest.read_kills(f"{d}/k.jsonl")
    assert [(k.mutant_id, k.location, dict(k.changes)) for k in back] == [(k.mutant_id, k.location, dict(k.changes)) for k in kills]


# -- ST --------------------------------------------------------------------------

FUNCS = [
    Entity.function(FILE, "a", 1, 10),
    Entity.function(FILE, "a.b", 2, 5),
    Entity.function(FILE, "c", 12, 20),
    Entity.function(FILE, "d", 21, 22),
]
OWNED = {FUNCS[0]: (6, 7, 8, 9), FUNCS[1]: (2, 3, 4, 5), FUNCS[2]: (13, 14, 16, 19), FUNCS[3]: (22,)}
frames = st.sampled_from(FUNCS + [None]).map(
    lambda f: Frame("test_x", FILE, 30) if f is None else Frame(f.name, FILE, f.start)
)
traces = st.lists(st.tuples(st.text("abc", min_size=1, max_size=3), st.lists(frames, min_size=1, max_size=6).map(lambda fs: StackTrace(tuple(fs)))), max_size=4)


@settings(max_examples=200, deadline=None)
@given(traces, st.booleans())
def prop_st_same_function_same_score(crashing, use_owned):
    scores = st_localize(crashing, FUNCS, "statement", OWNED if use_owned else None).scores()
    if use_owned:
        owner = {(FILE, line): fn for fn, owned in OWNED.items() for line in owned}.get
    else:
        owner = owning_function(FUNCS)
    by_function: dict = {}
    for e, score in scores.items():
        by_function.setdefault(owner(e.file, e.line), set()).add(score)
    assert all(len(v) == 1 for v in by_function.values())
    assert all(0 < s <= 1 for s in scores.values())


# -- interpreter -----------------------------------------------------------------


@settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(st.integers(0, 10_000))
def prop_interpreter_deterministic(seed):
    g = generate(seed)
    program = parse(g.source, "gen.ml1")
    for test in g.tests:
        first = execute_test(program, test, trace=True)
        assert execute_test(program, test, trace=True) == first
        for inst in first.predicate_instances[:3]:
            flip = (inst.location, inst.index)
            assert execute_test(program, test, flip=flip, trace=True) == execute_test(program, test, flip=flip, trace=True)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def prop_print_parse_round_trip(seed):
    program = parse(generate(seed).source, "gen.ml1")
    assert parse(to_source(program), "gen.ml1") == program


finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


@given(finite, finite, st.floats(min_value=0, max_value=1e6))
def prop_approx_symmetric(a, b, tol):
    assert approx(a, b, tol) == approx(b, a, tol)


class _Shadow:
    """Deliberately naive re-implementation of the generated-program subset
    that logs every statement it executes."""

    def __init__(self, program):
        self.fns = {f.name: f for f in program.functions}
        self.log = set()

    def ev(self, node, env):
        if isinstance(node, Num):
            return node.value
        if isinstance(node, Var):
            return env[node.name]
        if isinstance(node, Binary):
            a, b = self.ev(node.left, env), self.ev(node.right, env)
            return {
                "+": lambda: a + b, "-": lambda: a - b, "<": lambda: a < b, "<=": lambda: a <= b,
                ">": lambda: a > b, ">=": lambda: a >= b, "==": lambda: a == b, "!=": lambda: a != b,
            }[node.op]()
        # a call to f(x)
        return self.call(self.fns[node.name], [self.ev(a, env) for a in node.args])

    def call(self, fn, args):
        env = dict(zip(fn.params, args))
        return self.block(fn.body, env, fn.name.startswith("test_"))[1]

    def block(self, body, env, in_test):
        for s in body:
            if not in_test:
                self.log.add(s.line)
            if isinstance(s, (Let, Assign)):
                env[s.name] = self.ev(s.value, env)
            elif isinstance(s, If):
                done, v = self.block(s.then if self.ev(s.cond, env) else s.orelse, env, in_test)
                if done:
                    return True, v
            elif isinstance(s, While):
                while self.ev(s.cond, env):
                    done, v = self.block(s.body, env, in_test)
                    if done:
                        return True, v
            elif isinstance(s, Return):
                return True, self.ev(s.value, env)
            elif isinstance(s, Assert):
                if not self.ev(s.expr, env):
                    raise AssertionError
        return False, None


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def prop_coverage_matches_shadow(seed):
    g = generate(seed)
    program = parse(g.source, "gen.ml1")
    for test in g.tests:
        shadow = _Shadow(program)
        try:
            shadow.call(shadow.fns[test], [])
        except AssertionError:
            pass
        covered = execute_test(program, test, trace=True).covered_lines
        assert {line for _, line in covered} == shadow.log


# -- run store -------------------------------------------------------------------


def prop_replay_determinism(n_generated: int = 6):
    """Byte-equal replay for every technique on the corpus and on generated programs."""
    from conftest import CORPUS

    with tempfile.TemporaryDirectory() as d:
        sources = [CORPUS / "equilateral", CORPUS / "isosceles"]
        # generated programs finish in under a hundred steps; a small
        # budget keeps nonterminating mutants cheap
        budgets = {}
        for i, (g, _) in enumerate(programs(n_generated)):
            src = Path(d) / f"gen{i}"
            src.mkdir()
            (src / "gen.ml1").write_text(g.source)
            sources.append(src)
            budgets[src] = 2_000
        for src in sources:
            for family, techniques in FAMILIES.items():
                for granularity in ("statement", "function"):
                    config = RunConfig(
                        src,
                        family=family,
                        granularity=granularity,
                        output=Path(d) / "run",
                        step_budget=budgets.get(src, DEFAULT_STEP_BUDGET),
                    )
                    report = run(config)
                    for t in techniques:
                        live = report.store.csv_path(t).read_bytes()
                        assert ingest.ranking_csv(ingest.replay(report.store, t)).encode() == live


# collected by pytest under their usual names
test_rank_invariant_under_monotone_transform = prop_rank_invariant_under_monotone_transform
test_expected_rank_invariant_under_monotone_transform = prop_expected_rank_invariant_under_monotone_transform
test_expected_rank_without_ties_is_index = prop_expected_rank_without_ties_is_index
test_at_n_monotone = prop_at_n_monotone
test_identical_tally_identical_score = prop_identical_tally_identical_score
test_tally_invariants = prop_tally_invariants
test_spectrum_round_trip = prop_spectrum_round_trip
test_kill_symmetry = prop_kill_symmetry
test_metallaxis_duplication_invariant = prop_metallaxis_duplication_invariant
test_muse_not_duplication_invariant = prop_muse_not_duplication_invariant
test_kill_round_trip = prop_kill_round_trip
test_st_same_function_same_score = prop_st_same_function_same_score
test_interpreter_deterministic = prop_interpreter_deterministic
test_print_parse_round_trip = prop_print_parse_round_trip
test_approx_symmetric = prop_approx_symmetric
test_coverage_matches_shadow = prop_coverage_matches_shadow
test_replay_determinism = prop_replay_determinism
