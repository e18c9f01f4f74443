from __future__ import annotations

import pytest

from locus.core import Entity, Status
from locus.minilang import (
    ParseFailure,
    UnknownTest,
    execute_test,
    function_table,
    link,
    mutate,
    parse,
    parse_unresolved,
    to_source,
    tokenize,
)
from locus.minilang.mutate import AOR, LCR, LIT, ROR
from locus.minilang.nodes import If
from locus.pipeline import load_project


def run(src, test="test_a", **kw):
    return execute_test(parse(src, "t.ml1"), test, **kw)


def status(src, test="test_a", **kw):
    return run(src, test, **kw).outcome.status


# -- parsing ---------------------------------------------------------------------


def test_parse_equilateral_port(corpus):
    program = parse((corpus / "equilateral" / "equilateral.ml1").read_text(), "equilateral.ml1")
    (fn,) = program.functions
    assert fn.name == "equilateral_area"
    assert isinstance(fn.body[1], If) and fn.body[1].line == 3


def test_empty_source():
    assert parse("").functions == ()
    assert parse("# only a comment\n").functions == ()


def test_parse_failure_position():
    with pytest.raises(ParseFailure) as info:
        parse("fn f( {", "bad.ml1")
    assert (info.value.line, info.value.column) == (1, 7)
    assert str(info.value).startswith("bad.ml1:1:7:")


@pytest.mark.parametrize(
    "src",
    [
        "fn f() { return g(); }",  # undefined function
        "fn f() { return y; }",  # undefined variable
        "fn f(x) { x = 1; }",  # parameters are read-only
        "fn f() { let a = 1; let a = 2; }",  # redeclaration
        "fn f() { return sqrt(1, 2); }",  # builtin arity
        "fn f(x) { return x; } fn g() { return f(); }",  # user arity
        "fn f() { return 1; } fn f() { return 2; }",  # duplicate function
        "fn f() { return 1 }",  # missing semicolon
        "fn f() { let a = 1 @ 2; }",  # bad character
    ],
)
def test_static_errors(src):
    with pytest.raises(ParseFailure):
        parse(src)


def test_block_scoped_let():
    src = "fn f(x) {\n if x > 0 { let y = 1; } else { let y = 2; }\n return x;\n}"
    parse(src)
    with pytest.raises(ParseFailure):
        parse("fn f(x) {\n if x > 0 { let y = 1; }\n return y;\n}")


def test_nested_fn_reads_enclosing_params():
    src = "fn f(a) {\n fn g() {\n  return a + 1;\n }\n return g();\n}\nfn test_a() {\n assert f(1) == 2;\n}\n"
    assert status(src) is Status.PASS
    with pytest.raises(ParseFailure):
        parse("fn f(a) {\n fn g() {\n  a = 2;\n  return a;\n }\n return g();\n}")


def test_link_across_files():
    lib = parse_unresolved("fn double(x) {\n    return 2 * x;\n}\n", "lib.ml1")
    tests = parse_unresolved("fn test_a() {\n    assert double(2) == 4;\n}\n", "test_lib.ml1")
    program = link([lib, tests])
    assert execute_test(program, "test_a").outcome.status is Status.PASS
    with pytest.raises(ParseFailure):
        parse("fn test_a() {\n    assert double(2) == 4;\n}\n")


def test_tokenize_skips_comments():
    kinds = [t.text for t in tokenize("let a = 1; # trailing\n")]
    assert kinds[:5] == ["let", "a", "=", "1", ";"]


def test_function_table(corpus):
    program = load_project(corpus / "isosceles")
    table = {f.qualname: f for f in function_table(program)}
    assert (table["isosceles_area"].start, table["isosceles_area"].end) == (1, 7)
    assert (table["isosceles_area.height"].start, table["isosceles_area.height"].end) == (2, 4)
    assert table["isosceles_area"].lines == (6, 7)
    assert table["isosceles_area.height"].lines == (2, 3, 4)
    assert table["test_ia_crash"].is_test


# -- execution -------------------------------------------------------------------


def test_equilateral_pass_coverage(corpus):
    program = load_project(corpus / "equilateral")
    result = execute_test(program, "test_ea_pass", trace=True)
    assert result.outcome.status is Status.PASS
    assert {line for _, line in result.covered_lines} == {2, 3, 4}
    fail = execute_test(program, "test_ea_fail", trace=True)
    assert fail.outcome.status is Status.FAIL
    assert {line for _, line in fail.covered_lines} == {2, 3, 6, 7, 8}


def test_isosceles_crash(corpus):
    program = load_project(corpus / "isosceles")
    result = execute_test(program, "test_ia_crash", trace=True)
    assert result.outcome.status is Status.CRASH
    frames = result.outcome.stack.frames
    assert (frames[0].function, frames[0].line) == ("isosceles_area.height", 4)
    assert [f.function for f in frames] == ["isosceles_area.height", "isosceles_area", "test_ia_crash"]
    assert "DomainError" in result.outcome.detail


def test_approx_assertion():
    assert status("fn test_a() {\n    assert approx(0.0, 0.0, 1e-9);\n}\n") is Status.PASS
    assert status("fn test_a() {\n    assert approx(1.0, 1.1);\n}\n") is Status.FAIL
    assert status("fn test_a() {\n    assert approx(1.0, 1.05, 0.1);\n}\n") is Status.PASS


@pytest.mark.parametrize(
    "expr, kind",
    [
        ("sqrt(-1.0)", "DomainError"),
        ("1 / 0", "DivisionByZero"),
        ("1.0 / 0.0", "DivisionByZero"),
        ("pow(0.0, -1.0)", "DomainError"),
        ("pow(10.0, 400.0)", "DomainError"),
        ("9223372036854775807 + 1", "DomainError"),
        ("1 + true", "TypeMismatch"),
    ],
)
def test_runtime_errors_crash(expr, kind):
    result = run(f"fn g() {{\n    return {expr};\n}}\nfn test_a() {{\n    let v = g();\n}}\n")
    assert result.outcome.status is Status.CRASH
    assert kind in result.outcome.detail
    assert result.outcome.stack.frames[0].function == "g"


def test_step_budget_is_fail():
    src = "fn spin() {\n    while true {\n    }\n    return 0;\n}\nfn test_a() {\n    let v = spin();\n}\n"
    result = run(src, step_budget=1000)
    assert result.outcome.status is Status.FAIL
    assert result.steps_used == 1001


def test_deep_recursion_is_fail():
    src = "fn down(n) {\n    return down(n + 1);\n}\nfn test_a() {\n    let v = down(0);\n}\n"
    assert status(src) is Status.FAIL


def test_unknown_test():
    src = "fn helper() {\n    return 1;\n}\nfn test_a() {\n}\nfn test_b(x) {\n}\n"
    program = parse(src)
    for name in ("nope", "helper", "test_b"):
        with pytest.raises(UnknownTest):
            execute_test(program, name)


def test_coverage_excludes_tests_and_headers():
    src = "fn f(x) {\n    return x;\n}\nfn test_a() {\n    assert f(1) == 1;\n}\n"
    assert run(src, trace=True).covered_lines == frozenset({("t.ml1", 2)})


def test_short_circuit():
    src = "fn test_a() {\n    assert false and (1 / 0 == 1) or true;\n}\n"
    assert status(src) is Status.PASS


def test_int_float_semantics():
    src = "fn test_a() {\n    assert 7 / 2 == 3.5;\n    assert 2 * 3 == 6;\n    assert abs(-2) == 2;\n    assert 1 == 1.0;\n}\n"
    assert status(src) is Status.PASS


def test_nan_and_inf_are_values():
    src = "fn test_a() {\n    let big = pow(10.0, 300.0) * pow(10.0, 300.0);\n    assert big > 1.0;\n}\n"
    assert status(src) is Status.PASS


# -- printing --------------------------------------------------------------------


def test_round_trip_corpus(corpus):
    for path in sorted(corpus.rglob("*.ml1")):
        program = parse_unresolved(path.read_text(), path.name)
        assert parse_unresolved(to_source(program), path.name) == program


def test_round_trip_precedence():
    src = "fn f(a, b) {\n    return -(a - b) * (a + b) / 2 - -1;\n}\n"
    program = parse(src)
    assert parse(to_source(program)) == program
    assert status(src + "fn test_a() {\n    assert f(3, 1) == -3;\n}\n") is Status.PASS


# -- mutation ---------------------------------------------------------------------


def _mutants(src):
    return mutate(parse(src, "m.ml1"))


def test_aor_three_mutants():
    ms = _mutants("fn f(a, b) {\n    return a + b;\n}\n")
    assert [m.operator for m, _ in ms] == [AOR] * 3
    assert [m.description for m, _ in ms] == ["a + b -> a - b", "a + b -> a * b", "a + b -> a / b"]


def test_ror_and_literal_mutants():
    ms = _mutants("fn f(side) {\n    if side == 1 {\n        return side;\n    }\n    return 0;\n}\n")
    at2 = [m for m, _ in ms if m.location == Entity.statement("m.ml1", 2)]
    assert [m.operator for m in at2] == [ROR] * 5 + [LIT] * 2
    assert [m.description for m in at2][-2:] == ["1 -> 0", "1 -> 2"]


def test_nothing_to_mutate():
    assert _mutants("fn f() {\n    return true;\n}\n") == []
    assert [m.description for m, _ in _mutants("fn f() {\n    return 2.5;\n}\n")] == ["2.5 -> 1.5", "2.5 -> 3.5"]


def test_lcr():
    ms = _mutants("fn f(a, b) {\n    return a and b;\n}\n")
    assert [(m.operator, m.description) for m, _ in ms] == [(LCR, "a and b -> a or b")]


def test_mutants_differ_in_one_node_and_keep_lines():
    src = "fn f(a, b) {\n    let c = a * 2;\n    if c > b {\n        return c - 1;\n    }\n    return b;\n}\nfn test_a() {\n    assert f(1, 1) == 1;\n}\n"
    program = parse(src, "m.ml1")
    original = to_source(program)
    pairs = mutate(program)
    assert [m.id for m, _ in pairs] == [f"m{i:04d}" for i in range(1, len(pairs) + 1)]
    for mutant, mutated in pairs:
        diff = [(a, b) for a, b in zip(original.splitlines(), to_source(mutated).splitlines()) if a != b]
        assert len(diff) == 1
        assert original.splitlines().index(diff[0][0]) + 1 == mutant.location.line
    # test functions are left alone
    assert all(m.location.line < 8 for m, _ in pairs)


def test_mutation_is_deterministic():
    src = "fn f(a) {\n    return a * 2 + 1;\n}\n"
    first = [(m, to_source(p)) for m, p in _mutants(src)]
    assert first == [(m, to_source(p)) for m, p in _mutants(src)]
