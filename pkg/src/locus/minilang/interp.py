"""Tree-walking interpreter with line tracing, predicate flips and a step budget."""

from __future__ import annotations

import math
import sys
from contextlib import contextmanager
from dataclasses import dataclass

from ..core import Entity, Frame, PredicateInstance, StackTrace, Status, TestOutcome
from .nodes import (
    Assert,
    AssertApprox,
    Assign,
    Binary,
    Bool,
    Call,
    ExprStmt,
    FunctionDecl,
    If,
    Let,
    Num,
    Program,
    Return,
    Unary,
    Var,
    While,
)

DEFAULT_STEP_BUDGET = 1_000_000
DEFAULT_TOLERANCE = 1e-9
MAX_CALL_DEPTH = 200
INT_LIMIT = 2**63


class UnknownTest(Exception):
    pass


@dataclass(frozen=True)
class RunResult:
    outcome: TestOutcome
    covered_lines: frozenset[tuple[str, int]]
    predicate_instances: tuple[PredicateInstance, ...]
    steps_used: int

    def covered_entities(self) -> frozenset[Entity]:
        return frozenset(Entity.statement(f, line) for f, line in self.covered_lines)


class _Crash(Exception):
    def __init__(self, kind: str, message: str):
        super().__init__(f"{kind}: {message}")
        self.kind = kind


class _AssertionFailed(Exception):
    pass


class _Exhausted(Exception):
    pass


@dataclass
class _Closure:
    decl: FunctionDecl
    qualname: str
    captured: dict
    funcs: dict
    is_test: bool


class _Frame:
    __slots__ = ("closure", "vars", "funcs", "line")

    def __init__(self, closure: _Closure, args: dict):
        self.closure = closure
        self.vars = {**closure.captured, **args}
        self.funcs = dict(closure.funcs)
        self.line = closure.decl.line


_RETURN = object()  # sentinel marking an executed ``return``


def _is_num(v) -> bool:
    return type(v) is int or type(v) is float


def _type_name(v) -> str:
    return "unit" if v is None else type(v).__name__


class Interpreter:
    def __init__(self, program: Program, step_budget: int = DEFAULT_STEP_BUDGET, trace: bool = False, flip=None):
        self.globals = {
            fn.name: _Closure(fn, fn.name, {}, {}, fn.is_test) for fn in program.functions
        }
        self.budget = step_budget
        self.trace = trace
        self.flip = None
        if flip is not None:
            location, index = flip
            self.flip = ((location.file, location.line), index)
        self.steps = 0
        self.covered: set[tuple[str, int]] = set()
        self.instances: list[PredicateInstance] = []
        self.counts: dict[tuple[str, int], int] = {}
        self.stack: list[_Frame] = []

    # -- entry point

    def run_test(self, name: str) -> RunResult:
        closure = self.globals.get(name)
        if closure is None or not name.startswith("test_") or closure.decl.params:
            raise UnknownTest(name)
        try:
            with _recursion_headroom():
                self.call(closure, [])
            outcome = TestOutcome(Status.PASS)
        except _AssertionFailed as exc:
            outcome = TestOutcome(Status.FAIL, str(exc))
        except _Exhausted as exc:
            outcome = TestOutcome(Status.FAIL, str(exc))
        except RecursionError:
            outcome = TestOutcome(Status.FAIL, "interpreter recursion limit exceeded")
        except _Crash as exc:
            outcome = TestOutcome(Status.CRASH, str(exc), self._trace_of_crash())
        return RunResult(outcome, frozenset(self.covered), tuple(self.instances), self.steps)

    def _trace_of_crash(self) -> StackTrace:
        frames = tuple(
            Frame(f.closure.qualname, f.closure.decl.file, f.line) for f in reversed(self.stack)
        )
        return StackTrace(frames)

    # -- calls

    def call(self, closure: _Closure, args: list):
        if len(self.stack) >= MAX_CALL_DEPTH:
            raise _Exhausted(f"call depth limit {MAX_CALL_DEPTH} exceeded")
        frame = _Frame(closure, dict(zip(closure.decl.params, args)))
        self.stack.append(frame)
        result = self.block(closure.decl.body, frame)
        self.stack.pop()
        return result[1] if result is not None else None

    # -- statements

    def block(self, body, frame: _Frame):
        for stmt in body:
            result = self.stmt(stmt, frame)
            if result is not None:
                return result
        return None

    def tick(self) -> None:
        self.steps += 1
        if self.steps > self.budget:
            raise _Exhausted(f"step budget {self.budget} exhausted")

    def stmt(self, stmt, frame: _Frame):
        self.tick()
        frame.line = stmt.line
        closure = frame.closure
        if self.trace and not closure.is_test:
            self.covered.add((closure.decl.file, stmt.line))

        kind = type(stmt)
        if kind is Let or kind is Assign:
            frame.vars[stmt.name] = self.expr(stmt.value, frame)
        elif kind is If:
            if self.predicate(stmt.cond, stmt.line, frame):
                return self.block(stmt.then, frame)
            return self.block(stmt.orelse, frame)
        elif kind is While:
            while self.predicate(stmt.cond, stmt.line, frame):
                result = self.block(stmt.body, frame)
                if result is not None:
                    return result
                frame.line = stmt.line
                self.tick()  # each re-test of the condition costs a step, so empty loops still run out
        elif kind is Return:
            value = None if stmt.value is None else self.expr(stmt.value, frame)
            return (_RETURN, value)
        elif kind is ExprStmt:
            self.expr(stmt.expr, frame)
        elif kind is Assert:
            value = self.expr(stmt.expr, frame)
            if type(value) is not bool:
                raise _Crash("TypeMismatch", f"assert expects bool, got {_type_name(value)}")
            if not value:
                raise _AssertionFailed(f"assertion failed at {closure.decl.file}:{stmt.line}")
        elif kind is AssertApprox:
            lhs = self._number(self.expr(stmt.lhs, frame), "approx")
            rhs = self._number(self.expr(stmt.rhs, frame), "approx")
            tol = DEFAULT_TOLERANCE
            if stmt.tol is not None:
                tol = self._number(self.expr(stmt.tol, frame), "approx")
            if not approx(lhs, rhs, tol):
                raise _AssertionFailed(
                    f"assertion failed at {closure.decl.file}:{stmt.line}: {lhs!r} != approx {rhs!r}"
                )
        elif kind is FunctionDecl:
            captured = {p: frame.vars[p] for p in _enclosing_params(frame)}
            qual = f"{closure.qualname}.{stmt.name}"
            inner = _Closure(stmt, qual, captured, {}, closure.is_test)
            inner.funcs = {**frame.funcs, stmt.name: inner}
            frame.funcs[stmt.name] = inner
        else:  # pragma: no cover - parser produces no other statements
            raise TypeError(f"unknown statement {stmt!r}")
        return None

    def predicate(self, cond, line: int, frame: _Frame) -> bool:
        value = self.expr(cond, frame)
        if type(value) is not bool:
            raise _Crash("TypeMismatch", f"condition must be bool, got {_type_name(value)}")
        closure = frame.closure
        if closure.is_test:
            return value
        key = (closure.decl.file, line)
        index = self.counts.get(key, 0)
        self.counts[key] = index + 1
        if self.trace:
            self.instances.append(PredicateInstance(Entity.statement(*key), index, value))
        if self.flip is not None and self.flip == (key, index):
            return not value
        return value

    # -- expressions

    def expr(self, node, frame: _Frame):
        kind = type(node)
        if kind is Num or kind is Bool:
            return node.value
        if kind is Var:
            return frame.vars[node.name]
        if kind is Binary:
            return self.binary(node, frame)
        if kind is Unary:
            value = self.expr(node.operand, frame)
            if node.op == "-":
                return _check_int(-self._number(value, "unary -"))
            if type(value) is not bool:
                raise _Crash("TypeMismatch", f"'!' expects bool, got {_type_name(value)}")
            return not value
        if kind is Call:
            args = [self.expr(a, frame) for a in node.args]
            target = frame.funcs.get(node.name) or self.globals.get(node.name)
            if target is None:
                return _builtin(node.name, args)
            return self.call(target, args)
        raise TypeError(f"unknown expression {node!r}")  # pragma: no cover

    def binary(self, node: Binary, frame: _Frame):
        op = node.op
        if op == "and" or op == "or":
            left = self.expr(node.left, frame)
            if type(left) is not bool:
                raise _Crash("TypeMismatch", f"'{op}' expects bool, got {_type_name(left)}")
            if (op == "and") != left:
                return left
            right = self.expr(node.right, frame)
            if type(right) is not bool:
                raise _Crash("TypeMismatch", f"'{op}' expects bool, got {_type_name(right)}")
            return right
        left = self.expr(node.left, frame)
        right = self.expr(node.right, frame)
        if op == "==" or op == "!=":
            if not ((_is_num(left) and _is_num(right)) or (type(left) is bool and type(right) is bool)):
                raise _Crash("TypeMismatch", f"cannot compare {_type_name(left)} with {_type_name(right)}")
            return (left == right) == (op == "==")
        a = self._number(left, op)
        b = self._number(right, op)
        if op == "+":
            return _check_int(a + b)
        if op == "-":
            return _check_int(a - b)
        if op == "*":
            return _check_int(a * b)
        if op == "/":
            if b == 0:
                raise _Crash("DivisionByZero", "division by zero")
            return a / b
        if op == "<":
            return a < b
        if op == "<=":
            return a <= b
        if op == ">":
            return a > b
        if op == ">=":
            return a >= b
        raise TypeError(f"unknown operator {op!r}")  # pragma: no cover

    @staticmethod
    def _number(value, what: str):
        if not _is_num(value):
            raise _Crash("TypeMismatch", f"{what} expects a number, got {_type_name(value)}")
        return value


def _enclosing_params(frame: _Frame):
    # a nested function closes over every parameter visible in its parent
    seen = list(frame.closure.captured)
    seen.extend(frame.closure.decl.params)
    return seen


def _check_int(value):
    if type(value) is int and not -INT_LIMIT < value < INT_LIMIT:
        raise _Crash("DomainError", "integer overflow")
    return value


def _builtin(name: str, args: list):
    for a in args:
        if not _is_num(a):
            raise _Crash("TypeMismatch", f"{name} expects numbers, got {_type_name(a)}")
    try:
        if name == "sqrt":
            if args[0] < 0:
                raise _Crash("DomainError", "math domain error (sqrt of negative number)")
            return math.sqrt(args[0])
        if name == "pow":
            return math.pow(args[0], args[1])
        if name == "abs":
            return abs(args[0])
    except (ValueError, OverflowError) as exc:
        raise _Crash("DomainError", f"math domain error ({name}: {exc})") from None
    raise TypeError(f"unknown builtin {name!r}")  # pragma: no cover


def approx(a, b, tol: float = DEFAULT_TOLERANCE) -> bool:
    return abs(a - b) <= tol


@contextmanager
def _recursion_headroom(limit: int = 20_000):
    old = sys.getrecursionlimit()
    if old < limit:
        sys.setrecursionlimit(limit)
    try:
        yield
    finally:
        sys.setrecursionlimit(old)


def execute_test(
    program: Program,
    test_name: str,
    *,
    flip=None,
    step_budget: int = DEFAULT_STEP_BUDGET,
    trace: bool = False,
) -> RunResult:
    """Run one ``test_*`` function of ``program``.

    ``flip`` is ``(location, instance_index)``: that dynamic evaluation of the
    branch condition at ``location`` has its result negated.  Assertion
    failures and resource exhaustion (step budget, call depth) give ``Fail``;
    runtime errors give ``Crash`` with the full call stack.
    """
    return Interpreter(program, step_budget, trace, flip).run_test(test_name)
