"""AST node types for the ``.ml1`` mini-language.

Nodes are frozen dataclasses so programs compare by value and can be shared
freely between interpreter instances.  Every node records the source line of
its first token; the owning file is stored on :class:`FunctionDecl` and
:class:`Program`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union


# -- expressions -------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: int | float
    line: int


@dataclass(frozen=True)
class Bool:
    value: bool
    line: int


@dataclass(frozen=True)
class Var:
    name: str
    line: int


@dataclass(frozen=True)
class Unary:
    op: str  # "-" or "!"
    operand: Expr
    line: int


@dataclass(frozen=True)
class Binary:
    op: str
    left: Expr
    right: Expr
    line: int


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple[Expr, ...]
    line: int


Expr = Union[Num, Bool, Var, Unary, Binary, Call]


# -- statements --------------------------------------------------------------


@dataclass(frozen=True)
class Let:
    name: str
    value: Expr
    line: int


@dataclass(frozen=True)
class Assign:
    name: str
    value: Expr
    line: int


@dataclass(frozen=True)
class If:
    cond: Expr
    then: tuple[Stmt, ...]
    orelse: tuple[Stmt, ...]
    line: int


@dataclass(frozen=True)
class While:
    cond: Expr
    body: tuple[Stmt, ...]
    line: int


@dataclass(frozen=True)
class Return:
    value: Expr | None
    line: int


@dataclass(frozen=True)
class ExprStmt:
    expr: Expr
    line: int


@dataclass(frozen=True)
class Assert:
    expr: Expr
    line: int


@dataclass(frozen=True)
class AssertApprox:
    lhs: Expr
    rhs: Expr
    tol: Expr | None
    line: int


@dataclass(frozen=True)
class FunctionDecl:
    name: str
    params: tuple[str, ...]
    body: tuple[Stmt, ...]
    line: int
    file: str = ""

    @property
    def end_line(self) -> int:
        """Last line holding a statement of this function (header if empty)."""
        last = self.line
        for stmt in walk_statements(self.body):
            last = max(last, stmt.line)
        return last

    @property
    def is_test(self) -> bool:
        return self.name.startswith("test_")


Stmt = Union[Let, Assign, If, While, Return, ExprStmt, Assert, AssertApprox, FunctionDecl]

STATEMENTS = (Let, Assign, If, While, Return, ExprStmt, Assert, AssertApprox, FunctionDecl)
BUILTINS = {"sqrt": 1, "pow": 2, "abs": 1}


@dataclass(frozen=True)
class Program:
    functions: tuple[FunctionDecl, ...] = ()
    files: tuple[str, ...] = field(default=())

    def function(self, name: str) -> FunctionDecl:
        for fn in self.functions:
            if fn.name == name:
                return fn
        raise KeyError(name)

    @property
    def test_names(self) -> list[str]:
        return sorted(fn.name for fn in self.functions if fn.is_test and not fn.params)


def walk_statements(body):
    """Yield statements in preorder, descending into blocks and nested functions."""
    for stmt in body:
        yield stmt
        if isinstance(stmt, If):
            yield from walk_statements(stmt.then)
            yield from walk_statements(stmt.orelse)
        elif isinstance(stmt, While):
            yield from walk_statements(stmt.body)
        elif isinstance(stmt, FunctionDecl):
            yield from walk_statements(stmt.body)


@dataclass(frozen=True)
class FunctionInfo:
    """Static facts about one (possibly nested) function."""

    qualname: str
    file: str
    start: int
    end: int
    lines: tuple[int, ...]  # statement lines owned by this function
    is_test: bool


def function_table(program: Program) -> list[FunctionInfo]:
    """Every function of ``program`` with its span and owned statement lines.

    A nested declaration's line belongs to the nested function, so ownership of
    statement lines is disjoint across functions.
    """
    out: list[FunctionInfo] = []

    def visit(fn: FunctionDecl, prefix: str, in_test: bool, nested: bool) -> None:
        qual = f"{prefix}{fn.name}"
        is_test = in_test or fn.is_test
        owned: set[int] = {fn.line} if nested else set()
        children: list[FunctionDecl] = []

        def own(body):
            for stmt in body:
                if isinstance(stmt, FunctionDecl):
                    children.append(stmt)
                    continue
                owned.add(stmt.line)
                if isinstance(stmt, If):
                    own(stmt.then)
                    own(stmt.orelse)
                elif isinstance(stmt, While):
                    own(stmt.body)

        own(fn.body)
        out.append(FunctionInfo(qual, fn.file, fn.line, fn.end_line, tuple(sorted(owned)), is_test))
        for child in children:
            visit(child, qual + ".", is_test, True)

    for fn in program.functions:
        visit(fn, "", False, False)
    return out
