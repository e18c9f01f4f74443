"""Line-preserving pretty printer.

Each statement is printed on the line recorded in its node, so parsing the
output yields an equal AST and mutants keep their line numbers.
"""

from __future__ import annotations

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

_PREC = {"or": 1, "and": 2, "==": 3, "!=": 3, "<": 4, "<=": 4, ">": 4, ">=": 4, "+": 5, "-": 5, "*": 6, "/": 6}
_UNARY_PREC = 7
_ATOM_PREC = 8


def _prec(node) -> int:
    if type(node) is Binary:
        return _PREC[node.op]
    if type(node) is Unary:
        return _UNARY_PREC
    if type(node) is Num and node.value < 0:
        return _UNARY_PREC
    return _ATOM_PREC


def _num(value) -> str:
    return repr(value)


class _Tokens:
    def __init__(self):
        self.items: list[tuple[str, int | None]] = []

    def add(self, text: str, line: int | None = None) -> None:
        self.items.append((text, line))

    # -- expressions

    def expr(self, node, min_prec: int = 0) -> None:
        if _prec(node) < min_prec:
            self.add("(", node.line)
            self.expr(node)
            self.add(")")
            return
        kind = type(node)
        if kind is Num:
            self.add(_num(node.value), node.line)
        elif kind is Bool:
            self.add("true" if node.value else "false", node.line)
        elif kind is Var:
            self.add(node.name, node.line)
        elif kind is Unary:
            self.add("u" + node.op, node.line)
            self.expr(node.operand, _UNARY_PREC)
        elif kind is Binary:
            prec = _PREC[node.op]
            self.expr(node.left, prec)
            self.add(node.op)
            self.expr(node.right, prec + 1)
        elif kind is Call:
            self.add(node.name, node.line)
            self.add("(")
            for i, arg in enumerate(node.args):
                if i:
                    self.add(",")
                self.expr(arg)
            self.add(")")
        else:  # pragma: no cover
            raise TypeError(node)

    # -- statements

    def block(self, body) -> None:
        self.add("{")
        for stmt in body:
            self.stmt(stmt)
        self.add("}")

    def function(self, fn: FunctionDecl) -> None:
        self.add("fn", fn.line)
        self.add(fn.name)
        self.add("(")
        for i, p in enumerate(fn.params):
            if i:
                self.add(",")
            self.add(p)
        self.add(")")
        self.block(fn.body)

    def stmt(self, stmt) -> None:
        kind = type(stmt)
        if kind is Let or kind is Assign:
            if kind is Let:
                self.add("let", stmt.line)
            self.add(stmt.name, stmt.line)
            self.add("=")
            self.expr(stmt.value)
            self.add(";")
        elif kind is If:
            self.add("if", stmt.line)
            self.expr(stmt.cond)
            self.block(stmt.then)
            if stmt.orelse:
                self.add("else")
                if len(stmt.orelse) == 1 and type(stmt.orelse[0]) is If:
                    self.stmt(stmt.orelse[0])
                else:
                    self.block(stmt.orelse)
        elif kind is While:
            self.add("while", stmt.line)
            self.expr(stmt.cond)
            self.block(stmt.body)
        elif kind is Return:
            self.add("return", stmt.line)
            if stmt.value is not None:
                self.expr(stmt.value)
            self.add(";")
        elif kind is ExprStmt:
            self.add("", stmt.line)
            self.expr(stmt.expr)
            self.add(";")
        elif kind is Assert:
            self.add("assert", stmt.line)
            self.expr(stmt.expr)
            self.add(";")
        elif kind is AssertApprox:
            self.add("assert", stmt.line)
            self.add("approx")
            self.add("(")
            self.expr(stmt.lhs)
            self.add(",")
            self.expr(stmt.rhs)
            if stmt.tol is not None:
                self.add(",")
                self.expr(stmt.tol)
            self.add(")")
            self.add(";")
        elif kind is FunctionDecl:
            self.function(stmt)
        else:  # pragma: no cover
            raise TypeError(stmt)


_NO_SPACE_BEFORE = {")", ",", ";", "("}
_NO_SPACE_AFTER = {"(", "u-", "u!"}


def _render(items: list[tuple[str, int | None]]) -> str:
    out: list[str] = []
    line, depth = 1, 0
    at_start = True
    prev = None
    for i, (text, hint) in enumerate(items):
        if text == "}":
            depth -= 1
            nxt = next((h for _, h in items[i + 1 :] if h is not None), None)
            if nxt is None or nxt > line + 1:
                out.append("\n")
                line += 1
                at_start = True
        if hint is not None and hint > line:
            out.append("\n" * (hint - line))
            line = hint
            at_start = True
        if text == "":
            continue
        shown = text[1:] if text in ("u-", "u!") else text
        if at_start:
            out.append("    " * depth)
        elif prev is not None and text not in _NO_SPACE_BEFORE and prev not in _NO_SPACE_AFTER:
            out.append(" ")
        elif text == "(" and prev in ("if", "while", "return", "and", "or", "=", ",") or (
            text == "(" and prev in _PREC
        ):
            out.append(" ")
        out.append(shown)
        at_start = False
        prev = text
        if text == "{":
            depth += 1
    text = "".join(out)
    return text if text.endswith("\n") else text + "\n"


def to_source(program: Program) -> str:
    tokens = _Tokens()
    for fn in program.functions:
        tokens.function(fn)
    if not tokens.items:
        return ""
    return _render(tokens.items)


def expr_to_source(node) -> str:
    tokens = _Tokens()
    tokens.expr(node)
    items = [(t, None) for t, _ in tokens.items]
    return _render(items).strip()
