"""Lexer, recursive-descent parser and static name resolver for ``.ml1`` sources.

Grammar (informal)::

    program  := fn*
    fn       := 'fn' IDENT '(' [IDENT (',' IDENT)*] ')' block
    block    := '{' stmt* '}'
    stmt     := 'let' IDENT '=' expr ';' | IDENT '=' expr ';'
              | 'if' expr block ['else' (block | if-stmt)]
              | 'while' expr block
              | 'return' [expr] ';'
              | 'assert' 'approx' '(' expr ',' expr [',' expr] ')' ';'
              | 'assert' expr ';'
              | fn | expr ';'

Operator precedence from loosest: ``or``, ``and``, ``== !=``, ``< <= > >=``,
``+ -``, ``* /``, unary ``- !``.  ``#`` starts a comment.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace

from .nodes import (
    BUILTINS,
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

KEYWORDS = {"fn", "let", "if", "else", "while", "return", "assert", "true", "false", "and", "or"}


class ParseFailure(Exception):
    def __init__(self, message: str, line: int, column: int, file: str = ""):
        self.message = message
        self.line = line
        self.column = column
        self.file = file
        where = f"{file}:" if file else ""
        super().__init__(f"{where}{line}:{column}: {message}")


@dataclass(frozen=True)
class Token:
    kind: str  # "num", "ident", "kw", "op", "eof"
    text: str
    line: int
    column: int


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>==|!=|<=|>=|[-+*/<>!=(){},;])
    """,
    re.VERBOSE,
)


def tokenize(source: str, file: str = "") -> list[Token]:
    tokens: list[Token] = []
    line, line_start, pos = 1, 0, 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise ParseFailure(f"unexpected character {source[pos]!r}", line, pos - line_start + 1, file)
        kind = m.lastgroup
        text = m.group()
        column = pos - line_start + 1
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind == "ident":
            tokens.append(Token("kw" if text in KEYWORDS else "ident", text, line, column))
        elif kind in ("num", "op"):
            tokens.append(Token(kind, text, line, column))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


_BINARY_LEVELS = [("or",), ("and",), ("==", "!="), ("<", "<=", ">", ">="), ("+", "-"), ("*", "/")]


class _Parser:
    def __init__(self, tokens: list[Token], file: str):
        self.tokens = tokens
        self.pos = 0
        self.file = file

    # -- token helpers

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def fail(self, message: str, tok: Token | None = None):
        tok = tok or self.tok
        raise ParseFailure(message, tok.line, tok.column, self.file)

    def check(self, text: str) -> bool:
        return self.tok.kind in ("op", "kw") and self.tok.text == text

    def accept(self, text: str) -> Token | None:
        if self.check(text):
            tok = self.tok
            self.pos += 1
            return tok
        return None

    def expect(self, text: str) -> Token:
        tok = self.accept(text)
        if tok is None:
            found = self.tok.text or "end of input"
            self.fail(f"expected {text!r}, found {found!r}")
        return tok

    def ident(self) -> Token:
        if self.tok.kind != "ident":
            found = self.tok.text or "end of input"
            self.fail(f"expected identifier, found {found!r}")
        tok = self.tok
        self.pos += 1
        return tok

    # -- declarations and statements

    def program(self) -> Program:
        functions = []
        while self.tok.kind != "eof":
            if not self.check("fn"):
                self.fail(f"expected 'fn' at top level, found {self.tok.text!r}")
            functions.append(self.function())
        return Program(tuple(functions), (self.file,) if functions else ())

    def function(self) -> FunctionDecl:
        start = self.expect("fn")
        name = self.ident().text
        self.expect("(")
        params: list[str] = []
        if not self.check(")"):
            params.append(self.ident().text)
            while self.accept(","):
                params.append(self.ident().text)
        self.expect(")")
        if len(set(params)) != len(params):
            self.fail(f"duplicate parameter in {name!r}", start)
        body = self.block()
        return FunctionDecl(name, tuple(params), body, start.line, self.file)

    def block(self) -> tuple:
        self.expect("{")
        stmts = []
        while not self.check("}"):
            if self.tok.kind == "eof":
                self.fail("unterminated block")
            stmts.append(self.statement())
        self.expect("}")
        return tuple(stmts)

    def statement(self):
        tok = self.tok
        if self.accept("let"):
            name = self.ident().text
            self.expect("=")
            value = self.expr()
            self.expect(";")
            return Let(name, value, tok.line)
        if self.check("if"):
            return self.if_stmt()
        if self.accept("while"):
            cond = self.expr()
            return While(cond, self.block(), tok.line)
        if self.accept("return"):
            value = None if self.check(";") else self.expr()
            self.expect(";")
            return Return(value, tok.line)
        if self.accept("assert"):
            nxt = self.tokens[min(self.pos + 1, len(self.tokens) - 1)]
            if self.tok.kind == "ident" and self.tok.text == "approx" and nxt.text == "(":
                self.pos += 2
                lhs = self.expr()
                self.expect(",")
                rhs = self.expr()
                tol = self.expr() if self.accept(",") else None
                self.expect(")")
                self.expect(";")
                return AssertApprox(lhs, rhs, tol, tok.line)
            value = self.expr()
            self.expect(";")
            return Assert(value, tok.line)
        if self.check("fn"):
            return self.function()
        if tok.kind == "ident" and self.tokens[self.pos + 1].text == "=":
            self.pos += 2
            value = self.expr()
            self.expect(";")
            return Assign(tok.text, value, tok.line)
        value = self.expr()
        self.expect(";")
        return ExprStmt(value, tok.line)

    def if_stmt(self) -> If:
        tok = self.expect("if")
        cond = self.expr()
        then = self.block()
        orelse: tuple = ()
        if self.accept("else"):
            orelse = (self.if_stmt(),) if self.check("if") else self.block()
        return If(cond, then, orelse, tok.line)

    # -- expressions

    def expr(self, level: int = 0):
        if level == len(_BINARY_LEVELS):
            return self.unary()
        left = self.expr(level + 1)
        ops = _BINARY_LEVELS[level]
        while self.tok.kind in ("op", "kw") and self.tok.text in ops:
            op = self.tok.text
            self.pos += 1
            right = self.expr(level + 1)
            left = Binary(op, left, right, left.line)
        return left

    def unary(self):
        tok = self.tok
        if self.accept("-") or self.accept("!"):
            operand = self.unary()
            if tok.text == "-" and type(operand) is Num:
                return Num(-operand.value, tok.line)
            return Unary(tok.text, operand, tok.line)
        return self.primary()

    def primary(self):
        tok = self.tok
        if tok.kind == "num":
            self.pos += 1
            text = tok.text
            value = float(text) if any(c in text for c in ".eE") else int(text)
            return Num(value, tok.line)
        if self.accept("true"):
            return Bool(True, tok.line)
        if self.accept("false"):
            return Bool(False, tok.line)
        if self.accept("("):
            inner = self.expr()
            self.expect(")")
            return _with_line(inner, tok.line)
        if tok.kind == "ident":
            self.pos += 1
            if self.accept("("):
                args = []
                if not self.check(")"):
                    args.append(self.expr())
                    while self.accept(","):
                        args.append(self.expr())
                self.expect(")")
                return Call(tok.text, tuple(args), tok.line)
            return Var(tok.text, tok.line)
        found = tok.text or "end of input"
        self.fail(f"expected expression, found {found!r}")


def _with_line(node, line: int):
    # a parenthesized expression starts at its '('; only matters for multi-line sources
    return node if node.line == line else replace(node, line=line)


# -- static resolution ---------------------------------------------------------


class _Resolver:
    """Checks that every variable and call target is lexically visible."""

    def __init__(self, program: Program, external: dict[str, int] | None = None):
        self.globals: dict[str, int] = dict(external or {})
        for fn in program.functions:
            if fn.name in self.globals or fn.name in BUILTINS:
                raise ParseFailure(f"duplicate function {fn.name!r}", fn.line, 1, fn.file)
            self.globals[fn.name] = len(fn.params)

    def run(self, program: Program) -> None:
        for fn in program.functions:
            self.function(fn, captured=set(), funcs={})

    def function(self, fn: FunctionDecl, captured: set[str], funcs: dict[str, int]) -> None:
        params = set(fn.params)
        scope = {"vars": set(captured) | params, "params": set(captured) | params}
        funcs = dict(funcs)
        funcs[fn.name] = len(fn.params)
        self.block(fn.body, fn, scope["vars"], scope["params"], funcs)

    def block(self, body, fn, visible: set[str], readonly: set[str], funcs: dict[str, int]) -> None:
        visible = set(visible)
        funcs = dict(funcs)
        for stmt in body:
            if isinstance(stmt, Let):
                self.expr(stmt.value, fn, visible, funcs)
                if stmt.name in visible:
                    raise ParseFailure(f"{stmt.name!r} is already declared", stmt.line, 1, fn.file)
                visible.add(stmt.name)
            elif isinstance(stmt, Assign):
                if stmt.name not in visible:
                    raise ParseFailure(f"assignment to undeclared {stmt.name!r}", stmt.line, 1, fn.file)
                if stmt.name in readonly:
                    raise ParseFailure(f"parameter {stmt.name!r} is read-only", stmt.line, 1, fn.file)
                self.expr(stmt.value, fn, visible, funcs)
            elif isinstance(stmt, If):
                self.expr(stmt.cond, fn, visible, funcs)
                self.block(stmt.then, fn, visible, readonly, funcs)
                self.block(stmt.orelse, fn, visible, readonly, funcs)
            elif isinstance(stmt, While):
                self.expr(stmt.cond, fn, visible, funcs)
                self.block(stmt.body, fn, visible, readonly, funcs)
            elif isinstance(stmt, Return):
                if stmt.value is not None:
                    self.expr(stmt.value, fn, visible, funcs)
            elif isinstance(stmt, (ExprStmt, Assert)):
                self.expr(stmt.expr, fn, visible, funcs)
            elif isinstance(stmt, AssertApprox):
                for part in (stmt.lhs, stmt.rhs, stmt.tol):
                    if part is not None:
                        self.expr(part, fn, visible, funcs)
            elif isinstance(stmt, FunctionDecl):
                if stmt.name in BUILTINS or stmt.name in funcs:
                    raise ParseFailure(f"duplicate function {stmt.name!r}", stmt.line, 1, fn.file)
                funcs[stmt.name] = len(stmt.params)
                # nested functions see enclosing parameters only
                self.function(stmt, captured=readonly, funcs=funcs)

    def expr(self, node, fn, visible, funcs) -> None:
        if isinstance(node, Var):
            if node.name not in visible:
                raise ParseFailure(f"undefined variable {node.name!r}", node.line, 1, fn.file)
        elif isinstance(node, Unary):
            self.expr(node.operand, fn, visible, funcs)
        elif isinstance(node, Binary):
            self.expr(node.left, fn, visible, funcs)
            self.expr(node.right, fn, visible, funcs)
        elif isinstance(node, Call):
            arity = funcs.get(node.name, self.globals.get(node.name, BUILTINS.get(node.name)))
            if arity is None:
                raise ParseFailure(f"call to undefined function {node.name!r}", node.line, 1, fn.file)
            if arity != len(node.args):
                raise ParseFailure(
                    f"{node.name!r} expects {arity} argument(s), got {len(node.args)}", node.line, 1, fn.file
                )
            for arg in node.args:
                self.expr(arg, fn, visible, funcs)


def parse_unresolved(source: str, file: str = "") -> Program:
    """Parse without checking names; use :func:`link` to resolve a project."""
    return _Parser(tokenize(source, file), file).program()


def parse(source: str, file: str = "") -> Program:
    program = parse_unresolved(source, file)
    _Resolver(program).run(program)
    return program


def link(programs: list[Program]) -> Program:
    """Merge per-file programs into one namespace and resolve all names."""
    functions = tuple(fn for p in programs for fn in p.functions)
    files = tuple(f for p in programs for f in p.files)
    merged = Program(functions, files)
    _Resolver(merged).run(merged)
    return merged
