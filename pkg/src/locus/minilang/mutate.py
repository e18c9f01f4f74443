"""First-order mutation operators applied directly to the AST."""

from __future__ import annotations

from dataclasses import fields, replace

from ..core import Entity, Mutant
from .nodes import STATEMENTS, Binary, FunctionDecl, Num, Program
from .printer import expr_to_source

ARITHMETIC = ("+", "-", "*", "/")
RELATIONAL = ("==", "!=", "<", "<=", ">", ">=")
LOGICAL = ("and", "or")

AOR, ROR, LCR, LIT = "AOR", "ROR", "LCR", "LIT"
ALL_OPERATORS = (AOR, ROR, LCR, LIT)


def _alternatives(node, operators):
    """Yield ``(operator_tag, replacement)`` for one node in table order."""
    if type(node) is Binary:
        for tag, table in ((AOR, ARITHMETIC), (ROR, RELATIONAL), (LCR, LOGICAL)):
            if tag in operators and node.op in table:
                for op in table:
                    if op != node.op:
                        yield tag, replace(node, op=op)
    elif type(node) is Num and LIT in operators:
        step = 1.0 if type(node.value) is float else 1
        yield LIT, replace(node, value=node.value - step)
        yield LIT, replace(node, value=node.value + step)


def _children(node):
    """Child AST nodes in field order, with the path step to reach each."""
    for f in fields(node):
        value = getattr(node, f.name)
        if isinstance(value, tuple):
            for i, item in enumerate(value):
                if hasattr(item, "line"):
                    yield (f.name, i), item
        elif hasattr(value, "line"):
            yield (f.name, None), value


def _sites(program: Program, include_tests: bool):
    """Preorder walk yielding ``(path, node, stmt_line, file)`` for expression nodes."""

    def walk(node, path, stmt_line, file):
        for step, child in _children(node):
            child_path = path + (step,)
            if type(child) is FunctionDecl:
                if include_tests or not child.is_test:
                    yield from walk(child, child_path, child.line, child.file or file)
            elif isinstance(child, STATEMENTS):
                yield from walk(child, child_path, child.line, file)
            else:
                yield child_path, child, stmt_line, file
                yield from walk(child, child_path, stmt_line, file)

    for i, fn in enumerate(program.functions):
        if include_tests or not fn.is_test:
            yield from walk(fn, (("functions", i),), fn.line, fn.file)


def replace_at(root, path, new):
    if not path:
        return new
    (name, index), rest = path[0], path[1:]
    current = getattr(root, name)
    if index is None:
        return replace(root, **{name: replace_at(current, rest, new)})
    items = list(current)
    items[index] = replace_at(items[index], rest, new)
    return replace(root, **{name: tuple(items)})


def mutate(program: Program, operators=ALL_OPERATORS, include_tests: bool = False) -> list[tuple[Mutant, Program]]:
    """Enumerate single-node mutants in AST preorder, then operator-table order.

    Test functions are not mutated unless ``include_tests`` is set.  Mutant ids
    are sequence numbers over this enumeration, so they are stable for a
    given program and operator set.
    """
    out = []
    for path, node, stmt_line, file in _sites(program, include_tests):
        for tag, new in _alternatives(node, operators):
            mutant = Mutant(
                id=f"m{len(out) + 1:04d}",
                location=Entity.statement(file, stmt_line),
                operator=tag,
                description=f"{expr_to_source(node)} -> {expr_to_source(new)}",
            )
            out.append((mutant, replace_at(program, path, new)))
    return out
