"""The ``.ml1`` mini-language: parser, interpreter, printer and mutator."""

from .interp import DEFAULT_STEP_BUDGET, RunResult, UnknownTest, approx, execute_test
from .mutate import ALL_OPERATORS, mutate
from .nodes import FunctionInfo, Program, function_table
from .parser import ParseFailure, link, parse, parse_unresolved, tokenize
from .printer import to_source

__all__ = [
    "ALL_OPERATORS",
    "DEFAULT_STEP_BUDGET",
    "FunctionInfo",
    "ParseFailure",
    "Program",
    "RunResult",
    "UnknownTest",
    "approx",
    "execute_test",
    "function_table",
    "link",
    "mutate",
    "parse",
    "parse_unresolved",
    "to_source",
    "tokenize",
]
