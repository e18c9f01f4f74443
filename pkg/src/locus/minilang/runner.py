"""Executor used by the engines to run ``.ml1`` tests."""

from __future__ import annotations

from dataclasses import dataclass

from ..core import TestOutcome
from .interp import DEFAULT_STEP_BUDGET, RunResult, execute_test
from .nodes import Program


@dataclass(frozen=True)
class Executor:
    step_budget: int = DEFAULT_STEP_BUDGET

    def run(self, program: Program, test: str, flip=None) -> TestOutcome:
        return execute_test(program, test, flip=flip, step_budget=self.step_budget).outcome

    def trace(self, program: Program, test: str, flip=None) -> RunResult:
        return execute_test(program, test, flip=flip, step_budget=self.step_budget, trace=True)
