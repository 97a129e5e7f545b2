"""Scenario runner, differential trace tester and random model fuzzing."""

from .diff import DIVERGED, EQUIVALENT, DiffReport, diff_models, diff_trace, policies
from .fuzz import CaseResult, FuzzReport, fuzz, run_case
from .gen import GenConfig, gen_model, shrink
from .scenario import (
    Check, Scenario, ScenarioError, ScenarioReport, Set, Step, parse_scenario, run_scenario,
)
