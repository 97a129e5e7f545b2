"""Scenario scripts: set monitored inputs, step, check state."""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from ..core import Apply, Builtin, is_literal, literal_value, walk_terms
from ..interp import (
    ASMRuntimeError, Evaluator, FirstInOrder, format_location, format_value, initial_state, member,
    step, values_equal,
)
from ..parser import ParseErrors, parse_term
from ..typecheck import check


class ScenarioError(Exception):
    pass


@dataclass(frozen=True)
class Set:
    func: str
    args: tuple
    value: object
    line: int = 0


@dataclass(frozen=True)
class Step:
    line: int = 0


@dataclass(frozen=True)
class Check:
    term: object
    expected: object
    text: str = ""
    line: int = 0


@dataclass
class Scenario:
    commands: list = field(default_factory=list)
    name: str = ""


def _literal(text: str, line: int):
    try:
        t = parse_term(text)
    except ParseErrors as e:
        raise ScenarioError(f"line {line}: {e.errors[0].message}") from None
    if not is_literal(t):
        raise ScenarioError(f"line {line}: expected a literal value, got {text!r}")
    return literal_value(t)


_SET = re.compile(r"set\s+(.+?)\s*:=\s*(.+)$", re.S)


def parse_scenario(text: str, name: str = "") -> Scenario:
    """Parse a ``.scen`` script.  Commands end with ``;``; ``//`` starts a comment."""
    commands = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("//", 1)[0].strip()
        for part in line.split(";"):
            cmd = part.strip()
            if not cmd:
                continue
            if cmd == "step":
                commands.append(Step(lineno))
            elif cmd.startswith("set ") or cmd.startswith("set\t"):
                m = _SET.match(cmd)
                if not m:
                    raise ScenarioError(f"line {lineno}: malformed set command")
                try:
                    loc = parse_term(m.group(1))
                except ParseErrors as e:
                    raise ScenarioError(f"line {lineno}: {e.errors[0].message}") from None
                if not isinstance(loc, Apply) or not all(is_literal(a) for a in loc.args):
                    raise ScenarioError(f"line {lineno}: set needs a location with literal arguments")
                commands.append(Set(loc.func, tuple(literal_value(a) for a in loc.args),
                                    _literal(m.group(2), lineno), lineno))
            elif cmd.startswith("check ") or cmd.startswith("check\t"):
                body = cmd[len("check"):].strip()
                try:
                    t = parse_term(body)
                except ParseErrors as e:
                    raise ScenarioError(f"line {lineno}: {e.errors[0].message}") from None
                if not (isinstance(t, Builtin) and t.op == "=" and is_literal(t.args[1])):
                    raise ScenarioError(f"line {lineno}: check needs '<term> = <value>'")
                commands.append(Check(t.args[0], literal_value(t.args[1]), body, lineno))
            else:
                raise ScenarioError(f"line {lineno}: unknown command {cmd.split()[0]!r}")
        if line.strip() and not line.rstrip().endswith(";"):
            raise ScenarioError(f"line {lineno}: missing ';'")
    return Scenario(commands, name)


@dataclass
class CheckOutcome:
    line: int
    text: str
    step: int
    expected: object
    actual: object

    @property
    def ok(self) -> bool:
        return values_equal(self.expected, self.actual)

    def __str__(self):
        mark = "ok" if self.ok else "FAIL"
        return (f"{mark}  line {self.line} step {self.step}: {self.text}"
                + ("" if self.ok else f" (actual {format_value(self.actual)})"))


@dataclass
class ScenarioReport:
    checks: list = field(default_factory=list)
    error: str | None = None
    steps: int = 0

    @property
    def passed(self) -> bool:
        return self.error is None and all(c.ok for c in self.checks)

    @property
    def failures(self) -> list:
        return [c for c in self.checks if not c.ok]

    def summary(self) -> str:
        lines = [str(c) for c in self.checks]
        if self.error:
            lines.append(f"error: {self.error}")
        ok = sum(c.ok for c in self.checks)
        lines.append(f"{'PASS' if self.passed else 'FAIL'}: {ok}/{len(self.checks)} checks, "
                     f"{self.steps} steps")
        return "\n".join(lines)


def run_scenario(model, scenario, policy=None, fail_fast: bool = False) -> ScenarioReport:
    """Execute the commands in order and report every check."""
    if isinstance(scenario, str):
        scenario = parse_scenario(scenario)
    typed = model if hasattr(model, "sig") else check(model)
    sig = typed.sig
    policy = policy or FirstInOrder()
    report = ScenarioReport()
    state = initial_state(typed)
    inputs: dict = {}
    n = 0
    for cmd in scenario.commands:
        if isinstance(cmd, Set):
            f = sig.functions.get(cmd.func)
            if f is None or f.kind != "monitored":
                report.error = f"line {cmd.line}: {cmd.func} is not a monitored function"
                return report
            doms = [sig.resolve(p) for p in f.params]
            if len(doms) != len(cmd.args) or not all(member(a, d) for a, d in zip(cmd.args, doms)):
                report.error = f"line {cmd.line}: bad location {format_location((cmd.func, cmd.args))}"
                return report
            if not member(cmd.value, sig.resolve(f.result)):
                report.error = f"line {cmd.line}: value {format_value(cmd.value)} outside the domain"
                return report
            inputs[(cmd.func, cmd.args)] = cmd.value
        elif isinstance(cmd, Step):
            try:
                state = step(typed, state, inputs, policy, n)
            except ASMRuntimeError as e:
                report.error = f"line {cmd.line}: step {n + 1} failed: {e.status}: {e}"
                return report
            n += 1
            report.steps = n
        else:
            for t in walk_terms(cmd.term):
                if isinstance(t, Apply) and t.func not in sig.functions:
                    report.error = f"line {cmd.line}: unknown location {t.func}"
                    return report
            try:
                actual = Evaluator(typed, state, inputs, policy, n).eval(cmd.term, {})
            except (ASMRuntimeError, KeyError) as e:
                report.error = f"line {cmd.line}: cannot evaluate check: {e}"
                return report
            report.checks.append(CheckOutcome(cmd.line, cmd.text, n, cmd.expected, actual))
            if fail_fast and not report.checks[-1].ok:
                return report
    return report
