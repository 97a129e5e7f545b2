"""Reference executor: update sets, consistency, state transitions and traces.

Values are Python ``bool``, ``int`` and ``str`` (enum elements and agents),
plus :data:`~asmflat.core.UNDEF`.  A location is a ``(name, args)`` tuple.
"""

from __future__ import annotations

import hashlib
import itertools
from collections.abc import Mapping
from dataclasses import dataclass, field

from .core import (
    UNDEF, AgentDomain, Apply, BoolLit, BooleanDomain, Builtin, Case, Choose, ChooseOne, Cond,
    EnumLit, Forall, IntLit, IntRange, IsDef, Let, MacroCall, Model, Par, ProgramCall, Skip,
    UndefLit, Update, Var, literal_value,
)
from .typecheck import TypedModel, check

COMPLETED = "completed"
INCONSISTENT = "inconsistent-update"
INVARIANT = "invariant-violation"
UNDEFINED_GUARD = "undefined-guard"
DOMAIN_VIOLATION = "domain-violation"


class ASMRuntimeError(Exception):
    status = "error"


class InconsistentUpdate(ASMRuntimeError):
    status = INCONSISTENT

    def __init__(self, loc, first, second):
        self.loc, self.first, self.second = loc, first, second
        super().__init__(f"inconsistent update of {format_location(loc)}: "
                         f"{format_value(first)} vs {format_value(second)}")


class UndefinedGuard(ASMRuntimeError):
    status = UNDEFINED_GUARD


class DomainViolation(ASMRuntimeError):
    status = DOMAIN_VIOLATION


class InvariantViolation(ASMRuntimeError):
    status = INVARIANT

    def __init__(self, name):
        self.name = name
        super().__init__(f"invariant {name} violated")


class MissingInput(ASMRuntimeError):
    status = "missing-input"


def format_value(v) -> str:
    if v is UNDEF:
        return "undef"
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


def format_location(loc) -> str:
    name, args = loc
    if not args:
        return name
    return f"{name}({','.join(format_value(a) for a in args)})"


def values_equal(a, b) -> bool:
    return a is b or (type(a) is type(b) and a == b)


def member(v, dom) -> bool:
    if isinstance(dom, IntRange):
        return type(v) is int and dom.lo <= v <= dom.hi
    if isinstance(dom, BooleanDomain):
        return type(v) is bool
    return type(v) is str and v in dom.values()


# ---------------------------------------------------------------------------
# Choice policies


@dataclass(frozen=True)
class FirstInOrder:
    """Pick the first satisfying element in enumeration order."""

    def select(self, candidates: list, step: int):
        return candidates[0]

    def __str__(self):
        return "first"


@dataclass(frozen=True)
class SeededRandom:
    """Pseudo-random choice keyed on (seed, step, candidate list).

    The pick is a pure function of its key, so every choice point that sees
    the same candidates in the same step picks the same element, no matter how
    often or in which order it is evaluated.
    """

    seed: int

    def select(self, candidates: list, step: int):
        key = f"{self.seed}:{step}:{[format_value(c) for c in candidates]}".encode()
        h = int.from_bytes(hashlib.blake2b(key, digest_size=8).digest(), "big")
        return candidates[h % len(candidates)]

    def __str__(self):
        return f"random:{self.seed}"


# ---------------------------------------------------------------------------
# States


class State(Mapping):
    """Immutable map from controlled locations to values."""

    __slots__ = ("_d",)

    def __init__(self, values=()):
        self._d = dict(values)

    def __getitem__(self, loc):
        return self._d[loc]

    def __iter__(self):
        return iter(self._d)

    def __len__(self):
        return len(self._d)

    def get(self, loc, default=None):
        return self._d.get(loc, default)

    def updated(self, updates: Mapping) -> "State":
        s = State.__new__(State)
        s._d = {**self._d, **updates}
        return s

    def render(self) -> str:
        items = sorted((format_location(k), format_value(v)) for k, v in self._d.items())
        return " ".join(f"{k}={v}" for k, v in items)

    def __repr__(self):
        return f"State({self.render()})"


class _Tables:
    """Per-model lookup tables shared by every evaluation over that model."""

    def __init__(self, typed: TypedModel):
        self.typed = typed
        sig = typed.sig
        self.sig = sig
        self.functions = sig.functions
        self.params = {f.name: [sig.resolve(p) for p in f.params] for f in typed.model.functions}
        self.results = {f.name: sig.resolve(f.result) for f in typed.model.functions}
        self.tables = {}
        for f in typed.model.functions:
            if f.table is not None:
                self.tables[f.name] = {tuple(literal_value(k) for k in key): literal_value(v)
                                       for key, v in f.table}
        self.macros = sig.macros
        self.constants = sig.constants
        self.programs = sig.programs
        self.static_cache: dict = {}

    def in_params(self, name, args) -> bool:
        return all(member(a, d) for a, d in zip(args, self.params[name]))

    def controlled_locations(self):
        for f in self.typed.model.functions:
            if f.kind == "controlled":
                doms = self.params[f.name]
                for args in itertools.product(*(d.values() for d in doms)):
                    yield (f.name, tuple(args))

    def monitored_locations(self):
        for f in self.typed.model.functions:
            if f.kind == "monitored":
                doms = self.params[f.name]
                for args in itertools.product(*(d.values() for d in doms)):
                    yield (f.name, tuple(args)), self.results[f.name]


_TABLE_CACHE: dict[int, tuple[TypedModel, _Tables]] = {}


def _tables(typed: TypedModel) -> _Tables:
    hit = _TABLE_CACHE.get(id(typed))
    if hit is not None and hit[0] is typed:
        return hit[1]
    t = _Tables(typed)
    if len(_TABLE_CACHE) > 64:
        _TABLE_CACHE.clear()
    _TABLE_CACHE[id(typed)] = (typed, t)
    return t


def _typed(model) -> TypedModel:
    return model if isinstance(model, TypedModel) else check(model)


class Evaluator:
    """Evaluates terms and collects update sets in one state."""

    def __init__(self, typed: TypedModel, state: Mapping, inputs: Mapping | None,
                 policy=None, step: int = 0):
        self.t = _tables(typed)
        self.state = state
        self.inputs = inputs
        self.policy = policy or FirstInOrder()
        self.step = step
        self.derived_cache: dict = {}

    # -- terms -------------------------------------------------------------

    def eval(self, t, env: Mapping):
        cls = type(t)
        if cls is Apply:
            return self.apply(t.func, tuple(self.eval(a, env) for a in t.args))
        if cls is Var:
            return env[t.name]
        if cls is BoolLit or cls is IntLit:
            return t.value
        if cls is EnumLit:
            return t.name
        if cls is Builtin:
            return self.builtin(t, env)
        if cls is UndefLit:
            return UNDEF
        if cls is IsDef:
            return self.eval(t.arg, env) is not UNDEF
        if cls is ChooseOne:
            return self.chooseone(t, env)
        raise TypeError(f"cannot evaluate {t!r}")

    def builtin(self, t: Builtin, env):
        op = t.op
        # Kleene connectives may short-circuit: the dominant value decides alone.
        if op == "and":
            a = self.eval(t.args[0], env)
            if a is False:
                return False
            b = self.eval(t.args[1], env)
            if a is False or b is False:
                return False
            if a is UNDEF or b is UNDEF:
                return UNDEF
            return True
        if op == "or":
            a = self.eval(t.args[0], env)
            if a is True:
                return True
            b = self.eval(t.args[1], env)
            if a is True or b is True:
                return True
            if a is UNDEF or b is UNDEF:
                return UNDEF
            return False
        if op == "implies":
            a = self.eval(t.args[0], env)
            if a is False:
                return True
            b = self.eval(t.args[1], env)
            if a is False or b is True:
                return True
            if a is UNDEF or b is UNDEF:
                return UNDEF
            return False
        if op == "not":
            a = self.eval(t.args[0], env)
            return UNDEF if a is UNDEF else not a
        a = self.eval(t.args[0], env)
        b = self.eval(t.args[1], env)
        if op == "=":
            return values_equal(a, b)
        if op == "!=":
            return not values_equal(a, b)
        if a is UNDEF or b is UNDEF:
            return UNDEF
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            return a * b
        if op == "<":
            return a < b
        if op == "<=":
            return a <= b
        if op == ">":
            return a > b
        return a >= b

    def apply(self, name: str, args: tuple):
        t = self.t
        f = t.functions[name]
        kind = f.kind
        if kind == "controlled":
            return self.state.get((name, args), UNDEF)
        if not t.in_params(name, args):
            return UNDEF
        if kind == "monitored":
            loc = (name, args)
            if self.inputs is None or loc not in self.inputs:
                raise MissingInput(f"no value for monitored location {format_location(loc)}")
            return self.inputs[loc]
        if kind == "static":
            if name in t.tables:
                return t.tables[name].get(args, UNDEF)
            key = (name, args)
            hit = t.static_cache.get(key)
            if hit is None:
                hit = self.eval(f.definition, dict(zip(f.param_names or (), args)))
                t.static_cache[key] = hit
            return hit
        key = (name, args)
        hit = self.derived_cache.get(key)
        if hit is None:
            hit = self.eval(f.definition, dict(zip(f.param_names or (), args)))
            self.derived_cache[key] = hit
        return hit

    def candidates(self, var, dom_ref, guard, env) -> list:
        dom = self.t.sig.resolve(dom_ref)
        inner = dict(env)
        out = []
        for v in dom.values():
            inner[var] = v
            if self.eval(guard, inner) is True:
                out.append(v)
        return out

    def chooseone(self, t: ChooseOne, env):
        cands = self.candidates(t.var, t.domain, t.guard, env)
        if not cands:
            return UNDEF
        inner = dict(env)
        inner[t.var] = self.policy.select(cands, self.step)
        return self.eval(t.result, inner)

    # -- rules -------------------------------------------------------------

    def guard(self, g, env) -> bool:
        v = self.eval(g, env)
        if v is UNDEF:
            raise UndefinedGuard("guard evaluates to undef")
        return v

    def collect(self, r, env, out: list, calls=()):
        cls = type(r)
        if cls is Update:
            loc = r.loc
            args = tuple(self.eval(a, env) for a in loc.args)
            out.append(((loc.func, args), self.eval(r.value, env)))
        elif cls is Par:
            for c in r.rules:
                self.collect(c, env, out, calls)
        elif cls is Cond:
            if self.guard(r.guard, env):
                self.collect(r.then, env, out, calls)
            elif r.otherwise is not None:
                self.collect(r.otherwise, env, out, calls)
        elif cls is Skip:
            pass
        elif cls is Forall:
            doms = [self.t.sig.resolve(b.domain).values() for b in r.binders]
            names = [b.var for b in r.binders]
            inner = dict(env)
            for combo in itertools.product(*doms):
                inner.update(zip(names, combo))
                if self.guard(r.guard, inner):
                    self.collect(r.body, dict(inner), out, calls)
        elif cls is Choose:
            cands = self.candidates(r.var, r.domain, r.guard, env)
            if cands:
                inner = dict(env)
                inner[r.var] = self.policy.select(cands, self.step)
                self.collect(r.body, inner, out, calls)
            elif r.ifnone is not None:
                self.collect(r.ifnone, env, out, calls)
        elif cls is Let:
            inner = dict(env)
            for v, t in r.bindings:
                inner[v] = self.eval(t, env)
            self.collect(r.body, inner, out, calls)
        elif cls is Case:
            s = self.eval(r.scrutinee, env)
            matched = False
            for t, c in r.cases:
                if values_equal(s, self.eval(t, env)):
                    matched = True
                    self.collect(c, env, out, calls)
            if not matched and r.otherwise is not None:
                self.collect(r.otherwise, env, out, calls)
        elif cls is MacroCall:
            if r.name in calls:
                raise ASMRuntimeError(f"recursive call of rule {r.name}")
            m = self.t.macros[r.name]
            inner = {b.var: self.eval(a, env) for b, a in zip(m.params, r.args)}
            self.collect(m.body, inner, out, calls + (r.name,))
        elif cls is ProgramCall:
            agent = self.eval(r.agent, env)
            dom = self.t.constants.get(agent) if isinstance(agent, str) else None
            if not isinstance(dom, AgentDomain) or dom.name not in self.t.programs:
                raise ASMRuntimeError(f"no program for agent {format_value(agent)}")
            m = self.t.macros[self.t.programs[dom.name]]
            if m.name in calls:
                raise ASMRuntimeError(f"recursive call of rule {m.name}")
            self.collect(m.body, {"self": agent}, out, calls + (m.name,))
        else:
            raise TypeError(f"cannot execute {r!r}")


def consistent_updates(pairs, tables: _Tables) -> dict:
    """Merge update pairs into a location map; raise on conflicts and on
    updates outside the declared domains."""
    merged: dict = {}
    for loc, v in pairs:
        old = merged.get(loc, merged)
        if old is merged:
            merged[loc] = v
        elif not values_equal(old, v):
            raise InconsistentUpdate(loc, old, v)
    for loc, v in merged.items():
        name, args = loc
        if not tables.in_params(name, args):
            raise DomainViolation(f"update of {format_location(loc)} outside the parameter domains")
        if not member(v, tables.results[name]):
            raise DomainViolation(f"value {format_value(v)} for {format_location(loc)} "
                                  f"outside its domain")
    return merged


def eval_term(term, model, state: Mapping, inputs: Mapping | None = None,
              binding: Mapping | None = None, policy=None, step: int = 0):
    """Value of ``term`` in ``state`` under the given inputs and variable binding."""
    ev = Evaluator(_typed(model), state, inputs or {}, policy, step)
    return ev.eval(term, dict(binding or {}))


def update_set(rule, model, state: Mapping, inputs: Mapping | None = None,
               binding: Mapping | None = None, policy=None, step: int = 0) -> dict:
    """Consistent update set of ``rule``; raises :class:`InconsistentUpdate`."""
    typed = _typed(model)
    ev = Evaluator(typed, state, inputs or {}, policy, step)
    out: list = []
    ev.collect(rule, dict(binding or {}), out)
    return consistent_updates(out, ev.t)


def initial_state(model) -> State:
    typed = _typed(model)
    tables = _tables(typed)
    ev = Evaluator(typed, State(), {}, FirstInOrder(), 0)
    values = {}
    for i in typed.model.inits:
        if i.binders:
            doms = [typed.sig.resolve(b.domain).values() for b in i.binders]
            names = [b.var for b in i.binders]
            for combo in itertools.product(*doms):
                env = dict(zip(names, combo))
                args = tuple(env[a.name] for a in i.args)
                values[(i.func, args)] = ev.eval(i.value, env)
        else:
            args = tuple(ev.eval(a, {}) for a in i.args)
            values[(i.func, args)] = ev.eval(i.value, {})
    for loc, v in values.items():
        if not member(v, tables.results[loc[0]]):
            raise DomainViolation(f"initial value of {format_location(loc)} outside its domain")
    return State(values)


def step(model, state: State, inputs: Mapping, policy=None, step_index: int = 0) -> State:
    """One machine step: fire the main rule, apply its update set atomically,
    then check every invariant in the new state."""
    typed = _typed(model)
    ev = Evaluator(typed, state, inputs, policy, step_index)
    out: list = []
    ev.collect(typed.model.main.body, {}, out)
    new = state.updated(consistent_updates(out, ev.t))
    if typed.model.invariants:
        check_ev = Evaluator(typed, new, inputs, policy, step_index + 1)
        for inv in typed.model.invariants:
            if check_ev.eval(inv.term, {}) is not True:
                raise InvariantViolation(inv.name)
    return new


@dataclass
class TraceStep:
    inputs: dict
    state: State


@dataclass
class Trace:
    steps: list[TraceStep] = field(default_factory=list)
    status: str = COMPLETED
    failed_step: int | None = None
    detail: str = ""

    @property
    def states(self) -> list[State]:
        return [s.state for s in self.steps]

    def status_line(self) -> str:
        if self.status == COMPLETED:
            return "status: completed"
        line = f"status: {self.status} at step {self.failed_step}"
        if self.status == INVARIANT:
            line += f" ({self.detail})"
        return line

    def serialize(self) -> str:
        lines = [f"state {i}: {s.state.render()}" for i, s in enumerate(self.steps)]
        lines.append(self.status_line())
        return "\n".join(lines) + "\n"


def run(model, inputs: list[Mapping], n: int, policy=None) -> Trace:
    """Run ``n`` steps from the initial state, one input map per step."""
    typed = _typed(model)
    if len(inputs) < n:
        raise ValueError(f"need {n} input maps, got {len(inputs)}")
    state = initial_state(typed)
    trace = Trace([TraceStep({}, state)])
    for i in range(n):
        try:
            state = step(typed, state, inputs[i], policy, i)
        except ASMRuntimeError as e:
            trace.status = e.status
            trace.failed_step = i + 1
            trace.detail = e.name if isinstance(e, InvariantViolation) else str(e)
            break
        trace.steps.append(TraceStep(dict(inputs[i]), state))
    return trace


def monitored_locations(model) -> list:
    """``[(location, domain)]`` for every monitored location of the model."""
    return list(_tables(_typed(model)).monitored_locations())


def random_inputs(model, n: int, rng) -> list[dict]:
    """``n`` input maps drawn uniformly from each monitored location's domain."""
    locs = monitored_locations(model)
    return [{loc: rng.choice(dom.values()) for loc, dom in locs} for _ in range(n)]
