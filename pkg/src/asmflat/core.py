"""Abstract syntax of ASM models plus the structural operations on it.

Every node is an immutable dataclass.  Source spans are carried on each node
but take no part in equality, so a reparsed model compares equal to the model
it was printed from.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Union

RESERVED_PREFIX = "flat_"


@dataclass(frozen=True)
class SourceSpan:
    start: int
    end: int
    line: int = 1
    column: int = 1

    def __str__(self):
        return f"{self.line}:{self.column}"


@dataclass(frozen=True, slots=True)
class Node:
    span: SourceSpan | None = field(default=None, compare=False, repr=False, kw_only=True)


# ---------------------------------------------------------------------------
# Domains and values


class _Undef:
    """The ``undef`` value.  A singleton."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "undef"

    def __reduce__(self):
        return (_Undef, ())


UNDEF = _Undef()


@dataclass(frozen=True, slots=True)
class BooleanDomain(Node):
    @property
    def name(self):
        return "Boolean"

    def values(self) -> tuple:
        return (False, True)


@dataclass(frozen=True, slots=True)
class EnumDomain(Node):
    name: str
    elements: tuple[str, ...]

    def values(self) -> tuple:
        return self.elements


@dataclass(frozen=True, slots=True)
class IntRange(Node):
    lo: int
    hi: int
    name: str | None = None

    def values(self) -> tuple:
        return tuple(range(self.lo, self.hi + 1))

    def __contains__(self, v):
        return type(v) is int and self.lo <= v <= self.hi


@dataclass(frozen=True, slots=True)
class AgentDomain(Node):
    name: str
    agents: tuple[str, ...]

    def values(self) -> tuple:
        return self.agents


BOOLEAN = BooleanDomain()

Domain = Union[BooleanDomain, EnumDomain, IntRange, AgentDomain]
# A reference to a domain inside a declaration or binder: either a declared
# name ("Boolean" included) or an anonymous inline range.
DomainRef = Union[str, IntRange]


def domain_label(ref) -> str:
    if isinstance(ref, IntRange):
        return ref.name if ref.name else f"[{ref.lo}..{ref.hi}]"
    if isinstance(ref, str):
        return ref
    return ref.name


# ---------------------------------------------------------------------------
# Terms


@dataclass(frozen=True, slots=True)
class Term(Node):
    pass


@dataclass(frozen=True, slots=True)
class BoolLit(Term):
    value: bool


@dataclass(frozen=True, slots=True)
class IntLit(Term):
    value: int


@dataclass(frozen=True, slots=True)
class EnumLit(Term):
    """An enum element or agent constant."""

    name: str


@dataclass(frozen=True, slots=True)
class UndefLit(Term):
    pass


@dataclass(frozen=True, slots=True)
class Var(Term):
    """A logical variable.  ``self`` is represented as ``Var("self")``."""

    name: str


@dataclass(frozen=True, slots=True)
class Apply(Term):
    func: str
    args: tuple[Term, ...] = ()


LOGICAL_OPS = frozenset({"and", "or", "not", "implies"})
RELATIONAL_OPS = frozenset({"=", "!=", "<", "<=", ">", ">="})
ARITH_OPS = frozenset({"+", "-", "*"})
BUILTIN_OPS = LOGICAL_OPS | RELATIONAL_OPS | ARITH_OPS


@dataclass(frozen=True, slots=True)
class Builtin(Term):
    op: str
    args: tuple[Term, ...]

    def __post_init__(self):
        if self.op not in BUILTIN_OPS:
            raise ValueError(f"unknown builtin {self.op!r}")
        want = 1 if self.op == "not" else 2
        if len(self.args) != want:
            raise ValueError(f"{self.op} takes {want} operand(s), got {len(self.args)}")


@dataclass(frozen=True, slots=True)
class IsDef(Term):
    arg: Term


@dataclass(frozen=True, slots=True)
class ChooseOne(Term):
    """``chooseone({$var in domain | guard : result})``"""

    var: str
    domain: DomainRef
    guard: Term
    result: Term


TRUE = BoolLit(True)
FALSE = BoolLit(False)

LITERAL_TYPES = (BoolLit, IntLit, EnumLit, UndefLit)


def is_literal(t) -> bool:
    return isinstance(t, LITERAL_TYPES)


def literal(value) -> Term:
    """The literal term denoting a runtime value."""
    if value is UNDEF:
        return UndefLit()
    if isinstance(value, bool):
        return TRUE if value else FALSE
    if isinstance(value, int):
        return IntLit(value)
    if isinstance(value, str):
        return EnumLit(value)
    raise TypeError(f"no literal for {value!r}")


def literal_value(t: Term):
    if isinstance(t, (BoolLit, IntLit)):
        return t.value
    if isinstance(t, EnumLit):
        return t.name
    if isinstance(t, UndefLit):
        return UNDEF
    raise TypeError(f"{t!r} is not a literal")


def conj(a: Term, b: Term) -> Term:
    if a == TRUE:
        return b
    if b == TRUE:
        return a
    if a == FALSE or b == FALSE:
        return FALSE
    return Builtin("and", (a, b))


def conj_all(terms: Iterable[Term]) -> Term:
    out = TRUE
    for t in terms:
        out = conj(out, t)
    return out


def neg(a: Term) -> Term:
    if a == TRUE:
        return FALSE
    if a == FALSE:
        return TRUE
    return Builtin("not", (a,))


# ---------------------------------------------------------------------------
# Rules


@dataclass(frozen=True, slots=True)
class Rule(Node):
    pass


@dataclass(frozen=True, slots=True)
class Update(Rule):
    loc: Apply
    value: Term


@dataclass(frozen=True, slots=True)
class Par(Rule):
    rules: tuple[Rule, ...]


@dataclass(frozen=True, slots=True)
class Cond(Rule):
    guard: Term
    then: Rule
    otherwise: Rule | None = None


@dataclass(frozen=True, slots=True)
class MacroCall(Rule):
    name: str
    args: tuple[Term, ...] = ()


@dataclass(frozen=True, slots=True)
class ProgramCall(Rule):
    agent: Term


@dataclass(frozen=True, slots=True)
class Binder(Node):
    var: str
    domain: DomainRef


@dataclass(frozen=True, slots=True)
class Forall(Rule):
    binders: tuple[Binder, ...]
    guard: Term
    body: Rule


@dataclass(frozen=True, slots=True)
class Choose(Rule):
    var: str
    domain: DomainRef
    guard: Term
    body: Rule
    ifnone: Rule | None = None


@dataclass(frozen=True, slots=True)
class Let(Rule):
    bindings: tuple[tuple[str, Term], ...]
    body: Rule


@dataclass(frozen=True, slots=True)
class Case(Rule):
    scrutinee: Term
    cases: tuple[tuple[Term, Rule], ...]
    otherwise: Rule | None = None


@dataclass(frozen=True, slots=True)
class Skip(Rule):
    pass


SKIP = Skip()


# ---------------------------------------------------------------------------
# Declarations and models

FUNCTION_KINDS = ("static", "monitored", "controlled", "derived")


@dataclass(frozen=True, slots=True)
class FunctionDecl(Node):
    """A function of the signature.

    ``param_names`` is set when the declaration defines the function by a term
    over named parameters; ``table`` holds an explicit value table for static
    functions as ``((arg literals), value literal)`` pairs.
    """

    name: str
    kind: str
    params: tuple[DomainRef, ...]
    result: DomainRef
    param_names: tuple[str, ...] | None = None
    definition: Term | None = None
    table: tuple[tuple[tuple[Term, ...], Term], ...] | None = None

    def __post_init__(self):
        if self.definition is not None and self.param_names is None and not self.params:
            object.__setattr__(self, "param_names", ())

    @property
    def arity(self):
        return len(self.params)

    @property
    def dynamic(self):
        return self.kind in ("monitored", "controlled")


@dataclass(frozen=True, slots=True)
class MacroDecl(Node):
    name: str
    params: tuple[Binder, ...]
    body: Rule


@dataclass(frozen=True, slots=True)
class AgentDecl(Node):
    domain: str
    rule: str


@dataclass(frozen=True, slots=True)
class Invariant(Node):
    name: str
    term: Term


@dataclass(frozen=True, slots=True)
class Init(Node):
    """Initialization of a controlled function.

    With ``binders`` empty, ``args`` are literal terms naming one location;
    otherwise ``args`` are the binder variables and ``value`` is evaluated for
    every tuple of the binder domains.
    """

    func: str
    binders: tuple[Binder, ...]
    args: tuple[Term, ...]
    value: Term


@dataclass(frozen=True, slots=True)
class Model(Node):
    name: str
    domains: tuple[Domain, ...] = ()
    functions: tuple[FunctionDecl, ...] = ()
    macros: tuple[MacroDecl, ...] = ()
    agents: tuple[AgentDecl, ...] = ()
    invariants: tuple[Invariant, ...] = ()
    main: MacroDecl = field(default_factory=lambda: MacroDecl("r_main", (), SKIP))
    inits: tuple[Init, ...] = ()

    def function(self, name: str) -> FunctionDecl | None:
        for f in self.functions:
            if f.name == name:
                return f
        return None

    def macro(self, name: str) -> MacroDecl | None:
        for m in self.macros:
            if m.name == name:
                return m
        return None

    def with_main_body(self, body: Rule) -> "Model":
        return replace(self, main=replace(self.main, body=body))

    def rule_decls(self) -> tuple[MacroDecl, ...]:
        return self.macros + (self.main,)


# ---------------------------------------------------------------------------
# Traversal helpers


def rule_children(r: Rule) -> tuple[Rule, ...]:
    if isinstance(r, Par):
        return r.rules
    if isinstance(r, Cond):
        return (r.then,) if r.otherwise is None else (r.then, r.otherwise)
    if isinstance(r, (Forall, Let)):
        return (r.body,)
    if isinstance(r, Choose):
        return (r.body,) if r.ifnone is None else (r.body, r.ifnone)
    if isinstance(r, Case):
        kids = tuple(rule for _, rule in r.cases)
        return kids if r.otherwise is None else kids + (r.otherwise,)
    return ()


def walk_rules(r: Rule) -> Iterator[Rule]:
    stack = [r]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(rule_children(node)))


def rule_terms(r: Rule) -> tuple[Term, ...]:
    """Terms owned directly by a rule node (not by its sub-rules)."""
    if isinstance(r, Update):
        return (r.loc, r.value)
    if isinstance(r, Cond):
        return (r.guard,)
    if isinstance(r, (MacroCall,)):
        return r.args
    if isinstance(r, ProgramCall):
        return (r.agent,)
    if isinstance(r, (Forall, Choose)):
        return (r.guard,)
    if isinstance(r, Let):
        return tuple(t for _, t in r.bindings)
    if isinstance(r, Case):
        return (r.scrutinee,) + tuple(t for t, _ in r.cases)
    return ()


def term_children(t: Term) -> tuple[Term, ...]:
    if isinstance(t, (Apply, Builtin)):
        return t.args
    if isinstance(t, IsDef):
        return (t.arg,)
    if isinstance(t, ChooseOne):
        return (t.guard, t.result)
    return ()


def walk_terms(t: Term) -> Iterator[Term]:
    stack = [t]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(term_children(node)))


def map_terms(r: Rule, fn) -> Rule:
    """Apply ``fn`` to every term owned by ``r`` and its sub-rules."""
    if isinstance(r, Update):
        loc = fn(r.loc)
        return replace(r, loc=loc, value=fn(r.value))
    if isinstance(r, Par):
        return replace(r, rules=tuple(map_terms(c, fn) for c in r.rules))
    if isinstance(r, Cond):
        return replace(r, guard=fn(r.guard), then=map_terms(r.then, fn),
                       otherwise=None if r.otherwise is None else map_terms(r.otherwise, fn))
    if isinstance(r, MacroCall):
        return replace(r, args=tuple(fn(a) for a in r.args))
    if isinstance(r, ProgramCall):
        return replace(r, agent=fn(r.agent))
    if isinstance(r, Forall):
        return replace(r, guard=fn(r.guard), body=map_terms(r.body, fn))
    if isinstance(r, Choose):
        return replace(r, guard=fn(r.guard), body=map_terms(r.body, fn),
                       ifnone=None if r.ifnone is None else map_terms(r.ifnone, fn))
    if isinstance(r, Let):
        return replace(r, bindings=tuple((v, fn(t)) for v, t in r.bindings),
                       body=map_terms(r.body, fn))
    if isinstance(r, Case):
        return replace(r, scrutinee=fn(r.scrutinee),
                       cases=tuple((fn(t), map_terms(c, fn)) for t, c in r.cases),
                       otherwise=None if r.otherwise is None else map_terms(r.otherwise, fn))
    return r


def identifiers(node) -> set[str]:
    """Every variable and function/rule name mentioned anywhere in ``node``."""
    out: set[str] = set()

    def visit(x):
        if isinstance(x, (list, tuple)):
            for y in x:
                visit(y)
            return
        if not isinstance(x, Node):
            return
        if isinstance(x, Var):
            out.add(x.name)
        elif isinstance(x, Apply):
            out.add(x.func)
        elif isinstance(x, (MacroCall, MacroDecl, FunctionDecl)):
            out.add(x.name)
        elif isinstance(x, (ChooseOne, Choose, Binder)):
            out.add(x.var)
        elif isinstance(x, Let):
            out.update(v for v, _ in x.bindings)
        if isinstance(x, FunctionDecl) and x.param_names:
            out.update(x.param_names)
        for f in fields(x):
            if f.name != "span":
                visit(getattr(x, f.name))

    visit(node)
    return out


# ---------------------------------------------------------------------------
# Free variables and substitution


def free_variables(node) -> frozenset[str]:
    if isinstance(node, Term):
        return frozenset(_fv_term(node))
    if isinstance(node, Rule):
        return frozenset(_fv_rule(node))
    if isinstance(node, MacroDecl):
        return frozenset(_fv_rule(node.body) - {b.var for b in node.params})
    raise TypeError(f"free_variables: unsupported node {type(node).__name__}")


def _fv_term(t: Term) -> set[str]:
    if isinstance(t, Var):
        return {t.name}
    if isinstance(t, ChooseOne):
        return (_fv_term(t.guard) | _fv_term(t.result)) - {t.var}
    out: set[str] = set()
    for c in term_children(t):
        out |= _fv_term(c)
    return out


def _fv_rule(r: Rule) -> set[str]:
    if isinstance(r, Forall):
        inner = _fv_term(r.guard) | _fv_rule(r.body)
        return inner - {b.var for b in r.binders}
    if isinstance(r, Choose):
        out = (_fv_term(r.guard) | _fv_rule(r.body)) - {r.var}
        if r.ifnone is not None:
            out |= _fv_rule(r.ifnone)
        return out
    if isinstance(r, Let):
        out = set()
        for _, t in r.bindings:
            out |= _fv_term(t)
        return out | (_fv_rule(r.body) - {v for v, _ in r.bindings})
    out = set()
    for t in rule_terms(r):
        out |= _fv_term(t)
    for c in rule_children(r):
        out |= _fv_rule(c)
    return out


def fresh_name(avoid: set[str], base: str = RESERVED_PREFIX + "r") -> str:
    i = 1
    while f"{base}{i}" in avoid:
        i += 1
    return f"{base}{i}"


class _Subst:
    """Capture-avoiding simultaneous substitution of variables by terms."""

    def __init__(self, binding: Mapping[str, Term], root):
        self.binding = dict(binding)
        self.image_fv: set[str] = set()
        for t in self.binding.values():
            if not is_literal(t):
                self.image_fv |= _fv_term(t)
        self._avoid = None
        self._root = root

    def avoid(self) -> set[str]:
        if self._avoid is None:
            self._avoid = identifiers(self._root) | self.image_fv | set(self.binding)
        return self._avoid

    def enter(self, names):
        """Open a binder scope.  Returns (inner substitution, renaming) or None."""
        inner = {k: v for k, v in self.binding.items() if k not in names}
        rename = {}
        if not inner:
            return _Subst({}, None), rename
        for n in names:
            if n in self.image_fv:
                new = fresh_name(self.avoid())
                self.avoid().add(new)
                rename[n] = new
        if not rename:
            if len(inner) == len(self.binding):
                return self, rename
            child = _Subst.__new__(_Subst)
            child.binding = inner
            child.image_fv = self.image_fv
            child._avoid = self._avoid
            child._root = self._root
            return child, rename
        for old, new in rename.items():
            inner[old] = Var(new)
        child = _Subst.__new__(_Subst)
        child.binding = inner
        child.image_fv = self.image_fv
        child._avoid = self.avoid()
        child._root = self._root
        return child, rename

    def term(self, t: Term) -> Term:
        if not self.binding:
            return t
        if isinstance(t, Var):
            return self.binding.get(t.name, t)
        if isinstance(t, Apply):
            if not t.args:
                return t
            return Apply(t.func, tuple(self.term(a) for a in t.args), span=t.span)
        if isinstance(t, Builtin):
            return Builtin(t.op, tuple(self.term(a) for a in t.args), span=t.span)
        if isinstance(t, IsDef):
            return IsDef(self.term(t.arg), span=t.span)
        if isinstance(t, ChooseOne):
            sub, rename = self.enter((t.var,))
            return ChooseOne(rename.get(t.var, t.var), t.domain, sub.term(t.guard),
                             sub.term(t.result), span=t.span)
        return t

    def rule(self, r: Rule) -> Rule:
        if not self.binding:
            return r
        if isinstance(r, Update):
            return Update(self.term(r.loc), self.term(r.value), span=r.span)
        if isinstance(r, Par):
            return Par(tuple(self.rule(c) for c in r.rules), span=r.span)
        if isinstance(r, Cond):
            return Cond(self.term(r.guard), self.rule(r.then),
                        None if r.otherwise is None else self.rule(r.otherwise), span=r.span)
        if isinstance(r, MacroCall):
            return MacroCall(r.name, tuple(self.term(a) for a in r.args), span=r.span)
        if isinstance(r, ProgramCall):
            return ProgramCall(self.term(r.agent), span=r.span)
        if isinstance(r, Forall):
            sub, rename = self.enter(tuple(b.var for b in r.binders))
            binders = tuple(replace(b, var=rename.get(b.var, b.var)) for b in r.binders)
            return Forall(binders, sub.term(r.guard), sub.rule(r.body), span=r.span)
        if isinstance(r, Choose):
            sub, rename = self.enter((r.var,))
            return Choose(rename.get(r.var, r.var), r.domain, sub.term(r.guard), sub.rule(r.body),
                          None if r.ifnone is None else self.rule(r.ifnone), span=r.span)
        if isinstance(r, Let):
            names = tuple(v for v, _ in r.bindings)
            bound = tuple(self.term(t) for _, t in r.bindings)
            sub, rename = self.enter(names)
            return Let(tuple((rename.get(v, v), t) for v, t in zip(names, bound)),
                       sub.rule(r.body), span=r.span)
        if isinstance(r, Case):
            return Case(self.term(r.scrutinee),
                        tuple((self.term(t), self.rule(c)) for t, c in r.cases),
                        None if r.otherwise is None else self.rule(r.otherwise), span=r.span)
        return r


def substitute(node, binding: Mapping[str, Term]):
    """Replace free occurrences of the binding's variables in a term or rule.

    The substitution is simultaneous and capture-avoiding: a binder that would
    capture a free variable of some image is renamed to a fresh
    ``flat_r<N>`` name first.
    """
    if not binding:
        return node
    s = _Subst(binding, node)
    if isinstance(node, Term):
        return s.term(node)
    return s.rule(node)


# ---------------------------------------------------------------------------
# Metrics


HISTOGRAM_KINDS = ("update", "parallel", "conditional", "forall", "choose",
                   "case", "let", "macro_call", "skip")

_KIND_OF = {
    Update: "update", Par: "parallel", Cond: "conditional", Forall: "forall",
    Choose: "choose", Case: "case", Let: "let", MacroCall: "macro_call",
    ProgramCall: "macro_call", Skip: "skip",
}


@dataclass(frozen=True)
class RuleHistogram:
    update: int = 0
    parallel: int = 0
    conditional: int = 0
    forall: int = 0
    choose: int = 0
    case: int = 0
    let: int = 0
    macro_call: int = 0
    skip: int = 0

    @property
    def total(self) -> int:
        return sum(getattr(self, k) for k in HISTOGRAM_KINDS)

    def as_dict(self) -> dict[str, int]:
        d = {k: getattr(self, k) for k in HISTOGRAM_KINDS}
        d["total"] = self.total
        return d


def rule_histogram(rules: Iterable[Rule]) -> RuleHistogram:
    counts = dict.fromkeys(HISTOGRAM_KINDS, 0)
    for root in rules:
        for r in walk_rules(root):
            counts[_KIND_OF[type(r)]] += 1
    return RuleHistogram(**counts)


def count_rules(model: Model) -> RuleHistogram:
    """Rule-constructor histogram over every declared macro body and the main rule."""
    return rule_histogram(d.body for d in model.rule_decls())


class UndefinedMetricError(ValueError):
    pass


def delta_percent(after: int, before: int) -> int:
    """Percentage change from ``before`` to ``after``, rounded half away from zero."""
    if before == 0:
        raise UndefinedMetricError("percentage change undefined for an empty original model")
    q = Fraction(after - before, before) * 100
    whole = int(abs(q) + Fraction(1, 2))
    return whole if q >= 0 else -whole


_NESTING = (Cond, Forall, Choose, Let, Case)


def nesting_depth(r: Rule) -> int:
    """Nesting of guarded/binding constructs; parallel composition adds no level."""
    kids = rule_children(r)
    inner = max((nesting_depth(c) for c in kids), default=0)
    return inner + 1 if isinstance(r, _NESTING) else inner


def max_nesting(model: Model) -> int:
    return max(nesting_depth(d.body) for d in model.rule_decls())


def is_normal_form(model: Model) -> tuple[bool, list[str]]:
    """Check the flattened shape; returns (verdict, violating AST paths)."""
    bad: list[str] = []
    for m in model.macros:
        bad.append(f"macro {m.name}")
    for a in model.agents:
        bad.append(f"agent {a.domain}")
    body = model.main.body
    root = f"main {model.main.name}"
    if isinstance(body, Update) or (isinstance(body, Cond) and body.otherwise is None):
        body = Par((body,))  # degenerate one-child parallel
    if not isinstance(body, Par):
        bad.append(f"{root}: top level is {type(body).__name__}, not Par")
        return False, bad
    for i, child in enumerate(body.rules):
        path = f"{root}/par[{i}]"
        if isinstance(child, Update):
            continue
        if not isinstance(child, Cond):
            bad.append(f"{path}: {type(child).__name__}")
            continue
        if child.otherwise is not None:
            bad.append(f"{path}: conditional with else branch")
        t = child.then
        if isinstance(t, Update):
            continue
        if isinstance(t, Par) and t.rules and all(isinstance(u, Update) for u in t.rules):
            continue
        bad.append(f"{path}/then: {type(t).__name__} is not an update or a parallel of updates")
    return not bad, bad
