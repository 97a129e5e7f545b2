"""Name resolution, domain inference and well-formedness checks."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .core import (
    ARITH_OPS, BOOLEAN, LOGICAL_OPS, AgentDomain, Apply, BoolLit, BooleanDomain, Builtin, Case,
    Choose, ChooseOne, Cond, EnumDomain, EnumLit, Forall, IntLit, IntRange, IsDef, Let, MacroCall,
    Model, Par, ProgramCall, Skip, SourceSpan, Term, UndefLit, Update, Var, domain_label,
    literal_value, walk_terms,
)

CODES = {
    "unresolved name": "E_UNRESOLVED",
    "arity mismatch": "E_ARITY",
    "domain mismatch": "E_DOMAIN",
    "non-finite enumeration": "E_NONFINITE",
    "partial initialization": "E_INIT",
    "update to non-controlled": "E_NONCONTROLLED",
    "inconsistent guard type": "E_GUARD",
}

UNBOUNDED_DOMAINS = frozenset({"Integer", "Natural", "Real", "String"})
MAX_ENUMERATION = 1_000_000

# Domain of ``undef``; compatible with every sort and enumerates nothing.
ANY = EnumDomain("?", ())


@dataclass(frozen=True)
class TypeDiagnostic:
    category: str
    message: str
    span: SourceSpan | None = None

    @property
    def code(self) -> str:
        return CODES[self.category]

    def __str__(self):
        where = f"{self.span}: " if self.span else ""
        return f"{where}{self.code} {self.message}"

    def as_json(self) -> dict:
        d = {"code": self.code, "category": self.category, "message": self.message}
        if self.span:
            d["line"], d["column"] = self.span.line, self.span.column
            d["start"], d["end"] = self.span.start, self.span.end
        return d


class TypeCheckError(Exception):
    def __init__(self, errors: list[TypeDiagnostic]):
        self.errors = errors
        super().__init__("\n".join(str(e) for e in errors))


def sort_of(d) -> str:
    if isinstance(d, BooleanDomain):
        return "Boolean"
    if isinstance(d, IntRange):
        return "Integer"
    return d.name


def compatible(a, b) -> bool:
    return a is ANY or b is ANY or sort_of(a) == sort_of(b)


def enumerate_domain(domain) -> list:
    """Values of a finite domain: Boolean as [false, true], ranges ascending,
    enums and agent sets in declaration order."""
    return list(domain.values())


def cardinality(domain) -> int:
    if isinstance(domain, IntRange):
        return max(0, domain.hi - domain.lo + 1)
    return len(domain.values())


class Signature:
    """Symbol tables for a model.  Building one performs no checking."""

    def __init__(self, model: Model):
        self.model = model
        self.domains = {d.name: d for d in model.domains}
        self.functions = {f.name: f for f in model.functions}
        self.macros = {m.name: m for m in model.macros}
        self.programs = {a.domain: a.rule for a in model.agents}
        self.program_macros = {a.rule: a.domain for a in model.agents}
        self.constants: dict[str, object] = {}
        for d in model.domains:
            if isinstance(d, (EnumDomain, AgentDomain)):
                for e in d.values():
                    self.constants.setdefault(e, d)

    def resolve(self, ref):
        if isinstance(ref, IntRange):
            return ref
        if ref == "Boolean":
            return BOOLEAN
        return self.domains[ref]

    def domain_of(self, term: Term, env: dict | None = None):
        return domain_of(term, self, env)


def _interval(op, a: IntRange, b: IntRange) -> IntRange:
    if op == "+":
        return IntRange(a.lo + b.lo, a.hi + b.hi)
    if op == "-":
        return IntRange(a.lo - b.hi, a.hi - b.lo)
    corners = [a.lo * b.lo, a.lo * b.hi, a.hi * b.lo, a.hi * b.hi]
    return IntRange(min(corners), max(corners))


class _Infer:
    """Term typing.  ``report`` receives diagnostics; when it is None the
    first problem raises :class:`TypeCheckError`."""

    def __init__(self, sig: Signature, report=None, self_domain=None):
        self.sig = sig
        self.report = report

    def error(self, category, message, node):
        d = TypeDiagnostic(category, message, getattr(node, "span", None))
        if self.report is None:
            raise TypeCheckError([d])
        self.report(d)
        return ANY

    def resolve(self, ref, node):
        try:
            dom = self.sig.resolve(ref)
        except KeyError:
            if ref in UNBOUNDED_DOMAINS:
                return self.error("non-finite enumeration",
                                  f"domain {ref} is not finite", node)
            return self.error("unresolved name", f"unknown domain {ref}", node)
        if isinstance(dom, IntRange) and dom.lo > dom.hi:
            return self.error("domain mismatch", f"empty range {domain_label(dom)}", node)
        return dom

    def boolean(self, t, env, what="guard"):
        d = self.term(t, env)
        if d is not ANY and not isinstance(d, BooleanDomain):
            self.error("inconsistent guard type",
                       f"{what} has domain {domain_label(d)}, expected Boolean", t)
        return d

    def term(self, t: Term, env: dict):
        if isinstance(t, BoolLit):
            return BOOLEAN
        if isinstance(t, IntLit):
            return IntRange(t.value, t.value)
        if isinstance(t, UndefLit):
            return ANY
        if isinstance(t, EnumLit):
            d = self.sig.constants.get(t.name)
            if d is None:
                return self.error("unresolved name", f"unknown constant {t.name}", t)
            return d
        if isinstance(t, Var):
            if t.name not in env:
                if t.name == "self":
                    return self.error("unresolved name",
                                      "self is only allowed inside an agent program", t)
                return self.error("unresolved name", f"unbound variable ${t.name}", t)
            return env[t.name]
        if isinstance(t, Apply):
            f = self.sig.functions.get(t.func)
            if f is None:
                for a in t.args:
                    self.term(a, env)
                return self.error("unresolved name", f"unknown function {t.func}", t)
            if len(t.args) != f.arity:
                return self.error("arity mismatch",
                                  f"{t.func} takes {f.arity} argument(s), got {len(t.args)}", t)
            for a, p in zip(t.args, f.params):
                ad = self.term(a, env)
                pd = self.resolve(p, t)
                if not compatible(ad, pd):
                    self.error("domain mismatch",
                               f"argument of {t.func} has domain {domain_label(ad)}, "
                               f"expected {domain_label(pd)}", a)
            return self.resolve(f.result, t)
        if isinstance(t, IsDef):
            self.term(t.arg, env)
            return BOOLEAN
        if isinstance(t, ChooseOne):
            d = self.resolve(t.domain, t)
            inner = dict(env)
            inner[t.var] = d
            self.boolean(t.guard, inner)
            return self.term(t.result, inner)
        if isinstance(t, Builtin):
            if t.op in LOGICAL_OPS:
                for a in t.args:
                    self.boolean(a, env, f"operand of {t.op}")
                return BOOLEAN
            ds = [self.term(a, env) for a in t.args]
            if t.op in ("=", "!="):
                if not compatible(ds[0], ds[1]):
                    self.error("domain mismatch",
                               f"cannot compare {domain_label(ds[0])} with {domain_label(ds[1])}", t)
                return BOOLEAN
            for a, d in zip(t.args, ds):
                if d is not ANY and not isinstance(d, IntRange):
                    self.error("domain mismatch",
                               f"operand of {t.op} has domain {domain_label(d)}, expected integers", a)
                    return BOOLEAN if t.op not in ARITH_OPS else ANY
            if t.op not in ARITH_OPS:
                return BOOLEAN
            if ANY in ds:
                return ANY
            return _interval(t.op, ds[0], ds[1])
        return self.error("domain mismatch", f"unknown term {type(t).__name__}", t)


def domain_of(term: Term, context, env: dict | None = None):
    """Inferred domain of ``term``.

    ``context`` is a :class:`TypedModel` or :class:`Signature`; ``env`` maps
    bound variable names to their domains.  Arithmetic yields the smallest
    range covering every combination of operand values.
    """
    sig = context.sig if isinstance(context, TypedModel) else context
    return _Infer(sig).term(term, env or {})


@dataclass
class TypedModel:
    model: Model
    sig: Signature
    warnings: list[str] = field(default_factory=list)

    def domain_of(self, term: Term, env: dict | None = None):
        return domain_of(term, self.sig, env)

    def resolve(self, ref):
        return self.sig.resolve(ref)


class _Checker:
    def __init__(self, model: Model):
        self.model = model
        self.sig = Signature(model)
        self.errors: list[TypeDiagnostic] = []
        self.warnings: list[str] = []
        self.infer = _Infer(self.sig, self.errors.append)

    def error(self, category, message, node):
        self.infer.error(category, message, node)

    def run(self):
        self.domains()
        self.functions()
        for m in self.model.macros:
            self.macro(m)
        self.agents()
        for inv in self.model.invariants:
            self.infer.boolean(inv.term, {}, f"invariant {inv.name}")
        self.rule(self.model.main.body, {})
        self.inits()

    def domains(self):
        owner: dict[str, str] = {}
        for d in self.model.domains:
            if isinstance(d, IntRange):
                if d.lo > d.hi:
                    self.error("domain mismatch", f"domain {d.name} = [{d.lo}..{d.hi}] is empty", d)
                elif d.hi - d.lo + 1 > MAX_ENUMERATION:
                    self.error("non-finite enumeration", f"domain {d.name} is too large to enumerate", d)
                continue
            elems = d.values()
            if len(set(elems)) != len(elems):
                self.error("domain mismatch", f"duplicate element in domain {d.name}", d)
            for e in elems:
                if e in owner and owner[e] != d.name:
                    self.error("domain mismatch",
                               f"constant {e} declared in both {owner[e]} and {d.name}", d)
                owner.setdefault(e, d.name)
            if d.name in ("Boolean",) or d.name in UNBOUNDED_DOMAINS:
                self.error("domain mismatch", f"domain name {d.name} is reserved", d)

    def functions(self):
        for f in self.model.functions:
            params = [self.infer.resolve(p, f) for p in f.params]
            result = self.infer.resolve(f.result, f)
            defined = f.definition is not None or f.table is not None
            if f.kind in ("controlled", "monitored") and defined:
                self.error("partial initialization",
                           f"{f.kind} function {f.name} cannot carry a definition", f)
                continue
            if f.kind == "derived" and f.definition is None:
                self.error("partial initialization", f"derived function {f.name} has no definition", f)
                continue
            if f.kind == "static" and not defined:
                self.error("partial initialization", f"static function {f.name} has no definition", f)
                continue
            if f.definition is not None:
                names = f.param_names or ()
                if len(set(names)) != len(names):
                    self.error("domain mismatch", f"repeated parameter name in {f.name}", f)
                env = dict(zip(names, params))
                d = self.infer.term(f.definition, env)
                if not compatible(d, result):
                    self.error("domain mismatch",
                               f"definition of {f.name} has domain {domain_label(d)}, "
                               f"expected {domain_label(result)}", f)
                if f.kind == "static":
                    for sub in walk_terms(f.definition):
                        if isinstance(sub, Apply):
                            g = self.sig.functions.get(sub.func)
                            if g is not None and g.kind != "static":
                                self.error("partial initialization",
                                           f"static function {f.name} reads {g.kind} {g.name}", sub)
            if f.table is not None:
                if any(p is ANY for p in params):
                    continue
                seen = set()
                for key, val in f.table:
                    if len(key) != f.arity:
                        self.error("arity mismatch", f"table entry of {f.name} has {len(key)} key(s)", f)
                        continue
                    kv = []
                    for k, p in zip(key, params):
                        kd = self.infer.term(k, {})
                        v = literal_value(k)
                        if not compatible(kd, p) or v not in p.values():
                            self.error("domain mismatch",
                                       f"table key {v!r} of {f.name} outside {domain_label(p)}", f)
                        kv.append(v)
                    vd = self.infer.term(val, {})
                    if not compatible(vd, result):
                        self.error("domain mismatch", f"table value of {f.name} outside its result domain", f)
                    seen.add(tuple(kv))
                total = 1
                for p in params:
                    total *= cardinality(p)
                missing = total - len({k for k in seen if all(
                    v in p.values() for v, p in zip(k, params))})
                if missing:
                    self.error("partial initialization",
                               f"static table of {f.name} misses {missing} argument tuple(s)", f)

    def macro(self, m):
        env = {}
        for b in m.params:
            if b.var in env:
                self.error("domain mismatch", f"repeated parameter ${b.var} in rule {m.name}", b)
            env[b.var] = self.infer.resolve(b.domain, b)
        agent_dom = self.sig.program_macros.get(m.name)
        if agent_dom is not None:
            d = self.sig.domains.get(agent_dom)
            if isinstance(d, AgentDomain):
                env["self"] = d
        self.rule(m.body, env)

    def agents(self):
        for a in self.model.agents:
            d = self.sig.domains.get(a.domain)
            if not isinstance(d, AgentDomain):
                self.error("unresolved name", f"{a.domain} is not an agent domain", a)
            m = self.sig.macros.get(a.rule)
            if m is None:
                self.error("unresolved name", f"unknown program rule {a.rule}", a)
            elif m.params:
                self.error("arity mismatch", f"agent program {a.rule} must take no parameters", a)

    def binders(self, binders, env, node):
        inner = dict(env)
        names = set()
        for b in binders:
            if b.var in names:
                self.error("domain mismatch", f"variable ${b.var} bound twice", node)
            names.add(b.var)
            inner[b.var] = self.infer.resolve(b.domain, b)
        return inner

    def rule(self, r, env):
        inf = self.infer
        if isinstance(r, Update):
            f = self.sig.functions.get(r.loc.func)
            loc_d = inf.term(r.loc, env)
            if f is None:
                inf.term(r.value, env)
                return
            if f.kind != "controlled":
                self.error("update to non-controlled", f"cannot update {f.kind} function {f.name}", r)
            vd = inf.term(r.value, env)
            if not compatible(vd, loc_d):
                self.error("domain mismatch",
                           f"value of domain {domain_label(vd)} assigned to {f.name} "
                           f"of domain {domain_label(loc_d)}", r)
        elif isinstance(r, Par):
            for c in r.rules:
                self.rule(c, env)
        elif isinstance(r, Cond):
            inf.boolean(r.guard, env)
            self.rule(r.then, env)
            if r.otherwise is not None:
                self.rule(r.otherwise, env)
        elif isinstance(r, Forall):
            inner = self.binders(r.binders, env, r)
            inf.boolean(r.guard, inner)
            self.rule(r.body, inner)
        elif isinstance(r, Choose):
            inner = self.binders([_B(r.var, r.domain, r.span)], env, r)
            inf.boolean(r.guard, inner)
            self.rule(r.body, inner)
            if r.ifnone is not None:
                self.rule(r.ifnone, env)
        elif isinstance(r, Let):
            inner = dict(env)
            names = set()
            for v, t in r.bindings:
                if v in names:
                    self.error("domain mismatch", f"variable ${v} bound twice", r)
                names.add(v)
                inner[v] = inf.term(t, env)
            self.rule(r.body, inner)
        elif isinstance(r, Case):
            sd = inf.term(r.scrutinee, env)
            lits = []
            for t, c in r.cases:
                cd = inf.term(t, env)
                if not compatible(sd, cd):
                    self.error("domain mismatch",
                               f"case term of domain {domain_label(cd)} against {domain_label(sd)}", t)
                if isinstance(t, (BoolLit, IntLit, EnumLit)):
                    if t in lits:
                        self.warnings.append(f"{t.span or ''}: duplicate case term; all matching branches fire")
                    lits.append(t)
                self.rule(c, env)
            if r.otherwise is not None:
                self.rule(r.otherwise, env)
        elif isinstance(r, MacroCall):
            m = self.sig.macros.get(r.name)
            if m is None:
                self.error("unresolved name", f"unknown rule {r.name}", r)
                return
            if r.name in self.sig.program_macros:
                self.error("unresolved name", f"agent program {r.name} must be invoked with program(...)", r)
            if len(r.args) != len(m.params):
                self.error("arity mismatch",
                           f"rule {r.name} takes {len(m.params)} argument(s), got {len(r.args)}", r)
                return
            for a, b in zip(r.args, m.params):
                ad = inf.term(a, env)
                if not compatible(ad, inf.resolve(b.domain, b)):
                    self.error("domain mismatch", f"argument ${b.var} of {r.name} has domain "
                               f"{domain_label(ad)}", a)
        elif isinstance(r, ProgramCall):
            d = inf.term(r.agent, env)
            if d is ANY:
                return
            if not isinstance(d, AgentDomain):
                self.error("domain mismatch", f"program() needs an agent, got {domain_label(d)}", r)
            elif d.name not in self.sig.programs:
                self.error("unresolved name", f"no program declared for agents of {d.name}", r)
        elif isinstance(r, Skip):
            pass
        else:
            self.error("domain mismatch", f"unknown rule {type(r).__name__}", r)

    def inits(self):
        covered: dict[str, set] = {}
        for i in self.model.inits:
            f = self.sig.functions.get(i.func)
            if f is None:
                self.error("unresolved name", f"unknown function {i.func}", i)
                continue
            if f.kind != "controlled":
                self.error("update to non-controlled", f"cannot initialize {f.kind} function {f.name}", i)
                continue
            if len(i.args) != f.arity:
                self.error("arity mismatch", f"{f.name} takes {f.arity} argument(s)", i)
                continue
            env = self.binders(i.binders, {}, i)
            params = [self.infer.resolve(p, i) for p in f.params]
            result = self.infer.resolve(f.result, i)
            vd = self.infer.term(i.value, env)
            if not compatible(vd, result):
                self.error("domain mismatch", f"initial value of {f.name} outside its domain", i)
            for sub in walk_terms(i.value):
                if isinstance(sub, Apply):
                    g = self.sig.functions.get(sub.func)
                    if g is not None and g.kind != "static":
                        self.error("partial initialization",
                                   f"initial value of {f.name} reads {g.kind} function {g.name}", sub)
            if any(p is ANY for p in params):
                continue
            locs = covered.setdefault(f.name, set())
            if i.binders:
                bdoms = [env[b.var] for b in i.binders]
                pos = []
                for a in i.args:
                    if not isinstance(a, Var) or a.name not in env:
                        self.error("partial initialization", f"init of {f.name} mixes binders and terms", i)
                        break
                    pos.append([b.var for b in i.binders].index(a.name))
                else:
                    if any(d is ANY for d in bdoms):
                        continue
                    for combo in itertools.product(*(d.values() for d in bdoms)):
                        locs.add(tuple(combo[p] for p in pos))
            else:
                vals = []
                for a, p in zip(i.args, params):
                    ad = self.infer.term(a, {})
                    if not isinstance(a, (BoolLit, IntLit, EnumLit)) or not compatible(ad, p) \
                            or literal_value(a) not in p.values():
                        self.error("partial initialization",
                                   f"init of {f.name} needs literal arguments in its parameter domains", a)
                        break
                    vals.append(literal_value(a))
                else:
                    locs.add(tuple(vals))
        for f in self.model.functions:
            if f.kind != "controlled":
                continue
            params = [self.sig.domains.get(p) if isinstance(p, str) and p != "Boolean"
                      else (BOOLEAN if p == "Boolean" else p) for p in f.params]
            if any(p is None or isinstance(p, IntRange) and p.lo > p.hi for p in params):
                continue
            need = 1
            for p in params:
                need *= cardinality(p)
            have = covered.get(f.name, set())
            valid = {k for k in have if all(_member(v, p) for v, p in zip(k, params))}
            if len(valid) < need:
                self.error("partial initialization",
                           f"controlled function {f.name}: {need - len(valid)} of {need} "
                           f"location(s) not initialized", f)


def _member(v, dom) -> bool:
    if isinstance(dom, IntRange):
        return v in dom
    if isinstance(dom, BooleanDomain):
        return isinstance(v, bool)
    return v in dom.values()


@dataclass(frozen=True)
class _B:
    var: str
    domain: object
    span: object = None


def check(model: Model) -> TypedModel:
    """Typecheck a parsed model.  Raises :class:`TypeCheckError` with every error."""
    c = _Checker(model)
    c.run()
    if c.errors:
        raise TypeCheckError(c.errors)
    return TypedModel(model, c.sig, c.warnings)
