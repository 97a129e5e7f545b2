"""Type-directed random model generator and a divergence shrinker."""

from __future__ import annotations

import random
from dataclasses import dataclass, field, replace

from ..core import (
    BOOLEAN, SKIP, AgentDecl, AgentDomain, Apply, Binder, BoolLit, BooleanDomain, Builtin, Case,
    Choose, Cond, EnumDomain, EnumLit, Forall, FunctionDecl, Init, IntLit, IntRange, Invariant, IsDef,
    Let, MacroCall, MacroDecl, Model, Par, ProgramCall, Skip, Update, Var, literal, rule_children,
)
from ..typecheck import TypeCheckError, check

RULE_KINDS = ("update", "par", "cond", "forall", "choose", "let", "case", "call", "skip")


def default_weights() -> dict:
    return {"update": 4, "par": 2, "cond": 2, "forall": 1, "choose": 1, "let": 1,
            "case": 1, "call": 1, "skip": 1}


@dataclass(frozen=True)
class GenConfig:
    seed: int = 0
    max_depth: int = 4
    max_domains: int = 3
    max_functions: int = 5
    max_macros: int = 3
    max_card: int = 4
    agents: bool = True
    invariants: bool = True
    weights: dict = field(default_factory=default_weights)

    def __post_init__(self):
        for name in ("max_depth", "max_domains", "max_functions", "max_macros", "max_card"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")


def _ref(d):
    if isinstance(d, BooleanDomain):
        return "Boolean"
    return d.name


class _Gen:
    def __init__(self, cfg: GenConfig):
        self.cfg = cfg
        self.rng = random.Random(cfg.seed)
        self.domains: list = []
        self.funcs: list[FunctionDecl] = []
        self.macros: list[MacroDecl] = []
        self.n_vars = 0

    # -- signature ---------------------------------------------------------

    def signature(self):
        rng, cfg = self.rng, self.cfg
        for i in range(rng.randint(1, cfg.max_domains)):
            card = rng.randint(2, max(2, cfg.max_card))
            if rng.random() < 0.5:
                self.domains.append(EnumDomain(f"E{i}", tuple(f"V{i}x{j}" for j in range(card))))
            else:
                lo = rng.randint(-1, 1)
                self.domains.append(IntRange(lo, lo + card - 1, name=f"R{i}"))
        self.agent_dom = None
        if cfg.agents and rng.random() < 0.3:
            self.agent_dom = AgentDomain("Ag", ("A0", "A1"))
        n = rng.randint(1, cfg.max_functions)
        kinds = ["controlled"] + [rng.choice(("controlled", "controlled", "monitored", "static", "derived"))
                                  for _ in range(n - 1)]
        for i, kind in enumerate(kinds):
            arity = rng.choice((0, 0, 1, 1, 2)) if kind != "derived" else rng.choice((0, 1))
            params = tuple(self.any_domain() for _ in range(arity))
            result = self.any_domain()
            name = f"{kind[0]}{i}"
            if kind == "static" and not params:
                self.funcs.append(FunctionDecl(name, kind, (), _ref(result), param_names=(),
                                               definition=self.lit(result)))
            elif kind == "static":
                table = tuple((tuple(literal(v) for v in key), literal(rng.choice(result.values())))
                              for key in _product(params))
                self.funcs.append(FunctionDecl(name, kind, tuple(_ref(p) for p in params), _ref(result),
                                               table=table))
            elif kind == "derived":
                names = tuple(f"a{j}" for j in range(arity))
                env = dict(zip(names, params))
                self.funcs.append(None)  # placeholder keeps indices stable
                body = self.term(result, env, 2, allow_derived=False)
                self.funcs[-1] = FunctionDecl(name, kind, tuple(_ref(p) for p in params), _ref(result),
                                              param_names=names, definition=body)
            else:
                self.funcs.append(FunctionDecl(name, kind, tuple(_ref(p) for p in params), _ref(result)))
        if self.agent_dom is not None:
            self.funcs.append(FunctionDecl("ag", "controlled", ("Ag",), _ref(self.any_domain())))

    def any_domain(self):
        opts = self.domains + [BOOLEAN]
        return self.rng.choice(opts)

    def resolve(self, ref):
        if ref == "Boolean":
            return BOOLEAN
        if ref == "Ag":
            return self.agent_dom
        return next(d for d in self.domains if d.name == ref)

    # -- terms -------------------------------------------------------------

    def lit(self, dom):
        v = self.rng.choice(dom.values())
        return EnumLit(v) if isinstance(v, str) else literal(v)

    def term(self, dom, env, depth, allow_derived=True):
        rng = self.rng
        opts = ["lit"]
        vars_ = [v for v, d in env.items() if d == dom]
        if vars_:
            opts += ["var", "var"]
        funcs = [f for f in self.funcs if f is not None and self.resolve(f.result) == dom
                 and (allow_derived or f.kind not in ("derived",)) and f.name != "ag"]
        if depth > 0 and funcs:
            opts += ["app"] * 3
        if depth > 0 and isinstance(dom, BooleanDomain):
            opts += ["logic", "cmp", "cmp"]
        pick = rng.choice(opts)
        if pick == "lit":
            return self.lit(dom)
        if pick == "var":
            return Var(rng.choice(vars_))
        if pick == "app":
            f = rng.choice(funcs)
            return Apply(f.name, tuple(self.term(self.resolve(p), env, depth - 1, allow_derived)
                                       for p in f.params))
        if pick == "logic":
            op = rng.choice(("and", "or", "implies", "not"))
            if op == "not":
                return Builtin("not", (self.term(BOOLEAN, env, depth - 1, allow_derived),))
            return Builtin(op, (self.term(BOOLEAN, env, depth - 1, allow_derived),
                                self.term(BOOLEAN, env, depth - 1, allow_derived)))
        ints = [d for d in self.domains if isinstance(d, IntRange)]
        if ints and rng.random() < 0.5:
            d = rng.choice(ints)
            a = self.term(d, env, depth - 1, allow_derived)
            b = self.term(d, env, depth - 1, allow_derived)
            if rng.random() < 0.4:
                a = Builtin(rng.choice(("+", "-", "*")), (a, self.lit(d)))
            return Builtin(rng.choice(("<", "<=", ">", ">=", "=", "!=")), (a, b))
        d = self.any_domain()
        return Builtin(rng.choice(("=", "!=")), (self.term(d, env, depth - 1, allow_derived),
                                                 self.term(d, env, depth - 1, allow_derived)))

    def guard(self, env):
        return self.term(BOOLEAN, env, 2)

    # -- rules -------------------------------------------------------------

    def fresh_var(self):
        self.n_vars += 1
        return f"v{self.n_vars}"

    def controlled(self):
        return [f for f in self.funcs if f is not None and f.kind == "controlled" and f.name != "ag"]

    def update(self, env):
        f = self.rng.choice(self.controlled())
        args = tuple(self.term(self.resolve(p), env, 1) for p in f.params)
        return Update(Apply(f.name, args), self.term(self.resolve(f.result), env, 2))

    def rule(self, env, depth, callable_from: int):
        rng, w = self.rng, self.cfg.weights
        kinds = ["update", "skip"] if depth <= 0 else [k for k in RULE_KINDS if w.get(k, 0) > 0]
        if "call" in kinds and callable_from >= len(self.macros):
            kinds.remove("call")
        if depth <= 0:
            weights = [max(w.get("update", 1), 1), w.get("skip", 0)]
        else:
            weights = [w[k] for k in kinds]
        if not kinds or sum(weights) == 0:
            return self.update(env)
        kind = rng.choices(kinds, weights)[0]
        d = depth - 1
        if kind == "update":
            return self.update(env)
        if kind == "skip":
            return SKIP
        if kind == "par":
            return Par(tuple(self.rule(env, d, callable_from) for _ in range(rng.randint(2, 3))))
        if kind == "cond":
            other = self.rule(env, d, callable_from) if rng.random() < 0.5 else None
            return Cond(self.guard(env), self.rule(env, d, callable_from), other)
        if kind == "forall":
            binders = tuple(Binder(self.fresh_var(), _ref(self.any_domain()))
                            for _ in range(rng.choice((1, 1, 2))))
            inner = dict(env)
            inner.update({b.var: self.resolve(b.domain) for b in binders})
            return Forall(binders, self.guard(inner), self.rule(inner, d, callable_from))
        if kind == "choose":
            v, dom = self.fresh_var(), self.any_domain()
            inner = dict(env)
            inner[v] = dom
            ifnone = self.rule(env, d, callable_from) if rng.random() < 0.5 else None
            return Choose(v, _ref(dom), self.guard(inner), self.rule(inner, d, callable_from), ifnone)
        if kind == "let":
            inner = dict(env)
            binds = []
            for _ in range(rng.choice((1, 1, 2))):
                dom = self.any_domain()
                v = self.fresh_var()
                binds.append((v, self.term(dom, env, 2)))
                inner[v] = dom
            return Let(tuple(binds), self.rule(inner, d, callable_from))
        if kind == "case":
            dom = self.any_domain()
            cases = tuple((self.lit(dom), self.rule(env, d, callable_from))
                          for _ in range(rng.randint(1, 3)))
            other = self.rule(env, d, callable_from) if rng.random() < 0.5 else None
            return Case(self.term(dom, env, 1), cases, other)
        m = self.macros[rng.randrange(callable_from, len(self.macros))]
        return MacroCall(m.name, tuple(self.term(self.resolve(b.domain), env, 1) for b in m.params))

    def model(self) -> Model:
        rng, cfg = self.rng, self.cfg
        self.signature()
        n_macros = rng.randint(0, cfg.max_macros) if cfg.weights.get("call", 0) > 0 else 0
        # Build from the last macro backwards: macro i may only call macros j > i.
        specs = []
        for i in range(n_macros):
            params = tuple(Binder(f"p{j}", _ref(self.any_domain())) for j in range(rng.choice((0, 1, 2))))
            specs.append(MacroDecl(f"m{i}", params, SKIP))
        built = [None] * n_macros
        self.macros = specs
        for i in reversed(range(n_macros)):
            env = {b.var: self.resolve(b.domain) for b in specs[i].params}
            body = self.rule(env, cfg.max_depth - 1, i + 1)
            built[i] = replace(specs[i], body=body)
            self.macros = specs[:i] + built[i:]
        body = self.rule({}, cfg.max_depth, 0)
        agents = ()
        if self.agent_dom is not None:
            ag = next(f for f in self.funcs if f.name == "ag")
            env = {"self": self.agent_dom}
            prog_body = Par((
                Update(Apply("ag", (Var("self"),)), self.term(self.resolve(ag.result), env, 2)),
                self.rule(env, min(2, cfg.max_depth - 1), len(self.macros)),
            ))
            self.macros = self.macros + [MacroDecl("prog", (), prog_body)]
            agents = (AgentDecl("Ag", "prog"),)
        if self.agent_dom is not None:
            a = self.fresh_var()
            body = Par((body, Forall((Binder(a, "Ag"),), BoolLit(True), ProgramCall(Var(a)))))
        elif not isinstance(body, Par):
            body = Par((body, self.update({})))
        inits = []
        for f in self.funcs:
            if f is None or f.kind != "controlled":
                continue
            if f.params:
                bs = tuple(Binder(f"i{j}", p) for j, p in enumerate(f.params))
                inits.append(Init(f.name, bs, tuple(Var(b.var) for b in bs),
                                  self.lit(self.resolve(f.result))))
            else:
                inits.append(Init(f.name, (), (), self.lit(self.resolve(f.result))))
        invs = ()
        if cfg.invariants and rng.random() < 0.2:
            invs = (Invariant("inv0", self.term(BOOLEAN, {}, 2)),)
        domains = tuple(self.domains) + ((self.agent_dom,) if self.agent_dom else ())
        return Model(f"gen{cfg.seed}", domains, tuple(self.funcs), tuple(self.macros), agents, invs,
                     MacroDecl("r_main", (), body), tuple(inits))


def _product(params):
    import itertools

    return itertools.product(*(p.values() for p in params))


def gen_model(config: GenConfig | None = None, seed: int | None = None) -> Model:
    """A random well-typed model; identical configs give identical models."""
    cfg = config or GenConfig()
    if seed is not None:
        cfg = replace(cfg, seed=seed)
    return _Gen(cfg).model()


# ---------------------------------------------------------------------------
# Shrinking


def _rule_variants(r):
    """Smaller rules derived from ``r`` by one deletion."""
    if not isinstance(r, Skip):
        yield SKIP
    if isinstance(r, Par):
        for i in range(len(r.rules)):
            rest = r.rules[:i] + r.rules[i + 1:]
            yield Par(rest) if rest else SKIP
    for child in rule_children(r):
        yield child
    for i, child in enumerate(rule_children(r)):
        for v in _rule_variants(child):
            yield _replace_child(r, i, v)


def _replace_child(r, i, new):
    kids = list(rule_children(r))
    kids[i] = new
    if isinstance(r, Par):
        return replace(r, rules=tuple(kids))
    if isinstance(r, Cond):
        return replace(r, then=kids[0], otherwise=kids[1] if r.otherwise is not None else None)
    if isinstance(r, (Forall, Let)):
        return replace(r, body=kids[0])
    if isinstance(r, Choose):
        return replace(r, body=kids[0], ifnone=kids[1] if r.ifnone is not None else None)
    if isinstance(r, Case):
        n = len(r.cases)
        return replace(r, cases=tuple((t, k) for (t, _), k in zip(r.cases, kids[:n])),
                       otherwise=kids[n] if r.otherwise is not None else None)
    return r


def _size(model: Model) -> int:
    from ..core import count_rules

    return count_rules(model).total + len(model.macros)


def _candidates(model: Model):
    for i in range(len(model.macros)):
        yield replace(model, macros=model.macros[:i] + model.macros[i + 1:])
    for i, m in enumerate(model.macros):
        for v in _rule_variants(m.body):
            ms = list(model.macros)
            ms[i] = replace(m, body=v)
            yield replace(model, macros=tuple(ms))
    for v in _rule_variants(model.main.body):
        yield model.with_main_body(v)


def shrink(model: Model, still_fails, max_rounds: int = 200) -> Model:
    """Greedily delete Par children, sub-rules and macros while ``still_fails`` holds."""
    for _ in range(max_rounds):
        size = _size(model)
        for cand in _candidates(model):
            if _size(cand) >= size:
                continue
            try:
                check(cand)
            except TypeCheckError:
                continue
            try:
                if still_fails(cand):
                    model = cand
                    break
            except Exception:
                continue
        else:
            return model
    return model
