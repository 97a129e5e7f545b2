"""The seven flattening transformations.

Every pass maps a :class:`~asmflat.core.Model` to ``(model, count)``.  When the
model still has macros (MCR not run yet) the passes rewrite macro bodies as
well as the main rule.
"""

from __future__ import annotations

import itertools
from dataclasses import replace

from ..core import (
    RESERVED_PREFIX, TRUE, AgentDomain, Apply, BooleanDomain, Builtin, Case, Choose, ChooseOne,
    Cond, EnumLit, Forall, FunctionDecl, IntRange, IsDef, Let, MacroCall, Model, Par,
    ProgramCall, Skip, Update, Var, conj, conj_all, free_variables, identifiers, is_literal,
    literal, max_nesting, neg, substitute, walk_terms,
)
from ..typecheck import Signature, domain_of


class FlattenError(Exception):
    pass


class Fresh:
    """Model-global supply of reserved names."""

    def __init__(self, model: Model):
        self.used = identifiers(model)

    def __call__(self, base: str = "") -> str:
        i = 1
        while f"{RESERVED_PREFIX}{base}{i}" in self.used:
            i += 1
        name = f"{RESERVED_PREFIX}{base}{i}"
        self.used.add(name)
        return name


def _as_model(model) -> Model:
    return getattr(model, "model", model)


def domain_ref(dom, sig: Signature):
    """A declaration-level reference for a resolved domain."""
    if isinstance(dom, BooleanDomain):
        return "Boolean"
    if isinstance(dom, IntRange):
        if dom.name and dom.name in sig.domains:
            return dom.name
        return IntRange(dom.lo, dom.hi)
    return dom.name


def _macro_env(m, sig: Signature) -> dict:
    env = {b.var: sig.resolve(b.domain) for b in m.params}
    if m.name in sig.program_macros:
        env["self"] = sig.resolve(sig.program_macros[m.name])
    return env


def _map_bodies(model: Model, fn) -> Model:
    """Rewrite each macro body and the main body with ``fn(body, env)``."""
    sig = Signature(model)
    macros = tuple(replace(m, body=fn(m.body, _macro_env(m, sig))) for m in model.macros)
    main = replace(model.main, body=fn(model.main.body, {}))
    return replace(model, macros=macros, main=main)


def _rebuild(r, fn, env):
    """Apply ``fn(child, env)`` to the sub-rules of a Par, Cond or Case."""
    if isinstance(r, Par):
        return replace(r, rules=tuple(fn(c, env) for c in r.rules))
    if isinstance(r, Cond):
        return replace(r, then=fn(r.then, env),
                       otherwise=None if r.otherwise is None else fn(r.otherwise, env))
    if isinstance(r, Case):
        return replace(r, cases=tuple((t, fn(c, env)) for t, c in r.cases),
                       otherwise=None if r.otherwise is None else fn(r.otherwise, env))
    return r


def _descend(r, fn, sig: Signature, env: dict):
    """Recurse into every sub-rule, extending ``env`` under binders."""
    if isinstance(r, Forall):
        inner = dict(env)
        for b in r.binders:
            inner[b.var] = sig.resolve(b.domain)
        return replace(r, body=fn(r.body, inner))
    if isinstance(r, Choose):
        inner = dict(env)
        inner[r.var] = sig.resolve(r.domain)
        return replace(r, body=fn(r.body, inner),
                       ifnone=None if r.ifnone is None else fn(r.ifnone, env))
    if isinstance(r, Let):
        inner = dict(env)
        for v, t in r.bindings:
            inner[v] = domain_of(t, sig, env)
        return replace(r, body=fn(r.body, inner))
    return _rebuild(r, fn, env)


# ---------------------------------------------------------------------------
# MCR


def mcr(model) -> tuple[Model, int]:
    """Inline every macro call and agent program; drop the declarations."""
    model = _as_model(model)
    if not model.macros and not model.agents:
        return model, 0
    sig = Signature(model)
    done: dict[str, object] = {}
    count = 0

    def expand(name, stack):
        if name in done:
            return done[name]
        if name in stack:
            raise FlattenError(f"recursive macro {' -> '.join(stack + (name,))}")
        m = sig.macros[name]
        body = visit(m.body, _macro_env(m, sig), stack + (name,))
        done[name] = body
        return body

    def visit(r, env, stack):
        nonlocal count
        if isinstance(r, MacroCall):
            m = sig.macros.get(r.name)
            if m is None:
                raise FlattenError(f"call of undeclared rule {r.name}")
            body = expand(r.name, stack)
            count += 1
            return substitute(body, {b.var: a for b, a in zip(m.params, r.args)})
        if isinstance(r, ProgramCall):
            dom = domain_of(r.agent, sig, env)
            if not isinstance(dom, AgentDomain) or dom.name not in sig.programs:
                raise FlattenError("program() of a term without an agent program")
            body = expand(sig.programs[dom.name], stack)
            count += 1
            return substitute(body, {"self": r.agent})
        return _descend(r, lambda c, e: visit(c, e, stack), sig, env)

    for m in model.macros:
        expand(m.name, ())
    main = replace(model.main, body=visit(model.main.body, {}, (model.main.name,)))
    return replace(model, macros=(), agents=(), main=main), count


# ---------------------------------------------------------------------------
# FR


def fr(model) -> tuple[Model, int]:
    """Replace each forall by a parallel of else-free conditionals, one per tuple."""
    model = _as_model(model)
    sig = Signature(model)
    count = 0

    def visit(r, env):
        nonlocal count
        if isinstance(r, Forall):
            count += 1
            names = [b.var for b in r.binders]
            doms = [sig.resolve(b.domain).values() for b in r.binders]
            branches = []
            for combo in itertools.product(*doms):
                s = {n: literal(v) for n, v in zip(names, combo)}
                branches.append(Cond(substitute(r.guard, s), visit(substitute(r.body, s), env)))
            return Par(tuple(branches), span=r.span)
        return _descend(r, visit, sig, env)

    out = _map_bodies(model, visit)
    return (out if count else model), count


# ---------------------------------------------------------------------------
# ChR


def chr_(model) -> tuple[Model, int]:
    """Move each choose into a fresh derived ``chooseone`` function."""
    model = _as_model(model)
    sig = Signature(model)
    fresh = Fresh(model)
    new_funcs: list[FunctionDecl] = []
    made: dict = {}
    count = 0

    def visit(r, env):
        nonlocal count
        if isinstance(r, Choose):
            count += 1
            fv = free_variables(r.guard) - {r.var}
            params = [v for v in env if v in fv]
            names = [("flat_self" if p == "self" else p) for p in params]
            guard = r.guard
            if "self" in params:
                guard = substitute(guard, {"self": Var("flat_self")})
            decl = (tuple(domain_ref(env[p], sig) for p in params), r.domain, tuple(names),
                    ChooseOne(r.var, r.domain, guard, Var(r.var)))
            # Identical choices (e.g. copies made by FR) share one function.
            name = made.get(decl)
            if name is None:
                name = made[decl] = fresh("choose")
                fd = FunctionDecl(name, "derived", decl[0], decl[1],
                                  param_names=decl[2], definition=decl[3])
                new_funcs.append(fd)
                sig.functions[name] = fd
            fc = Apply(name, tuple(Var(p) for p in params))
            then = visit(substitute(r.body, {r.var: fc}), env)
            other = None if r.ifnone is None else visit(r.ifnone, env)
            return Cond(IsDef(fc), then, other, span=r.span)
        return _descend(r, visit, sig, env)

    out = _map_bodies(model, visit)
    if not count:
        return model, 0
    return replace(out, functions=out.functions + tuple(new_funcs)), count


# ---------------------------------------------------------------------------
# AR


def _owned_terms(r):
    """(terms owned by ``r``, variables bound over them by ``r`` itself)."""
    if isinstance(r, Update):
        return (r.loc, r.value), frozenset()
    if isinstance(r, Cond):
        return (r.guard,), frozenset()
    if isinstance(r, Forall):
        return (r.guard,), frozenset(b.var for b in r.binders)
    if isinstance(r, Choose):
        return (r.guard,), frozenset((r.var,))
    if isinstance(r, Let):
        return tuple(t for _, t in r.bindings), frozenset()
    if isinstance(r, Case):
        return (r.scrutinee,) + tuple(t for t, _ in r.cases), frozenset()
    if isinstance(r, MacroCall):
        return r.args, frozenset()
    if isinstance(r, ProgramCall):
        return (r.agent,), frozenset()
    return (), frozenset()


def _exempt(t, sig: Signature) -> bool:
    if is_literal(t) or isinstance(t, Var):
        return True
    if isinstance(t, Apply):
        f = sig.functions.get(t.func)
        return f is not None and f.kind == "static" and all(is_literal(a) for a in t.args)
    return False


def _dynamic_args(terms, bound, sig: Signature) -> list:
    """Non-exempt arguments of dynamic applications, in first-occurrence order."""
    found = []

    def visit(t):
        if isinstance(t, ChooseOne):
            return
        if isinstance(t, Apply):
            f = sig.functions.get(t.func)
            if f is not None and f.dynamic:
                for a in t.args:
                    if not _exempt(a, sig) and not (free_variables(a) & bound) and a not in found:
                        found.append(a)
        for c in (t.args if isinstance(t, (Apply, Builtin)) else
                  (t.arg,) if isinstance(t, IsDef) else ()):
            visit(c)

    for t in terms:
        visit(t)
    return found


def _replace_subterms(t, table: dict):
    """Replace argument occurrences of dynamic applications per ``table``."""
    if isinstance(t, ChooseOne):
        return t
    if isinstance(t, Apply):
        if not t.args:
            return t
        return replace(t, args=tuple(table[a] if a in table else _replace_subterms(a, table)
                                     for a in t.args))
    if isinstance(t, Builtin):
        return replace(t, args=tuple(_replace_subterms(a, table) for a in t.args))
    if isinstance(t, IsDef):
        return replace(t, arg=_replace_subterms(t.arg, table))
    return t


def _with_owned(r, fn):
    if isinstance(r, Update):
        return replace(r, loc=fn(r.loc), value=fn(r.value))
    if isinstance(r, (Cond, Forall, Choose)):
        return replace(r, guard=fn(r.guard))
    if isinstance(r, Let):
        return replace(r, bindings=tuple((v, fn(t)) for v, t in r.bindings))
    if isinstance(r, Case):
        return replace(r, scrutinee=fn(r.scrutinee),
                       cases=tuple((fn(t), c) for t, c in r.cases))
    if isinstance(r, MacroCall):
        return replace(r, args=tuple(fn(a) for a in r.args))
    if isinstance(r, ProgramCall):
        return replace(r, agent=fn(r.agent))
    return r


def ar(model) -> tuple[Model, int]:
    """Bind non-literal arguments of controlled/monitored applications to lets."""
    model = _as_model(model)
    sig = Signature(model)
    fresh = Fresh(model)
    count = 0

    def wrap(r):
        nonlocal count
        terms, bound = _owned_terms(r)
        args = _dynamic_args(terms, bound, sig)
        if not args:
            return r
        count += 1
        table = {a: Var(fresh()) for a in args}
        inner = _with_owned(r, lambda t: _replace_subterms(t, table))
        outer = Let(tuple((table[a].name, a) for a in args), inner, span=r.span)
        return wrap(outer)

    def visit(r, env):
        return wrap(_descend(r, visit, sig, env))

    out = _map_bodies(model, visit)
    return (out if count else model), count


# ---------------------------------------------------------------------------
# LR


def lr(model) -> tuple[Model, int]:
    """Expand each let into one guarded branch per value tuple of its bound terms."""
    model = _as_model(model)
    sig = Signature(model)
    count = 0

    def visit(r, env):
        nonlocal count
        if isinstance(r, Let):
            count += 1
            names = [v for v, _ in r.bindings]
            terms = [t for _, t in r.bindings]
            doms = []
            for t in terms:
                d = domain_of(t, sig, env)
                if not hasattr(d, "values") or not d.values():
                    raise FlattenError(f"cannot enumerate the domain of a let-bound term")
                doms.append(d.values())
            branches = []
            for combo in itertools.product(*doms):
                lits = [literal(v) for v in combo]
                guard = conj_all(Builtin("=", (t, lit)) for t, lit in zip(terms, lits))
                body = substitute(r.body, dict(zip(names, lits)))
                branches.append(Cond(guard, visit(body, env)))
            return Par(tuple(branches), span=r.span)
        return _descend(r, visit, sig, env)

    out = _map_bodies(model, visit)
    return (out if count else model), count


# ---------------------------------------------------------------------------
# CaR


def car(model) -> tuple[Model, int]:
    """Replace each switch by a parallel of equality-guarded conditionals."""
    model = _as_model(model)
    sig = Signature(model)
    count = 0

    def visit(r, env):
        nonlocal count
        r = _descend(r, visit, sig, env)
        if not isinstance(r, Case):
            return r
        count += 1
        s = r.scrutinee
        branches = [Cond(Builtin("=", (s, t)), c) for t, c in r.cases]
        if r.otherwise is not None:
            g = conj_all(Builtin("!=", (s, t)) for t, _ in r.cases)
            branches.append(Cond(g, r.otherwise))
        return Par(tuple(branches), span=r.span)

    out = _map_bodies(model, visit)
    return (out if count else model), count


# ---------------------------------------------------------------------------
# NR


def _items(r, guard, out: list):
    if isinstance(r, Par):
        for c in r.rules:
            _items(c, guard, out)
    elif isinstance(r, Cond):
        _items(r.then, conj(guard, r.guard), out)
        if r.otherwise is not None:
            _items(r.otherwise, conj(guard, neg(r.guard)), out)
    elif isinstance(r, Skip):
        pass
    else:
        out.append((guard, r))


def normalize(r) -> Par:
    """Unfold conditionals and parallels into a flat parallel of guarded updates.

    Items with equal guards are merged into one conditional.
    """
    items: list = []
    _items(r, TRUE, items)
    groups: dict = {}
    for g, u in items:
        groups.setdefault(g, []).append(u)
    out = []
    for g, us in groups.items():
        if g == TRUE:
            out.extend(us)
        else:
            out.append(Cond(g, us[0] if len(us) == 1 else Par(tuple(us))))
    return Par(tuple(out))


def nr(model) -> tuple[Model, int]:
    """Normalize nesting; the count is the reduction in maximum nesting depth."""
    model = _as_model(model)
    before = max_nesting(model)
    macros = tuple(replace(m, body=normalize(m.body)) for m in model.macros)
    main = replace(model.main, body=normalize(model.main.body))
    out = replace(model, macros=macros, main=main)
    if out == model:
        return model, 0
    return out, max(0, before - max_nesting(out))
