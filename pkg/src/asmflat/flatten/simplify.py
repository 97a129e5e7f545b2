"""Term simplifier (TS) and rule simplifier (RS)."""

from __future__ import annotations

from dataclasses import replace

from ..core import (
    FALSE, SKIP, TRUE, UNDEF, Apply, BoolLit, Builtin, ChooseOne, Cond, EnumLit, IntLit, IsDef,
    Model, Par, Skip, UndefLit, Var, is_literal, literal, literal_value, map_terms,
    rule_children, walk_terms,
)

_FOLD = {
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b,
    "*": lambda a, b: a * b,
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
}


def _same(a, b) -> bool:
    return type(a) is type(b) and a == b


def _pure(t) -> bool:
    return not any(isinstance(s, ChooseOne) for s in walk_terms(t))


class TermSimplifier:
    """Bottom-up constant folding; ``count`` tallies the rewrites performed.

    Static functions applied to in-domain literal arguments are folded when a
    model is supplied.
    """

    def __init__(self, model: Model | None = None):
        self.count = 0
        self.model = model
        self._static = None
        if model is not None:
            self._static = {f.name: f for f in model.functions if f.kind == "static"}
            self._eval = None

    def __call__(self, t):
        return self.term(t)

    def term(self, t):
        cls = type(t)
        if cls is Builtin:
            args = tuple(self.term(a) for a in t.args)
            if args != t.args:
                t = replace(t, args=args)
            return self.builtin(t)
        if cls is Apply:
            if t.args:
                args = tuple(self.term(a) for a in t.args)
                if args != t.args:
                    t = replace(t, args=args)
            return self.static(t)
        if cls is IsDef:
            arg = self.term(t.arg)
            if is_literal(arg):
                self.count += 1
                return BoolLit(not isinstance(arg, UndefLit))
            return t if arg is t.arg else replace(t, arg=arg)
        if cls is ChooseOne:
            g, r = self.term(t.guard), self.term(t.result)
            if g is t.guard and r is t.result:
                return t
            return replace(t, guard=g, result=r)
        return t

    def rewrite(self, new):
        self.count += 1
        return self.term(new) if isinstance(new, Builtin) else new

    def builtin(self, t: Builtin):
        op, args = t.op, t.args
        if op == "not":
            (a,) = args
            if isinstance(a, BoolLit):
                return self.rewrite(BoolLit(not a.value))
            if isinstance(a, UndefLit):
                return self.rewrite(a)
            if isinstance(a, Builtin) and a.op == "not":
                return self.rewrite(a.args[0])
            return t
        a, b = args
        if op == "and":
            if a == TRUE:
                return self.rewrite(b)
            if b == TRUE:
                return self.rewrite(a)
            if a == FALSE or b == FALSE:
                return self.rewrite(FALSE)
            return t
        if op == "or":
            if a == FALSE:
                return self.rewrite(b)
            if b == FALSE:
                return self.rewrite(a)
            if a == TRUE or b == TRUE:
                return self.rewrite(TRUE)
            return t
        if op == "implies":
            if a == TRUE:
                return self.rewrite(b)
            if a == FALSE or b == TRUE:
                return self.rewrite(TRUE)
            if b == FALSE:
                return self.rewrite(Builtin("not", (a,)))
            return t
        if op in ("=", "!="):
            if is_literal(a) and is_literal(b):
                eq = _same(literal_value(a), literal_value(b))
                return self.rewrite(BoolLit(eq if op == "=" else not eq))
            if a == b and _pure(a):
                return self.rewrite(BoolLit(op == "="))
            return t
        if is_literal(a) and is_literal(b):
            if isinstance(a, UndefLit) or isinstance(b, UndefLit):
                return self.rewrite(UndefLit())
            return self.rewrite(literal(_FOLD[op](a.value, b.value)))
        if op == "+":
            if b == IntLit(0):
                return self.rewrite(a)
            if a == IntLit(0):
                return self.rewrite(b)
        elif op == "-":
            if b == IntLit(0):
                return self.rewrite(a)
        elif op == "*":
            if b == IntLit(1):
                return self.rewrite(a)
            if a == IntLit(1):
                return self.rewrite(b)
        return t

    def static(self, t: Apply):
        if self._static is None or t.func not in self._static:
            return t
        if not all(is_literal(a) and not isinstance(a, UndefLit) for a in t.args):
            return t
        from ..interp import Evaluator, member
        from ..typecheck import check

        if self._eval is None:
            self._eval = Evaluator(check(self.model), {}, {})
        ev = self._eval
        args = tuple(literal_value(a) for a in t.args)
        if not ev.t.in_params(t.func, args):
            return t
        v = ev.apply(t.func, args)
        if v is UNDEF or not member(v, ev.t.results[t.func]):
            return t
        self.count += 1
        return literal(v)


def simplify_term(t, model: Model | None = None):
    """Simplify one term to its fixpoint; returns ``(term, rewrites)``."""
    s = TermSimplifier(model)
    return s.term(t), s.count


def _map_model_terms(model: Model, fn) -> Model:
    macros = tuple(replace(m, body=map_terms(m.body, fn)) for m in model.macros)
    main = replace(model.main, body=map_terms(model.main.body, fn))
    funcs = tuple(
        replace(f, definition=fn(f.definition)) if f.kind == "derived" and f.definition is not None else f
        for f in model.functions
    )
    return replace(model, macros=macros, main=main, functions=funcs)


def ts(model: Model) -> tuple[Model, int]:
    """Simplify every term of every rule and derived definition."""
    s = TermSimplifier(model)
    out = _map_model_terms(model, s.term)
    return (out if s.count else model), s.count


class RuleSimplifier:
    def __init__(self):
        self.count = 0

    def rule(self, r):
        cls = type(r)
        if cls is Cond:
            then = self.rule(r.then)
            other = None if r.otherwise is None else self.rule(r.otherwise)
            g = r.guard
            if g == TRUE:
                self.count += 1
                return then
            if g == FALSE:
                self.count += 1
                return SKIP if other is None else other
            if isinstance(other, Skip):
                self.count += 1
                other = None
            if isinstance(then, Skip):
                self.count += 1
                if other is None:
                    return SKIP
                return Cond(Builtin("not", (g,)), other, span=r.span)
            if then is r.then and other is r.otherwise:
                return r
            return replace(r, then=then, otherwise=other)
        if cls is Par:
            return self.par(r, top=False)
        kids = rule_children(r)
        if not kids:
            return r
        return _rebuild(r, [self.rule(c) for c in kids])

    def par(self, r: Par, top: bool):
        kids = [self.rule(c) for c in r.rules]
        kept = [c for c in kids if not isinstance(c, Skip)]
        self.count += len(kids) - len(kept)
        if not top:
            if not kept:
                self.count += 1
                return SKIP
            if len(kept) == 1:
                self.count += 1
                return kept[0]
        kept = tuple(kept)
        return r if kept == r.rules else replace(r, rules=kept)

    def top(self, r):
        """Main-body entry: a top-level Par keeps its Par shape."""
        return self.par(r, top=True) if isinstance(r, Par) else self.rule(r)


def _rebuild(r, kids):
    """Replace the sub-rules of ``r`` (in :func:`rule_children` order)."""
    from ..core import Case, Choose, Forall, Let

    if isinstance(r, (Forall, Let)):
        return r if kids[0] is r.body else replace(r, body=kids[0])
    if isinstance(r, Choose):
        ifnone = kids[1] if r.ifnone is not None else None
        if kids[0] is r.body and ifnone is r.ifnone:
            return r
        return replace(r, body=kids[0], ifnone=ifnone)
    if isinstance(r, Case):
        n = len(r.cases)
        cases = tuple((t, k) for (t, _), k in zip(r.cases, kids[:n]))
        other = kids[n] if r.otherwise is not None else None
        return replace(r, cases=cases, otherwise=other)
    raise TypeError(f"unexpected rule {r!r}")


def rs(model: Model) -> tuple[Model, int]:
    """Simplify rules of every macro body and the main rule."""
    s = RuleSimplifier()
    macros = tuple(replace(m, body=s.rule(m.body)) for m in model.macros)
    main = replace(model.main, body=s.top(model.main.body))
    if not s.count:
        return model, 0
    return replace(model, macros=macros, main=main), s.count


def simplify(model: Model) -> tuple[Model, int, int]:
    """Run TS then RS until neither rewrites anything."""
    total_ts = total_rs = 0
    while True:
        model, a = ts(model)
        model, b = rs(model)
        total_ts += a
        total_rs += b
        if not a and not b:
            return model, total_ts, total_rs
