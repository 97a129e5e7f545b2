"""Canonical pretty-printer.  ``parse(print_model(m)) == m`` for well-formed models."""

from __future__ import annotations

from .core import (
    AgentDomain, Apply, BoolLit, Builtin, Case, Choose, ChooseOne, Cond, EnumDomain, EnumLit,
    Forall, FunctionDecl, IntLit, IntRange, IsDef, Let, MacroCall, MacroDecl, Model, Par,
    ProgramCall, Skip, UndefLit, Update, Var,
)
from .parser import BINARY_LEVEL, NON_ASSOC, NOT_LEVEL

INDENT = "  "


def domain_ref(ref) -> str:
    if isinstance(ref, IntRange):
        return f"[{ref.lo}..{ref.hi}]"
    return ref


def var(name: str) -> str:
    return "self" if name == "self" else "$" + name


def term(t, level: int = 0) -> str:
    if isinstance(t, BoolLit):
        return "true" if t.value else "false"
    if isinstance(t, IntLit):
        return str(t.value)
    if isinstance(t, EnumLit):
        return t.name
    if isinstance(t, UndefLit):
        return "undef"
    if isinstance(t, Var):
        return var(t.name)
    if isinstance(t, Apply):
        if not t.args:
            return t.func
        return f"{t.func}({', '.join(term(a) for a in t.args)})"
    if isinstance(t, IsDef):
        return f"isDef({term(t.arg)})"
    if isinstance(t, ChooseOne):
        return (f"chooseone({{{var(t.var)} in {domain_ref(t.domain)} | "
                f"{term(t.guard)} : {term(t.result)}}})")
    if isinstance(t, Builtin):
        if t.op == "not":
            s = f"not({term(t.args[0])})"
            return f"({s})" if level > NOT_LEVEL else s
        lvl = BINARY_LEVEL[t.op]
        left_min = lvl + 1 if lvl in NON_ASSOC else lvl
        s = f"{term(t.args[0], left_min)} {t.op} {term(t.args[1], lvl + 1)}"
        return f"({s})" if lvl < level else s
    raise TypeError(f"cannot print term {t!r}")


def rule_lines(r, depth: int = 0) -> list[str]:
    pad = INDENT * depth
    if isinstance(r, Update):
        return [f"{pad}{term(r.loc)} := {term(r.value)}"]
    if isinstance(r, Skip):
        return [pad + "skip"]
    if isinstance(r, Par):
        out = [pad + "par"]
        for c in r.rules:
            out += rule_lines(c, depth + 1)
        return out + [pad + "endpar"]
    if isinstance(r, Cond):
        out = [f"{pad}if {term(r.guard)} then"] + rule_lines(r.then, depth + 1)
        if r.otherwise is not None:
            out += [pad + "else"] + rule_lines(r.otherwise, depth + 1)
        return out + [pad + "endif"]
    if isinstance(r, MacroCall):
        return [f"{pad}{r.name}[{', '.join(term(a) for a in r.args)}]"]
    if isinstance(r, ProgramCall):
        return [f"{pad}program({term(r.agent)})"]
    if isinstance(r, Forall):
        bs = ", ".join(f"{var(b.var)} in {domain_ref(b.domain)}" for b in r.binders)
        return [f"{pad}forall {bs} with {term(r.guard)} do"] + rule_lines(r.body, depth + 1)
    if isinstance(r, Choose):
        out = [f"{pad}choose {var(r.var)} in {domain_ref(r.domain)} with {term(r.guard)} do"]
        out += rule_lines(r.body, depth + 1)
        if r.ifnone is not None:
            out += [pad + "ifnone"] + rule_lines(r.ifnone, depth + 1)
        return out + [pad + "endchoose"]
    if isinstance(r, Let):
        bs = ", ".join(f"{var(v)} = {term(t)}" for v, t in r.bindings)
        return [f"{pad}let ({bs}) in"] + rule_lines(r.body, depth + 1) + [pad + "endlet"]
    if isinstance(r, Case):
        out = [f"{pad}switch {term(r.scrutinee)}"]
        for t, c in r.cases:
            out += [f"{pad}{INDENT}case {term(t)} :"] + rule_lines(c, depth + 2)
        if r.otherwise is not None:
            out += [f"{pad}{INDENT}otherwise"] + rule_lines(r.otherwise, depth + 2)
        return out + [pad + "endswitch"]
    raise TypeError(f"cannot print rule {r!r}")


def print_rule(r) -> str:
    return "\n".join(rule_lines(r))


def _function(f: FunctionDecl) -> str:
    head = f"{f.kind} {f.name}"
    if f.params:
        if f.param_names is not None:
            ps = ", ".join(f"{var(n)} in {domain_ref(d)}" for n, d in zip(f.param_names, f.params))
        else:
            ps = ", ".join(domain_ref(d) for d in f.params)
        head += f"({ps})"
    head += f" : {domain_ref(f.result)}"
    if f.definition is not None:
        head += f" = {term(f.definition)}"
    elif f.table is not None:
        entries = []
        for key, val in f.table:
            k = term(key[0]) if len(key) == 1 else "(" + ", ".join(term(x) for x in key) + ")"
            entries.append(f"{k} -> {term(val)}")
        head += " = {" + ", ".join(entries) + "}"
    return head


def _macro(m: MacroDecl, main: bool = False) -> list[str]:
    head = f"{INDENT}{'main rule' if main else 'rule'} {m.name}"
    if m.params:
        head += "(" + ", ".join(f"{var(b.var)} in {domain_ref(b.domain)}" for b in m.params) + ")"
    return [head + " ="] + rule_lines(m.body, 2)


def print_model(model: Model) -> str:
    """Render a model in canonical layout (byte-deterministic)."""
    out = [f"asm {model.name}", "", "signature:"]
    for d in model.domains:
        if isinstance(d, EnumDomain):
            out.append(f"{INDENT}enum domain {d.name} = {{{', '.join(d.elements)}}}")
        elif isinstance(d, AgentDomain):
            out.append(f"{INDENT}agent domain {d.name} = {{{', '.join(d.agents)}}}")
        else:
            out.append(f"{INDENT}domain {d.name} = [{d.lo}..{d.hi}]")
    for f in model.functions:
        out.append(INDENT + _function(f))
    out += ["", "definitions:"]
    for m in model.macros:
        out += _macro(m)
    for inv in model.invariants:
        out.append(f"{INDENT}invariant {inv.name} : {term(inv.term)}")
    for a in model.agents:
        out.append(f"{INDENT}agent {a.domain} : {a.rule}[]")
    out += _macro(model.main, main=True)
    out += ["", "init:"]
    for i in model.inits:
        head = i.func
        if i.binders:
            head += "(" + ", ".join(f"{var(b.var)} in {domain_ref(b.domain)}" for b in i.binders) + ")"
        elif i.args:
            head += "(" + ", ".join(term(a) for a in i.args) + ")"
        out.append(f"{INDENT}{head} := {term(i.value)}")
    return "\n".join(out) + "\n"
