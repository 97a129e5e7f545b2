"""Lexer and recursive-descent parser for the ``.asm`` model language.

The grammar is documented in ``docs/grammar.md``.  Errors are collected, not
raised one at a time: after a syntax error the parser skips ahead to the next
top-level declaration and carries on, so one pass reports every broken rule.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .core import (
    RESERVED_PREFIX, AgentDecl, AgentDomain, Apply, Binder, BoolLit, Builtin, Case, Choose,
    ChooseOne, Cond, EnumDomain, EnumLit, Forall, FunctionDecl, Init, IntLit, IntRange, Invariant,
    IsDef, Let, MacroCall, MacroDecl, Model, Par, ProgramCall, Skip, SourceSpan, TRUE, UndefLit,
    Update, Var,
)

KEYWORDS = frozenset("""
    asm signature definitions init domain enum agent controlled monitored static derived
    rule main invariant par endpar if then else endif forall in with do choose ifnone
    endchoose let endlet switch case otherwise endswitch skip program self true false undef
    and or not implies isDef chooseone
""".split())

FUNCTION_KINDS = ("controlled", "monitored", "static", "derived")
_TOP_SYNC = frozenset({"rule", "main", "invariant", "agent", "enum", "domain", "signature",
                       "definitions", "init"} | set(FUNCTION_KINDS))

_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>//[^\n]*)
  | (?P<var>\$[A-Za-z_][A-Za-z0-9_]*)
  | (?P<int>[0-9]+)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<sym>:=|\.\.|->|!=|<=|>=|[()\[\]{},:=<>+\-*|])
""", re.VERBOSE)


@dataclass(frozen=True)
class Token:
    kind: str          # 'kw', 'ident', 'uident', 'var', 'int', 'sym', 'eof'
    text: str
    span: SourceSpan


@dataclass(frozen=True)
class ParseError:
    span: SourceSpan
    message: str
    expected: str = ""

    def __str__(self):
        hint = f" (expected {self.expected})" if self.expected else ""
        return f"{self.span}: {self.message}{hint}"


class ParseErrors(Exception):
    """Raised by :func:`parse` with every error found in the input."""

    def __init__(self, errors: list[ParseError]):
        self.errors = errors
        super().__init__("\n".join(str(e) for e in errors))


class _Fail(Exception):
    pass


class _Lines:
    def __init__(self, text: str):
        self.starts = [0] + [m.end() for m in re.finditer("\n", text)]

    def span(self, start: int, end: int) -> SourceSpan:
        lo, hi = 0, len(self.starts) - 1
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if self.starts[mid] <= start:
                lo = mid
            else:
                hi = mid - 1
        return SourceSpan(start, end, lo + 1, start - self.starts[lo] + 1)


def tokenize(text: str, allow_reserved: bool = False) -> tuple[list[Token], list[ParseError]]:
    lines = _Lines(text)
    tokens: list[Token] = []
    errors: list[ParseError] = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            errors.append(ParseError(lines.span(pos, pos + 1), f"unexpected character {text[pos]!r}"))
            pos += 1
            continue
        kind = m.lastgroup
        tok = m.group()
        span = lines.span(m.start(), m.end())
        pos = m.end()
        if kind in ("ws", "comment"):
            continue
        if kind == "name":
            if tok in KEYWORDS:
                kind = "kw"
            elif tok[0].isupper():
                kind = "uident"
            else:
                kind = "ident"
        if kind in ("ident", "var") and not allow_reserved:
            bare = tok.lstrip("$")
            if bare.startswith(RESERVED_PREFIX):
                errors.append(ParseError(span, f"identifier {tok} uses the reserved prefix {RESERVED_PREFIX}"))
        tokens.append(Token(kind, tok, span))
    end = len(text)
    tokens.append(Token("eof", "", lines.span(end, end)))
    return tokens, errors


# precedence levels: implies 1, or 2, and 3, not 4, relational 5, additive 6, multiplicative 7
BINARY_LEVEL = {"implies": 1, "or": 2, "and": 3,
                "=": 5, "!=": 5, "<": 5, "<=": 5, ">": 5, ">=": 5,
                "+": 6, "-": 6, "*": 7}
NON_ASSOC = frozenset({1, 5})
NOT_LEVEL = 4


class Parser:
    def __init__(self, tokens: list[Token]):
        self.toks = tokens
        self.pos = 0
        self.errors: list[ParseError] = []

    # -- token helpers -----------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.toks[self.pos]

    def at(self, text: str, kind: str | None = None) -> bool:
        t = self.tok
        return t.text == text and t.kind in (("kw", "sym") if kind is None else (kind,))

    def advance(self) -> Token:
        t = self.tok
        if t.kind != "eof":
            self.pos += 1
        return t

    def fail(self, message: str, expected: str = ""):
        self.errors.append(ParseError(self.tok.span, message, expected))
        raise _Fail()

    def expect(self, text: str) -> Token:
        if not self.at(text):
            got = self.tok.text or "end of input"
            self.fail(f"unexpected {got!r}", repr(text))
        return self.advance()

    def expect_kind(self, kind: str, what: str) -> Token:
        if self.tok.kind != kind:
            got = self.tok.text or "end of input"
            self.fail(f"unexpected {got!r}", what)
        return self.advance()

    def span_from(self, start: Token) -> SourceSpan:
        prev = self.toks[self.pos - 1] if self.pos > 0 else start
        return SourceSpan(start.span.start, max(prev.span.end, start.span.start),
                          start.span.line, start.span.column)

    def sync_top(self):
        while self.tok.kind != "eof" and not (self.tok.kind == "kw" and self.tok.text in _TOP_SYNC):
            self.advance()

    # -- model -------------------------------------------------------------

    def model(self) -> Model | None:
        start = self.tok
        try:
            self.expect("asm")
            name = self.name_token()
        except _Fail:
            self.sync_top()
            name = "unnamed"
        domains, functions, macros, agents, invariants, inits = [], [], [], [], [], []
        mains: list[MacroDecl] = []
        seen: dict[tuple[str, str], SourceSpan] = {}

        def declare(space: str, key: str, span: SourceSpan):
            if (space, key) in seen:
                self.errors.append(ParseError(span, f"duplicate {space} declaration {key!r}"))
                return False
            seen[(space, key)] = span
            return True

        section = None
        while self.tok.kind != "eof":
            begin = self.pos
            try:
                if self.at("signature") or self.at("definitions") or self.at("init"):
                    section = self.advance().text
                    self.expect(":")
                    continue
                if section is None:
                    self.fail("declaration outside a section", "'signature:'")
                if section == "signature":
                    decl = self.signature_decl()
                    if isinstance(decl, FunctionDecl):
                        if declare("function", decl.name, decl.span):
                            functions.append(decl)
                    elif declare("domain", decl.name, decl.span):
                        domains.append(decl)
                elif section == "definitions":
                    kind, decl = self.definition_decl()
                    if kind == "main":
                        if mains:
                            self.errors.append(ParseError(decl.span, "more than one main rule"))
                        elif declare("rule", decl.name, decl.span):
                            mains.append(decl)
                    elif kind == "rule":
                        if declare("rule", decl.name, decl.span):
                            macros.append(decl)
                    elif kind == "invariant":
                        if declare("invariant", decl.name, decl.span):
                            invariants.append(decl)
                    elif declare("agent", decl.domain, decl.span):
                        agents.append(decl)
                else:
                    inits.append(self.init_decl())
            except _Fail:
                line = self.tok.span.line
                if section == "init":
                    self.advance()
                    while self.tok.kind != "eof" and self.tok.span.line == line:
                        self.advance()
                    if not (self.tok.kind == "ident" or self.tok.kind == "eof" or self.tok.text in _TOP_SYNC):
                        self.sync_top()
                else:
                    if (self.pos > begin and self.tok.kind == "kw" and self.tok.text in _TOP_SYNC
                            and self.errors[-1].span == self.tok.span):
                        # the offending token starts the next declaration; resume there
                        pass
                    else:
                        self.advance()
                    self.sync_top()
        if not mains:
            if not self.errors:
                    self.errors.append(ParseError(self.tok.span, "model has no main rule", "'main rule'"))
            return None
        return Model(name, tuple(domains), tuple(functions), tuple(macros), tuple(agents),
                     tuple(invariants), mains[0], tuple(inits), span=self.span_from(start))

    def name_token(self) -> str:
        if self.tok.kind not in ("ident", "uident"):
            self.fail(f"unexpected {self.tok.text!r}", "a name")
        return self.advance().text

    # -- signature ---------------------------------------------------------

    def signature_decl(self):
        start = self.tok
        if self.at("enum") or self.at("agent"):
            kind = self.advance().text
            self.expect("domain")
            name = self.expect_kind("uident", "a capitalized domain name").text
            self.expect("=")
            self.expect("{")
            elems = [self.expect_kind("uident", "a capitalized element name").text]
            while self.at(","):
                self.advance()
                elems.append(self.expect_kind("uident", "a capitalized element name").text)
            self.expect("}")
            cls = EnumDomain if kind == "enum" else AgentDomain
            return cls(name, tuple(elems), span=self.span_from(start))
        if self.at("domain"):
            self.advance()
            name = self.expect_kind("uident", "a capitalized domain name").text
            self.expect("=")
            r = self.int_range()
            return IntRange(r.lo, r.hi, name, span=self.span_from(start))
        if self.tok.kind == "kw" and self.tok.text in FUNCTION_KINDS:
            return self.function_decl()
        self.fail(f"unexpected {self.tok.text!r}", "a domain or function declaration")

    def int_range(self) -> IntRange:
        start = self.expect("[")
        lo = self.signed_int()
        self.expect("..")
        hi = self.signed_int()
        self.expect("]")
        return IntRange(lo, hi, span=self.span_from(start))

    def signed_int(self) -> int:
        neg = False
        if self.at("-"):
            self.advance()
            neg = True
        v = int(self.expect_kind("int", "an integer").text)
        return -v if neg else v

    def domain_ref(self):
        if self.at("["):
            return self.int_range()
        return self.expect_kind("uident", "a domain").text

    def binder(self) -> Binder:
        start = self.tok
        var = self.expect_kind("var", "a $variable").text[1:]
        self.expect("in")
        dom = self.domain_ref()
        return Binder(var, dom, span=self.span_from(start))

    def function_decl(self) -> FunctionDecl:
        start = self.tok
        kind = self.advance().text
        name = self.expect_kind("ident", "a lowercase function name").text
        params: list = []
        names: list[str] | None = None
        if self.at("("):
            self.advance()
            if self.tok.kind == "var":
                names = []
                b = self.binder()
                names.append(b.var)
                params.append(b.domain)
                while self.at(","):
                    self.advance()
                    b = self.binder()
                    names.append(b.var)
                    params.append(b.domain)
            else:
                params.append(self.domain_ref())
                while self.at(","):
                    self.advance()
                    params.append(self.domain_ref())
            self.expect(")")
        self.expect(":")
        result = self.domain_ref()
        definition = table = None
        if self.at("="):
            self.advance()
            if self.at("{"):
                table = self.value_table(len(params))
            else:
                definition = self.term()
                if names is None and params:
                    self.fail("a function defined by a term needs named parameters", "'($x in D, ...)'")
                if names is None:
                    names = []
        return FunctionDecl(name, kind, tuple(params), result,
                            None if names is None else tuple(names), definition, table,
                            span=self.span_from(start))

    def value_table(self, arity: int):
        self.expect("{")
        entries = []
        while True:
            if self.at("("):
                self.advance()
                key = [self.literal()]
                while self.at(","):
                    self.advance()
                    key.append(self.literal())
                self.expect(")")
            else:
                key = [self.literal()]
            self.expect("->")
            entries.append((tuple(key), self.literal()))
            if not self.at(","):
                break
            self.advance()
        self.expect("}")
        return tuple(entries)

    def literal(self):
        t = self.term(9)
        if not isinstance(t, (BoolLit, IntLit, EnumLit, UndefLit)):
            self.fail("expected a literal value", "a literal")
        return t

    # -- definitions -------------------------------------------------------

    def definition_decl(self):
        start = self.tok
        if self.at("main"):
            self.advance()
            self.expect("rule")
            name = self.expect_kind("ident", "a rule name").text
            self.expect("=")
            body = self.rule()
            return "main", MacroDecl(name, (), body, span=self.span_from(start))
        if self.at("rule"):
            self.advance()
            name = self.expect_kind("ident", "a rule name").text
            params = []
            if self.at("("):
                self.advance()
                params.append(self.binder())
                while self.at(","):
                    self.advance()
                    params.append(self.binder())
                self.expect(")")
            self.expect("=")
            body = self.rule()
            return "rule", MacroDecl(name, tuple(params), body, span=self.span_from(start))
        if self.at("invariant"):
            self.advance()
            name = self.expect_kind("ident", "an invariant name").text
            self.expect(":")
            term = self.term()
            return "invariant", Invariant(name, term, span=self.span_from(start))
        if self.at("agent"):
            self.advance()
            dom = self.expect_kind("uident", "an agent domain").text
            self.expect(":")
            rname = self.expect_kind("ident", "a rule name").text
            self.expect("[")
            self.expect("]")
            return "agent", AgentDecl(dom, rname, span=self.span_from(start))
        self.fail(f"unexpected {self.tok.text!r}", "'rule', 'main rule', 'invariant' or 'agent'")

    def init_decl(self) -> Init:
        start = self.tok
        func = self.expect_kind("ident", "a controlled function").text
        binders: list[Binder] = []
        args: list = []
        if self.at("("):
            self.advance()
            if self.tok.kind == "var" and self.toks[self.pos + 1].text == "in":
                binders.append(self.binder())
                while self.at(","):
                    self.advance()
                    binders.append(self.binder())
                args = [Var(b.var, span=b.span) for b in binders]
            else:
                args.append(self.term())
                while self.at(","):
                    self.advance()
                    args.append(self.term())
            self.expect(")")
        self.expect(":=")
        value = self.term()
        return Init(func, tuple(binders), tuple(args), value, span=self.span_from(start))

    # -- rules -------------------------------------------------------------

    def rule(self):
        start = self.tok
        t = self.tok
        if t.kind == "kw":
            kw = t.text
            if kw == "skip":
                self.advance()
                return Skip(span=self.span_from(start))
            if kw == "par":
                self.advance()
                rules = []
                while not self.at("endpar"):
                    if self.tok.kind == "eof":
                        self.fail("unexpected end of input", "'endpar'")
                    rules.append(self.rule())
                self.advance()
                return Par(tuple(rules), span=self.span_from(start))
            if kw == "if":
                self.advance()
                guard = self.term()
                self.expect("then")
                then = self.rule()
                other = None
                if self.at("else"):
                    self.advance()
                    other = self.rule()
                self.expect("endif")
                return Cond(guard, then, other, span=self.span_from(start))
            if kw == "forall":
                self.advance()
                binders = [self.binder()]
                while self.at(","):
                    self.advance()
                    binders.append(self.binder())
                guard = TRUE
                if self.at("with"):
                    self.advance()
                    guard = self.term()
                self.expect("do")
                body = self.rule()
                return Forall(tuple(binders), guard, body, span=self.span_from(start))
            if kw == "choose":
                self.advance()
                b = self.binder()
                guard = TRUE
                if self.at("with"):
                    self.advance()
                    guard = self.term()
                self.expect("do")
                body = self.rule()
                ifnone = None
                if self.at("ifnone"):
                    self.advance()
                    ifnone = self.rule()
                self.expect("endchoose")
                return Choose(b.var, b.domain, guard, body, ifnone, span=self.span_from(start))
            if kw == "let":
                self.advance()
                self.expect("(")
                bindings = [self.let_binding()]
                while self.at(","):
                    self.advance()
                    bindings.append(self.let_binding())
                self.expect(")")
                self.expect("in")
                body = self.rule()
                self.expect("endlet")
                return Let(tuple(bindings), body, span=self.span_from(start))
            if kw == "switch":
                self.advance()
                scrut = self.term()
                cases = []
                while self.at("case"):
                    self.advance()
                    ct = self.term()
                    self.expect(":")
                    cases.append((ct, self.rule()))
                if not cases:
                    self.fail(f"unexpected {self.tok.text!r}", "'case'")
                other = None
                if self.at("otherwise"):
                    self.advance()
                    other = self.rule()
                self.expect("endswitch")
                return Case(scrut, tuple(cases), other, span=self.span_from(start))
            if kw == "program":
                self.advance()
                self.expect("(")
                agent = self.term()
                self.expect(")")
                return ProgramCall(agent, span=self.span_from(start))
        if t.kind == "ident":
            nxt = self.toks[self.pos + 1]
            if nxt.text == "[":
                name = self.advance().text
                self.advance()
                args = []
                if not self.at("]"):
                    args.append(self.term())
                    while self.at(","):
                        self.advance()
                        args.append(self.term())
                self.expect("]")
                return MacroCall(name, tuple(args), span=self.span_from(start))
            loc = self.term(9)
            if not isinstance(loc, Apply):
                self.fail("update target must be a function location", "a location")
            self.expect(":=")
            value = self.term()
            return Update(loc, value, span=self.span_from(start))
        self.fail(f"unexpected {t.text or 'end of input'!r}", "a rule")

    def let_binding(self):
        var = self.expect_kind("var", "a $variable").text[1:]
        self.expect("=")
        return (var, self.term())

    # -- terms -------------------------------------------------------------

    def term(self, level: int = 1):
        start = self.tok
        if level == NOT_LEVEL and self.at("not"):
            self.advance()
            arg = self.term(NOT_LEVEL + 1)
            return Builtin("not", (arg,), span=self.span_from(start))
        if level > 7:
            return self.primary()
        if level == NOT_LEVEL:
            return self.term(level + 1)
        left = self.term(level + 1)
        while self.tok.kind in ("kw", "sym") and BINARY_LEVEL.get(self.tok.text) == level:
            op = self.advance().text
            right = self.term(level + 1)
            left = Builtin(op, (left, right), span=self.span_from(start))
            if level in NON_ASSOC:
                if self.tok.kind in ("kw", "sym") and BINARY_LEVEL.get(self.tok.text) == level:
                    self.fail(f"operator {self.tok.text!r} is not associative; add parentheses")
                break
        return left

    def primary(self):
        start = self.tok
        t = self.tok
        if t.kind == "kw":
            if t.text in ("true", "false"):
                self.advance()
                return BoolLit(t.text == "true", span=t.span)
            if t.text == "undef":
                self.advance()
                return UndefLit(span=t.span)
            if t.text == "self":
                self.advance()
                return Var("self", span=t.span)
            if t.text == "not":
                return self.term(NOT_LEVEL)
            if t.text == "isDef":
                self.advance()
                self.expect("(")
                arg = self.term()
                self.expect(")")
                return IsDef(arg, span=self.span_from(start))
            if t.text == "chooseone":
                self.advance()
                self.expect("(")
                self.expect("{")
                b = self.binder()
                self.expect("|")
                guard = self.term()
                self.expect(":")
                result = self.term()
                self.expect("}")
                self.expect(")")
                return ChooseOne(b.var, b.domain, guard, result, span=self.span_from(start))
        if t.kind == "int":
            self.advance()
            return IntLit(int(t.text), span=t.span)
        if t.kind == "sym" and t.text == "-" and self.toks[self.pos + 1].kind == "int":
            self.advance()
            v = self.advance()
            return IntLit(-int(v.text), span=self.span_from(start))
        if t.kind == "uident":
            self.advance()
            return EnumLit(t.text, span=t.span)
        if t.kind == "var":
            self.advance()
            return Var(t.text[1:], span=t.span)
        if t.kind == "ident":
            self.advance()
            args = []
            if self.at("("):
                self.advance()
                args.append(self.term())
                while self.at(","):
                    self.advance()
                    args.append(self.term())
                self.expect(")")
            return Apply(t.text, tuple(args), span=self.span_from(start))
        if t.kind == "sym" and t.text == "(":
            self.advance()
            inner = self.term()
            self.expect(")")
            return inner
        self.fail(f"unexpected {t.text or 'end of input'!r}", "a term")


def parse(text: str, allow_reserved: bool = False) -> Model:
    """Parse model text.  Raises :class:`ParseErrors` listing every error.

    Identifiers with the ``flat_`` prefix are reserved for names the
    flattener generates; pass ``allow_reserved=True`` to read flattened output.
    """
    tokens, errors = tokenize(text, allow_reserved)
    p = Parser(tokens)
    model = p.model()
    errors = sorted(errors + p.errors, key=lambda e: (e.span.start, e.message))
    if errors or model is None:
        raise ParseErrors(errors)
    return model


def parse_term(text: str, allow_reserved: bool = True):
    tokens, errors = tokenize(text, allow_reserved)
    p = Parser(tokens)
    try:
        t = p.term()
        if p.tok.kind != "eof":
            p.fail(f"unexpected {p.tok.text!r}", "end of term")
    except _Fail:
        pass
    errors += p.errors
    if errors:
        raise ParseErrors(errors)
    return t


def parse_rule(text: str, allow_reserved: bool = True):
    tokens, errors = tokenize(text, allow_reserved)
    p = Parser(tokens)
    try:
        r = p.rule()
        if p.tok.kind != "eof":
            p.fail(f"unexpected {p.tok.text!r}", "end of rule")
    except _Fail:
        pass
    errors += p.errors
    if errors:
        raise ParseErrors(errors)
    return r
