import random

import pytest
from hypothesis import given, settings, strategies as st

from asmflat import eval_term, parse_rule, parse_term
from asmflat.core import Par, Skip
from asmflat.flatten import rs, simplify_term
from asmflat.flatten.simplify import RuleSimplifier
from asmflat.interp import values_equal

from tests.helpers import make
from tests.termgen import MODEL, all_states, bool_term, int_term


def simp(text):
    return simplify_term(parse_term(text), MODEL.model)[0]


@pytest.mark.parametrize("before,after", [
    ("a and true", "a"),
    ("3 < 4", "true"),
    ("2 + 1", "3"),
])
def test_reference_rewrites(before, after):
    assert simp(before) == parse_term(after)


@pytest.mark.parametrize("before,after", [
    ("true and a", "a"), ("a and false", "false"), ("a or true", "true"), ("false or a", "a"),
    ("not(not(a))", "a"), ("not(true)", "false"), ("a implies false", "not(a)"), ("true implies a", "a"),
    ("x = x", "true"), ("x + 0", "x"), ("1 * x", "x"), ("x - 0", "x"), ("isDef(3)", "true"),
    ("isDef(undef)", "false"), ("undef + 1", "undef"), ("two + 1", "3"), ("inc(2)", "3"),
    ("(1 + 1) * 2 >= 4", "true"), ("x != x", "false"),
])
def test_folding_rules(before, after):
    assert simp(before) == parse_term(after)


def test_distinct_enum_literals():
    m = make("  enum domain E = {P, Q}\n  controlled e : E", "    skip", "  e := P")
    assert simplify_term(parse_term("P = Q"), m)[0] == parse_term("false")
    assert simplify_term(parse_term("P != Q"), m)[0] == parse_term("true")


def test_dynamic_reads_not_folded():
    assert simp("c + 1") == parse_term("c + 1")


def test_count_reports_rewrites():
    _, n = simplify_term(parse_term("(a and true) or false"), MODEL.model)
    assert n == 2


def test_rs_examples():
    sig, init = "  controlled f : [0..2]\n  monitored g : Boolean", "  f := 0"
    rs_one = lambda text: rs(make(sig, "    " + text, init))[0].main.body
    assert rs_one("if true then f := 1 endif") == parse_rule("f := 1")
    assert rs_one("if false then f := 1 endif") == Skip()
    assert rs_one("if false then f := 1 else f := 2 endif") == parse_rule("f := 2")
    assert rs_one("if g then par skip skip endpar endif") == Skip()
    assert rs_one("par skip skip endpar") == Par(())  # the top-level parallel keeps its shape
    assert rs_one("if g then skip endif") == Skip()
    assert rs_one("if g then skip else f := 1 endif") == parse_rule("if not(g) then f := 1 endif")


def test_rs_keeps_mandated_top_par():
    one = Par((parse_rule("f := 1"),))
    assert isinstance(RuleSimplifier().top(one), Par)
    assert not isinstance(RuleSimplifier().rule(one), Par)


def _agree(t, s):
    for state, inputs in all_states():
        a = eval_term(t, MODEL, state, inputs)
        b = eval_term(s, MODEL, state, inputs)
        if not (values_equal(a, b) or (a is b)):
            return False
    return True


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 2**32), st.booleans())
def test_simplification_is_sound(seed, boolean):
    rng = random.Random(seed)
    t = bool_term(rng, 4) if boolean else int_term(rng, 4)
    s, _ = simplify_term(t, MODEL.model)
    assert _agree(t, s)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32))
def test_simplification_is_idempotent(seed):
    t = bool_term(random.Random(seed), 4)
    s, _ = simplify_term(t, MODEL.model)
    assert simplify_term(s, MODEL.model) == (s, 0)
