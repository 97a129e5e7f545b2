import dataclasses

import pytest
from hypothesis import given, strategies as st

from asmflat import corpus, count_rules, delta_percent, flatten_pipeline, free_variables, is_normal_form, substitute
from asmflat.core import (
    Apply, BoolLit, Cond, IntLit, Par, Skip, UndefinedMetricError, Update, Var, max_nesting,
    nesting_depth,
)
from asmflat.parser import parse_rule, parse_term
from asmflat.printer import print_rule

from tests.helpers import make
from tests.oracles import brute_force_histogram, round_half_away


def test_substitute_instantiates_macro_schema():
    r = parse_rule("f($x) := $x")
    assert substitute(r, {"x": IntLit(3)}) == parse_rule("f(3) := 3")


def test_substitute_empty_binding_is_identity():
    r = parse_rule("forall $y in [0..2] with $y > 0 do f($y) := $z")
    assert substitute(r, {}) == r


def test_substitute_respects_shadowing():
    r = parse_rule("let ($x = 1) in g := $x endlet")
    assert substitute(r, {"x": IntLit(2)}) == r


def test_substitute_avoids_capture():
    # Replacing $z by $x must not let the inner binder capture it.
    r = parse_rule("let ($x = 1) in f := $x + $z endlet")
    out = substitute(r, {"z": Var("x")})
    assert free_variables(out) == {"x"}
    (name, _), = out.bindings
    assert name != "x"


def test_substitute_composition_of_disjoint_bindings():
    r = parse_rule("par f($a) := $b\n g := $a endpar")
    s1, s2 = {"a": IntLit(1)}, {"b": IntLit(2)}
    assert substitute(substitute(r, s1), s2) == substitute(r, {**s1, **s2})


def test_free_variables_examples():
    assert free_variables(parse_term("$x + 1")) == {"x"}
    assert free_variables(parse_rule("let ($x = 1) in f := $x endlet")) == set()
    assert free_variables(parse_rule("forall $x in D with $y do skip")) == {"y"}


def test_free_variables_chooseone_binds_its_variable():
    t = parse_term("chooseone({$v in [1..3] | $v > $k : $v})")
    assert free_variables(t) == {"k"}


def test_count_rules_par_of_two_updates():
    m = make("  controlled a : [0..2]\n  controlled b : [0..2]", "    par\n      a := 1\n      b := 2\n    endpar",
             "  a := 0\n  b := 0")
    h = count_rules(m).as_dict()
    assert (h["update"], h["parallel"], h["total"]) == (2, 1, 3)


def test_count_rules_skip_main():
    m = make("  controlled a : Boolean", "    skip", "  a := false")
    assert count_rules(m).as_dict()["skip"] == 1
    assert count_rules(m).total == 1


def test_histograms_match_hand_counts():
    for entry in corpus.manifest()["models"]:
        assert count_rules(corpus.load(entry["name"])).as_dict() == entry["histogram"], entry["name"]


@pytest.mark.parametrize("name", ["gameoflife_mini", "dijkstra_mini", "philosophers", "atm"])
def test_flattened_histogram_matches_brute_force(name):
    flat, _ = flatten_pipeline(corpus.load(name))
    assert count_rules(flat).as_dict() == brute_force_histogram(flat)


def test_histogram_invariant_under_par_reordering(corpus_models):
    m = corpus_models["ring_buffer"]
    body = m.main.body
    flipped = dataclasses.replace(m, main=dataclasses.replace(m.main, body=Par(tuple(reversed(body.rules)))))
    assert count_rules(flipped) == count_rules(m)


@pytest.mark.parametrize("after,before,expected", [(13, 9, 44), (65, 7, 829), (17, 4, 325), (422, 645, -35)])
def test_delta_percent_reference_counts(after, before, expected):
    assert delta_percent(after, before) == expected


def test_delta_percent_zero_before():
    with pytest.raises(UndefinedMetricError):
        delta_percent(3, 0)


@given(st.integers(1, 10_000))
def test_delta_percent_of_unchanged_is_zero(x):
    assert delta_percent(x, x) == 0


@given(st.integers(0, 5000), st.integers(1, 5000))
def test_delta_percent_matches_decimal_rounding(after, before):
    assert delta_percent(after, before) == round_half_away(after, before)


def _nf(main):
    sig = "  controlled a : [0..2]\n  controlled b : [0..2]\n  monitored g : Boolean"
    return is_normal_form(make(sig, main, "  a := 0\n  b := 0"))


def test_normal_form_accepts_definition():
    ok, paths = _nf("    par\n      if g then a := 1 endif\n      b := 2\n    endpar")
    assert ok and paths == []


def test_normal_form_rejects_forall_with_path():
    ok, paths = _nf("    par\n      forall $x in [0..1] with true do a := $x\n    endpar")
    assert not ok and paths


def test_normal_form_rejects_else():
    ok, _ = _nf("    if g then a := 1 else a := 2 endif")
    assert not ok


def test_normal_form_accepts_degenerate_single_update():
    ok, _ = _nf("    a := 1")
    assert ok


def test_normal_form_rejects_skip_and_macros():
    ok, _ = _nf("    par\n      skip\n      a := 1\n    endpar")
    assert not ok
    sig = "  controlled a : [0..2]"
    m = make(sig, "    a := 1", "  a := 0", macros="  rule unused = a := 2\n")
    assert not is_normal_form(m)[0]


def test_normal_form_implies_no_structured_rules(corpus_models):
    for m in corpus_models.values():
        flat, _ = flatten_pipeline(m)
        assert is_normal_form(flat)[0]
        h = count_rules(flat)
        assert (h.forall, h.choose, h.case, h.let, h.macro_call) == (0, 0, 0, 0, 0)


def test_nesting_depth_ignores_par():
    r = Par((Cond(BoolLit(True), Par((Cond(BoolLit(True), Update(Apply("a", ()), IntLit(1))),))), Skip()))
    assert nesting_depth(r) == 2
