import pytest
from hypothesis import given, strategies as st

from asmflat import check, corpus, domain_of, enumerate_domain, parse_term
from asmflat.core import BooleanDomain, EnumDomain, IntRange
from asmflat.typecheck import TypeCheckError, cardinality

from tests.helpers import make
from tests.oracles import interval_oracle

SIG = """  enum domain Color = {Red, Green, Blue}
  domain D = [0..2]
  monitored m : [0..3]
  monitored g : Boolean
  controlled c : [0..3]
  controlled f(D) : [0..3]"""
INIT = "  c := 0\n  f($d in D) := 0"


def codes(sig, main, init=INIT, macros=""):
    with pytest.raises(TypeCheckError) as exc:
        check(make(sig, main, init, macros))
    return [e.code for e in exc.value.errors]


def test_update_to_monitored():
    assert codes(SIG, "    m := 1") == ["E_NONCONTROLLED"]


def test_arithmetic_guard():
    assert codes(SIG, "    if 2 + 2 then c := 1 endif") == ["E_GUARD"]


def test_every_error_reported():
    got = codes(SIG, "    par\n      m := 1\n      if 2 + 2 then c := 1 endif\n      h := 1\n      f(1, 2) := 0\n    endpar")
    assert sorted(got) == sorted(["E_NONCONTROLLED", "E_GUARD", "E_UNRESOLVED", "E_ARITY"])


def test_partial_initialisation():
    assert codes(SIG, "    c := 1", init="  c := 0\n  f(0) := 1") == ["E_INIT"]


def test_out_of_domain_value():
    assert "E_DOMAIN" in codes(SIG, "    c := Red")


def test_unbounded_domain_rejected():
    assert "E_NONFINITE" in codes(SIG + "\n  controlled z : Integer", "    c := 1", init=INIT + "\n  z := 0")


def test_self_outside_program():
    assert "E_UNRESOLVED" in codes(SIG, "    c := self")


def test_corpus_typechecks(corpus_typed):
    assert len(corpus_typed) == len(corpus.names())


def test_duplicate_case_literal_warns():
    tm = check(make(SIG, "    switch c\n      case 1 :\n        c := 2\n      case 1 :\n        c := 2\n    endswitch", INIT))
    assert tm.warnings


@pytest.fixture(scope="module")
def typed():
    return check(make(SIG, "    skip", INIT))


def test_domain_of_apply(typed):
    d = domain_of(parse_term("f($x)"), typed, {"x": IntRange(0, 2)})
    assert (d.lo, d.hi) == (0, 3)


def test_domain_of_arith_matches_oracle(typed):
    d = domain_of(parse_term("$x + 1"), typed, {"x": IntRange(0, 2)})
    assert (d.lo, d.hi) == interval_oracle("+", range(0, 3), range(1, 2)) == (1, 3)


def test_domain_of_relational(typed):
    assert isinstance(domain_of(parse_term("$x = $y"), typed, {"x": IntRange(0, 2), "y": IntRange(0, 2)}),
                      BooleanDomain)


@given(st.sampled_from("+-*"), st.integers(-5, 5), st.integers(0, 5), st.integers(-5, 5), st.integers(0, 5))
def test_interval_arithmetic_property(op, a, wa, b, wb):
    env = {"x": IntRange(a, a + wa), "y": IntRange(b, b + wb)}
    d = domain_of(parse_term(f"$x {op} $y"), SIG_ONLY, env)
    assert (d.lo, d.hi) == interval_oracle(op, range(a, a + wa + 1), range(b, b + wb + 1))


SIG_ONLY = check(make(SIG, "    skip", INIT))


def test_enumerate_examples():
    assert enumerate_domain(BooleanDomain()) == [False, True]
    assert enumerate_domain(IntRange(2, 4)) == [2, 3, 4]
    assert enumerate_domain(EnumDomain("Color", ("Red", "Green", "Blue"))) == ["Red", "Green", "Blue"]


def test_enumerate_named_domain(typed):
    vals = enumerate_domain(typed.resolve("Color"))
    assert vals == ["Red", "Green", "Blue"]


@given(st.integers(-20, 20), st.integers(0, 30))
def test_enumeration_cardinality(lo, width):
    d = IntRange(lo, lo + width)
    vals = enumerate_domain(d)
    assert len(vals) == len(set(vals)) == cardinality(d) == width + 1


def test_domain_of_stable(typed):
    t = parse_term("f($x) * 2 + c")
    env = {"x": IntRange(0, 2)}
    assert domain_of(t, typed, env) == domain_of(t, check(typed.model), env)
