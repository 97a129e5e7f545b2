import pytest
from hypothesis import given, settings, strategies as st

from asmflat import corpus, flatten_pipeline, is_normal_form, parse, parse_rule, parse_term, print_model
from asmflat.core import Apply, BoolLit, IntLit, Update
from asmflat.parser import ParseErrors
from asmflat.printer import print_rule

MINIMAL = """asm minimal
signature:
  controlled a : Boolean
definitions:
  main rule r_main = skip
init:
  a := false
"""


def test_minimal_model():
    m = parse(MINIMAL)
    assert m.name == "minimal"
    assert len(m.functions) == 1


def test_missing_endif_reports_one_error_at_rule_end():
    text = MINIMAL.replace("main rule r_main = skip", "main rule r_main = if a then a := false")
    with pytest.raises(ParseErrors) as exc:
        parse(text)
    errs = exc.value.errors
    assert len(errs) == 1
    assert "endif" in errs[0].expected
    assert errs[0].span.line == text.splitlines().index("init:") + 1


def test_errors_recover_at_rule_boundaries():
    text = MINIMAL.replace("definitions:\n", "definitions:\n  rule r1 = a := \n  rule r2 = if then skip endif\n")
    with pytest.raises(ParseErrors) as exc:
        parse(text)
    assert len(exc.value.errors) == 2


def test_duplicate_declaration():
    text = MINIMAL.replace("  controlled a : Boolean\n", "  controlled a : Boolean\n  controlled a : Boolean\n")
    with pytest.raises(ParseErrors, match="duplicate"):
        parse(text)


def test_reserved_prefix_rejected_for_users():
    text = MINIMAL.replace("controlled a", "controlled flat_a").replace("a := false", "flat_a := false")
    with pytest.raises(ParseErrors):
        parse(text)
    assert parse(text, allow_reserved=True).functions[0].name == "flat_a"


def test_dijkstra_histogram_from_manifest():
    from asmflat import count_rules
    entry = next(e for e in corpus.manifest()["models"] if e["name"] == "dijkstra_mini")
    assert count_rules(parse(corpus.source("dijkstra_mini"))).as_dict() == entry["histogram"]


def test_update_prints_canonically():
    u = Update(Apply("f", (IntLit(1), IntLit(2))), BoolLit(True))
    assert print_rule(u) == "f(1, 2) := true"


@pytest.mark.parametrize("name", corpus.names())
def test_corpus_roundtrip(name):
    m = corpus.load(name)
    again = parse(print_model(m))
    assert again == m
    assert print_model(again) == print_model(m)


@pytest.mark.parametrize("name", corpus.names())
def test_flattened_roundtrip_stays_normal(name):
    flat, _ = flatten_pipeline(corpus.load(name))
    back = parse(print_model(flat), allow_reserved=True)
    assert back == flat
    assert is_normal_form(back)[0]


def test_equality_ignores_spans():
    a = parse_term("f(1) + 2")
    b = parse_term("f( 1 )   +   2")
    assert a == b
    assert a.span != b.span


def test_chooseone_and_isdef_round_trip():
    t = parse_term("isDef(chooseone({$v in [1..3] | $v > 1 : $v}))")
    from asmflat.printer import term
    assert parse_term(term(t)) == t


def test_precedence():
    t = parse_term("not(a) or b and c = 1 + 2 * 3")
    from asmflat.printer import term
    assert term(t) in ("not(a) or b and c = 1 + 2 * 3", "not(a) or (b and (c = (1 + (2 * 3))))")
    assert parse_term(term(t)) == t


def test_deterministic():
    text = corpus.source("atm")
    assert parse(text) == parse(text)
    bad = text.replace("endlet", "endlt", 1)
    with pytest.raises(ParseErrors) as e1:
        parse(bad)
    with pytest.raises(ParseErrors) as e2:
        parse(bad)
    assert [str(e) for e in e1.value.errors] == [str(e) for e in e2.value.errors]


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from(["", "(", "endpar", "$", "#", ":=", "if", "\n"]))
def test_error_spans_inside_text(pos, junk):
    text = corpus.source("elevator")
    pos %= len(text)
    mutated = text[:pos] + junk + text[pos + 1:]
    try:
        parse(mutated)
    except ParseErrors as e:
        assert e.errors
        for err in e.errors:
            assert err.message
            assert 0 <= err.span.start <= err.span.end <= len(mutated)


def test_comments():
    r = parse_rule("par // first\n  a := 1 // second\nendpar")
    assert len(r.rules) == 1
