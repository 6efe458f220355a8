import pytest

from sosbench.signature import enumerate_terms
from sosbench.syntax import ParseError, parse_term, show, show_rule, tokenize
from sosbench.terms import Con, Var

I = Con("lam", [Var(0)], [1])


def test_lambda_sugar(P):
    assert P("\\x.x") == I


def test_reset_shift_sugar(P):
    assert P("<shift k. k>") == Con("reset", [Con("shift", [Var(0)], [1])])


def test_application_by_juxtaposition(P):
    assert P("(\\x.x) (\\y.y)") == Con("app", [I, I])
    assert P("a b c", ctx=("a", "b", "c")) == Con("app", [Con("app", [Var(2), Var(1)]), Var(0)])


def test_prefix_form_matches_sugar(P):
    assert P("app(lam(x. x), lam(y. y))") == P("(\\x.x) (\\y.y)")
    assert P("reset(shift(k. k))") == P("<shift k. k>")


def test_holes_pick_the_context_constructor(P):
    assert P("[] (\\x.x)") == Con("cappr", [Con("hole"), I])
    assert P("(\\x.x) []") == Con("capp", [I, Con("hole")])


def test_unbound_name(P):
    with pytest.raises(ParseError) as e:
        P("y")
    assert "unbound" in str(e.value) and e.value.col == 1


def test_sort_mismatch(sr):
    with pytest.raises(ParseError):
        parse_term(sr, "app(lam(x. x), hole)")


def test_trailing_input(P):
    with pytest.raises(ParseError):
        P("\\x. x )")


def test_tokenizer_positions():
    toks = tokenize("a -tau->\n  b")
    assert [t.text for t in toks][:3] == ["a", "-", "tau"]
    assert toks[-1].line == 2


def test_show_names_binders(sr, P):
    assert show(sr, P("\\x. \\y. x y")) == "\\x. \\y. x y"
    assert show(sr, P("shift k. k (\\x.x)")) == "shift x. x (\\y. y)"


def test_show_prefix_mode(sr, P):
    assert show(sr, P("<\\x.x>"), prefix=True) == "reset(lam(x. x))"


def test_show_rule(sr):
    text = show_rule(sr, sr.rules[1])
    assert "lam" in text and "-v[" in text


@pytest.mark.parametrize("sort", ["p", "c"])
@pytest.mark.parametrize("ctx", [(), ("x",), ("x", "y")])
def test_round_trip_up_to_size_6(sr, sort, ctx):
    sorts = tuple("v" for _ in ctx)
    limit = 6 if len(ctx) < 2 else 5
    for t in enumerate_terms(sr, sort, sorts, limit):
        text = show(sr, t, ctx)
        assert parse_term(sr, text, ctx, sort=sort) == t, text


def test_round_trip_prefix_form(sr):
    for t in enumerate_terms(sr, "p", (), 5):
        assert parse_term(sr, show(sr, t, prefix=True)) == t


def test_round_trip_pcf(pcf):
    for t in enumerate_terms(pcf, "t", (), 5):
        assert parse_term(pcf, show(pcf, t)) == t
