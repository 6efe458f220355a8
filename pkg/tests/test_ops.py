import pytest
from hypothesis import given, strategies as st

from sosbench.cli import load_signature
from sosbench.ops import eval_op, fill, match, normalize, unfold_count, validate_signature_ops
from sosbench.signature import enumerate_terms
from sosbench.syntax import parse_signature
from sosbench.terms import Con, Meta, Op, Subst, Var, instantiate, size

SIG = load_signature("shiftreset.sig")
CTXS = enumerate_terms(SIG, "c", (), 5)
PROGS = enumerate_terms(SIG, "p", (), 4)
OPEN_CTXS = enumerate_terms(SIG, "c", ("v",), 4)
VALS = enumerate_terms(SIG, "v", (), 3)


def plug(E, e):
    return eval_op(SIG, "plug", E, [e])


def comp(E, F):
    return eval_op(SIG, "comp", E, [F])


def test_plug_examples(P):
    I = P("\\x.x")
    assert plug(Con("hole"), I) == I
    assert plug(P("[] (\\y.y)"), I) == P("(\\x.x) (\\y.y)")
    assert plug(P("(\\y.y) []"), I) == P("(\\y.y) (\\x.x)")


def test_comp_example(P):
    E = P("[] (\\y.y)")
    F = P("(\\z.z) []")
    assert comp(E, F) == P("((\\z.z) []) (\\y.y)")


def test_normalize_removes_ops_and_substs(P):
    t = Op("plug", P("[] (\\y.y)"), (Subst(Con("app", [Var(0), Var(0)]), (P("\\x.x"),)),))
    r = normalize(SIG, t)
    assert r == P("((\\x.x) (\\x.x)) (\\y.y)")


def test_no_clause_raises():
    from sosbench.ops import EvaluationError

    with pytest.raises(EvaluationError):
        eval_op(SIG, "plug", Con("lam", [Var(0)], [1]), [Var(0)])


def test_shipped_ops_validate():
    assert validate_signature_ops(SIG) == []


def test_missing_clause_is_a_problem():
    text = open(SIG_PATH()).read().replace("plug(hole ; e) = e\n", "")
    probs = validate_signature_ops(parse_signature(text))
    assert probs and any("hole" in str(p) for p in probs)


def SIG_PATH():
    from sosbench.cli import signature_path

    return signature_path("shiftreset.sig")


@given(st.sampled_from(CTXS), st.sampled_from(CTXS), st.sampled_from(PROGS))
def test_plug_comp_associate(E, F, e):
    assert plug(comp(E, F), e) == plug(E, plug(F, e))


@given(st.sampled_from(CTXS), st.sampled_from(CTXS), st.sampled_from(CTXS))
def test_comp_is_associative(E, F, G):
    assert comp(comp(E, F), G) == comp(E, comp(F, G))


@given(st.sampled_from(CTXS))
def test_hole_is_a_unit(E):
    h = Con("hole")
    assert comp(E, h) == E and comp(h, E) == E


@given(st.sampled_from(CTXS), st.sampled_from(PROGS))
def test_unfolding_terminates_linearly(E, e):
    # one unfolding per context node on the spine
    assert unfold_count(SIG, "plug", E, [e]) <= size(E)


@given(st.sampled_from(OPEN_CTXS), st.sampled_from(PROGS), st.sampled_from(VALS))
def test_ops_commute_with_substitution(E, e, v):
    # (E[e])[x:=v] == (E[x:=v])[e]   for closed e
    lhs = instantiate(plug(E, _weaken(e)), [v])
    rhs = plug(instantiate(E, [v]), e)
    assert lhs == rhs


def _weaken(t):
    from sosbench.terms import shift

    return shift(t, 1)


def test_match_and_fill_round_trip(P):
    pat = Con("app", [Meta("a", ()), Meta("b", ())])
    t = P("(\\x.x) (\\y. y y)")
    env = match(pat, t)
    assert env is not None
    assert fill(pat, env) == t
    assert match(Con("reset", [Meta("a", ())]), t) is None
