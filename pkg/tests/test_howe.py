import pytest
from hypothesis import given, settings, strategies as st

from sosbench.bisim import Relation, compute_bisim
from sosbench.cli import load_signature
from sosbench.engine import build_label_universe, derive_transitions
from sosbench.howe import (
    build_universe, check_howe_properties, flexible_check, howe_closure, inject, sccs, transitive_closure,
)
from sosbench.signature import enumerate_terms
from sosbench.syntax import parse_term
from sosbench.terms import Con

SIG = load_signature("shiftreset.sig")


def P(text, ctx=()):
    return parse_term(SIG, text, list(ctx))


@pytest.fixture(scope="module")
def setup4():
    labels = build_label_universe(SIG, 2)
    seeds = enumerate_terms(SIG, "p", (), 4)
    store = derive_transitions(SIG, seeds, labels)
    rel, _ = compute_bisim(store)
    U = build_universe(SIG, 4, store)
    return store, rel, U


@pytest.fixture
def hc4(setup4):
    store, rel, U = setup4
    return howe_closure(SIG, U, (), rel)


def test_properties_hold(setup4, hc4):
    store = setup4[0]
    res = check_howe_properties(SIG, hc4, store)
    assert [r.name for r in res] == [
        "compatible", "closed under ;sim", "reflexive", "contains sim", "symmetric closure", "flexible simulation",
    ]
    for r in res:
        assert r.ok, (r.name, r.violations[:3])
        assert r.pairs_checked > 0


def test_closure_is_extensive_and_idempotent(setup4, hc4):
    _, rel, U = setup4
    pairs = list(hc4.closure.pairs())
    again = howe_closure(SIG, U, pairs, rel)
    assert set(again.closure.pairs()) == set(pairs)


def test_closure_is_monotone_in_base(setup4, hc4):
    _, rel, U = setup4
    base = [((), P("\\x.x"), P("\\x.<x>"))]
    bigger = howe_closure(SIG, U, base, rel)
    assert set(hc4.closure.pairs()) <= set(bigger.closure.pairs())
    assert bigger.closure.contains((), P("\\x.x"), P("\\x.<x>"))


def test_congruence_lifts_sim_pairs(setup4, hc4):
    U = hc4.universe
    H, sim = hc4.closure, hc4.sim
    lifted = 0
    for group in sim.groups:
        for x in group:
            for y in group:
                ctx, a = U.entries[x]
                b = U.entries[y][1]
                if x == y or ctx:
                    continue
                ra, rb = Con("reset", (a,), (0,)), Con("reset", (b,), (0,))
                if U.id((), ra) is not None and U.id((), rb) is not None:
                    assert H.contains((), ra, rb)
                    lifted += 1
    assert lifted > 0


def test_injection_is_detected(setup4, hc4):
    store = setup4[0]
    inject(hc4, P("\\x.x"), P("\\x.shift k.k"))
    res = {r.name: r for r in check_howe_properties(SIG, hc4, store)}
    assert not res["symmetric closure"].ok
    assert not res["flexible simulation"].ok
    assert res["flexible simulation"].violations


def test_injection_of_divergent_body():
    labels = build_label_universe(SIG, 2)
    a, b = P("\\x.x"), P("\\x.(\\y. y y) (\\y. y y)")
    store = derive_transitions(SIG, enumerate_terms(SIG, "p", (), 3) + [b], labels)
    rel, _ = compute_bisim(store)
    U = build_universe(SIG, 3, store, extra=[((), b)])
    hc = howe_closure(SIG, U, (), rel)
    assert flexible_check(SIG, hc, store).ok
    inject(hc, a, b)
    bad = flexible_check(SIG, hc, store)
    assert not bad.ok


def test_inject_outside_universe(hc4):
    with pytest.raises(KeyError):
        inject(hc4, P("\\x.x"), P("\\x.x x x x x x x"))


def test_open_terms_are_related(hc4):
    x = P("x", ["x"])
    assert hc4.closure.contains(("v",), x, x)


@settings(max_examples=50, deadline=None)
@given(st.dictionaries(st.integers(0, 7), st.lists(st.integers(0, 7), max_size=3), max_size=8))
def test_sccs_agree_with_reachability(graph):
    n = 8
    comp = sccs(n, graph)

    def reach(a):
        seen, todo = {a}, [a]
        while todo:
            for w in graph.get(todo.pop(), ()):
                if w not in seen:
                    seen.add(w)
                    todo.append(w)
        return seen

    R = [reach(a) for a in range(n)]
    for a in range(n):
        for b in range(n):
            assert (comp[a] == comp[b]) == (b in R[a] and a in R[b])


def test_transitive_closure():
    a, b, c = P("\\x.x"), P("<\\x.x>"), P("\\x.<x>")
    T = transitive_closure(Relation([((), a, b), ((), b, c)]))
    assert ((), a, c) in set(T)
