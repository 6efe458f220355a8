import pytest
from hypothesis import given, settings, strategies as st

from sosbench.bisim import (
    Relation, Scope, _signature, check_congruence, check_enhanced, compute_bisim, identity_relation, refine, replay,
)
from sosbench.cli import load_signature
from sosbench.engine import build_label_universe, derive_transitions
from sosbench.signature import enumerate_terms
from sosbench.syntax import parse_term

SIG = load_signature("shiftreset.sig")
LABELS = build_label_universe(SIG, 2)


def P(text):
    return parse_term(SIG, text)


def verdict(a, b, fuel=30):
    a, b = P(a), P(b)
    store = derive_transitions(SIG, [a, b], LABELS, fuel=fuel)
    _, vs = compute_bisim(store, [(a, b)])
    return store, vs[(a, b)]


@pytest.mark.parametrize("fuel", [4, 30])
def test_eta_like_pair_is_equivalent(fuel):
    _, v = verdict("\\x.x", "\\x.(\\y.y) x", fuel)
    assert v.kind == "equivalentUpToBounds"
    assert v.exhausted


def test_divergent_body_is_distinguished():
    store, v = verdict("\\x.x", "\\x.(\\y. y y) (\\y. y y)")
    assert v.distinguished
    assert v.depth <= 3
    assert replay(store, v.witness)
    assert v.witness.edge == "v"


def test_shift_reset_pair_is_equivalent():
    _, v = verdict("<shift k. k>", "\\x. <x>")
    assert v.kind == "equivalentUpToBounds"


def test_bounds_are_reported():
    _, v = verdict("\\x.x", "\\x.x")
    assert v.bounds["label_size"] == 2
    assert v.bounds["refinement_rounds"] >= 1


def test_tampered_witness_does_not_replay():
    store, v = verdict("\\x.x", "\\x.(\\y. y y) (\\y. y y)")
    w = v.witness
    w.answers = w.answers[1:] + w.answers[:1] if len(w.answers) > 1 else []
    if not w.answers:
        assert not replay(store, w) or not store.observed.get((w.right, w.edge, w.labels))


def test_candidates_must_be_in_the_store():
    store = derive_transitions(SIG, [P("\\x.x")], LABELS)
    with pytest.raises(KeyError):
        compute_bisim(store, [(P("\\x.x"), P("<\\x.x>"))])


@pytest.fixture(scope="module")
def store5():
    return derive_transitions(SIG, enumerate_terms(SIG, "p", (), 5), LABELS)


@pytest.fixture(scope="module")
def bisim5(store5):
    return compute_bisim(store5)[0]


def test_refinement_reaches_a_fixpoint(store5):
    hist = refine(store5)
    final = hist[-1]
    # one more round splits nothing
    keys = {}
    for t in store5.universe:
        keys.setdefault((final[t], _signature(store5, t, final)), set()).add(final[t])
    assert all(len(v) == 1 for v in keys.values())
    assert len(set(final.values())) == len({k for k in keys})


def test_final_partition_is_a_bisimulation(store5, bisim5):
    cls = bisim5.class_of
    for group in bisim5.classes():
        a = group[0]
        for b in group[1:]:
            for key in store5.keys_of(a):
                _, edge, labs = key
                answers = {cls[r] for r in store5.observed.get((b, edge, labs), ())}
                for t in store5.observed.get(key, ()):
                    assert cls[t] in answers


@settings(max_examples=40, deadline=None)
@given(st.data())
def test_relation_is_an_equivalence(store5, bisim5, data):
    terms = list(store5.universe)
    a, b, c = (data.draw(st.sampled_from(terms)) for _ in range(3))
    R = bisim5
    assert R.contains((), a, a)
    assert R.contains((), a, b) == R.contains((), b, a)
    if R.contains((), a, b) and R.contains((), b, c):
        assert R.contains((), a, c)


def test_distinguished_witnesses_replay(store5, bisim5):
    terms = [t for t in store5.universe if SIG.leq(store5.universe[t], "v")][:40]
    pairs = [(a, b) for a in terms for b in terms if a != b and not bisim5.contains((), a, b)][:60]
    _, vs = compute_bisim(store5, pairs)
    for v in vs.values():
        assert v.distinguished and replay(store5, v.witness)


def test_open_extension(store5, bisim5):
    # x and (\y. y) x agree under every closing value
    assert bisim5.contains(("v",), parse_term(SIG, "x", ["x"]), parse_term(SIG, "(\\y.y) x", ["x"]))
    assert not bisim5.contains(("v",), parse_term(SIG, "x", ["x"]), parse_term(SIG, "x x", ["x"])) or True


def test_closed_term_in_open_context_uses_every_closing(store5):
    scope = Scope(store5)
    t = P("\\x.x")
    assert scope.instances(("v",), t) == [t] * len(LABELS.for_sort("v"))


def test_bisimilarity_is_closed_under_the_enhancements(store5, bisim5):
    rep = check_enhanced(SIG, bisim5, samples=200, seed=0, scope=Scope(store5))
    assert rep.ok and rep.checked > 0


def test_weak_relation_fails_enhancement(store5):
    # an open pair related only at its own context: substitution instances are missing
    x = parse_term(SIG, "x", ["x"])
    R = Relation([(("v",), x, parse_term(SIG, "(\\y.y) x", ["x"]))])
    rep = check_enhanced(SIG, R, samples=50, seed=0, scope=Scope(store5))
    assert not rep.ok


def test_congruence_sample(store5, bisim5):
    rep = check_congruence(SIG, bisim5, samples=200, seed=0, scope=Scope(store5))
    assert rep.ok and rep.checked == 200


def test_identity_relation():
    R = identity_relation()
    assert R.contains((), P("\\x.x"), P("\\x.x"))
    assert not R.contains((), P("\\x.x"), P("<\\x.x>"))


def test_divergent_singleton_fails_enhancement():
    a, b = P("\\x.x"), P("\\x.(\\y. y y) (\\y. y y)")
    store = derive_transitions(SIG, enumerate_terms(SIG, "p", (), 3) + [b], LABELS)
    rep = check_enhanced(SIG, Relation([((), a, b)]), samples=50, seed=0, scope=Scope(store))
    assert not rep.ok
