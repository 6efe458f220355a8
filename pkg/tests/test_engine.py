import pytest
from hypothesis import given, settings, strategies as st

from sosbench.cli import load_signature
from sosbench.engine import (
    UnknownTerm, build_label_universe, derive_transitions, tau_edge, transitions_of, value_step_counterexamples,
)
from sosbench.signature import enumerate_terms
from sosbench.syntax import parse_term, show

SIG = load_signature("shiftreset.sig")
LABELS = build_label_universe(SIG, 2)


def P(text):
    return parse_term(SIG, text)


def targets(st_, t, edge, labs=()):
    return set(st_.targets(t, edge, labs))


def test_label_universe():
    assert LABELS.for_sort("v") == (P("\\x.x"),)
    assert LABELS.for_sort("c") == (P("[]"),)
    assert len(build_label_universe(SIG, 3).for_sort("v")) == 6


def test_reset_of_value():
    t = P("<\\x.x>")
    store = derive_transitions(SIG, [t], LABELS)
    assert P("\\x.x") in targets(store, t, "tau")
    assert store.exhausted(t)


def test_beta_through_value_label():
    t = P("(\\x.x) (\\y.y)")
    store = derive_transitions(SIG, [t], LABELS)
    assert targets(store, t, "tau") == {t, P("\\x.x")}


def test_shift_inside_reset():
    t = P("<shift k. k>")
    store = derive_transitions(SIG, [t], LABELS)
    assert targets(store, t, "tau") == {t, P("<\\x. <x>>"), P("\\x. <x>")}


def test_shift_offers_context_transition():
    t = P("shift k. k")
    store = derive_transitions(SIG, [t], LABELS)
    assert P("<\\x. <x>>") in targets(store, t, "c", (P("[]"),))
    assert targets(store, t, "tau") == {t}


def test_omega_loops_and_converges():
    t = P("(\\x. x x) (\\x. x x)")
    store = derive_transitions(SIG, [t], LABELS)
    assert targets(store, t, "tau") == {t}
    assert store.converged and store.exhausted(t)


def test_transitions_of_unknown_term():
    store = derive_transitions(SIG, [P("\\x.x")], LABELS)
    with pytest.raises(UnknownTerm):
        transitions_of(store, P("<\\x.x>"), "tau")
    pairs, exhausted = transitions_of(store, P("\\x.x"), "v")
    assert exhausted and pairs == [((P("\\x.x"),), P("\\x.x"))]


def test_open_seed_rejected():
    from sosbench.terms import Var

    with pytest.raises(ValueError):
        derive_transitions(SIG, [Var(0)], LABELS)


def test_tau_edge_lookup(pcf):
    assert tau_edge(SIG) == "tau"
    assert tau_edge(pcf) == "tau"


def test_truncation_marks_keys_incomplete():
    t = P("(\\x. x x) (\\x. x x x)")
    store = derive_transitions(SIG, [t], LABELS, size_cap=12)
    assert not store.exhausted(t)


def test_low_fuel_is_not_converged():
    t = P("<(\\x. <x>) ((\\y. y) (\\z. z))>")
    store = derive_transitions(SIG, [t], LABELS, fuel=1)
    assert not store.converged


SEEDS = enumerate_terms(SIG, "p", (), 4)


@settings(max_examples=25, deadline=None)
@given(st.sampled_from(SEEDS))
def test_more_fuel_only_adds(t):
    small = derive_transitions(SIG, [t], LABELS, fuel=2)
    big = derive_transitions(SIG, [t], LABELS, fuel=30)
    for key, tgts in small.observed.items():
        if key in big.observed:
            assert set(tgts) <= set(big.observed[key])


@settings(max_examples=25, deadline=None)
@given(st.sampled_from(SEEDS))
def test_saturation_closure(t):
    store = derive_transitions(SIG, [t], LABELS)
    if not store.exhausted(t):
        return
    reach = targets(store, t, "tau")
    assert t in reach
    # weak tau is transitive on the exhausted fragment
    for u in reach:
        if u in store.universe and store.exhausted(u):
            assert targets(store, u, "tau") <= reach
    # every labelled target is closed under tau-successors
    for key in store.keys_of(t):
        if key[1] == "tau":
            continue
        for u in store.observed.get(key, ()):
            if store.exhausted(u):
                assert targets(store, u, "tau") <= set(store.observed[key])


def test_value_steps_factor_through_lam():
    store = derive_transitions(SIG, enumerate_terms(SIG, "p", (), 5), LABELS)
    assert value_step_counterexamples(store) == []


def test_store_is_deterministic():
    seeds = enumerate_terms(SIG, "p", (), 4)
    a = derive_transitions(SIG, seeds, LABELS)
    b = derive_transitions(SIG, list(seeds), LABELS)
    assert list(a.universe) == list(b.universe)
    assert [show(SIG, t) for t in a.universe] == [show(SIG, t) for t in b.universe]


def test_opt_in_label_extension_grows_pool():
    t = P("(\\x. x) (\\y. \\z. z)")
    store = derive_transitions(SIG, [t], LABELS, extend_labels=True)
    assert len(store.label_tuples("v")) > 1
    assert store.base_labels is LABELS
