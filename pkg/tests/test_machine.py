import pytest
from hypothesis import given, settings, strategies as st

from sosbench.cli import load_signature
from sosbench.engine import build_label_universe
from sosbench.machine import (
    ControlStuck, MachineError, Step, Value, evaluate, machine_step, machine_weak_labels, oracle_batch,
    oracle_compare, random_programs, run,
)
from sosbench.signature import enumerate_terms
from sosbench.syntax import parse_term
from sosbench.terms import Con

SIG = load_signature("shiftreset.sig")
LABELS = build_label_universe(SIG, 2)
OMEGA = "(\\y. y y) (\\y. y y)"


def P(text):
    return parse_term(SIG, text)


def test_beta():
    assert machine_step(P("(\\x.x) (\\y.y)")) == Step(P("\\y.y"))


def test_reset_of_value():
    assert machine_step(P("<\\x.x>")) == Step(P("\\x.x"))


def test_shift_under_empty_context():
    assert machine_step(P("<shift k. k>")) == Step(P("<\\x.<x>>"))


def test_bare_shift_is_stuck():
    out = machine_step(P("shift k. k"))
    assert isinstance(out, ControlStuck)
    assert out.context == Con("hole")


def test_value_is_final():
    assert machine_step(P("\\x.x")) == Value(P("\\x.x"))


def test_capture_stops_at_nearest_reset():
    # <(\x.x) <(\y.y) (shift k. k)>>: only the inner application is captured
    e = P("<(\\x.x) <(\\y.y) (shift k. k)>>")
    nxt = machine_step(e).next
    assert nxt == P("<(\\x.x) <\\z.<(\\y.y) z>>>")


def test_open_terms_rejected():
    with pytest.raises(MachineError):
        machine_step(parse_term(SIG, "x", ["x"]))


def test_omega_cycles():
    r = run(P(OMEGA), 10)
    assert r.cyclic and r.complete and r.diverged
    assert evaluate(P(OMEGA)) is None


def test_evaluate_uses_continuation():
    # <(\x.x) (shift k. k (k (\z.z)))> -> \z.z
    assert evaluate(P("<(\\x.x) (shift k. k (k (\\z.z)))>")) == Value(P("\\z.z"))


def test_weak_labels():
    w = machine_weak_labels(P("(\\x.x) (\\y. y y)"), 10)
    assert w.v_target(P("\\z.z")) == P("(\\z.z) (\\z.z)")
    assert w.c_family is None
    s = machine_weak_labels(P("(\\x.x) (shift k. k)"), 10)
    assert s.v_family is None and s.c_family is not None
    assert machine_weak_labels(P(OMEGA), 10).diverged


def _decompositions(t, path=()):
    """Every (context path, redex) split of ``t``, found without the machine's strategy."""
    out = []
    if t.name == "app":
        a, b = t.args
        if a.name == "lam" and b.name == "lam":
            out.append(path)
        if a.name != "lam":
            out += _decompositions(a, path + ("L",))
        elif b.name != "lam":
            out += _decompositions(b, path + ("R",))
    elif t.name == "reset":
        if t.args[0].name == "lam":
            out.append(path)
        else:
            out += _decompositions(t.args[0], path + ("reset",))
    elif t.name == "shift":
        out.append(path)
    return out


@settings(max_examples=200, deadline=None)
@given(st.sampled_from(enumerate_terms(SIG, "p", (), 6)))
def test_unique_decomposition(e):
    splits = _decompositions(e)
    if e.name == "lam":
        assert splits == [] and machine_step(e) == Value(e)
        return
    # call-by-value frames admit at most one redex position
    assert len(splits) <= 1
    assert isinstance(machine_step(e), (Step, ControlStuck))


@settings(max_examples=100, deadline=None)
@given(st.sampled_from(enumerate_terms(SIG, "p", (), 6)))
def test_step_is_deterministic(e):
    assert machine_step(e) == machine_step(e)


@pytest.mark.parametrize("text", [
    "\\x.x", "<\\x.x>", "<shift k. k>", "(\\x.x) (\\y.y)", OMEGA, "shift k. k", "<(\\x.x) (shift k. k)>",
    "\\x. <x>", "(\\x. x x) (\\y.y)",
])
def test_oracle_on_examples(text):
    rep = oracle_compare(SIG, P(text), 30, LABELS)
    assert rep.clean, rep.discrepancies
    assert rep.compared > 0


def test_oracle_small_batch():
    reports = oracle_batch(SIG, n=20, max_size=6, fuel=30, seed=1)
    assert len(reports) == 20
    assert all(r.clean for r in reports)


def test_random_programs_are_seeded():
    assert random_programs(SIG, 5, 6, seed=3) == random_programs(SIG, 5, 6, seed=3)
    assert len(set(random_programs(SIG, 50, 6, seed=0))) == 50


def test_oracle_with_wider_label_pool():
    # at label size 2 the pool has a single value and a single context
    reports = oracle_batch(SIG, n=100, max_size=8, fuel=50, label_size=3, seed=0)
    assert sum(r.compared for r in reports) == 800
    assert all(r.clean for r in reports)
