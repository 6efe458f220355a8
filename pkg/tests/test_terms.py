from hypothesis import given, settings, strategies as st

from sosbench.cli import load_signature
from sosbench.signature import enumerate_terms
from sosbench.terms import (
    Con, Op, Subst, Var, identity_args, instantiate, is_closed, max_free, shift, size, substitute,
)

SIG = load_signature("shiftreset.sig")
OPEN1 = enumerate_terms(SIG, "p", ("v",), 5)
OPEN2 = enumerate_terms(SIG, "p", ("v", "v"), 4)
CLOSED_V = enumerate_terms(SIG, "v", (), 4)

terms1 = st.sampled_from(OPEN1)
terms2 = st.sampled_from(OPEN2)
values = st.sampled_from(CLOSED_V)


def test_constructors_are_immutable_and_hashable():
    t = Con("lam", [Var(0)], [1])
    assert t == Con("lam", (Var(0),), (1,))
    assert hash(t) == hash(Con("lam", (Var(0),), (1,)))
    try:
        t.name = "x"
    except AttributeError:
        pass
    else:
        raise AssertionError("term was mutable")


def test_size_counts_nodes():
    assert size(Var(0)) == 1
    assert size(Con("app", [Var(0), Con("lam", [Var(0)], [1])])) == 4


def test_closedness():
    assert is_closed(Con("lam", [Var(0)], [1]))
    assert not is_closed(Con("lam", [Var(1)], [1]))
    assert max_free(Con("lam", [Var(2)], [1])) == 2


def test_negative_index_rejected():
    try:
        Var(-1)
    except ValueError:
        return
    raise AssertionError


def test_binder_count_mismatch_rejected():
    try:
        Con("app", [Var(0)], [0, 0])
    except ValueError:
        return
    raise AssertionError


def test_op_and_subst_nodes_compare_structurally():
    a = Op("plug", Con("hole"), (Var(0),))
    assert a == Op("plug", Con("hole"), (Var(0),))
    s = Subst(Var(0), (Con("hole"),))
    assert s == Subst(Var(0), (Con("hole"),))


def test_instantiate_beta_example():
    # (x. x x)[y:=lam z. z]
    body = Con("app", [Var(0), Var(0)])
    ident = Con("lam", [Var(0)], [1])
    assert instantiate(body, [ident]) == Con("app", [ident, ident])


def test_instantiate_under_binder_shifts():
    # body lam y. x  with x := free var 0 of the outer context
    body = Con("lam", [Var(1)], [1])
    assert instantiate(body, [Var(0)]) == Con("lam", [Var(1)], [1])


@given(terms1)
def test_shift_by_zero_is_identity(t):
    assert shift(t, 0) is t


@given(terms1)
def test_identity_substitution(t):
    assert substitute(t, identity_args(1)) == t


@given(terms2)
def test_identity_substitution_two_slots(t):
    assert substitute(t, identity_args(2)) == t


@given(terms1, values)
def test_instantiate_closes_single_slot(t, v):
    r = instantiate(t, [v])
    assert is_closed(r)


@given(terms1)
def test_shift_then_instantiate_cancels(t):
    # weakening by one slot, then filling that slot, is the identity
    assert instantiate(shift(t, 1, 1), [Var(0)]) == instantiate(t, [Var(0)])
    assert instantiate(shift(t, 1), [Con("hole")]) == t


@given(terms2, values, values)
def test_substitution_composition(t, v, w):
    # filling both slots at once equals filling the inner one, then the outer one
    both = substitute(t, [v, w])
    stepwise = instantiate(instantiate(t, [w]), [v])
    assert both == stepwise


@given(terms1, values)
def test_instantiate_size(t, v):
    occurrences = sum(1 for _ in _vars(t))
    assert size(instantiate(t, [v])) == size(t) + occurrences * (size(v) - 1)


def _vars(t, depth=0):
    if type(t) is Var:
        if t.index == depth:
            yield t
        return
    for a, k in zip(t.args, t.binders):
        yield from _vars(a, depth + k)


@settings(max_examples=50)
@given(terms2)
def test_shift_composes(t):
    assert shift(shift(t, 1), 2) == shift(t, 3)
