"""The call-by-name PCF instance: golden transitions and a few observations."""

from pathlib import Path

import pytest

from sosbench.bisim import compute_bisim, replay
from sosbench.cli import load_signature
from sosbench.engine import build_label_universe, derive_transitions
from sosbench.formatcheck import format_report
from sosbench.howe import build_universe, check_howe_properties, howe_closure
from sosbench.signature import enumerate_terms
from sosbench.syntax import parse_term

SIG = load_signature("pcf.sig")
LABELS = build_label_universe(SIG, 2)
GOLDEN = Path(__file__).parent / "golden" / "pcf_transitions.txt"


def P(text):
    return parse_term(SIG, text)


def _golden():
    rows = []
    for line in GOLDEN.read_text().splitlines():
        if line.strip() and not line.startswith("#"):
            src, edge, labs, tgt = (p.strip() for p in line.split("|"))
            labs = tuple(P(x) for x in labs.split(",")) if labs else ()
            rows.append((P(src), edge, labs, P(tgt)))
    return rows


GOLDEN_ROWS = _golden()


def test_golden_file_size():
    assert len(GOLDEN_ROWS) == 20


@pytest.mark.parametrize("row", GOLDEN_ROWS, ids=lambda r: f"{r[1]}")
def test_golden_transition(row):
    src, edge, labs, tgt = row
    store = derive_transitions(SIG, [src], LABELS)
    assert tgt in store.lookup(src, edge, labs)


def test_format_check_passes():
    assert format_report(SIG).ok


def reach(text, edge="tau", labs=()):
    e = P(text)
    return derive_transitions(SIG, [e], LABELS).lookup(e, edge, labs)


def test_pred_of_successor():
    assert P("z") in reach("pred(s(z))")
    assert P("z") in reach("pred(z)")


def test_ifz_branches():
    assert P("s(z)") in reach("ifz(z, s(z), x. z)")
    # the branch binds the predecessor
    assert P("s(z)") in reach("ifz(s(z), z, x. s(x))")
    assert P("s(s(z))") in reach("ifz(s(s(z)), z, x. s(x))")


def test_fix_unfolds():
    out = reach("fix(\\x. x)")
    assert P("(\\x. x) (fix(\\x. x))") in out
    assert not any(t == P("z") for t in out)


def test_numerals_observed():
    assert P("z") in reach("z", "zero")
    assert reach("z", "succ") == set() or not reach("z", "succ")
    assert P("z") in reach("(\\x. x) (s(z))", "succ")


def verdict(a, b):
    a, b = P(a), P(b)
    store = derive_transitions(SIG, [a, b], LABELS)
    _, vs = compute_bisim(store, [(a, b)])
    return store, vs[(a, b)]


def test_bisim_verdicts():
    assert verdict("pred(s(z))", "z")[1].kind == "equivalentUpToBounds"
    assert verdict("\\x. x", "\\x. (\\y. y) x")[1].kind == "equivalentUpToBounds"
    store, v = verdict("s(z)", "z")
    assert v.distinguished and replay(store, v.witness)


def test_howe_small_universe():
    store = derive_transitions(SIG, enumerate_terms(SIG, "t", (), 3), LABELS)
    rel, _ = compute_bisim(store)
    hc = howe_closure(SIG, build_universe(SIG, 3, store), (), rel)
    for r in check_howe_properties(SIG, hc, store):
        assert r.ok, (r.name, r.violations[:3])
