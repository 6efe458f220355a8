"""A direct abstract machine for the shift/reset calculus.

The machine works on closed programs by decomposing them into an evaluation
context and a redex, with ordinary call-by-value beta.  It shares no code
with the rule engine beyond the term representation, which makes it useful
as an oracle: ``oracle_compare`` runs both on the same program and reports
where their reachable sets or labelled families disagree.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .engine import LabelUniverse, build_label_universe, derive_transitions
from .signature import Signature, enumerate_terms
from .terms import Con, Term, Var, instantiate, shift

HOLE = Con("hole")


class MachineError(ValueError):
    pass


def lam(body: Term) -> Con:
    return Con("lam", (body,), (1,))


def app(a: Term, b: Term) -> Con:
    return Con("app", (a, b), (0, 0))


def reset(a: Term) -> Con:
    return Con("reset", (a,), (0,))


def is_value(t: Term) -> bool:
    return type(t) is Con and t.name == "lam"


def plug(E: Term, t: Term) -> Term:
    """E[t] for a context term built from hole, capp and cappr."""
    if E.name == "hole":
        return t
    if E.name == "capp":
        return app(E.args[0], plug(E.args[1], t))
    if E.name == "cappr":
        return app(plug(E.args[0], t), E.args[1])
    raise MachineError(f"not a context: {E.name}")


def compose(E: Term, F: Term) -> Term:
    """The context E[F]."""
    if E.name == "hole":
        return F
    if E.name == "capp":
        return Con("capp", (E.args[0], compose(E.args[1], F)), (0, 0))
    return Con("cappr", (compose(E.args[0], F), E.args[1]), (0, 0))


def continuation(E: Term) -> Term:
    """The captured continuation lam x. <E[x]>."""
    return lam(reset(plug(shift(E, 1), Var(0))))


@dataclass(frozen=True)
class Step:
    next: Term


@dataclass(frozen=True)
class Value:
    value: Term


@dataclass(frozen=True)
class ControlStuck:
    """A shift with no enclosing reset: ``body`` under its binder, and the local context."""

    body: Term
    context: Term


def _check(t: Term, depth: int = 0):
    if type(t) is Var:
        if t.index >= depth:
            raise MachineError("program is not closed")
        return
    if type(t) is not Con or t.name not in ("lam", "app", "shift", "reset"):
        raise MachineError(f"not a program: {t!r}")
    for a, k in zip(t.args, t.binders):
        _check(a, depth + k)


def _frames_to_context(frames) -> Term:
    E = HOLE
    for kind, other in reversed(frames):
        E = Con("cappr", (E, other), (0, 0)) if kind == "L" else Con("capp", (other, E), (0, 0))
    return E


def machine_step(e: Term):
    """One deterministic step: Step, Value or ControlStuck."""
    _check(e)
    if is_value(e):
        return Value(e)
    # frames from the root: ("L", e2) | ("R", v) | ("reset", None)
    frames = []
    t = e
    while True:
        name = t.name
        if name == "app":
            a, b = t.args
            if not is_value(a):
                frames.append(("L", b))
                t = a
            elif not is_value(b):
                frames.append(("R", a))
                t = b
            else:
                return Step(_rebuild(frames, instantiate(a.args[0], (b,))))
        elif name == "reset":
            inner = t.args[0]
            if is_value(inner):
                return Step(_rebuild(frames, inner))
            frames.append(("reset", None))
            t = inner
        elif name == "shift":
            cut = max((i for i, f in enumerate(frames) if f[0] == "reset"), default=-1)
            local = _frames_to_context(frames[cut + 1:])
            if cut < 0:
                return ControlStuck(t.args[0], local)
            body = instantiate(t.args[0], (continuation(local),))
            return Step(_rebuild(frames[:cut], reset(body)))
        else:
            raise MachineError(f"no redex in {e!r}")


def _rebuild(frames, t: Term) -> Term:
    for kind, other in reversed(frames):
        if kind == "L":
            t = app(t, other)
        elif kind == "R":
            t = app(other, t)
        else:
            t = reset(t)
    return t


@dataclass
class Run:
    states: list          # visited states, first is the start
    outcome: object       # Value, ControlStuck, or None when fuel ran out
    cyclic: bool = False  # a state repeated: the run diverges and ``states`` is complete

    @property
    def complete(self) -> bool:
        return self.outcome is not None or self.cyclic

    @property
    def diverged(self) -> bool:
        return self.outcome is None


def run(e: Term, fuel: int) -> Run:
    seen = {e}
    states = [e]
    t = e
    for _ in range(fuel):
        r = machine_step(t)
        if not isinstance(r, Step):
            return Run(states, r)
        t = r.next
        if t in seen:
            return Run(states, None, cyclic=True)
        seen.add(t)
        states.append(t)
    r = machine_step(t)
    return Run(states, r if not isinstance(r, Step) else None)


def evaluate(e: Term, fuel: int = 1000):
    """Run to a Value or ControlStuck; None if fuel runs out or the run cycles."""
    return run(e, fuel).outcome


@dataclass
class WeakLabels:
    v_family: Term | None = None           # body b of the value lam x. b
    c_family: tuple | None = None          # (captured body, local context)
    diverged: bool = False

    def v_target(self, w: Term) -> Term | None:
        return None if self.v_family is None else instantiate(self.v_family, (w,))

    def c_target(self, E: Term) -> Term | None:
        if self.c_family is None:
            return None
        body, F = self.c_family
        return reset(instantiate(body, (continuation(compose(E, F)),)))


def machine_weak_labels(e: Term, fuel: int) -> WeakLabels:
    out = run(e, fuel).outcome
    if isinstance(out, Value):
        return WeakLabels(v_family=out.value.args[0])
    if isinstance(out, ControlStuck):
        return WeakLabels(c_family=(out.body, out.context))
    return WeakLabels(diverged=True)


@dataclass
class OracleReport:
    term: Term
    tau_engine: frozenset | None
    tau_machine: frozenset | None
    discrepancies: list = field(default_factory=list)
    compared: int = 0
    skipped: int = 0

    @property
    def clean(self) -> bool:
        return not self.discrepancies


def oracle_compare(sig: Signature, e: Term, fuel: int, labels: LabelUniverse, store=None) -> OracleReport:
    """Engine vs machine on ``e``: tau-reachable sets and every labelled family in the pool.

    A key is compared only when the engine marks it complete and the machine
    finishes (value, stuck shift, or a detected cycle) within ``fuel``.
    """
    if store is None:
        store = derive_transitions(sig, [e], labels, fuel=fuel)
    rep = OracleReport(e, None, None)

    def reach(t):
        r = run(t, fuel)
        return frozenset(r.states) if r.complete else None

    def compare(key, expected):
        if key in store.incomplete or key not in store.observed:
            rep.skipped += 1
            return None
        got = frozenset(store.observed[key])
        if expected is None:
            rep.skipped += 1
            return got
        rep.compared += 1
        if got != expected:
            rep.discrepancies.append(
                {"key": key, "engine_only": sorted(got - expected, key=repr),
                 "machine_only": sorted(expected - got, key=repr)}
            )
        return got

    tau_m = reach(e)
    rep.tau_machine = tau_m
    rep.tau_engine = compare((e, "tau", ()), tau_m)
    weak = machine_weak_labels(e, fuel)
    if not weak.diverged or run(e, fuel).cyclic:
        for labs in store.label_tuples("v"):
            w = weak.v_target(labs[0])
            compare((e, "v", labs), frozenset() if w is None else reach(w))
        for labs in store.label_tuples("c"):
            t = weak.c_target(labs[0])
            compare((e, "c", labs), frozenset() if t is None else reach(t))
    else:
        rep.skipped += len(store.label_tuples("v")) + len(store.label_tuples("c"))
    return rep


def random_programs(sig: Signature, n: int, max_size: int, seed: int = 0) -> list[Term]:
    """``n`` distinct closed programs drawn uniformly from those of size <= ``max_size``."""
    pool = enumerate_terms(sig, "p", (), max_size)
    rng = random.Random(seed)
    return rng.sample(pool, min(n, len(pool)))


def oracle_batch(sig: Signature, n: int = 100, max_size: int = 8, fuel: int = 50, label_size: int = 2, seed: int = 0):
    labels = build_label_universe(sig, label_size)
    return [oracle_compare(sig, e, fuel, labels) for e in random_programs(sig, n, max_size, seed)]


__all__ = [
    "ControlStuck",
    "MachineError",
    "OracleReport",
    "Run",
    "Step",
    "Value",
    "WeakLabels",
    "evaluate",
    "machine_step",
    "machine_weak_labels",
    "oracle_batch",
    "oracle_compare",
    "random_programs",
    "run",
]
