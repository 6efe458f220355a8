"""Signatures: sorts, constructors, clause-defined operations, edge types and rules.

Also hosts the sort discipline (``check_sort``) and the finite term universes
used for bounded checking (``enumerate_terms``).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .terms import Con, Meta, Op, Subst, Term, Var


class SignatureError(Exception):
    """Malformed or inconsistent declaration."""


class SortError(Exception):
    """Ill-sorted or ill-scoped term."""


class SortMismatch(SortError):
    def __init__(self, actual, expected, term=None):
        super().__init__(f"expected sort {expected}, got {actual}")
        self.actual = actual
        self.expected = expected
        self.term = term


@dataclass(frozen=True)
class ArgSpec:
    binders: tuple[str, ...]
    sort: str


@dataclass(frozen=True)
class ConstructorDecl:
    name: str
    args: tuple[ArgSpec, ...]
    result: str

    @property
    def binder_counts(self) -> tuple[int, ...]:
        return tuple(len(a.binders) for a in self.args)


@dataclass(frozen=True)
class OperationDecl:
    name: str
    stratum: int
    main_sort: str
    aux_sorts: tuple[str, ...]
    result_sort: str


@dataclass(frozen=True)
class Clause:
    """``op(con(a1, .., an) ; y1, .., yk) = rhs``; metavariables are named by position."""

    op: str
    constructor: str
    arg_mvars: tuple[str, ...]
    aux_mvars: tuple[str, ...]
    rhs: Term
    line: int | None = field(default=None, compare=False)


@dataclass(frozen=True)
class EdgeTypeDecl:
    name: str
    source: str
    labels: tuple[str, ...]
    target: str


@dataclass(frozen=True)
class MetaVar:
    name: str
    sort: str
    ctx: tuple[str, ...] = ()


@dataclass(frozen=True)
class TransitionPattern:
    source: Term
    edge: str
    labels: tuple[Term, ...]
    target: Term


@dataclass(frozen=True)
class Rule:
    name: str
    mvars: tuple[MetaVar, ...]
    premises: tuple[TransitionPattern, ...]
    conclusion: TransitionPattern
    line: int | None = field(default=None, compare=False)

    @property
    def mvar_info(self) -> dict[str, MetaVar]:
        return {m.name: m for m in self.mvars}


class Signature:
    """Mutable while being declared; treat as frozen once parsing is done."""

    def __init__(self):
        self.sorts: list[str] = []
        self.subsorts: list[tuple[str, str]] = []
        self.constructors: dict[str, ConstructorDecl] = {}
        self.operations: dict[str, OperationDecl] = {}
        self.clauses: list[Clause] = []
        self.edges: dict[str, EdgeTypeDecl] = {}
        self.rules: list[Rule] = []
        self._leq: set[tuple[str, str]] | None = None
        self._enum_cache: dict = {}

    # declarations

    def add_sort(self, name):
        if name in self.sorts:
            raise SignatureError(f"duplicate sort {name!r}")
        self.sorts.append(name)
        self._leq = None

    def _need_sort(self, name):
        if name not in self.sorts:
            raise SignatureError(f"unknown sort {name!r}")

    def add_subsort(self, lower, upper):
        self._need_sort(lower)
        self._need_sort(upper)
        if self.leq(upper, lower) and lower != upper:
            raise SignatureError(f"subsort {lower} < {upper} creates a cycle")
        self.subsorts.append((lower, upper))
        self._leq = None

    def add_constructor(self, decl: ConstructorDecl):
        if decl.name in self.constructors or decl.name in self.operations:
            raise SignatureError(f"duplicate name {decl.name!r}")
        for a in decl.args:
            for s in a.binders:
                self._need_sort(s)
            self._need_sort(a.sort)
        self._need_sort(decl.result)
        self.constructors[decl.name] = decl
        self._enum_cache.clear()

    def add_operation(self, decl: OperationDecl):
        if decl.name in self.constructors or decl.name in self.operations:
            raise SignatureError(f"duplicate name {decl.name!r}")
        for s in (decl.main_sort, decl.result_sort, *decl.aux_sorts):
            self._need_sort(s)
        self.operations[decl.name] = decl

    def add_clause(self, clause: Clause):
        self.clauses.append(clause)

    def add_edge(self, decl: EdgeTypeDecl):
        if decl.name in self.edges:
            raise SignatureError(f"duplicate edge type {decl.name!r}")
        for s in (decl.source, decl.target, *decl.labels):
            self._need_sort(s)
        self.edges[decl.name] = decl

    def add_rule(self, rule: Rule):
        if any(r.name == rule.name for r in self.rules):
            raise SignatureError(f"duplicate rule {rule.name!r}")
        self.rules.append(rule)

    # sort order

    def leq(self, a: str, b: str) -> bool:
        if a == b:
            return True
        if self._leq is None:
            closure = set(self.subsorts)
            changed = True
            while changed:
                changed = False
                for (x, y), (y2, z) in itertools.product(list(closure), repeat=2):
                    if y == y2 and (x, z) not in closure:
                        closure.add((x, z))
                        changed = True
            self._leq = closure
        return (a, b) in self._leq

    def glb(self, sorts) -> str | None:
        """Greatest sort below all of ``sorts``, or None."""
        sorts = set(sorts)
        lower = [s for s in self.sorts if all(self.leq(s, t) for t in sorts)]
        best = [s for s in lower if all(self.leq(o, s) for o in lower)]
        return best[0] if best else None

    def top(self, s: str) -> str:
        """The largest sort above ``s`` (sorts here form a forest)."""
        above = [t for t in self.sorts if self.leq(s, t)]
        for t in above:
            if all(self.leq(o, t) for o in above):
                return t
        return s

    def variable_sorts(self) -> list[str]:
        """Sorts that can be bound, hence can occur as variables."""
        out = []
        for c in self.constructors.values():
            for a in c.args:
                for s in a.binders:
                    if s not in out:
                        out.append(s)
        return out

    # term helpers

    def con(self, name: str, *args: Term) -> Con:
        decl = self.constructors[name]
        if len(args) != len(decl.args):
            raise SortError(f"{name} expects {len(decl.args)} arguments, got {len(args)}")
        return Con(name, args, decl.binder_counts)

    def subterms(self, t: Term, ctx: tuple = ()):
        """Yield ``(ctx, s)`` for every subterm ``s`` of a normal term, with its context."""
        yield ctx, t
        if type(t) is Con:
            decl = self.constructors[t.name]
            for a, spec in zip(t.args, decl.args):
                yield from self.subterms(a, ctx + spec.binders)

    def contexts(self, max_depth: int) -> list[tuple[str, ...]]:
        """Binding contexts reachable by entering at most ``max_depth`` binders."""
        out = [()]
        frontier = [()]
        for _ in range(max_depth):
            nxt = []
            for ctx in frontier:
                for decl in self.constructors.values():
                    for a in decl.args:
                        if a.binders:
                            ext = ctx + a.binders
                            if len(ext) <= max_depth and ext not in out:
                                out.append(ext)
                                nxt.append(ext)
            frontier = nxt
        return out


def least_sort(sig: Signature, ctx: tuple, t: Term, mvars: dict | None = None) -> str:
    """Least sort of ``t`` in ``ctx``; raises SortError when ``t`` is ill-formed."""
    tt = type(t)
    if tt is Var:
        if t.index >= len(ctx):
            raise SortError(f"variable index {t.index} out of range in context of length {len(ctx)}")
        return ctx[len(ctx) - 1 - t.index]
    if tt is Con:
        decl = sig.constructors.get(t.name)
        if decl is None:
            raise SortError(f"unknown constructor {t.name!r}")
        if len(t.args) != len(decl.args) or t.binders != decl.binder_counts:
            raise SortError(f"arity mismatch for {t.name!r}")
        for a, spec in zip(t.args, decl.args):
            _check(sig, ctx + spec.binders, a, spec.sort, mvars)
        return decl.result
    if tt is Op:
        decl = sig.operations.get(t.name)
        if decl is None:
            raise SortError(f"unknown operation {t.name!r}")
        if len(t.aux) != len(decl.aux_sorts):
            raise SortError(f"arity mismatch for operation {t.name!r}")
        _check(sig, ctx, t.main, decl.main_sort, mvars)
        for a, s in zip(t.aux, decl.aux_sorts):
            _check(sig, ctx, a, s, mvars)
        return decl.result_sort
    if tt is Subst:
        slot_sorts = tuple(least_sort(sig, ctx, r, mvars) for r in t.repl)
        return least_sort(sig, ctx + slot_sorts, t.body, mvars)
    if tt is Meta:
        if mvars is None or t.name not in mvars:
            raise SortError(f"unknown metavariable {t.name!r}")
        mv = mvars[t.name]
        if len(t.args) != len(mv.ctx):
            raise SortError(f"metavariable {t.name!r} takes {len(mv.ctx)} arguments, got {len(t.args)}")
        for a, s in zip(t.args, mv.ctx):
            _check(sig, ctx, a, s, mvars)
        return mv.sort
    raise TypeError(t)


def _check(sig, ctx, t, expected, mvars):
    actual = least_sort(sig, ctx, t, mvars)
    if not sig.leq(actual, expected):
        raise SortMismatch(actual, expected, t)
    return actual


def check_sort(sig: Signature, ctx: tuple, t: Term, expected: str, mvars: dict | None = None) -> str:
    """Return the least sort of ``t`` if it is at most ``expected``; raise otherwise."""
    return _check(sig, tuple(ctx), t, expected, mvars)


def head_sort(sig: Signature, ctx: tuple, t: Term) -> str:
    """Least sort of a term already known to be well-formed (looks at the head only)."""
    if type(t) is Var:
        return ctx[len(ctx) - 1 - t.index]
    if type(t) is Con:
        return sig.constructors[t.name].result
    return least_sort(sig, ctx, t)


def enumerate_terms(sig: Signature, sort: str, ctx: tuple = (), max_size: int = 1) -> list[Term]:
    """All normal terms of ``sort`` (or below) in ``ctx`` with at most ``max_size`` nodes.

    Ordered by size, then variables (innermost first), then constructors in
    declaration order, arguments varying lexicographically.
    """
    ctx = tuple(ctx)
    out = []
    for n in range(1, max_size + 1):
        out.extend(_exact(sig, sort, ctx, n))
    return out


def _exact(sig: Signature, sort: str, ctx: tuple, n: int) -> tuple[Term, ...]:
    key = (sort, ctx, n)
    cache = sig._enum_cache
    if key in cache:
        return cache[key]
    out: list[Term] = []
    if n == 1:
        for i in range(len(ctx)):
            if sig.leq(ctx[len(ctx) - 1 - i], sort):
                out.append(Var(i))
    for decl in sig.constructors.values():
        if not sig.leq(decl.result, sort):
            continue
        k = len(decl.args)
        if k == 0:
            if n == 1:
                out.append(Con(decl.name, (), ()))
            continue
        for parts in _compositions(n - 1, k):
            pools = [
                _exact(sig, spec.sort, ctx + spec.binders, m)
                for spec, m in zip(decl.args, parts)
            ]
            if any(not p for p in pools):
                continue
            for args in itertools.product(*pools):
                out.append(Con(decl.name, args, decl.binder_counts))
    cache[key] = tuple(out)
    return cache[key]


def _compositions(total: int, parts: int):
    """Ordered ways to write ``total`` as ``parts`` positive integers."""
    if parts == 1:
        if total >= 1:
            yield (total,)
        return
    for first in range(1, total - parts + 2):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest
