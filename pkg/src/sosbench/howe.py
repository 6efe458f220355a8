"""Howe closure over a finite universe of open terms, and its property suite.

Terms are interned together with their binding context, so a pair of
integers stands for a triple ``(ctx, a, b)``.  The closure is computed by a
semi-naive worklist: each new pair is pushed through right composition with
``sim`` and through every constructor it is an argument of.
"""

from __future__ import annotations

import time
from collections import defaultdict
from dataclasses import dataclass, field

from .engine import TransitionStore
from .signature import Signature, enumerate_terms
from .terms import Con, Term, Var, is_closed


class Universe:
    """Interned ``(ctx, term)`` entries, closed under taking subterms."""

    def __init__(self, sig: Signature):
        self.sig = sig
        self.entries: list[tuple] = []
        self.index: dict = {}
        self.children: list[tuple] = []

    def add(self, ctx, t) -> int:
        key = (tuple(ctx), t)
        i = self.index.get(key)
        if i is not None:
            return i
        kids = []
        if type(t) is Con:
            decl = self.sig.constructors[t.name]
            kids = [self.add(key[0] + spec.binders, a) for a, spec in zip(t.args, decl.args)]
        i = len(self.entries)
        self.entries.append(key)
        self.index[key] = i
        self.children.append(tuple(kids))
        return i

    def id(self, ctx, t):
        return self.index.get((tuple(ctx), t))

    def __len__(self):
        return len(self.entries)

    def __contains__(self, key):
        return (tuple(key[0]), key[1]) in self.index


def build_universe(sig: Signature, max_term_size: int, store: TransitionStore | None = None, extra=()) -> Universe:
    """Enumerated strata for contexts of length < max_term_size, plus the store universe."""
    u = Universe(sig)
    tops = []
    for s in sig.sorts:
        t = sig.top(s)
        if t not in tops:
            tops.append(t)
    for ctx in sig.contexts(max(0, max_term_size - 1)):
        for s in tops:
            for t in enumerate_terms(sig, s, ctx, max_term_size):
                u.add(ctx, t)
    if store is not None:
        for t in store.universe:
            u.add((), t)
    for ctx, t in extra:
        u.add(ctx, t)
    return u


class SimOnUniverse:
    """``sim`` restricted to a universe as a partition into groups.

    Closed related terms share a group at every context; everything else is
    a singleton.  ``gid[i]`` is the group of entry ``i``.
    """

    def __init__(self, universe: Universe, sim=None):
        self.universe = universe
        self.sim = sim
        n = len(universe)
        self.gid = list(range(n))
        self.groups: list = [(i,) for i in range(n)]
        buckets = defaultdict(list)
        if sim is not None and hasattr(sim, "class_of"):
            for i, (ctx, t) in enumerate(universe.entries):
                c = sim.class_of.get(t) if is_closed(t) else None
                if c is not None:
                    buckets[(ctx, c)].append(i)
        elif sim is not None:
            # explicit relation: union-find over its pairs
            parent = list(range(n))

            def find(a):
                while parent[a] != a:
                    parent[a] = parent[parent[a]]
                    a = parent[a]
                return a

            for ctx, a, b in sim:
                x, y = universe.id(ctx, a), universe.id(ctx, b)
                if x is not None and y is not None:
                    parent[find(x)] = find(y)
            for i in range(n):
                buckets[find(i)].append(i)
        for members in buckets.values():
            if len(members) < 2:
                continue
            g = members[0]
            self.groups[g] = tuple(members)
            for i in members:
                self.gid[i] = g

    def of(self, i):
        return self.groups[self.gid[i]]

    def has_ids(self, x, y):
        return self.gid[x] == self.gid[y]


class IdRelation:
    """Relation over a Universe.

    Successors are kept as whole sim groups (``succ``) plus single entries
    (``extra``).  Groups keep right-closed relations compact; single entries
    let a caller add a pair that breaks that closure.
    """

    def __init__(self, universe: Universe, sim: SimOnUniverse | None = None):
        self.universe = universe
        self.sim = sim if sim is not None else SimOnUniverse(universe)
        self.succ: dict[int, set] = defaultdict(set)
        self.extra: dict[int, set] = defaultdict(set)

    def add_group(self, x, g) -> bool:
        s = self.succ[x]
        if g in s:
            return False
        s.add(g)
        return True

    def add_ids(self, x, y) -> bool:
        if self.has_ids(x, y):
            return False
        self.extra[x].add(y)
        return True

    def has_ids(self, x, y) -> bool:
        s = self.succ.get(x)
        if s is not None and self.sim.gid[y] in s:
            return True
        e = self.extra.get(x)
        return e is not None and y in e

    def contains(self, ctx, a, b) -> bool:
        x = self.universe.id(ctx, a)
        y = self.universe.id(ctx, b)
        return x is not None and y is not None and self.has_ids(x, y)

    def __contains__(self, triple):
        return self.contains(*triple)

    def successors(self, x) -> list[int]:
        out = set(self.extra.get(x, ()))
        for g in self.succ.get(x, ()):
            out.update(self.sim.groups[g])
        return sorted(out)

    def sources(self) -> list[int]:
        return sorted(set(self.succ) | set(self.extra))

    def id_pairs(self):
        for x in self.sources():
            for y in self.successors(x):
                yield x, y

    def __iter__(self):
        e = self.universe.entries
        for x, y in self.id_pairs():
            yield (e[x][0], e[x][1], e[y][1])

    def pairs(self):
        return list(self)

    def __len__(self):
        groups = self.sim.groups
        n = 0
        for x in set(self.succ) | set(self.extra):
            gs = self.succ.get(x, ())
            n += sum(len(groups[g]) for g in gs)
            n += sum(1 for y in self.extra.get(x, ()) if self.sim.gid[y] not in gs)
        return n


@dataclass
class HoweClosure:
    universe: Universe
    base: object
    sim: SimOnUniverse
    closure: IdRelation
    iterations: int
    seconds: float = 0.0


def _parent_index(universe: Universe, gid=None):
    """Parents of each entry, and parents by (ctx, head, position, argument group)."""
    parents = defaultdict(list)
    by_arg = defaultdict(list)
    heads = [None] * len(universe)
    for u, kids in enumerate(universe.children):
        ctx, t = universe.entries[u]
        if type(t) is not Con or not kids:
            continue
        heads[u] = (ctx, t.name)
        for i, k in enumerate(kids):
            parents[k].append((u, i))
            by_arg[(ctx, t.name, i, k if gid is None else gid[k])].append(u)
    return parents, by_arg, heads


def howe_closure(
    sig: Signature,
    universe: Universe,
    base=(),
    sim=None,
    max_iter: int | None = None,
) -> HoweClosure:
    """Least relation over ``universe`` containing ``base``, closed under congruence and ``;sim``."""
    start = time.perf_counter()
    simu = sim if isinstance(sim, SimOnUniverse) else SimOnUniverse(universe, sim)
    gid = simu.gid
    H = IdRelation(universe, simu)
    parents, by_arg, heads = _parent_index(universe, gid)
    children = universe.children
    work = []

    def push(x, y):
        g = gid[y]
        if H.add_group(x, g):
            work.append((x, g))

    for ctx, a, b in base:
        x, y = universe.id(ctx, a), universe.id(ctx, b)
        if x is not None and y is not None:
            push(x, y)
    for u, (ctx, t) in enumerate(universe.entries):
        if type(t) is Var or (type(t) is Con and not t.args):
            push(u, u)

    steps = 0
    while work:
        steps += 1
        if max_iter is not None and steps > max_iter:
            break
        x, g = work.pop()
        for u, i in parents.get(x, ()):
            ctx, name = heads[u]
            ku = children[u]
            su = H.succ.get(u)
            for w in by_arg.get((ctx, name, i, g), ()):
                if su is not None and gid[w] in su:
                    continue
                kw = children[w]
                if all(j == i or H.has_ids(ku[j], kw[j]) for j in range(len(ku))):
                    push(u, w)
                    su = H.succ[u]
    return HoweClosure(universe, base, simu, H, steps, time.perf_counter() - start)


def compose_relations(R, S):
    """``{(ctx, a, c) : (ctx, a, b) in R and (ctx, b, c) in S}`` for explicit relations."""
    from .bisim import Relation

    index = defaultdict(list)
    for ctx, b, c in S:
        index[(ctx, b)].append(c)
    out = Relation()
    for ctx, a, b in R:
        for c in index.get((ctx, b), ()):
            out.add(ctx, a, c)
    return out


def transitive_closure(R):
    """Least transitive relation containing ``R`` (iterated composition)."""
    from .bisim import Relation

    out = Relation(R)
    while True:
        step = compose_relations(out, out)
        before = len(out)
        for p in step:
            out.add(*p)
        if len(out) == before:
            return out


def sccs(n: int, succ) -> list[int]:
    """Strongly connected component id per node (iterative Tarjan)."""
    index = [-1] * n
    low = [0] * n
    on = [False] * n
    comp = [-1] * n
    stack = []
    counter = 0
    ncomp = 0
    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, iter(sorted(succ.get(root, ()))))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on[root] = True
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if index[w] == -1:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on[w] = True
                    work.append((w, iter(sorted(succ.get(w, ())))))
                    advanced = True
                    break
                if on[w]:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                p = work[-1][0]
                low[p] = min(low[p], low[v])
            if low[v] == index[v]:
                while True:
                    w = stack.pop()
                    on[w] = False
                    comp[w] = ncomp
                    if w == v:
                        break
                ncomp += 1
    return comp


@dataclass
class PropertyResult:
    name: str
    pairs_checked: int = 0
    skips: int = 0
    violations: list = field(default_factory=list)
    bounded: int = 0  # unmatched challenges that touch the non-exhausted fragment

    @property
    def ok(self):
        return not self.violations


def check_howe_properties(
    sig: Signature,
    hc: HoweClosure,
    store: TransitionStore,
    max_witnesses: int = 20,
) -> list[PropertyResult]:
    U = hc.universe
    H = hc.closure
    sim = hc.sim
    gid, groups = sim.gid, sim.groups
    E = U.entries
    parents, by_arg, heads = _parent_index(U, gid)
    children = U.children
    results = []

    def note(res, item):
        if len(res.violations) < max_witnesses:
            res.violations.append(item)
        else:
            res.violations.append(None)

    # (i) constructor congruence, one pass per (argument pair, group)
    r = PropertyResult("compatible")
    generators = [(x, g, None) for x in sorted(H.succ) for g in sorted(H.succ[x])]
    generators += [(x, gid[y], y) for x in sorted(H.extra) for y in sorted(H.extra[x])]
    for x, g, only in generators:
        for u, i in parents.get(x, ()):
            ctx, name = heads[u]
            ku = children[u]
            for w in by_arg.get((ctx, name, i, g), ()):
                kw = children[w]
                if only is not None and kw[i] != only:
                    continue
                if all(H.has_ids(a, b) for a, b in zip(ku, kw)):
                    r.pairs_checked += 1
                    if not H.has_ids(u, w):
                        note(r, (E[u], E[w][1]))
    results.append(r)

    # (ii) H;sim included in H; group successors hold it by construction
    r = PropertyResult("closed under ;sim")
    for x in sorted(H.succ):
        r.pairs_checked += sum(len(groups[g]) for g in H.succ[x])
    for x in sorted(H.extra):
        for y in sorted(H.extra[x]):
            for z in groups[gid[y]]:
                r.pairs_checked += 1
                if not H.has_ids(x, z):
                    note(r, (E[x], E[z][1]))
    results.append(r)

    # (iii) reflexive
    r = PropertyResult("reflexive")
    for u in range(len(U)):
        r.pairs_checked += 1
        if not H.has_ids(u, u):
            note(r, E[u])
    results.append(r)

    # (iv) sim included in H
    r = PropertyResult("contains sim")
    for u in range(len(U)):
        members = groups[gid[u]]
        r.pairs_checked += len(members)
        if gid[u] in H.succ.get(u, ()):
            continue
        for z in members:
            if not H.has_ids(u, z):
                note(r, (E[u], E[z][1]))
    results.append(r)

    # transitive closure symmetric: every edge inside one strongly connected
    # component.  Group g is a node n + g pointing at its members.
    r = PropertyResult("symmetric closure")
    n = len(U)
    graph = {}
    for x in range(n):
        out = [n + g for g in H.succ.get(x, ())]
        out += H.extra.get(x, ())
        graph[x] = out
    for g in sorted(set(gid)):
        graph[n + g] = list(groups[g])
    comp = sccs(2 * n, graph)
    for x in range(n):
        c = comp[x]
        for g in sorted(H.succ.get(x, ())):
            for y in groups[g]:
                r.pairs_checked += 1
                if comp[y] != c:
                    note(r, (E[x], E[y][1]))
        for y in sorted(H.extra.get(x, ())):
            r.pairs_checked += 1
            if comp[y] != c:
                note(r, (E[x], E[y][1]))
    results.append(r)

    results.append(flexible_check(sig, hc, store, max_witnesses))
    for res in results:
        res.violations = [v for v in res.violations if v is not None] + (
            [] if None not in res.violations else [f"... {res.violations.count(None)} more"]
        )
    return results


def flexible_check(sig, hc: HoweClosure, store: TransitionStore, max_witnesses=20, pairs=None) -> PropertyResult:
    """Every challenge of a related pair is answered for every related label, by related targets.

    Only closed pairs whose terms are both exhausted in the store are checked;
    the rest count as skips.  Terms with the same observable profile give the
    same outcome, so results are memoized on profile ids.
    """
    U = hc.universe
    H = hc.closure
    E = U.entries
    r = PropertyResult("flexible simulation")
    good = {t for t in store.universe if store.exhausted(t)}

    lab_id = {}
    related_labs = {}
    for edge in sig.edges:
        tuples = store.label_tuples(edge)
        for labs in tuples:
            for lab in labs:
                lab_id[lab] = U.id((), lab)
        for labs in tuples:
            related_labs[(edge, labs)] = [
                labs2
                for labs2 in tuples
                if all(
                    lab_id[a] is not None and lab_id[b] is not None and H.has_ids(lab_id[a], lab_id[b])
                    for a, b in zip(labs, labs2)
                )
            ]

    def target_ids(key):
        return [U.id((), t) for t in store.observed.get(key, ())]

    def answer_ids(e2, edge, labs2):
        return [a for a in target_ids((e2, edge, labs2)) if a is not None]

    left_ids, right_ids = {}, {}

    def profile(table, key):
        k = table.get(key)
        if k is None:
            k = table[key] = len(table)
        return k

    def left_profile(e):
        rows = []
        for key in store.keys_of(e):
            _, edge, labs = key
            ts = target_ids(key)
            if not ts:
                continue
            row = []
            for i1 in sorted(ts, key=lambda v: -1 if v is None else v):
                if i1 is None:
                    row.append(None)
                else:
                    row.append((frozenset(H.succ.get(i1, ())), frozenset(H.extra.get(i1, ()))))
            rows.append((edge, labs, frozenset(row)))
        return profile(left_ids, frozenset(rows))

    def right_profile(e2):
        rows = []
        for key in store.keys_of(e2):
            _, edge, labs2 = key
            rows.append((edge, labs2, frozenset(answer_ids(e2, edge, labs2))))
        return profile(right_ids, frozenset(rows))

    def failures(e, e2, limit):
        out = []
        checked = bounded = 0
        for key in store.keys_of(e):
            _, edge, labs = key
            ts = store.observed.get(key, ())
            if not ts:
                continue
            answers = [
                a for labs2 in related_labs.get((edge, labs), ()) for a in answer_ids(e2, edge, labs2)
            ]
            for t1 in ts:
                checked += 1
                i1 = U.id((), t1)
                if i1 is not None and any(H.has_ids(i1, a) for a in answers):
                    continue
                # an unmatched challenge only counts when every term involved is exhausted
                if t1 not in good or any(E[a][1] not in good for a in answers):
                    bounded += 1
                    continue
                out.append(
                    {"pair": (e, e2), "edge": edge, "labels": labs, "target": t1,
                     "answers": tuple(dict.fromkeys(E[a][1] for a in answers))}
                )
                if len(out) >= limit:
                    return checked, bounded, out
        return checked, bounded, out

    lprof, rprof = {}, {}
    memo = {}
    id_pairs = pairs if pairs is not None else H.id_pairs()
    for x, y in id_pairs:
        ctx, e = E[x]
        e2 = E[y][1]
        if ctx or e not in store.universe or e2 not in store.universe:
            continue
        if e not in good or e2 not in good:
            r.skips += 1
            continue
        lp = lprof.get(e)
        if lp is None:
            lp = lprof[e] = left_profile(e)
        rp = rprof.get(e2)
        if rp is None:
            rp = rprof[e2] = right_profile(e2)
        hit = memo.get((lp, rp))
        if hit is None:
            checked, bounded, bad = failures(e, e2, 1)
            hit = memo[(lp, rp)] = (checked, bounded, bool(bad))
        r.pairs_checked += hit[0]
        r.bounded += hit[1]
        if hit[2] and len(r.violations) < max_witnesses:
            r.violations.extend(failures(e, e2, max_witnesses - len(r.violations))[2])
    return r


def inject(hc: HoweClosure, a: Term, b: Term, ctx=()):
    """Add a spurious pair to a computed closure (for fault-injection tests)."""
    x = hc.universe.id(ctx, a)
    y = hc.universe.id(ctx, b)
    if x is None or y is None:
        raise KeyError("pair outside the universe")
    hc.closure.add_ids(x, y)
