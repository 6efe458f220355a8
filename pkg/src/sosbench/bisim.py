"""Relations over term universes, bounded bisimilarity and closure checks.

Bisimilarity is computed by partition refinement over the whole store
universe, using the observation transitions (labels from the label
universe).  Weakness comes from the saturation rules already in the store,
so the refinement itself is strong.
"""

from __future__ import annotations

import random
from collections import defaultdict
from dataclasses import dataclass, field

from .engine import TransitionStore, UnknownTerm
from .ops import eval_op
from .signature import Signature, enumerate_terms, least_sort
from .terms import Con, Term, is_closed, substitute


class Relation:
    """Explicit finite relation: a set of ``(ctx, a, b)`` triples.

    With ``reflexive=True`` every pair of equal terms is also a member.
    """

    def __init__(self, pairs=(), reflexive: bool = False):
        self._pairs = dict.fromkeys((tuple(c), a, b) for c, a, b in pairs)
        self.reflexive = reflexive

    def contains(self, ctx, a, b) -> bool:
        if self.reflexive and a == b:
            return True
        return (tuple(ctx), a, b) in self._pairs

    def __contains__(self, triple):
        return self.contains(*triple)

    def add(self, ctx, a, b):
        self._pairs[(tuple(ctx), a, b)] = None

    def __iter__(self):
        return iter(self._pairs)

    def __len__(self):
        return len(self._pairs)

    def pairs(self):
        return list(self._pairs)

    def nontrivial(self):
        return [p for p in self._pairs if p[1] != p[2]]


def identity_relation() -> Relation:
    return Relation(reflexive=True)


class Scope:
    """Which terms a check may talk about: the store universe and its open extension.

    An open term is in scope when every closing instance built from the
    label values is a universe term.  ``extended`` closes with the whole
    label pool of the store (base labels plus those demanded by premises)
    rather than the base label universe alone.
    """

    def __init__(self, store: TransitionStore, extended: bool = True):
        self.store = store
        self.sig = store.sig
        pool = store.labels if extended or store.base_labels is None else store.base_labels
        self.closers = {s: pool.for_sort(s) for s in self.sig.variable_sorts()}

    def closings(self, ctx):
        ctx = tuple(ctx)
        pools = [self.closers.get(s, ()) for s in ctx]
        out = [[]]
        for pool in pools:
            out = [o + [v] for o in out for v in pool]
        return out

    def instances(self, ctx, t):
        """One instance per closing of ``ctx`` (a closed ``t`` is repeated)."""
        if not ctx:
            return [t]
        sigmas = self.closings(tuple(ctx))
        if is_closed(t):
            return [t] * len(sigmas)
        return [substitute(t, sigma) for sigma in sigmas]

    def in_universe(self, ctx, t) -> bool:
        inst = self.instances(ctx, t)
        return bool(inst) and all(u in self.store.universe for u in inst)

    def terms(self):
        return list(self.store.universe)


class PartitionRelation:
    """Bisimilarity approximant: closed terms related iff in the same class.

    Open pairs are related when all their closing instances are.
    """

    def __init__(self, store: TransitionStore, class_of: dict, scope: Scope | None = None):
        self.store = store
        self.class_of = class_of
        self.scope = scope or Scope(store)
        members = defaultdict(list)
        for t, c in class_of.items():
            members[c].append(t)
        self.members = dict(members)

    def contains(self, ctx, a, b) -> bool:
        if a == b and self.scope.in_universe(ctx, a):
            return True
        ia = self.scope.instances(ctx, a)
        ib = self.scope.instances(ctx, b)
        if not ia:
            return False
        for x, y in zip(ia, ib):
            cx = self.class_of.get(x)
            if cx is None or cx != self.class_of.get(y):
                return False
        return True

    def __contains__(self, triple):
        return self.contains(*triple)

    def related(self, t):
        c = self.class_of.get(t)
        return [] if c is None else self.members[c]

    def classes(self):
        return list(self.members.values())

    def __iter__(self):
        for group in self.members.values():
            for a in group:
                for b in group:
                    yield ((), a, b)

    def __len__(self):
        return sum(len(g) ** 2 for g in self.members.values())

    def pairs(self):
        return list(self)

    def nontrivial(self):
        return [p for p in self if p[1] != p[2]]


@dataclass
class Witness:
    """Why ``left`` and ``right`` differ: a challenge and every possible answer.

    ``side`` says who challenges.  ``answers`` pairs each answering target
    with a witness that it differs from the challenge target (oriented
    left/right like the parent).
    """

    left: Term
    right: Term
    side: str
    edge: str
    labels: tuple
    target: Term
    answers: list = field(default_factory=list)

    @property
    def depth(self) -> int:
        return 1 + max((w.depth for _, w in self.answers), default=0)


@dataclass
class BisimVerdict:
    kind: str                 # "distinguished" or "equivalentUpToBounds"
    witness: Witness | None = None
    depth: int = 0
    exhausted: bool = False
    bounds: dict = field(default_factory=dict)

    @property
    def distinguished(self) -> bool:
        return self.kind == "distinguished"


def _signature(store, t, cls):
    out = set()
    for key in store.keys_of(t):
        _, edge, labs = key
        for tgt in store.observed.get(key, ()):
            out.add((edge, labs, cls[tgt]))
    return frozenset(out)


def refine(store: TransitionStore):
    """Partition refinement; returns the history of class maps, one per round."""
    sig = store.sig
    top = {}
    cls = {}
    for t, s in store.universe.items():
        cls[t] = top.setdefault(sig.top(s), len(top))
    history = [cls]
    while True:
        ids = {}
        nxt = {}
        for t in store.universe:
            key = (cls[t], _signature(store, t, cls))
            nxt[t] = ids.setdefault(key, len(ids))
        history.append(nxt)
        if len(ids) == len(set(cls.values())):
            return history
        cls = nxt


def _split_round(history, a, b):
    for k, cls in enumerate(history):
        if cls[a] != cls[b]:
            return k
    return None


def _witness(store, history, a, b, memo):
    if (a, b) in memo:
        return memo[(a, b)]
    k = _split_round(history, a, b)
    if k is None:
        return None
    if k == 0:
        raise ValueError("terms of different sorts cannot be compared")
    prev = history[k - 1]
    result = None
    for side, x, y in (("left", a, b), ("right", b, a)):
        for key in store.keys_of(x):
            _, edge, labs = key
            answers_all = store.observed.get((y, edge, labs), ())
            for tgt in store.observed.get(key, ()):
                if any(prev[tgt] == prev[r] for r in answers_all):
                    continue
                answers = []
                for r in answers_all:
                    pair = (tgt, r) if side == "left" else (r, tgt)
                    answers.append((r, _witness(store, history, *pair, memo)))
                result = Witness(a, b, side, edge, labs, tgt, answers)
                break
            if result:
                break
        if result:
            break
    memo[(a, b)] = result
    return result


def replay(store: TransitionStore, w: Witness) -> bool:
    """Check a witness against the store: the challenge exists, the answers are all of them."""
    x, y = (w.left, w.right) if w.side == "left" else (w.right, w.left)
    if w.target not in store.observed.get((x, w.edge, w.labels), ()):
        return False
    expected = store.observed.get((y, w.edge, w.labels), ())
    if sorted(map(repr, expected)) != sorted(repr(r) for r, _ in w.answers):
        return False
    for r, sub in w.answers:
        if sub is None:
            return False
        pair = (w.target, r) if w.side == "left" else (r, w.target)
        if (sub.left, sub.right) != pair or not replay(store, sub):
            return False
    return True


def compute_bisim(store: TransitionStore, candidates=(), scope: Scope | None = None):
    """Bisimilarity approximant over the store and verdicts for the candidate pairs."""
    for a, b in candidates:
        for t in (a, b):
            if t not in store.universe:
                raise UnknownTerm(t)
    history = refine(store)
    final = history[-1]
    rel = PartitionRelation(store, final, scope)
    good = set(store.closed_exhausted())
    bounds = {
        "fuel_rounds": store.rounds,
        "label_size": store.labels.max_size,
        "size_cap": store.size_cap,
        "max_universe": store.max_universe,
        "refinement_rounds": len(history) - 1,
    }
    verdicts = {}
    memo = {}
    for a, b in candidates:
        exhausted = store.converged and a in good and b in good
        if final[a] == final[b]:
            verdicts[(a, b)] = BisimVerdict(
                "equivalentUpToBounds", None, len(history) - 1, exhausted, bounds
            )
        else:
            w = _witness(store, history, a, b, memo)
            verdicts[(a, b)] = BisimVerdict("distinguished", w, w.depth, exhausted, bounds)
    return rel, verdicts


# ---------------------------------------------------------------------------
# closure checks


@dataclass
class CheckReport:
    name: str
    checked: int = 0
    skipped: int = 0
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def _pool(sig, scope, sort, ctx, max_size):
    if not ctx:
        return [t for t in scope.terms() if sig.leq(least_sort(sig, (), t), sort)]
    return enumerate_terms(sig, sort, ctx, max_size)


def _context_sort(sig):
    hole = sig.constructors.get("hole")
    return hole.result if hole else None


def _plug_op(sig):
    """Operations taking a context plus one program/context argument, by aux sort."""
    out = {}
    for op in sig.operations.values():
        if len(op.aux_sorts) == 1:
            out.setdefault(op.aux_sorts[0], op.name)
    return out


def check_enhanced(
    sig: Signature,
    R,
    samples: int = 200,
    seed: int = 0,
    scope: Scope | None = None,
    max_ctx: int = 2,
    pool_size: int = 3,
) -> CheckReport:
    """Sampled closure of ``R`` under substitution and the context operations."""
    if scope is None:
        raise ValueError("check_enhanced needs a scope (the store universe)")
    rng = random.Random(seed)
    report = CheckReport("enhanced")
    pairs = R.pairs()
    if not pairs:
        return report
    contexts = sig.contexts(max_ctx)
    csort = _context_sort(sig)
    ops = _plug_op(sig)
    for _ in range(samples):
        ctx, a, b = pairs[rng.randrange(len(pairs))]
        kind = rng.choice(["subst", "plug", "comp"]) if csort else "subst"
        sort_a = least_sort(sig, ctx, a)
        if kind != "subst" and not sig.leq(sort_a, csort):
            kind = "subst"
        if kind == "subst":
            target = contexts[rng.randrange(len(contexts))]
            sigma = []
            ok = True
            for slot in ctx:
                pool = _pool(sig, scope, slot, target, pool_size)
                if not pool:
                    ok = False
                    break
                sigma.append(pool[rng.randrange(len(pool))])
            if not ok:
                report.skipped += 1
                continue
            a2 = substitute(a, sigma) if ctx else a
            b2 = substitute(b, sigma) if ctx else b
            new_ctx = target
            what = ("subst", ctx, a, b, tuple(sigma), target)
        else:
            aux_sort = [s for s in ops if (kind == "plug") != sig.leq(s, csort)]
            if not aux_sort:
                report.skipped += 1
                continue
            op = ops[aux_sort[0]]
            pool = _pool(sig, scope, aux_sort[0], ctx, pool_size)
            if not pool:
                report.skipped += 1
                continue
            arg = pool[rng.randrange(len(pool))]
            a2 = eval_op(sig, op, a, [arg])
            b2 = eval_op(sig, op, b, [arg])
            new_ctx = ctx
            what = (op, ctx, a, b, arg)
        if not (scope.in_universe(new_ctx, a2) and scope.in_universe(new_ctx, b2)):
            report.skipped += 1
            continue
        report.checked += 1
        if not R.contains(new_ctx, a2, b2):
            report.violations.append({"instance": what, "result": (new_ctx, a2, b2)})
    return report


def congruence_candidates(sig: Signature, R, scope: Scope):
    """Pairs of distinct in-scope closed terms with the same head and pointwise related arguments.

    For a partition approximant, arguments are related exactly when their
    closing instances fall in the same classes, so terms are bucketed by
    head and per-argument class vectors.  Other relations fall back to a
    pairwise scan.
    """
    class_of = getattr(R, "class_of", None)
    buckets = defaultdict(list)
    for t in scope.terms():
        if type(t) is not Con or not t.args:
            continue
        if class_of is None:
            buckets[t.name].append(t)
            continue
        decl = sig.constructors[t.name]
        key = [t.name]
        for x, spec in zip(t.args, decl.args):
            cls = tuple(class_of.get(u) for u in scope.instances(spec.binders, x))
            if not cls or None in cls:
                key = None
                break
            key.append(cls)
        if key is not None:
            buckets[tuple(key)].append(t)
    out = []
    for key, group in buckets.items():
        for u in group:
            for w in group:
                if u == w:
                    continue
                if class_of is None:
                    decl = sig.constructors[u.name]
                    if not all(R.contains(spec.binders, x, y) for x, y, spec in zip(u.args, w.args, decl.args)):
                        continue
                out.append((u, w))
    return out


def check_congruence(
    sig: Signature,
    R,
    samples: int = 200,
    seed: int = 0,
    scope: Scope | None = None,
) -> CheckReport:
    """Sampled constructor congruence: related arguments give related composites.

    Composites are drawn from the exhausted fragment (terms from which every
    reachable term has complete observations); the others are counted as
    skipped, since the approximant says nothing reliable about them.
    """
    if scope is None:
        raise ValueError("check_congruence needs a scope (the store universe)")
    rng = random.Random(seed)
    report = CheckReport("congruence")
    good = set(scope.store.closed_exhausted())
    cands = []
    for u, w in congruence_candidates(sig, R, scope):
        if u in good and w in good:
            cands.append((u, w))
        else:
            report.skipped += 1
    if not cands:
        return report
    if len(cands) <= samples:
        chosen = cands
    else:
        chosen = [cands[i] for i in sorted(rng.sample(range(len(cands)), samples))]
    for u, w in chosen:
        report.checked += 1
        if not R.contains((), u, w):
            report.violations.append({"composite": (u, w)})
    return report
