"""Derivation of the labelled transition system of a signature.

The engine tables judgements ``source -edge[labels]-> ?`` by key.  A key is
evaluated by trying every rule whose conclusion matches it; premises are
themselves keys, created on demand and evaluated eagerly, and every key
remembers which keys read it so that growth is propagated.  One round
re-evaluates every key whose inputs grew since the last round; ``fuel``
bounds the number of rounds.

Keys asked for by the outside world (a universe term, an edge type, labels
drawn from the label pool) are *observations*; their targets join the
universe and get observations of their own.  Keys only demanded by premises
stay auxiliary, but by default the closed value labels they carry join the
label pool, so every universe term is also observed at every argument the
system itself applies terms to.
"""

from __future__ import annotations

import itertools
import logging
from collections import defaultdict
from dataclasses import dataclass, field

from .formatcheck import mvars_of, premise_order
from .ops import EvaluationError, fill, match, normalize
from .signature import Signature, enumerate_terms, head_sort
from .terms import Con, Meta, Op, Subst, Term, instantiate, is_closed, size

log = logging.getLogger(__name__)


class UnknownTerm(KeyError):
    pass


@dataclass(frozen=True)
class Transition:
    source: Term
    edge: str
    labels: tuple
    target: Term


@dataclass
class LabelUniverse:
    """Closed label candidates per label sort (all shipped edge types use context-0 labels)."""

    max_size: int
    sets: dict = field(default_factory=dict)

    def for_sort(self, sort: str) -> tuple:
        return self.sets.get((sort, ()), ())

    def tuples(self, sig: Signature, edge: str):
        decl = sig.edges[edge]
        pools = [self.for_sort(s) for s in decl.labels]
        return list(itertools.product(*pools))


def build_label_universe(sig: Signature, max_label_size: int) -> LabelUniverse:
    lu = LabelUniverse(max_label_size)
    for decl in sig.edges.values():
        for s in decl.labels:
            if (s, ()) not in lu.sets:
                terms = enumerate_terms(sig, s, (), max_label_size) if max_label_size > 0 else []
                lu.sets[(s, ())] = tuple(terms)
    return lu


@dataclass
class TransitionStore:
    sig: Signature
    labels: LabelUniverse     # the label pool actually used for observations
    universe: dict            # term -> least sort, insertion ordered
    observed: dict            # observation key -> tuple of targets
    table: dict               # every key (observations and auxiliary) -> tuple of targets
    incomplete: set           # keys whose target sets may be under-approximations
    converged: bool
    rounds: int
    size_cap: int
    max_universe: int
    skipped_rules: list = field(default_factory=list)
    base_labels: LabelUniverse | None = None

    def __contains__(self, t):
        return t in self.universe

    def transitions(self):
        for (src, edge, labs), targets in self.observed.items():
            for tgt in targets:
                yield Transition(src, edge, labs, tgt)

    def transitions_of(self, t: Term, edge: str):
        """``(list of (labels, target), exhausted)`` for a universe term."""
        if t not in self.universe:
            raise UnknownTerm(t)
        out = []
        complete = True
        for labs in self.label_tuples(edge):
            key = (t, edge, labs)
            if key not in self.observed:
                continue
            complete = complete and key not in self.incomplete
            out.extend((labs, tgt) for tgt in self.observed[key])
        return out, complete

    def targets(self, t: Term, edge: str, labels=()):
        return self.observed.get((t, edge, tuple(labels)), ())

    def lookup(self, t: Term, edge: str, labels=()):
        """Targets of any tabled key, observation or auxiliary; None if never derived."""
        return self.table.get((t, edge, tuple(labels)))

    def label_tuples(self, edge):
        cache = self.__dict__.setdefault("_label_tuples", {})
        if edge not in cache:
            cache[edge] = self.labels.tuples(self.sig, edge)
        return cache[edge]

    def edges_for(self, t):
        sort = self.universe[t]
        return [e for e, d in self.sig.edges.items() if self.sig.leq(sort, d.source)]

    def keys_of(self, t):
        for edge in self.edges_for(t):
            for labs in self.label_tuples(edge):
                yield (t, edge, labs)

    def exhausted(self, t: Term, edge: str | None = None) -> bool:
        edges = [edge] if edge is not None else self.edges_for(t)
        for e in edges:
            for labs in self.label_tuples(e):
                if (t, e, labs) in self.incomplete:
                    return False
        return True

    def exhausted_terms(self):
        """Universe terms whose observations are complete."""
        return [t for t in self.universe if self.exhausted(t)]

    def closed_exhausted(self):
        """Terms from which every reachable term is exhausted."""
        bad = {t for t in self.universe if not self.exhausted(t)}
        preds = defaultdict(list)
        for (src, _, _), targets in self.observed.items():
            for tgt in targets:
                preds[tgt].append(src)
        stack = list(bad)
        while stack:
            u = stack.pop()
            for p in preds[u]:
                if p not in bad:
                    bad.add(p)
                    stack.append(p)
        return [t for t in self.universe if t not in bad]


class _Engine:
    def __init__(self, sig, labels, size_cap, max_universe, max_depth=30, extend_labels=False, label_cap=None):
        self.sig = sig
        self.labels = labels
        self.size_cap = size_cap
        self.max_universe = max_universe
        self.max_depth = max_depth
        self.rules = defaultdict(list)
        self.skipped = []
        for rule in sig.rules:
            order = premise_order(rule)
            bound = set()
            c = rule.conclusion
            bound |= mvars_of(c.source)
            for lab in c.labels:
                bound |= mvars_of(lab)
            for p in rule.premises:
                bound |= mvars_of(p.target)
            if order is None or not mvars_of(c.target) <= bound:
                self.skipped.append(rule.name)
                continue
            self.rules[c.edge].append((rule, order, rule.mvar_info))
        self.table: dict = {}
        self.dependents: dict = defaultdict(dict)
        self.truncated: set = set()
        self.dirty: dict = {}
        self.universe: dict = {}
        self.observed: dict = {}
        self._pure = {}
        self.extend_labels = extend_labels
        self.label_cap = label_cap
        # only value-like labels (sorts that can be bound) are harvested;
        # context labels compose without bound
        self.extendable = set(sig.variable_sorts())
        self.pool = {}
        for decl in sig.edges.values():
            for srt in decl.labels:
                self.pool.setdefault(srt, dict.fromkeys(labels.for_sort(srt)))
        self.label_tuples = {}
        for e in sig.edges:
            self._refresh(e)

    def _refresh(self, edge):
        decl = self.sig.edges[edge]
        old = self.label_tuples.get(edge, [])
        seen = set(old)
        fresh = [t for t in itertools.product(*[list(self.pool[s]) for s in decl.labels]) if t not in seen]
        self.label_tuples[edge] = old + fresh
        return fresh

    def add_labels(self, edge, labs):
        decl = self.sig.edges[edge]
        grew = set()
        for srt, lab in zip(decl.labels, labs):
            if self.label_cap is not None and size(lab) > self.label_cap:
                continue
            if srt in self.extendable and lab not in self.pool[srt] and is_closed(lab):
                self.pool[srt][lab] = None
                grew.add(srt)
        if not grew:
            return
        for e, d in self.sig.edges.items():
            if not grew.intersection(d.labels):
                continue
            fresh = self._refresh(e)
            for t, sort in list(self.universe.items()):
                if not self.sig.leq(sort, d.source):
                    continue
                for labs2 in fresh:
                    key = (t, e, labs2)
                    self.observed[key] = None
                    if key not in self.table:
                        self.table[key] = {}
                    self.dirty[key] = None

    def label_universe(self):
        lu = LabelUniverse(self.labels.max_size)
        for srt, members in self.pool.items():
            lu.sets[(srt, ())] = tuple(members)
        return lu

    # universe

    def admit(self, t):
        if t in self.universe:
            return True
        if len(self.universe) >= self.max_universe:
            return False
        sort = head_sort(self.sig, (), t)
        self.universe[t] = sort
        for edge, decl in self.sig.edges.items():
            if not self.sig.leq(sort, decl.source):
                continue
            for labs in self.label_tuples[edge]:
                key = (t, edge, labs)
                self.observed[key] = None
                if key not in self.table:
                    self.table[key] = {}
                self.dirty[key] = None
        return True

    # evaluation

    def _build(self, pattern, env):
        pure = self._pure.get(pattern)
        if pure is None:
            pure = self._pure[pattern] = _op_free(pattern)
        t = fill(pattern, env)
        return t if pure else normalize(self.sig, t)

    def _sorts_ok(self, env, info, known=()):
        for name, value in env.items():
            if name in known:
                continue
            mv = info[name]
            if not self.sig.leq(head_sort(self.sig, mv.ctx, value), mv.sort):
                return False
        return True

    def evaluate(self, key, depth, requester=None):
        t, edge, labels = key
        out = self.table[key]
        before = len(out)
        for rule, order, info in self.rules.get(edge, ()):
            concl = rule.conclusion
            env = match(concl.source, t)
            if env is None:
                continue
            for pat, lab in zip(concl.labels, labels):
                env = match(pat, lab, env)
                if env is None:
                    break
            if env is None or not self._sorts_ok(env, info):
                continue
            for env2 in self._premises(rule, order, info, 0, env, key, depth):
                try:
                    target = self._build(concl.target, env2)
                except EvaluationError as exc:
                    log.debug("rule %s: %s", rule.name, exc)
                    continue
                if size(target) > self.size_cap:
                    self.truncated.add(key)
                    continue
                out[target] = None
        if len(out) > before:
            for dep in self.dependents.get(key, ()):
                if dep is not requester:
                    self.dirty[dep] = None
        if key in self.observed:
            for tgt in list(out):
                if tgt not in self.universe and not self.admit(tgt):
                    self.truncated.add(key)

    def _premises(self, rule, order, info, i, env, key, depth):
        if i == len(order):
            yield env
            return
        p = rule.premises[order[i]]
        try:
            src = self._build(p.source, env)
            labs = tuple(self._build(lab, env) for lab in p.labels)
        except EvaluationError as exc:
            log.debug("rule %s: %s", rule.name, exc)
            return
        if size(src) > self.size_cap or any(size(lab) > self.size_cap for lab in labs):
            self.truncated.add(key)
            return
        if labs and self.extend_labels:
            self.add_labels(p.edge, labs)
        sub = (src, p.edge, labs)
        results = self.demand(sub, key, depth)
        for tgt in list(results):
            env2 = match(p.target, tgt, env)
            if env2 is None or not self._sorts_ok(env2, info, env):
                continue
            yield from self._premises(rule, order, info, i + 1, env2, key, depth)

    def demand(self, sub, requester, depth):
        self.dependents[sub][requester] = None
        if sub not in self.table:
            self.table[sub] = {}
            if depth < self.max_depth:
                self.evaluate(sub, depth + 1, requester)
            else:
                self.dirty[sub] = None
        return self.table[sub]

    def run(self, fuel):
        rounds = 0
        while self.dirty and rounds < fuel:
            rounds += 1
            batch = list(self.dirty)
            self.dirty.clear()
            for key in batch:
                self.evaluate(key, 0)
        return rounds

    def incomplete(self):
        bad = set(self.truncated) | set(self.dirty)
        stack = list(bad)
        while stack:
            k = stack.pop()
            for dep in self.dependents.get(k, ()):
                if dep not in bad:
                    bad.add(dep)
                    stack.append(dep)
        return bad


def _op_free(t):
    if type(t) is Op or type(t) is Subst:
        return False
    if type(t) is Con:
        return all(_op_free(a) for a in t.args)
    if type(t) is Meta:
        return all(_op_free(a) for a in t.args)
    return True


def derive_transitions(
    sig: Signature,
    seeds,
    labels: LabelUniverse,
    fuel: int = 30,
    max_universe: int = 5000,
    size_cap: int | None = None,
    extend_labels: bool = False,
    label_cap: int | None = None,
) -> TransitionStore:
    """Bounded least fixpoint of the rules of ``sig`` from closed ``seeds``."""
    seeds = list(dict.fromkeys(seeds))
    for s in seeds:
        if not is_closed(s):
            raise ValueError(f"seed is not closed: {s!r}")
    if size_cap is None:
        size_cap = 4 * max((size(s) for s in seeds), default=1)
    eng = _Engine(sig, labels, size_cap, max_universe, extend_labels=extend_labels, label_cap=label_cap)
    for s in seeds:
        eng.admit(s)
    rounds = eng.run(fuel)
    converged = not eng.dirty
    incomplete = eng.incomplete()
    # targets refused by a full universe are dropped; their keys are already truncated
    observed = {k: tuple(t for t in eng.table[k] if t in eng.universe) for k in eng.observed}
    table = {k: tuple(v) for k, v in eng.table.items()}
    store = TransitionStore(
        sig=sig,
        labels=eng.label_universe(),
        universe=dict(eng.universe),
        observed=observed,
        table=table,
        incomplete=incomplete,
        converged=converged,
        rounds=rounds,
        size_cap=size_cap,
        max_universe=max_universe,
        skipped_rules=eng.skipped,
        base_labels=labels,
    )
    log.info(
        "derived %d observations over %d terms (%d keys, %d incomplete) in %d rounds",
        len(observed), len(eng.universe), len(table), len(incomplete), rounds,
    )
    return store


def transitions_of(store: TransitionStore, t: Term, edge: str):
    return store.transitions_of(t, edge)


def tau_edge(sig: Signature) -> str:
    """The silent edge type: the unlabelled endo-edge named ``tau``."""
    if "tau" in sig.edges:
        return "tau"
    for name, d in sig.edges.items():
        if not d.labels and d.source == d.target:
            return name
    raise KeyError("signature has no silent edge type")


def value_step_counterexamples(store: TransitionStore, edge: str = "v", tau: str = "tau", lam: str = "lam"):
    """Stored ``edge`` transitions of exhausted terms that do not factor through the store
    as tau-steps, one ``lam`` instantiation, then tau-steps.

    Only the exhausted fragment is inspected; returns a list of transitions.
    """
    bad = []
    for (src, e, labs), targets in store.observed.items():
        if e != edge or not store.exhausted(src):
            continue
        mids = [u for u in (store.lookup(src, tau) or ()) if type(u) is Con and u.name == lam]
        for tgt in targets:
            ok = False
            for u in mids:
                inst = instantiate(u.args[0], labs)
                after = store.lookup(inst, tau) or (inst,)
                if tgt in after:
                    ok = True
                    break
            if not ok:
                bad.append(Transition(src, e, labs, tgt))
    return bad
