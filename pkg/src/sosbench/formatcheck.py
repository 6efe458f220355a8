"""Rule-format checks: structural sources and premise scheduling.

A rule passes when its conclusion source has depth at most one and its
premises can be ordered so that each one only reads metavariables already
known, starting from those of the conclusion's source and labels.  The
resulting order is what the engine uses to evaluate premises.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .signature import Rule, Signature
from .terms import Con, Meta, Op, Subst, Term, identity_args


@dataclass
class Verdict:
    ok: bool
    message: str = ""
    witness: object = None


@dataclass
class BorderArity:
    rule: str
    border_mvars: frozenset
    all_mvars: frozenset
    schedule: list[int] | None
    stuck: list[int] = field(default_factory=list)
    uncovered: frozenset = frozenset()
    bad_targets: list[int] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.schedule is not None and not self.uncovered and not self.bad_targets

    def describe(self) -> str:
        if self.ok:
            return "schedule " + str(self.schedule)
        parts = []
        if self.bad_targets:
            parts.append(f"premise target not a fresh bare metavariable: {self.bad_targets}")
        if self.schedule is None:
            parts.append(f"unschedulable premises {self.stuck}")
        if self.uncovered:
            parts.append(f"target metavariables bound nowhere: {sorted(self.uncovered)}")
        return "; ".join(parts)


def mvars_of(t: Term) -> set[str]:
    out = set()

    def walk(u):
        tu = type(u)
        if tu is Meta:
            out.add(u.name)
            for a in u.args:
                walk(a)
        elif tu is Con:
            for a in u.args:
                walk(a)
        elif tu is Op:
            walk(u.main)
            for a in u.aux:
                walk(a)
        elif tu is Subst:
            walk(u.body)
            for a in u.repl:
                walk(a)

    walk(t)
    return out


def _bare(t: Term, k: int) -> bool:
    return type(t) is Meta and t.args == identity_args(k)


def check_structuralness(rule: Rule, sig: Signature | None = None) -> Verdict:
    src = rule.conclusion.source
    if _bare(src, 0):
        return Verdict(True, "bare metavariable")
    if type(src) is Con:
        seen = set()
        for a, k in zip(src.args, src.binders):
            if not _bare(a, k):
                return Verdict(False, f"argument of {src.name} is not a bare metavariable", a)
            if a.name in seen:
                return Verdict(False, f"metavariable {a.name} repeated in the source", a)
            seen.add(a.name)
        return Verdict(True, f"depth one ({src.name})")
    return Verdict(False, "source is neither a metavariable nor a constructor", src)


def check_cofibration(rule: Rule, rng: random.Random | None = None) -> BorderArity:
    """Greedy premise scheduling; ``rng`` randomizes the pick order (the verdict must not change)."""
    concl = rule.conclusion
    border = mvars_of(concl.source)
    for lab in concl.labels:
        border |= mvars_of(lab)
    all_mv = set(border)
    for p in rule.premises:
        all_mv |= mvars_of(p.source) | mvars_of(p.target)
        for lab in p.labels:
            all_mv |= mvars_of(lab)
    all_mv |= mvars_of(concl.target)

    bad = []
    targets = {}
    for i, p in enumerate(rule.premises):
        reads = mvars_of(p.source).union(*[mvars_of(lab) for lab in p.labels])
        if not _bare(p.target, 0) or p.target.name in reads or p.target.name in border:
            bad.append(i)
            continue
        if p.target.name in targets.values():
            bad.append(i)
            continue
        targets[i] = p.target.name

    available = set(border)
    pending = [i for i in range(len(rule.premises)) if i not in bad]
    schedule = []
    while pending:
        ready = []
        for i in pending:
            p = rule.premises[i]
            reads = mvars_of(p.source).union(*[mvars_of(lab) for lab in p.labels])
            if reads <= available and targets[i] not in available:
                ready.append(i)
        if not ready:
            break
        pick = rng.choice(ready) if rng is not None else ready[0]
        schedule.append(pick)
        available.add(targets[pick])
        pending.remove(pick)
    for i in bad:
        available |= mvars_of(rule.premises[i].target)
    uncovered = frozenset(mvars_of(concl.target) - available)
    return BorderArity(
        rule.name,
        frozenset(border),
        frozenset(all_mv),
        None if pending else schedule,
        stuck=sorted(pending),
        uncovered=uncovered,
        bad_targets=bad,
    )


@dataclass
class RuleReport:
    rule: str
    structural: Verdict
    border: BorderArity

    @property
    def ok(self):
        return self.structural.ok and self.border.ok


@dataclass
class FormatReport:
    rules: list[RuleReport]
    op_problems: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.op_problems and all(r.ok for r in self.rules)

    def failures(self) -> list[RuleReport]:
        return [r for r in self.rules if not r.ok]


def format_report(sig: Signature) -> FormatReport:
    from .ops import validate_signature_ops

    rows = [RuleReport(r.name, check_structuralness(r, sig), check_cofibration(r)) for r in sig.rules]
    return FormatReport(rows, validate_signature_ops(sig))


def premise_order(rule: Rule) -> list[int] | None:
    """Evaluation order for the engine, or None if the rule cannot be scheduled."""
    b = check_cofibration(rule)
    return b.schedule if b.ok else None


__all__ = [
    "BorderArity",
    "FormatReport",
    "RuleReport",
    "Verdict",
    "check_cofibration",
    "check_structuralness",
    "format_report",
    "mvars_of",
    "premise_order",
]
