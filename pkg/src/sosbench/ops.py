"""Clause-defined operations: validation, evaluation, normalization.

An operation such as context application is declared with a main sort and
auxiliary sorts, and defined by one clause per constructor of the main sort.
Clauses may call the operation itself on immediate subterms of the matched
constructor, and any operation declared earlier.  Capture-avoiding
substitution is built in (``Subst`` nodes and metavariable arguments).
"""

from __future__ import annotations

from dataclasses import dataclass

from .signature import MetaVar, Signature, SortError, check_sort
from .terms import Con, Meta, Op, Subst, Term, Var, identity_args, instantiate, shift


class EvaluationError(Exception):
    pass


@dataclass(frozen=True)
class Problem:
    kind: str
    where: str
    message: str

    def __str__(self):
        return f"{self.where}: {self.kind}: {self.message}"


def fill(t: Term, env: dict[str, Term], depth: int = 0) -> Term:
    """Replace metavariables by their values.

    A value bound under ``k`` pattern binders lives in ``G + k``; at an
    occurrence ``m(a1..ak)`` under ``depth`` further binders its outer
    variables are shifted past those binders and its own ``k`` are
    instantiated with the (filled) arguments.
    """
    tt = type(t)
    if tt is Var:
        return t
    if tt is Con:
        if not t.args:
            return t
        return Con(t.name, [fill(a, env, depth + b) for a, b in zip(t.args, t.binders)], t.binders)
    if tt is Meta:
        try:
            value = env[t.name]
        except KeyError:
            raise EvaluationError(f"unbound metavariable {t.name!r}") from None
        k = len(t.args)
        value = shift(value, depth, cutoff=k)
        if k:
            value = instantiate(value, [fill(a, env, depth) for a in t.args])
        return value
    if tt is Op:
        return Op(t.name, fill(t.main, env, depth), [fill(a, env, depth) for a in t.aux])
    if tt is Subst:
        return Subst(fill(t.body, env, depth + len(t.repl)), [fill(a, env, depth) for a in t.repl])
    raise TypeError(t)


def match(pattern: Term, t: Term, env: dict[str, Term] | None = None) -> dict[str, Term] | None:
    """First-order matching of a constructor pattern; metavariables bind whole subterms.

    Pattern metavariables must be bare (identity arguments over the binders
    in scope), so the bound value is the subterm itself.  Repeated
    metavariables must bind equal terms.
    """
    env = {} if env is None else dict(env)
    return env if _match(pattern, t, env) else None


def _match(p, t, env):
    tp = type(p)
    if tp is Meta:
        prev = env.get(p.name)
        if prev is None:
            env[p.name] = t
            return True
        return prev == t
    if tp is Var:
        return t == p
    if tp is Con:
        if type(t) is not Con or t.name != p.name or t.binders != p.binders:
            return False
        return all(_match(a, b, env) for a, b in zip(p.args, t.args))
    raise EvaluationError(f"not a pattern: {p!r}")


def normalize(sig: Signature, t: Term) -> Term:
    """Eliminate every ``Op`` and ``Subst`` node."""
    tt = type(t)
    if tt is Var:
        return t
    if tt is Con:
        if not t.args:
            return t
        args = [normalize(sig, a) for a in t.args]
        if all(x is y for x, y in zip(args, t.args)):
            return t
        return Con(t.name, args, t.binders)
    if tt is Op:
        return eval_op(sig, t.name, normalize(sig, t.main), [normalize(sig, a) for a in t.aux])
    if tt is Subst:
        return instantiate(normalize(sig, t.body), [normalize(sig, r) for r in t.repl])
    raise EvaluationError(f"cannot normalize {t!r}")


def _clause_table(sig):
    table = getattr(sig, "_clause_table", None)
    if table is None:
        table = {}
        for c in sig.clauses:
            table.setdefault((c.op, c.constructor), c)
        sig._clause_table = table
    return table


def eval_op(sig: Signature, op: str, main: Term, aux=(), _count=None) -> Term:
    """Unfold the clauses of ``op`` on a normal ``main`` argument."""
    aux = tuple(aux)
    cache = sig.__dict__.setdefault("_op_cache", {})
    key = (op, main, aux)
    if _count is None and key in cache:
        return cache[key]
    if type(main) is not Con:
        raise EvaluationError(f"{op}: no clause for {main!r}")
    clause = _clause_table(sig).get((op, main.name))
    if clause is None:
        raise EvaluationError(f"{op}: no clause for constructor {main.name!r}")
    if _count is not None:
        _count[0] += 1
    env = dict(zip(clause.arg_mvars, main.args))
    env.update(zip(clause.aux_mvars, aux))
    body = fill(clause.rhs, env)
    if _count is None:
        result = normalize(sig, body)
        cache[key] = result
        return result
    return _normalize_counting(sig, body, _count)


def _normalize_counting(sig, t, count):
    tt = type(t)
    if tt is Var:
        return t
    if tt is Con:
        return Con(t.name, [_normalize_counting(sig, a, count) for a in t.args], t.binders)
    if tt is Op:
        main = _normalize_counting(sig, t.main, count)
        aux = [_normalize_counting(sig, a, count) for a in t.aux]
        return eval_op(sig, t.name, main, aux, _count=count)
    if tt is Subst:
        body = _normalize_counting(sig, t.body, count)
        return instantiate(body, [_normalize_counting(sig, r, count) for r in t.repl])
    raise EvaluationError(f"cannot normalize {t!r}")


def unfold_count(sig: Signature, op: str, main: Term, aux=()) -> int:
    """Number of clause unfoldings performed by ``eval_op`` (nested calls included)."""
    count = [0]
    eval_op(sig, op, main, aux, _count=count)
    return count[0]


def clause_mvars(sig: Signature, clause) -> dict[str, MetaVar]:
    con = sig.constructors[clause.constructor]
    op = sig.operations[clause.op]
    mvars = {m: MetaVar(m, spec.sort, spec.binders) for m, spec in zip(clause.arg_mvars, con.args)}
    for m, s in zip(clause.aux_mvars, op.aux_sorts):
        mvars[m] = MetaVar(m, s, ())
    return mvars


def validate_signature_ops(sig: Signature) -> list[Problem]:
    """Shape check of every clause; an empty list means the operations are well defined."""
    problems = []
    seen = {}
    for clause in sig.clauses:
        where = f"clause {clause.op}({clause.constructor})" + (
            f" at line {clause.line}" if clause.line else ""
        )
        op = sig.operations.get(clause.op)
        con = sig.constructors.get(clause.constructor)
        if op is None:
            problems.append(Problem("unknown-operation", where, clause.op))
            continue
        if con is None:
            problems.append(Problem("unknown-constructor", where, clause.constructor))
            continue
        if not sig.leq(con.result, op.main_sort):
            problems.append(
                Problem("sort", where, f"{con.name} builds {con.result}, not {op.main_sort}")
            )
        if len(clause.arg_mvars) != len(con.args) or len(clause.aux_mvars) != len(op.aux_sorts):
            problems.append(Problem("arity", where, "pattern arity does not match declarations"))
            continue
        names = clause.arg_mvars + clause.aux_mvars
        if len(set(names)) != len(names):
            problems.append(Problem("nonlinear", where, "pattern metavariables must be distinct"))
        if (clause.op, clause.constructor) in seen:
            problems.append(Problem("duplicate", where, "second clause for the same constructor"))
        seen[(clause.op, clause.constructor)] = clause
        mvars = clause_mvars(sig, clause)
        try:
            check_sort(sig, (), clause.rhs, op.result_sort, mvars)
        except SortError as exc:
            problems.append(Problem("sort", where, str(exc)))
        problems.extend(_recursion_problems(sig, clause, op, mvars, where))

    for op in sig.operations.values():
        for con in sig.constructors.values():
            if sig.leq(con.result, op.main_sort) and (op.name, con.name) not in seen:
                problems.append(
                    Problem("missing", f"operation {op.name}", f"no clause for constructor {con.name}")
                )
        for s in sig.variable_sorts():
            if sig.leq(s, op.main_sort):
                problems.append(
                    Problem("missing", f"operation {op.name}", f"variables of sort {s} have no clause")
                )
    return problems


def _recursion_problems(sig, clause, op, mvars, where):
    out = []

    def walk(t):
        tt = type(t)
        if tt is Con:
            for a in t.args:
                walk(a)
        elif tt is Meta:
            for a in t.args:
                walk(a)
        elif tt is Subst:
            walk(t.body)
            for a in t.repl:
                walk(a)
        elif tt is Op:
            callee = sig.operations.get(t.name)
            if callee is None:
                out.append(Problem("unknown-operation", where, t.name))
            elif callee.stratum > op.stratum:
                out.append(
                    Problem("stratum", where, f"calls {t.name}, declared after {op.name}")
                )
            elif callee.name == op.name:
                m = t.main
                ok = (
                    type(m) is Meta
                    and m.name in clause.arg_mvars
                    and m.args == identity_args(len(mvars[m.name].ctx))
                )
                if not ok:
                    out.append(
                        Problem(
                            "non-decreasing",
                            where,
                            "recursive call must be on an immediate argument of the pattern",
                        )
                    )
            walk(t.main)
            for a in t.aux:
                walk(a)

    walk(clause.rhs)
    return out
