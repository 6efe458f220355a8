"""Signature files and surface terms: lexing, parsing, elaboration, printing.

Signature file dialect (one declaration per line; indented lines continue
the previous declaration; ``#`` starts a comment)::

    sort ID
    subsort ID < ID
    con ID : argspec, ..., argspec -> ID        argspec := [ID, ..] ID
    op ID : ID ; ID, ..., ID -> ID
    ID(pattern ; ID, ..., ID) = term            (clause)
    edge ID : ID [ID, ..] -> ID
    rule ID : transition, ..., transition => transition
        transition := term -ID[term, ..]-> term   or   term -ID-> term

Inside rules and clauses, an identifier is an object variable if a binder
``x. t`` is in scope, a constructor or operation if declared, and a
metavariable otherwise.  ``e[t1, .., tk]`` instantiates the context of a
metavariable; ``m : s`` pins the sort of a metavariable.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .signature import (
    ArgSpec,
    Clause,
    ConstructorDecl,
    EdgeTypeDecl,
    MetaVar,
    OperationDecl,
    Rule,
    Signature,
    SignatureError,
    SortError,
    TransitionPattern,
    check_sort,
)
from .terms import Con, Meta, Op, Term, Var, identity_args


class ParseError(Exception):
    def __init__(self, message, line=None, col=None):
        where = ""
        if line is not None:
            where = f"line {line}" + (f", col {col}" if col is not None else "") + ": "
        super().__init__(where + message)
        self.line = line
        self.col = col


_TOKEN = re.compile(
    r"\s*(?:(?P<id>[A-Za-z_][A-Za-z0-9_']*)|(?P<sym>->|=>|\[\]|[-()\[\],;:.=<>\\]))"
)


@dataclass
class Tok:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str, line: int = 1, col0: int = 0) -> list[Tok]:
    toks = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ParseError(f"unexpected character {text[pos:].strip()[:1]!r}", line, col0 + pos + 1)
        kind = "id" if m.group("id") else "sym"
        value = m.group(kind)
        start = m.start(kind)
        nl = text.rfind("\n", 0, start)
        if nl < 0:
            toks.append(Tok(kind, value, line, col0 + start + 1))
        else:
            toks.append(Tok(kind, value, line + text.count("\n", 0, start), start - nl))
        pos = m.end()
    return toks


class _Stream:
    def __init__(self, toks, line=None):
        self.toks = toks
        self.i = 0
        self.line = line

    def peek(self, k=0):
        j = self.i + k
        return self.toks[j] if j < len(self.toks) else None

    def at(self, text, k=0):
        t = self.peek(k)
        return t is not None and t.kind == "sym" and t.text == text

    def at_id(self, k=0):
        t = self.peek(k)
        return t is not None and t.kind == "id"

    def next(self):
        t = self.peek()
        if t is None:
            raise ParseError("unexpected end of input", self.line)
        self.i += 1
        return t

    def expect(self, text):
        t = self.next()
        if t.text != text or t.kind != "sym":
            raise ParseError(f"expected {text!r}, found {t.text!r}", t.line, t.col)
        return t

    def ident(self):
        t = self.next()
        if t.kind != "id":
            raise ParseError(f"expected identifier, found {t.text!r}", t.line, t.col)
        return t

    def done(self):
        return self.i >= len(self.toks)

    def error(self, msg):
        t = self.peek()
        if t is None:
            return ParseError(msg + " at end of input", self.line)
        return ParseError(msg + f" near {t.text!r}", t.line, t.col)


# Raw meta-terms, before name resolution:
#   ("name", ident, tok, annotation_or_None)
#   ("call", ident, tok, [(binders, raw)], [raw aux] or None)
#   ("inst", ident, tok, [raw])


def _parse_meta_term(s: _Stream):
    tok = s.ident()
    if s.at("("):
        s.next()
        args, aux = [], None
        if not s.at(")"):
            args.append(_parse_binder_arg(s))
            while s.at(","):
                s.next()
                args.append(_parse_binder_arg(s))
            if s.at(";"):
                s.next()
                aux = [_parse_meta_term(s)]
                while s.at(","):
                    s.next()
                    aux.append(_parse_meta_term(s))
        s.expect(")")
        return ("call", tok.text, tok, args, aux)
    if s.at("["):
        s.next()
        args = [_parse_meta_term(s)]
        while s.at(","):
            s.next()
            args.append(_parse_meta_term(s))
        s.expect("]")
        return ("inst", tok.text, tok, args)
    if s.at(":"):
        s.next()
        return ("name", tok.text, tok, s.ident().text)
    return ("name", tok.text, tok, None)


def _parse_binder_arg(s: _Stream):
    k = 0
    while s.at_id(k):
        k += 1
    binders = []
    if k and s.at(".", k):
        binders = [s.ident().text for _ in range(k)]
        s.expect(".")
    return binders, _parse_meta_term(s)


def _parse_transition(s: _Stream):
    src = _parse_meta_term(s)
    s.expect("-")
    edge = s.ident()
    labels = []
    if s.at("["):
        s.next()
        labels.append(_parse_meta_term(s))
        while s.at(","):
            s.next()
            labels.append(_parse_meta_term(s))
        s.expect("]")
    elif s.at("[]"):
        raise s.error("empty label list")
    s.expect("->")
    tgt = _parse_meta_term(s)
    return src, edge, labels, tgt


# ---------------------------------------------------------------------------
# Signature files


def _logical_lines(text: str):
    """Join continuation lines; yield (line_number, text) with comments stripped."""
    current, start = None, None
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        if line[0].isspace() and current is not None:
            current += " " + line.strip()
            continue
        if current is not None:
            yield start, current
        current, start = line, n
    if current is not None:
        yield start, current


def parse_signature(text: str) -> Signature:
    sig = Signature()
    for lineno, line in _logical_lines(text):
        s = _Stream(tokenize(line, lineno), lineno)
        try:
            _parse_declaration(sig, s, lineno)
        except SignatureError as exc:
            raise ParseError(str(exc), lineno) from None
        except SortError as exc:
            raise ParseError(str(exc), lineno) from None
        if not s.done():
            raise s.error("trailing input")
    return sig


def _parse_declaration(sig, s, lineno):
    head = s.peek()
    if head is None or head.kind != "id":
        raise s.error("expected a declaration")
    kw = head.text
    if kw == "sort" and s.at_id(1):
        s.next()
        sig.add_sort(s.ident().text)
    elif kw == "subsort" and s.at_id(1):
        s.next()
        lo = s.ident().text
        s.expect("<")
        sig.add_subsort(lo, s.ident().text)
    elif kw == "con" and s.at_id(1):
        s.next()
        name = s.ident().text
        s.expect(":")
        args = []
        if not s.at("->"):
            args.append(_parse_argspec(s))
            while s.at(","):
                s.next()
                args.append(_parse_argspec(s))
        s.expect("->")
        sig.add_constructor(ConstructorDecl(name, tuple(args), s.ident().text))
    elif kw == "op" and s.at_id(1):
        s.next()
        name = s.ident().text
        s.expect(":")
        main = s.ident().text
        aux = []
        if s.at(";"):
            s.next()
            aux.append(s.ident().text)
            while s.at(","):
                s.next()
                aux.append(s.ident().text)
        s.expect("->")
        result = s.ident().text
        sig.add_operation(OperationDecl(name, len(sig.operations), main, tuple(aux), result))
    elif kw == "edge" and s.at_id(1):
        s.next()
        name = s.ident().text
        s.expect(":")
        src = s.ident().text
        labels = []
        if s.at("["):
            s.next()
            labels.append(s.ident().text)
            while s.at(","):
                s.next()
                labels.append(s.ident().text)
            s.expect("]")
        s.expect("->")
        sig.add_edge(EdgeTypeDecl(name, src, tuple(labels), s.ident().text))
    elif kw == "rule" and s.at_id(1):
        s.next()
        name = s.ident().text
        s.expect(":")
        premises = []
        while not s.at("=>"):
            premises.append(_parse_transition(s))
            if not s.at("=>"):
                s.expect(",")
        s.expect("=>")
        conclusion = _parse_transition(s)
        sig.add_rule(elaborate_rule(sig, name, premises, conclusion, lineno))
    elif s.at("(", 1):
        sig.add_clause(_parse_clause(sig, s, lineno))
    else:
        raise s.error("expected a declaration")


def _parse_argspec(s):
    binders = []
    if s.at("["):
        s.next()
        binders.append(s.ident().text)
        while s.at(","):
            s.next()
            binders.append(s.ident().text)
        s.expect("]")
    return ArgSpec(tuple(binders), s.ident().text)


def _parse_clause(sig, s, lineno):
    op_tok = s.ident()
    op = sig.operations.get(op_tok.text)
    if op is None:
        raise ParseError(f"unknown operation {op_tok.text!r}", op_tok.line, op_tok.col)
    s.expect("(")
    con_tok = s.ident()
    con = sig.constructors.get(con_tok.text)
    if con is None:
        raise ParseError(f"unknown constructor {con_tok.text!r}", con_tok.line, con_tok.col)
    arg_mvars = []
    if s.at("("):
        s.next()
        if not s.at(")"):
            arg_mvars.append(_parse_pattern_arg(s))
            while s.at(","):
                s.next()
                arg_mvars.append(_parse_pattern_arg(s))
        s.expect(")")
    aux = []
    if s.at(";"):
        s.next()
        aux.append(s.ident().text)
        while s.at(","):
            s.next()
            aux.append(s.ident().text)
    s.expect(")")
    s.expect("=")
    rhs_raw = _parse_meta_term(s)
    if len(arg_mvars) != len(con.args):
        raise ParseError(f"{con.name} takes {len(con.args)} arguments", con_tok.line, con_tok.col)
    mvars = {}
    for (binders, name), spec in zip(arg_mvars, con.args):
        if len(binders) != len(spec.binders):
            raise ParseError(
                f"argument {name!r} of {con.name} needs {len(spec.binders)} binders", lineno
            )
        mvars[name] = MetaVar(name, spec.sort, spec.binders)
    for name, sort in zip(aux, op.aux_sorts):
        mvars[name] = MetaVar(name, sort, ())
    rhs = _Elaborator(sig, mvars, lineno).build(rhs_raw, [])
    return Clause(op.name, con.name, tuple(n for _, n in arg_mvars), tuple(aux), rhs, lineno)


def _parse_pattern_arg(s):
    binders, raw = _parse_binder_arg(s)
    if raw[0] != "name" or raw[3] is not None:
        tok = raw[2]
        raise ParseError("clause patterns take bare metavariables as arguments", tok.line, tok.col)
    return binders, raw[1]


# ---------------------------------------------------------------------------
# Rule elaboration


class _Elaborator:
    """Resolve names of raw meta-terms to terms, given known metavariables."""

    def __init__(self, sig, mvars, lineno):
        self.sig = sig
        self.mvars = mvars
        self.lineno = lineno

    def err(self, msg, tok=None):
        if tok is not None:
            return ParseError(msg, tok.line, tok.col)
        return ParseError(msg, self.lineno)

    def build(self, raw, scope):
        """``scope`` is a list of (name, sort), innermost last."""
        kind = raw[0]
        name, tok = raw[1], raw[2]
        if kind == "name":
            for i, (x, _) in enumerate(reversed(scope)):
                if x == name:
                    return Var(i)
            if name in self.sig.constructors:
                decl = self.sig.constructors[name]
                if decl.args:
                    raise self.err(f"constructor {name} needs arguments", tok)
                return Con(name, (), ())
            mv = self.mvars.get(name)
            if mv is None:
                raise self.err(f"unknown name {name!r}", tok)
            k = len(mv.ctx)
            if k == 0:
                return Meta(name)
            if len(scope) < k:
                raise self.err(f"metavariable {name} used outside the scope of its {k} binders", tok)
            return Meta(name, identity_args(k))
        if kind == "inst":
            mv = self.mvars.get(name)
            if mv is None:
                raise self.err(f"{name!r} is not a metavariable", tok)
            if len(raw[3]) != len(mv.ctx):
                raise self.err(f"metavariable {name} takes {len(mv.ctx)} arguments", tok)
            return Meta(name, [self.build(a, scope) for a in raw[3]])
        if kind == "call":
            args, aux = raw[3], raw[4]
            if name in self.sig.constructors:
                decl = self.sig.constructors[name]
                if aux is not None:
                    raise self.err(f"constructor {name} takes no ';' arguments", tok)
                if len(args) != len(decl.args):
                    raise self.err(f"{name} takes {len(decl.args)} arguments", tok)
                built = []
                for (binders, a), spec in zip(args, decl.args):
                    if len(binders) != len(spec.binders):
                        raise self.err(f"argument of {name} needs {len(spec.binders)} binders", tok)
                    built.append(self.build(a, scope + list(zip(binders, spec.binders))))
                return Con(name, built, decl.binder_counts)
            if name in self.sig.operations:
                decl = self.sig.operations[name]
                if len(args) != 1 or args[0][0]:
                    raise self.err(f"operation {name} takes one main argument", tok)
                aux = aux or []
                if len(aux) != len(decl.aux_sorts):
                    raise self.err(f"operation {name} takes {len(decl.aux_sorts)} ';' arguments", tok)
                return Op(name, self.build(args[0][1], scope), [self.build(a, scope) for a in aux])
            raise self.err(f"unknown constructor or operation {name!r}", tok)
        raise TypeError(raw)


def _pattern_mvars(sig, raw, scope_sorts, found, annotations, lineno):
    """Record the context of every metavariable occurring bare in a pattern position."""
    kind = raw[0]
    if kind == "name":
        name = raw[1]
        if name in scope_sorts[0] or name in sig.constructors:
            return
        ctx = tuple(s for _, s in scope_sorts[1])
        prev = found.get(name)
        if prev is not None and prev != ctx:
            raise ParseError(f"metavariable {name} bound under different binders", lineno)
        found[name] = ctx
        if raw[3] is not None:
            annotations[name] = raw[3]
    elif kind == "call":
        decl = sig.constructors.get(raw[1])
        if decl is None:
            return
        for (binders, a), spec in zip(raw[3], decl.args):
            names = scope_sorts[0] | set(binders)
            bound = scope_sorts[1] + list(zip(binders, spec.binders))
            _pattern_mvars(sig, a, (names, bound), found, annotations, lineno)


def _occurrences(sig, raw, expected, scope, mvar_ctx, out, annotations):
    """Collect (metavariable -> expected sorts) over a raw term."""
    kind = raw[0]
    name = raw[1]
    if kind == "name":
        if any(x == name for x, _ in scope) or name in sig.constructors:
            return
        out.setdefault(name, []).append(expected)
        if raw[3] is not None:
            annotations[name] = raw[3]
    elif kind == "inst":
        out.setdefault(name, []).append(expected)
        ctx = mvar_ctx.get(name)
        for i, a in enumerate(raw[3]):
            slot = ctx[i] if ctx and i < len(ctx) else None
            _occurrences(sig, a, slot, scope, mvar_ctx, out, annotations)
    elif kind == "call":
        if name in sig.constructors:
            decl = sig.constructors[name]
            for (binders, a), spec in zip(raw[3], decl.args):
                _occurrences(sig, a, spec.sort, scope + list(zip(binders, spec.binders)), mvar_ctx, out, annotations)
        elif name in sig.operations:
            decl = sig.operations[name]
            if raw[3]:
                _occurrences(sig, raw[3][0][1], decl.main_sort, scope, mvar_ctx, out, annotations)
            for a, s in zip(raw[4] or [], decl.aux_sorts):
                _occurrences(sig, a, s, scope, mvar_ctx, out, annotations)


def elaborate_rule(sig, name, premises, conclusion, lineno=None) -> Rule:
    """Turn raw transitions into a sorted rule, inferring metavariable contexts and sorts."""
    all_edges = [p[1] for p in premises] + [conclusion[1]]
    for e in all_edges:
        if e.text not in sig.edges:
            raise ParseError(f"unknown edge type {e.text!r}", e.line, e.col)
    for src, edge, labels, tgt in premises + [conclusion]:
        decl = sig.edges[edge.text]
        if len(labels) != len(decl.labels):
            raise ParseError(
                f"edge {decl.name} carries {len(decl.labels)} labels, got {len(labels)}", edge.line, edge.col
            )

    found: dict[str, tuple] = {}
    annotations: dict[str, str] = {}
    empty = (set(), [])
    c_src, c_edge, c_labels, c_tgt = conclusion
    _pattern_mvars(sig, c_src, empty, found, annotations, lineno)
    for lab in c_labels:
        _pattern_mvars(sig, lab, empty, found, annotations, lineno)
    for _, _, _, tgt in premises:
        _pattern_mvars(sig, tgt, empty, found, annotations, lineno)

    occ: dict[str, list] = {}
    positions = []
    for src, edge, labels, tgt in premises + [conclusion]:
        decl = sig.edges[edge.text]
        positions.append((src, decl.source))
        positions.extend(zip(labels, decl.labels))
        positions.append((tgt, decl.target))
    for raw, sort in positions:
        _occurrences(sig, raw, sort, [], found, occ, annotations)

    mvars = {}
    for mv, sorts in occ.items():
        ctx = found.get(mv)
        if ctx is None:
            ctx = ()
        sorts = [s for s in sorts if s is not None]
        if mv in annotations:
            sort = annotations[mv]
            if sort not in sig.sorts:
                raise ParseError(f"unknown sort {sort!r} in annotation of {mv}", lineno)
        else:
            sort = sig.glb(sorts) if sorts else None
            if sort is None:
                raise ParseError(f"metavariable {mv} has no consistent sort ({', '.join(sorts)})", lineno)
        mvars[mv] = MetaVar(mv, sort, ctx)

    # metavariables used with explicit arguments but never bound by a pattern
    def fix_fresh(raw):
        if raw[0] == "inst" and raw[1] in mvars and raw[1] not in found:
            m = mvars[raw[1]]
            if len(m.ctx) != len(raw[3]):
                mvars[raw[1]] = MetaVar(m.name, m.sort, tuple(sig.variable_sorts()[:1]) * len(raw[3]))
        if raw[0] == "call":
            for _, a in raw[3]:
                fix_fresh(a)
            for a in raw[4] or []:
                fix_fresh(a)
        if raw[0] == "inst":
            for a in raw[3]:
                fix_fresh(a)

    for raw, _ in positions:
        fix_fresh(raw)

    el = _Elaborator(sig, mvars, lineno)

    def build_transition(t):
        src, edge, labels, tgt = t
        return TransitionPattern(
            el.build(src, []),
            edge.text,
            tuple(el.build(lab, []) for lab in labels),
            el.build(tgt, []),
        )

    prem = tuple(build_transition(p) for p in premises)
    concl = build_transition(conclusion)
    for tp in prem + (concl,):
        decl = sig.edges[tp.edge]
        try:
            check_sort(sig, (), tp.source, decl.source, mvars)
            for lab, s in zip(tp.labels, decl.labels):
                check_sort(sig, (), lab, s, mvars)
            check_sort(sig, (), tp.target, decl.target, mvars)
        except SortError as exc:
            raise ParseError(f"rule {name}: {exc}", lineno) from None
    order = list(dict.fromkeys(list(found) + list(occ)))
    return Rule(name, tuple(mvars[m] for m in order if m in mvars), prem, concl, lineno)


# ---------------------------------------------------------------------------
# Surface terms

_SUGAR = {"lam", "app", "shift", "reset", "hole", "capp", "cappr"}


def _has(sig, name):
    return name in sig.constructors


def parse_term(sig: Signature, text: str, ctx=(), sort: str | None = None) -> Term:
    """Parse a term in surface syntax.

    ``ctx`` is a sequence of ``(name, sort)`` pairs or plain names (taken
    to have the first bindable sort), outermost first.  Both sugar
    (``\\x. e``, ``e e``, ``shift k. e``, ``<e>``, ``[]``) and the prefix
    form ``con(arg, x. arg)`` are accepted.
    """
    toks = tokenize(text)
    s = _Stream(toks)
    raw = _surface_expr(sig, s)
    if not s.done():
        raise s.error("trailing input")
    scope = []
    var_sorts = sig.variable_sorts()
    for entry in ctx:
        if isinstance(entry, tuple):
            scope.append(entry)
        else:
            scope.append((entry, var_sorts[0] if var_sorts else None))
    if sort is None:
        if _raw_has_hole(raw) and _has(sig, "hole"):
            sort = sig.constructors["hole"].result
        else:
            sort = _default_sort(sig)
    t = _surface_build(sig, raw, scope, sort)
    try:
        check_sort(sig, tuple(s for _, s in scope), t, sort)
    except SortError as exc:
        raise ParseError(f"sort error: {exc}") from None
    return t


def _default_sort(sig):
    if "app" in sig.constructors:
        return sig.top(sig.constructors["app"].result)
    return sig.top(sig.sorts[0])


def _surface_expr(sig, s):
    if s.at("\\"):
        s.next()
        x = s.ident().text
        s.expect(".")
        return ("lam", x, _surface_expr(sig, s))
    if s.at_id() and s.peek().text == "shift" and _has(sig, "shift") and s.at_id(1) and s.at(".", 2):
        s.next()
        x = s.ident().text
        s.expect(".")
        return ("shift", x, _surface_expr(sig, s))
    items = []
    while True:
        if s.at("\\") or (
            s.at_id() and s.peek().text == "shift" and _has(sig, "shift") and s.at_id(1) and s.at(".", 2)
        ):
            items.append(_surface_expr(sig, s))
            break
        atom = _surface_atom(sig, s)
        if atom is None:
            break
        items.append(atom)
    if not items:
        raise s.error("expected a term")
    out = items[0]
    for a in items[1:]:
        out = ("app", out, a)
    return out


def _surface_atom(sig, s):
    t = s.peek()
    if t is None:
        return None
    if t.kind == "sym":
        if t.text == "(":
            s.next()
            e = _surface_expr(sig, s)
            s.expect(")")
            return e
        if t.text == "<":
            s.next()
            e = _surface_expr(sig, s)
            s.expect(">")
            return ("reset", e)
        if t.text == "[]":
            s.next()
            return ("hole",)
        return None
    s.next()
    # name(args) is a call only when the parenthesis touches the name
    nxt = s.peek()
    decl = sig.constructors.get(t.text)
    touching = (
        nxt is not None and nxt.text == "(" and nxt.line == t.line and nxt.col == t.col + len(t.text)
    )
    if touching and decl is not None and decl.args:
        s.next()
        args = []
        if not s.at(")"):
            args.append(_surface_binder_arg(sig, s))
            while s.at(","):
                s.next()
                args.append(_surface_binder_arg(sig, s))
        s.expect(")")
        return ("call", t.text, args, t)
    return ("var", t.text, t)


def _surface_binder_arg(sig, s):
    k = 0
    while s.at_id(k):
        k += 1
    binders = []
    if k and s.at(".", k):
        binders = [s.ident().text for _ in range(k)]
        s.expect(".")
    return binders, _surface_expr(sig, s)


def _raw_has_hole(raw):
    if raw[0] == "hole":
        return True
    if raw[0] == "app":
        return _raw_has_hole(raw[1]) or _raw_has_hole(raw[2])
    if raw[0] == "call":
        return raw[1] in ("capp", "cappr", "hole") or any(_raw_has_hole(a) for _, a in raw[2])
    return False


def _surface_build(sig, raw, scope, sort):
    kind = raw[0]
    if kind == "var":
        name = raw[1]
        for i, (x, _) in enumerate(reversed(scope)):
            if x == name:
                return Var(i)
        decl = sig.constructors.get(name)
        if decl is not None and not decl.args:
            return Con(name, (), ())
        tok = raw[2]
        raise ParseError(f"unbound name {name!r}", tok.line, tok.col)
    if kind in ("lam", "shift"):
        decl = sig.constructors[kind]
        spec = decl.args[0]
        body = _surface_build(sig, raw[2], scope + [(raw[1], spec.binders[0])], spec.sort)
        return Con(kind, (body,), decl.binder_counts)
    if kind == "reset":
        decl = sig.constructors["reset"]
        return Con("reset", (_surface_build(sig, raw[1], scope, decl.args[0].sort),), (0,))
    if kind == "hole":
        if not _has(sig, "hole"):
            raise ParseError("this signature has no hole")
        return Con("hole", (), ())
    if kind == "app":
        f, a = raw[1], raw[2]
        if _has(sig, "cappr") and _raw_has_hole(f):
            d = sig.constructors["cappr"]
            return Con("cappr", (
                _surface_build(sig, f, scope, d.args[0].sort),
                _surface_build(sig, a, scope, d.args[1].sort),
            ), (0, 0))
        if _has(sig, "capp") and _raw_has_hole(a):
            d = sig.constructors["capp"]
            return Con("capp", (
                _surface_build(sig, f, scope, d.args[0].sort),
                _surface_build(sig, a, scope, d.args[1].sort),
            ), (0, 0))
        if not _has(sig, "app"):
            raise ParseError("this signature has no application")
        d = sig.constructors["app"]
        return Con("app", (
            _surface_build(sig, f, scope, d.args[0].sort),
            _surface_build(sig, a, scope, d.args[1].sort),
        ), (0, 0))
    if kind == "call":
        name, args, tok = raw[1], raw[2], raw[3]
        decl = sig.constructors.get(name)
        if decl is None:
            raise ParseError(f"unknown constructor {name!r}", tok.line, tok.col)
        if len(args) != len(decl.args):
            raise ParseError(f"{name} takes {len(decl.args)} arguments", tok.line, tok.col)
        built = []
        for (binders, a), spec in zip(args, decl.args):
            if len(binders) != len(spec.binders):
                raise ParseError(f"argument of {name} needs {len(spec.binders)} binders", tok.line, tok.col)
            built.append(_surface_build(sig, a, scope + list(zip(binders, spec.binders)), spec.sort))
        return Con(name, built, decl.binder_counts)
    raise TypeError(raw)


# ---------------------------------------------------------------------------
# Printing

_BASE_NAMES = ["x", "y", "z", "w", "u", "k", "f", "g", "h"]

_TOP, _APP, _ATOM = 0, 1, 2


def _fresh(sig, used):
    reserved = set(sig.constructors) | set(sig.operations) | {"shift"}
    n = 0
    while True:
        for base in _BASE_NAMES:
            cand = base if n == 0 else f"{base}{n}"
            if cand not in reserved and cand not in used:
                return cand
        n += 1


def show(sig: Signature, t: Term, names=(), prefix: bool = False) -> str:
    """Print a normal term; ``names`` name the free variables, outermost first."""
    return _show(sig, t, list(names), _TOP, prefix)


def _show(sig, t, names, prec, prefix):
    if type(t) is Var:
        if t.index >= len(names):
            return f"#{t.index}"
        return names[len(names) - 1 - t.index]
    if type(t) is Meta:
        inner = ", ".join(_show(sig, a, names, _TOP, prefix) for a in t.args)
        return f"?{t.name}" + (f"[{inner}]" if t.args else "")
    if type(t) is Op:
        aux = ", ".join(_show(sig, a, names, _TOP, prefix) for a in t.aux)
        return f"{t.name}({_show(sig, t.main, names, _TOP, prefix)}" + (f"; {aux})" if t.aux else ")")
    if type(t) is not Con:
        return repr(t)
    name = t.name
    sugar = not prefix and name in _SUGAR
    if sugar and name in ("lam", "shift"):
        x = _fresh(sig, names)
        body = _show(sig, t.args[0], names + [x], _TOP, prefix)
        s = f"\\{x}. {body}" if name == "lam" else f"shift {x}. {body}"
        return f"({s})" if prec > _TOP else s
    if sugar and name == "reset":
        return f"<{_show(sig, t.args[0], names, _TOP, prefix)}>"
    if sugar and name == "hole":
        return "[]"
    if sugar and name in ("app", "cappr", "capp"):
        f, a = t.args
        left_prec = _ATOM if name == "capp" else _APP
        s = f"{_show(sig, f, names, left_prec, prefix)} {_show(sig, a, names, _ATOM, prefix)}"
        return f"({s})" if prec == _ATOM else s
    if not t.args:
        return name
    decl = sig.constructors.get(name)
    parts = []
    for i, a in enumerate(t.args):
        k = t.binders[i]
        scope = list(names)
        bound = []
        for _ in range(k):
            x = _fresh(sig, scope)
            scope.append(x)
            bound.append(x)
        body = _show(sig, a, scope, _TOP, prefix)
        parts.append((" ".join(bound) + ". " + body) if bound else body)
    del decl
    return f"{name}({', '.join(parts)})"


def show_rule(sig: Signature, rule: Rule) -> str:
    def tr(tp):
        labels = f"[{', '.join(show(sig, l, prefix=True) for l in tp.labels)}]" if tp.labels else ""
        return f"{show(sig, tp.source, prefix=True)} -{tp.edge}{labels}-> {show(sig, tp.target, prefix=True)}"

    prem = ", ".join(tr(p) for p in rule.premises)
    return f"rule {rule.name} : {prem + ' ' if prem else ''}=> {tr(rule.conclusion)}"
