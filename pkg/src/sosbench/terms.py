"""Nameless terms with binders.

Variables are de Bruijn indices, ``Var(0)`` being the innermost binder.
Constructor nodes record how many binders each argument sits under, so
shifting and substitution never need the signature.  ``Op`` and ``Subst``
nodes are transient: ``sosbench.ops.normalize`` eliminates them.  ``Meta``
nodes only occur inside rules and clauses.
"""

from __future__ import annotations

from typing import Callable, Sequence


class Term:
    __slots__ = ()

    def __setattr__(self, name, value):
        raise AttributeError(f"{type(self).__name__} is immutable")


class Var(Term):
    __slots__ = ("index", "_hash")

    def __init__(self, index: int):
        if index < 0:
            raise ValueError("negative de Bruijn index")
        object.__setattr__(self, "index", index)
        object.__setattr__(self, "_hash", hash(("Var", index)))

    def __eq__(self, other):
        return self is other or (type(other) is Var and other.index == self.index)

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"Var({self.index})"


class Con(Term):
    __slots__ = ("name", "args", "binders", "_hash", "_size")

    def __init__(self, name: str, args: Sequence[Term] = (), binders: Sequence[int] | None = None):
        args = tuple(args)
        binders = tuple(binders) if binders is not None else (0,) * len(args)
        if len(binders) != len(args):
            raise ValueError(f"{name}: {len(args)} args but {len(binders)} binder counts")
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "args", args)
        object.__setattr__(self, "binders", binders)
        object.__setattr__(self, "_hash", hash(("Con", name, args, binders)))
        object.__setattr__(self, "_size", 1 + sum(size(a) for a in args))

    def __eq__(self, other):
        if self is other:
            return True
        return (
            type(other) is Con
            and self._hash == other._hash
            and self.name == other.name
            and self.binders == other.binders
            and self.args == other.args
        )

    def __hash__(self):
        return self._hash

    def __repr__(self):
        if not self.args:
            return f"Con({self.name!r})"
        return f"Con({self.name!r}, {list(self.args)!r}, {list(self.binders)!r})"


class Op(Term):
    """Pending call of a clause-defined operation."""

    __slots__ = ("name", "main", "aux", "_hash")

    def __init__(self, name: str, main: Term, aux: Sequence[Term] = ()):
        aux = tuple(aux)
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "main", main)
        object.__setattr__(self, "aux", aux)
        object.__setattr__(self, "_hash", hash(("Op", name, main, aux)))

    def __eq__(self, other):
        return self is other or (
            type(other) is Op
            and self._hash == other._hash
            and (self.name, self.main, self.aux) == (other.name, other.main, other.aux)
        )

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"Op({self.name!r}, {self.main!r}, {list(self.aux)!r})"


class Subst(Term):
    """Pending substitution of the last ``len(repl)`` variables of ``body``."""

    __slots__ = ("body", "repl", "_hash")

    def __init__(self, body: Term, repl: Sequence[Term]):
        repl = tuple(repl)
        object.__setattr__(self, "body", body)
        object.__setattr__(self, "repl", repl)
        object.__setattr__(self, "_hash", hash(("Subst", body, repl)))

    def __eq__(self, other):
        return self is other or (
            type(other) is Subst and (self.body, self.repl) == (other.body, other.repl)
        )

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"Subst({self.body!r}, {list(self.repl)!r})"


class Meta(Term):
    """Metavariable occurrence; ``args`` instantiate the metavariable's own context."""

    __slots__ = ("name", "args", "_hash")

    def __init__(self, name: str, args: Sequence[Term] = ()):
        args = tuple(args)
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "args", args)
        object.__setattr__(self, "_hash", hash(("Meta", name, args)))

    def __eq__(self, other):
        return self is other or (
            type(other) is Meta and (self.name, self.args) == (other.name, other.args)
        )

    def __hash__(self):
        return self._hash

    def __repr__(self):
        if not self.args:
            return f"Meta({self.name!r})"
        return f"Meta({self.name!r}, {list(self.args)!r})"


def size(t: Term) -> int:
    """Node count.  Coercions are implicit and cost nothing."""
    if type(t) is Con:
        return t._size
    if type(t) is Var:
        return 1
    if type(t) is Op:
        return 1 + size(t.main) + sum(size(a) for a in t.aux)
    if type(t) is Subst:
        return 1 + size(t.body) + sum(size(a) for a in t.repl)
    if type(t) is Meta:
        return 1 + sum(size(a) for a in t.args)
    raise TypeError(t)


def is_normal(t: Term) -> bool:
    if type(t) is Var:
        return True
    if type(t) is Con:
        return all(is_normal(a) for a in t.args)
    return False


def _map_vars(t: Term, fn: Callable[[int, int], Term], depth: int = 0) -> Term:
    """Rebuild ``t`` replacing each variable ``v`` seen under ``depth`` binders by ``fn(v, depth)``."""
    tt = type(t)
    if tt is Var:
        return fn(t, depth)
    if tt is Con:
        if not t.args:
            return t
        args = tuple(_map_vars(a, fn, depth + b) for a, b in zip(t.args, t.binders))
        if all(x is y for x, y in zip(args, t.args)):
            return t
        return Con(t.name, args, t.binders)
    if tt is Op:
        return Op(t.name, _map_vars(t.main, fn, depth), [_map_vars(a, fn, depth) for a in t.aux])
    if tt is Subst:
        return Subst(
            _map_vars(t.body, fn, depth + len(t.repl)),
            [_map_vars(a, fn, depth) for a in t.repl],
        )
    if tt is Meta:
        return Meta(t.name, [_map_vars(a, fn, depth) for a in t.args])
    raise TypeError(t)


def max_free(t: Term) -> int:
    """One more than the largest free index, i.e. the minimal context length."""
    tt = type(t)
    if tt is Var:
        return t.index + 1
    if tt is Con:
        return max((max_free(a) - b for a, b in zip(t.args, t.binders)), default=0)
    if tt is Op:
        return max([max_free(t.main)] + [max_free(a) for a in t.aux])
    if tt is Subst:
        return max([max_free(t.body) - len(t.repl)] + [max_free(a) for a in t.repl])
    if tt is Meta:
        return max((max_free(a) for a in t.args), default=0)
    raise TypeError(t)


def is_closed(t: Term) -> bool:
    return max_free(t) <= 0


def shift(t: Term, by: int, cutoff: int = 0) -> Term:
    """Add ``by`` to every index that escapes ``cutoff`` local binders."""
    if by == 0:
        return t

    def fn(v, depth):
        if v.index < depth + cutoff:
            return v
        return Var(v.index + by)

    return _map_vars(t, fn)


def substitute(t: Term, replacements: Sequence[Term]) -> Term:
    """Simultaneous substitution for every variable of ``t``'s context.

    ``replacements[j]`` replaces context slot ``j`` (outermost first), so with
    ``n`` slots ``Var(i)`` at top level becomes ``replacements[n - 1 - i]``.
    Replacements live in a common target context and are shifted under binders.
    """
    repl = tuple(replacements)
    n = len(repl)

    def fn(v, depth):
        if v.index < depth:
            return v
        j = v.index - depth
        if j >= n:
            raise IndexError(f"variable {j} escapes a context of length {n}")
        return shift(repl[n - 1 - j], depth)

    return _map_vars(t, fn)


def instantiate(body: Term, args: Sequence[Term]) -> Term:
    """Replace the innermost ``len(args)`` variables of ``body``; outer ones move down.

    ``body`` lives in ``G + D`` with ``len(D) == len(args)``; ``args`` and the
    result live in ``G``.  ``args[j]`` fills slot ``j`` of ``D`` (outermost first).
    """
    args = tuple(args)
    k = len(args)
    if k == 0:
        return body

    def fn(v, depth):
        if v.index < depth:
            return v
        j = v.index - depth
        if j < k:
            return shift(args[k - 1 - j], depth)
        return Var(v.index - k)

    return _map_vars(body, fn)


def identity_args(k: int) -> tuple[Term, ...]:
    """The variables of the innermost ``k`` slots, outermost first."""
    return tuple(Var(i) for i in range(k - 1, -1, -1))
