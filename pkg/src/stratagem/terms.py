"""Simple types over one ground type, and ground applicative terms.

Terms are immutable trees whose leaves are strategy references, positional
variables ``$i`` (indices into the enclosing strategy's canonical argument
list) or holes.  Strategy references carry an arbitrary hashable *key*: a
plain string for user-declared strategies, or a key object for library
builtins, anonymous tables, derived strategies and so on.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

__all__ = [
    "Type", "Ground", "Arrow", "NAT", "fn", "args_of", "arity", "level",
    "canonical_variables", "parse_type", "format_type",
    "Term", "Strat", "Var", "Hole", "App", "Derived", "IllTyped",
    "app", "spine", "is_closed", "variables", "substitute", "occurrences",
    "occurrence", "erase", "fill", "splice", "map_keys", "size", "subterms",
    "replace_at", "key_label", "format_term", "parse_term", "TermSyntaxError",
]


class IllTyped(TypeError):
    pass


class TermSyntaxError(ValueError):
    pass


# ---------------------------------------------------------------- types


class Type:
    __slots__ = ()

    def __str__(self) -> str:
        return format_type(self)


@dataclass(frozen=True, eq=True)
class Ground(Type):
    __slots__ = ()

    def __repr__(self) -> str:
        return "nat"


@dataclass(frozen=True, eq=True)
class Arrow(Type):
    arg: Type
    res: Type

    def __repr__(self) -> str:
        return format_type(self)


NAT = Ground()


def fn(*types: Type) -> Type:
    """Right-nested arrow: ``fn(a, b, c)`` is ``a -> (b -> c)``."""
    t = types[-1]
    for a in reversed(types[:-1]):
        t = Arrow(a, t)
    return t


def args_of(t: Type) -> tuple:
    out = []
    while isinstance(t, Arrow):
        out.append(t.arg)
        t = t.res
    return tuple(out)


def arity(t: Type) -> int:
    return len(args_of(t))


def level(t: Type) -> int:
    return max((1 + level(a) for a in args_of(t)), default=0)


def canonical_variables(t: Type) -> list:
    return [(i + 1, a) for i, a in enumerate(args_of(t))]


def format_type(t: Type) -> str:
    if isinstance(t, Ground):
        return "nat"
    a = t.arg
    left = f"({format_type(a)})" if isinstance(a, Arrow) else format_type(a)
    return f"{left}->{format_type(t.res)}"


_TYPE_TOKEN = re.compile(r"\s*(nat|->|[(),])")


def parse_type(text: str) -> Type:
    tokens = []
    pos = 0
    text = text.strip()
    while pos < len(text):
        m = _TYPE_TOKEN.match(text, pos)
        if not m:
            raise TermSyntaxError(f"bad type syntax at column {pos + 1}: {text!r}")
        tokens.append(m.group(1))
        pos = m.end()
        while pos < len(text) and text[pos].isspace():
            pos += 1
    t, i = _type_expr(tokens, 0)
    if i != len(tokens):
        raise TermSyntaxError(f"trailing input in type {text!r}")
    return t


def _type_expr(tokens, i):
    if i >= len(tokens):
        raise TermSyntaxError("unexpected end of type")
    if tokens[i] == "nat":
        items, i = [NAT], i + 1
    elif tokens[i] == "(":
        items = []
        i += 1
        while True:
            t, i = _type_expr(tokens, i)
            items.append(t)
            if i < len(tokens) and tokens[i] == ",":
                i += 1
                continue
            break
        if i >= len(tokens) or tokens[i] != ")":
            raise TermSyntaxError("expected ')' in type")
        i += 1
    else:
        raise TermSyntaxError(f"unexpected token {tokens[i]!r} in type")
    if i < len(tokens) and tokens[i] == "->":
        res, i = _type_expr(tokens, i + 1)
        return fn(*items, res), i
    if len(items) != 1:
        raise TermSyntaxError("argument list must be followed by '->'")
    return items[0], i


# ---------------------------------------------------------------- terms


class Term:
    __slots__ = ("type", "_hash")

    def __str__(self) -> str:
        return format_term(self)

    def __repr__(self) -> str:
        return f"<{format_term(self)} : {format_type(self.type)}>"

    def __hash__(self) -> int:
        return self._hash


class Strat(Term):
    __hash__ = Term.__hash__
    __slots__ = ("key",)

    def __init__(self, key, type: Type):
        self.key = key
        self.type = type
        self._hash = hash(("S", key))

    def __eq__(self, other):
        return (self is other or type(other) is Strat and self._hash == other._hash
                and self.key == other.key and self.type == other.type)


class Var(Term):
    __hash__ = Term.__hash__
    __slots__ = ("index",)

    def __init__(self, index: int, type: Type):
        if index < 1:
            raise ValueError("variable indices start at 1")
        self.index = index
        self.type = type
        self._hash = hash(("V", index))

    def __eq__(self, other):
        return (self is other or type(other) is Var and self.index == other.index
                and self.type == other.type)


class Hole(Term):
    __hash__ = Term.__hash__
    __slots__ = ()

    def __init__(self, type: Type):
        self.type = type
        self._hash = hash(("H", type))

    def __eq__(self, other):
        return self is other or type(other) is Hole and self.type == other.type


class App(Term):
    __hash__ = Term.__hash__
    __slots__ = ("fun", "arg")

    def __init__(self, fun: Term, arg: Term):
        ft = fun.type
        if not isinstance(ft, Arrow) or ft.arg != arg.type:
            raise IllTyped(f"cannot apply {fun!r} to {arg!r}")
        self.fun = fun
        self.arg = arg
        self.type = ft.res
        self._hash = hash((fun._hash, arg._hash))

    def __eq__(self, other):
        if self is other:
            return True
        if type(other) is not App or self._hash != other._hash:
            return False
        return self.fun == other.fun and self.arg == other.arg


@dataclass(frozen=True)
class Derived:
    """Key of the derived strategy of a closed term."""

    term: Term

    @property
    def type(self) -> Type:
        return self.term.type

    def label(self) -> str:
        return f"[[{format_term(self.term)}]]"


def app(f: Term, *args: Term) -> Term:
    for a in args:
        f = App(f, a)
    return f


def spine(t: Term):
    args = []
    while type(t) is App:
        args.append(t.arg)
        t = t.fun
    args.reverse()
    return t, args


def variables(t: Term) -> set:
    if type(t) is Var:
        return {t.index}
    if type(t) is App:
        return variables(t.fun) | variables(t.arg)
    return set()


def is_closed(t: Term) -> bool:
    if type(t) is Var:
        return False
    if type(t) is App:
        return is_closed(t.fun) and is_closed(t.arg)
    return True


def substitute(t: Term, args) -> Term:
    """Replace ``$i`` by ``args[i-1]``."""
    k = type(t)
    if k is Var:
        return args[t.index - 1]
    if k is App:
        f = substitute(t.fun, args)
        a = substitute(t.arg, args)
        if f is t.fun and a is t.arg:
            return t
        return App(f, a)
    return t


def _leaves(t: Term):
    if type(t) is App:
        yield from _leaves(t.fun)
        yield from _leaves(t.arg)
    else:
        yield t


def occurrences(t: Term) -> list:
    """Strategy leaves in left-to-right order."""
    return [x for x in _leaves(t) if type(x) is Strat]


def occurrence(t: Term, j: int):
    occ = occurrences(t)
    return occ[j - 1] if 1 <= j <= len(occ) else None


def erase(t: Term) -> Term:
    k = type(t)
    if k is Strat:
        return Hole(t.type)
    if k is App:
        return App(erase(t.fun), erase(t.arg))
    return t


def fill(t: Term, items) -> Term:
    """Put ``items`` into the holes of ``t``, left to right."""
    it = iter(items)

    def go(s):
        k = type(s)
        if k is Hole:
            x = next(it)
            if x.type != s.type:
                raise IllTyped(f"hole of type {s.type} filled with {x!r}")
            return x
        if k is App:
            return App(go(s.fun), go(s.arg))
        return s

    return go(t)


def splice(t: Term) -> Term:
    """Wrap each maximal variable-free subterm into one derived-strategy leaf."""
    if is_closed(t):
        if type(t) is Strat and isinstance(t.key, Derived):
            return t
        return Strat(Derived(t), t.type)
    if type(t) is App:
        return App(splice(t.fun), splice(t.arg))
    return t


def map_keys(t: Term, f) -> Term:
    k = type(t)
    if k is Strat:
        key = f(t.key)
        return t if key == t.key else Strat(key, t.type)
    if k is App:
        return App(map_keys(t.fun, f), map_keys(t.arg, f))
    return t


def size(t: Term) -> int:
    return size(t.fun) + size(t.arg) if type(t) is App else 1


def subterms(t: Term, path=()):
    """All (path, subterm) pairs; a path is a tuple of 0 (function) / 1 (argument)."""
    yield path, t
    if type(t) is App:
        yield from subterms(t.fun, path + (0,))
        yield from subterms(t.arg, path + (1,))


def replace_at(t: Term, path, new: Term) -> Term:
    if not path:
        return new
    if path[0] == 0:
        return App(replace_at(t.fun, path[1:], new), t.arg)
    return App(t.fun, replace_at(t.arg, path[1:], new))


# ---------------------------------------------------------------- text


def key_label(key) -> str:
    if isinstance(key, str):
        return key
    label = getattr(key, "label", None)
    return label() if label else repr(key)


def format_term(t: Term) -> str:
    k = type(t)
    if k is Strat:
        return key_label(t.key)
    if k is Var:
        return f"${t.index}"
    if k is Hole:
        return "□"
    head, args = spine(t)
    parts = [format_term(head)]
    for a in args:
        s = format_term(a)
        parts.append(f"({s})" if type(a) is App else s)
    return " ".join(parts)


_TERM_TOKEN = re.compile(r"\s*(\[\[|\]\]|\$\d+|\d+|[A-Za-z_][A-Za-z0-9_']*|[()]|□)")


def _tokenize_term(text: str):
    pos = 0
    out = []
    while pos < len(text):
        if text[pos].isspace():
            pos += 1
            continue
        m = _TERM_TOKEN.match(text, pos)
        if not m:
            raise TermSyntaxError(f"unexpected character at column {pos + 1}: {text!r}")
        tok = m.group(1)
        pos = m.end()
        if re.match(r"[A-Za-z_]", tok) and text.startswith("[", pos) and not text.startswith("[[", pos):
            end = text.find("]", pos)
            if end < 0:
                raise TermSyntaxError(f"unclosed type annotation in {text!r}")
            tok = (tok, text[pos + 1:end])
            pos = end + 1
        out.append(tok)
    return out


def parse_term(text: str, resolve, var_types=()) -> Term:
    """Parse the textual term syntax.

    ``resolve(name, annotation)`` maps an identifier (with its optional
    ``[type]`` annotation string, or None) to a ``(key, Type)`` pair.
    Numerals are passed to ``resolve`` as identifiers too.
    """
    tokens = _tokenize_term(text)
    t, i = _parse_app(tokens, 0, resolve, tuple(var_types))
    if i != len(tokens):
        raise TermSyntaxError(f"trailing input in term {text!r}")
    return t


def _parse_app(tokens, i, resolve, var_types):
    items = []
    while i < len(tokens) and tokens[i] not in (")", "]]"):
        atom, i = _parse_atom(tokens, i, resolve, var_types)
        items.append(atom)
    if not items:
        raise TermSyntaxError("empty term")
    return app(*items), i


def _parse_atom(tokens, i, resolve, var_types):
    tok = tokens[i]
    if tok == "(":
        t, i = _parse_app(tokens, i + 1, resolve, var_types)
        if i >= len(tokens) or tokens[i] != ")":
            raise TermSyntaxError("expected ')'")
        return t, i + 1
    if tok == "[[":
        t, i = _parse_app(tokens, i + 1, resolve, ())
        if i >= len(tokens) or tokens[i] != "]]":
            raise TermSyntaxError("expected ']]'")
        return Strat(Derived(t), t.type), i + 1
    if tok == "□":
        raise TermSyntaxError("holes have no textual type; build them programmatically")
    if isinstance(tok, str) and tok.startswith("$"):
        idx = int(tok[1:])
        if not 1 <= idx <= len(var_types):
            raise TermSyntaxError(f"variable {tok} outside the canonical list")
        return Var(idx, var_types[idx - 1]), i + 1
    name, ann = tok if isinstance(tok, tuple) else (tok, None)
    key, ty = resolve(name, ann)
    return Strat(key, ty), i + 1
