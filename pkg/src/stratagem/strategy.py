"""Systems of strategies: typed response maps from prompts to replies."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable

from .terms import (
    NAT, App, Derived, Strat, Term, Type, Var, args_of, format_term, key_label,
    map_keys, spine,
)

__all__ = [
    "Reply", "Value", "Query", "Hash", "Bottom", "HASH", "BOTTOM",
    "UnknownStrategy", "NotFinite", "TypeMismatch",
    "StrategySystem", "Strategy", "System", "Layered", "Tab", "tab",
    "Violation", "well_formed", "probe_prompts", "entries",
    "Consistent", "Inconsistent", "check_wittingly_consistent", "m_consistent",
    "is_canonical", "apply_homomorphism", "HomImage", "is_homomorphism",
    "rename_reply", "intrinsic", "format_reply",
]


class UnknownStrategy(KeyError):
    pass


class NotFinite(ValueError):
    pass


class TypeMismatch(TypeError):
    pass


# ---------------------------------------------------------------- replies


class Reply:
    __slots__ = ()


@dataclass(frozen=True)
class Value(Reply):
    v: int


@dataclass(frozen=True)
class Query(Reply):
    term: Term


class Hash(Reply):
    __slots__ = ()

    def __repr__(self):
        return "HASH"

    def __eq__(self, other):
        return isinstance(other, Hash)

    def __hash__(self):
        return hash("#")


class Bottom(Reply):
    __slots__ = ()

    def __repr__(self):
        return "BOTTOM"

    def __eq__(self, other):
        return isinstance(other, Bottom)

    def __hash__(self):
        return hash("bot")


HASH = Hash()
BOTTOM = Bottom()


def format_reply(r: Reply) -> str:
    if isinstance(r, Value):
        return str(r.v)
    if isinstance(r, Query):
        return "? " + format_term(r.term)
    return "#" if isinstance(r, Hash) else "bot"


def rename_reply(r: Reply, f) -> Reply:
    if isinstance(r, Query):
        return Query(map_keys(r.term, f))
    return r


def intrinsic(key) -> bool:
    """Keys that carry their own behaviour (library builtins, anonymous tables...)."""
    return hasattr(key, "reply") and hasattr(key, "type")


# ---------------------------------------------------------------- systems


class StrategySystem:
    """Interface: ``type_of`` and ``respond`` over hashable strategy keys."""

    nondeterministic = False
    library = True

    def type_of(self, key) -> Type:
        if isinstance(key, Derived) or (self.library and intrinsic(key)):
            return key.type
        raise UnknownStrategy(key_label(key))

    def respond(self, key, prompt) -> Reply:
        if self.library and intrinsic(key):
            return key.reply(tuple(prompt))
        raise UnknownStrategy(key_label(key))

    def declared(self, key) -> bool:
        try:
            self.type_of(key)
            return True
        except UnknownStrategy:
            return False

    def names(self) -> list:
        """Strategies owned by this system (library keys excluded)."""
        return []

    def table(self, key):
        """Finite table of ``key`` as a dict, or None when programmatic."""
        if isinstance(key, Tab):
            return dict(key.entries)
        return None

    def with_strategies(self, extra: dict) -> "StrategySystem":
        return Layered(self, extra)


@dataclass
class Strategy:
    type: Type
    table: dict | None = None
    rule: Callable | None = None
    source: str | None = None  # text of a defining term, kept for printing

    def reply(self, prompt) -> Reply:
        if self.table is not None:
            return self.table.get(prompt, BOTTOM)
        return self.rule(prompt)


class System(StrategySystem):
    """Named strategies, each a finite table or a total rule.

    ``library=False`` makes intrinsic keys (builtins, anonymous tables) that
    are not explicitly listed respond with Bottom, which is what a restriction
    of the library requires.
    """

    def __init__(self, strategies: dict | None = None, nondeterministic=False, library=True):
        self.strategies = dict(strategies or {})
        self.nondeterministic = nondeterministic
        self.library = library

    @classmethod
    def from_tables(cls, types: dict, tables: dict, **kw) -> "System":
        return cls({k: Strategy(t, dict(tables.get(k, {}))) for k, t in types.items()}, **kw)

    def type_of(self, key):
        s = self.strategies.get(key)
        if s is not None:
            return s.type
        if intrinsic(key) and not self.library:
            return key.type
        return super().type_of(key)

    def respond(self, key, prompt):
        s = self.strategies.get(key)
        if s is not None:
            return s.reply(tuple(prompt))
        if intrinsic(key) and not self.library:
            return BOTTOM
        return super().respond(key, prompt)

    def names(self):
        return list(self.strategies)

    def table(self, key):
        s = self.strategies.get(key)
        if s is not None:
            return s.table
        return super().table(key)

    def is_finite(self) -> bool:
        return all(s.table is not None for s in self.strategies.values())

    def with_strategies(self, extra):
        merged = dict(self.strategies)
        merged.update(extra)
        return System(merged, self.nondeterministic, self.library)

    def __repr__(self):
        return f"System({', '.join(key_label(k) for k in self.strategies)})"


class Layered(StrategySystem):
    """``extra`` strategies placed in front of an arbitrary base system."""

    def __init__(self, base: StrategySystem, extra: dict):
        self.base = base
        self.extra = extra  # shared on purpose: callers may add strategies later
        self.nondeterministic = base.nondeterministic
        self.library = base.library

    def type_of(self, key):
        s = self.extra.get(key)
        return s.type if s is not None else self.base.type_of(key)

    def respond(self, key, prompt):
        s = self.extra.get(key)
        return s.reply(tuple(prompt)) if s is not None else self.base.respond(key, prompt)

    def names(self):
        return list(self.extra) + [k for k in self.base.names() if k not in self.extra]

    def table(self, key):
        s = self.extra.get(key)
        return s.table if s is not None else self.base.table(key)


class Tab:
    """Anonymous finite-table strategy usable directly as a key."""

    __slots__ = ("type", "entries", "_lookup", "_hash", "name")

    def __init__(self, type: Type, entries, name: str | None = None):
        self.type = type
        self.entries = tuple(sorted(dict(entries).items(), key=lambda e: (len(e[0]), e[0])))
        self._lookup = dict(self.entries)
        self._hash = hash((type, self.entries))
        self.name = name

    def reply(self, prompt):
        return self._lookup.get(tuple(prompt), BOTTOM)

    def __eq__(self, other):
        return isinstance(other, Tab) and self._hash == other._hash and \
            self.type == other.type and self.entries == other.entries

    def __hash__(self):
        return self._hash

    def label(self):
        if self.name:
            return self.name
        body = ", ".join(f"{_fmt_prompt(p)}:{format_reply(r)}" for p, r in self.entries)
        return "{" + body + "}"

    def __repr__(self):
        return self.label()


def tab(type: Type, entries: dict, name=None) -> Strat:
    """Leaf referring to an anonymous table."""
    return Strat(Tab(type, entries, name), type)


def _fmt_prompt(p):
    return "<" + ",".join(map(str, p)) + ">"


# ---------------------------------------------------------------- enumeration


def probe_prompts(system, key, bound: int, max_len: int | None = None):
    """Prompts with values <= bound and length <= max_len (default bound).

    Only prompts whose proper prefixes all reply Query/Hash are produced; any
    other prompt gets Bottom by the prefix condition anyway, which
    ``well_formed`` checks separately on a shallow grid.
    """
    max_len = bound if max_len is None else max_len
    frontier = [()]
    while frontier:
        nxt = []
        for w in frontier:
            yield w
            if len(w) >= max_len:
                continue
            r = system.respond(key, w)
            if isinstance(r, (Query, Hash)):
                nxt.extend(w + (v,) for v in range(bound + 1))
        frontier = nxt


def entries(system, key, bound: int = 3, max_len: int | None = None) -> dict:
    """Non-Bottom replies of ``key``: its table, or probed prompts when programmatic."""
    t = system.table(key)
    if t is not None:
        return dict(t)
    out = {}
    for w in probe_prompts(system, key, bound, max_len):
        r = system.respond(key, w)
        if not isinstance(r, Bottom):
            out[w] = r
    return out


# ---------------------------------------------------------------- well-formedness


@dataclass(frozen=True)
class Violation:
    kind: str
    key: object
    prompt: tuple
    detail: str = ""

    def __str__(self):
        return f"{self.kind} violation at {key_label(self.key)} {_fmt_prompt(self.prompt)}: {self.detail}"


def _check_query(system, key, ktype, w, term, out):
    var_types = args_of(ktype)

    def walk(t):
        k = type(t)
        if k is Var:
            if t.index > len(var_types) or var_types[t.index - 1] != t.type:
                out.append(Violation("variable", key, w, f"${t.index} not in the canonical list"))
        elif k is App:
            walk(t.fun)
            walk(t.arg)
        elif k is Strat and not system.declared(t.key):
            out.append(Violation("reference", key, w, f"undeclared {key_label(t.key)}"))

    if term.type != NAT:
        out.append(Violation("type", key, w, "query is not of ground type"))
    walk(term)


def _self_consistent(reply_at, w) -> str | None:
    seen = {}
    for i in range(len(w)):
        r = reply_at(w[:i])
        if isinstance(r, Query):
            j = seen.setdefault(r.term, i)
            if w[j] != w[i]:
                return f"query {format_term(r.term)} answered {w[j]} then {w[i]}"
    return None


def well_formed(system, prompt_bound: int = 3, keys=None) -> list:
    out = []
    for key in (system.names() if keys is None else keys):
        ktype = system.type_of(key)
        t = system.table(key)
        if t is not None:
            prompts = sorted(t, key=lambda p: (len(p), p))
        else:
            prompts = [w for n in range(prompt_bound + 1)
                       for w in itertools.product(range(prompt_bound + 1), repeat=n)]

        def reply_at(p, key=key):
            return system.respond(key, p)

        for w in prompts:
            r = reply_at(w)
            if isinstance(r, Bottom):
                continue
            bad_prefix = next((i for i in range(len(w))
                               if not isinstance(reply_at(w[:i]), (Query, Hash))), None)
            if bad_prefix is not None:
                out.append(Violation("prefix", key, w,
                                     f"prefix {_fmt_prompt(w[:bad_prefix])} does not reply a query"))
                continue
            msg = _self_consistent(reply_at, w)
            if msg:
                out.append(Violation("self-consistency", key, w, msg))
            if isinstance(r, Hash) and not system.nondeterministic:
                out.append(Violation("hash", key, w, "# in a sequential system"))
            if isinstance(r, Query):
                _check_query(system, key, ktype, w, r.term, out)
    return out


# ---------------------------------------------------------------- witting consistency


@dataclass(frozen=True)
class Consistent:
    def __bool__(self):
        return True


@dataclass(frozen=True)
class Inconsistent:
    key: object
    left: tuple
    right: tuple
    left_value: int
    right_value: int

    def __bool__(self):
        return False

    def __str__(self):
        return (f"{key_label(self.key)}: {_fmt_prompt(self.left)} -> {self.left_value} "
                f"vs {_fmt_prompt(self.right)} -> {self.right_value}")


def m_consistent(table: dict, w: tuple, u: tuple) -> bool:
    """No query asked at prefixes of both w and u is answered differently."""
    qw = {}
    for i in range(len(w)):
        r = table.get(w[:i])
        if isinstance(r, Query):
            qw.setdefault(r.term, set()).add(w[i])
    for j in range(len(u)):
        r = table.get(u[:j])
        if isinstance(r, Query) and r.term in qw and qw[r.term] != {u[j]}:
            return False
    return True


def check_wittingly_consistent(system):
    keys = system.names()
    for key in keys:
        t = system.table(key)
        if t is None:
            raise NotFinite(f"{key_label(key)} is programmatic")
        values = sorted(((w, r.v) for w, r in t.items() if isinstance(r, Value)),
                        key=lambda e: (len(e[0]), e[0]))
        for (w, v), (u, x) in itertools.combinations(values, 2):
            if v != x and m_consistent(t, w, u):
                return Inconsistent(key, w, u, v, x)
    return Consistent()


# ---------------------------------------------------------------- canonical form


def _full_application(t: Term, n: int) -> bool:
    head, args = spine(t)
    if type(head) is not Strat or len(args) != n:
        return False
    return all(type(a) is Var and a.index == i + 1 for i, a in enumerate(args))


def is_canonical(system, key, prompt_bound: int = 3) -> bool:
    n = len(args_of(system.type_of(key)))
    for r in entries(system, key, prompt_bound).values():
        if isinstance(r, Query):
            head, args = spine(r.term)
            if type(head) is not Var or not all(_full_application(a, n) for a in args):
                return False
    return True


# ---------------------------------------------------------------- homomorphisms


class HomImage(StrategySystem):
    """Image of a system under a key map; respond(phi(m), w) = respond(m, w)^phi."""

    def __init__(self, base, phi, preimage):
        self.base = base
        self.phi = phi
        self.preimage = preimage
        self.nondeterministic = base.nondeterministic

    def type_of(self, key):
        return self.base.type_of(self.preimage(key))

    def respond(self, key, prompt):
        return rename_reply(self.base.respond(self.preimage(key), prompt), self.phi)


def apply_homomorphism(phi, system):
    """Image system for a finite name map ``phi`` (dict) over a System.

    Keys missing from ``phi`` map to themselves.  Colliding names must
    carry equal types and agree on every mapped reply.
    """
    def f(k):
        return phi.get(k, k)

    if isinstance(system, System):
        out = {}
        for key, s in system.strategies.items():
            target = f(key)
            if target in out and out[target].type != s.type:
                raise TypeMismatch(f"{key_label(key)} and another name map to {key_label(target)}")
            if intrinsic(target) and target.type != s.type:
                raise TypeMismatch(f"{key_label(key)} mapped across types")
            if s.table is not None:
                table = {w: rename_reply(r, f) for w, r in s.table.items()}
                prev = out.get(target)
                if prev is not None and prev.table is not None and prev.table != table:
                    raise TypeMismatch(f"{key_label(target)} receives conflicting tables")
                out[target] = Strategy(s.type, table)
            else:
                out[target] = Strategy(s.type, rule=lambda w, s=s: rename_reply(s.rule(w), f))
        return System(out, system.nondeterministic, system.library)
    inverse = {v: k for k, v in phi.items()}
    return HomImage(system, f, lambda k: inverse.get(k, k))


def is_homomorphism(phi, source, target, probes) -> list:
    """Failures of target.respond(phi(m), w) == source.respond(m, w)^phi on probes."""
    bad = []
    for key, w in probes:
        lhs = target.respond(phi(key), w)
        rhs = rename_reply(source.respond(key, w), phi)
        if lhs != rhs:
            bad.append((key, w, lhs, rhs))
        if target.type_of(phi(key)) != source.type_of(key):
            bad.append((key, w, "type", "type"))
    return bad
