"""Restrictions, ranked and finitary systems, tabulation of finitary application."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from . import library as lib
from .machine import Machine, Result, SearchBudget
from .strategy import (
    BOTTOM, Bottom, Hash, Query, Strategy, StrategySystem, System, Value,
    probe_prompts, rename_reply,
)
from .terms import Derived, Strat, Term, Type, key_label, map_keys, occurrences

__all__ = [
    "DanglingReference", "NotWellFounded", "BudgetExceeded", "NoResult",
    "restrict", "k_restrict", "KRestricted", "materialize", "projection_strategy",
    "Ranked", "RankedSystem", "rank_transform", "Approx", "approximants", "approx_term",
    "finite_table", "children", "descendants", "rank", "is_finitary",
    "FinitaryCertificate", "vocabulary", "tabulate", "Tabulation", "extract_support",
]


class DanglingReference(ValueError):
    pass


class NotWellFounded(ValueError):
    pass


class BudgetExceeded(RuntimeError):
    pass


class NoResult(ValueError):
    pass


# ---------------------------------------------------------------- restrictions


def restrict(system: System, keep, entry_filter=None) -> System:
    """Subsystem with the names in ``keep`` and the entries accepted by
    ``entry_filter(key, prompt)``."""
    keep = set(keep)
    entry_filter = entry_filter or (lambda key, w: True)
    out = {}
    for key in system.names():
        if key not in keep:
            continue
        s = system.strategies[key]
        if s.table is not None:
            out[key] = Strategy(s.type, {w: r for w, r in s.table.items() if entry_filter(key, w)})
        else:
            out[key] = Strategy(s.type, rule=lambda w, s=s, key=key:
                                s.rule(w) if entry_filter(key, w) else BOTTOM)
    for key, s in out.items():
        for w, r in (s.table or {}).items():
            if isinstance(r, Query):
                for leaf in occurrences(r.term):
                    if leaf.key in system.strategies and leaf.key not in keep:
                        raise DanglingReference(
                            f"{key_label(key)} at {w} refers to dropped {key_label(leaf.key)}")
    return System(out, system.nondeterministic, system.library)


class KRestricted(StrategySystem):
    """Entries whose prompt and value are all <= k (optionally only for ``keys``)."""

    def __init__(self, base, k: int, keys=None):
        self.base = base
        self.k = k
        self.keys = None if keys is None else set(keys)
        self.nondeterministic = base.nondeterministic
        self.library = base.library

    def type_of(self, key):
        return self.base.type_of(key)

    def respond(self, key, prompt):
        r = self.base.respond(key, prompt)
        if self.keys is not None and key not in self.keys:
            return r
        if any(v > self.k for v in prompt):
            return BOTTOM
        if isinstance(r, Value) and r.v > self.k:
            return BOTTOM
        return r

    def names(self):
        return self.base.names()

    def table(self, key):
        t = self.base.table(key)
        if t is None or (self.keys is not None and key not in self.keys):
            return t
        return {w: r for w, r in t.items()
                if all(v <= self.k for v in w) and not (isinstance(r, Value) and r.v > self.k)}


def k_restrict(system, k: int, keys=None) -> KRestricted:
    return KRestricted(system, k, keys)


def materialize(system, keys, bound: int, max_len: int = 8) -> System:
    """Finite tables of ``keys`` over prompts with values <= bound."""
    out = {}
    for key in keys:
        table = {}
        for w in probe_prompts(system, key, bound, max_len):
            r = system.respond(key, w)
            if not isinstance(r, Bottom):
                table[w] = r
        out[key] = Strategy(system.type_of(key), table)
    return System(out, system.nondeterministic, system.library)


def projection_strategy(alpha: Type, k: int) -> Strat:
    return lib.psi(alpha, k)


# ---------------------------------------------------------------- ranked systems


@dataclass(frozen=True)
class Ranked:
    key: object
    n: int

    def label(self):
        return f"<{key_label(self.key)},{self.n}>"


class RankedSystem(StrategySystem):
    """respond(<m,n>, w) = respond(m, w) with every leaf m' renamed <m',n+1>."""

    def __init__(self, base):
        self.base = base
        self.nondeterministic = base.nondeterministic

    def type_of(self, key):
        if isinstance(key, Ranked):
            return self.base.type_of(key.key)
        return super().type_of(key)

    def respond(self, key, prompt):
        if not isinstance(key, Ranked):
            return super().respond(key, prompt)
        nxt = key.n + 1
        return rename_reply(self.base.respond(key.key, prompt), lambda k: Ranked(k, nxt))


def rank_transform(system):
    """(ranked system, projection map pi)."""
    return RankedSystem(system), (lambda k: k.key if isinstance(k, Ranked) else k)


@dataclass(frozen=True)
class Approx:
    key: object
    k: int

    def label(self):
        return f"{key_label(self.key)}^{self.k}"


class _ApproxSystem(StrategySystem):
    """m^0 is undefined; m^k replies like m with children replaced by their (k-1)-th."""

    def __init__(self, base):
        self.base = base
        self.nondeterministic = base.nondeterministic

    def type_of(self, key):
        if isinstance(key, Approx):
            return self.base.type_of(key.key)
        return super().type_of(key)

    def respond(self, key, prompt):
        if not isinstance(key, Approx):
            return super().respond(key, prompt)
        if key.k == 0:
            return BOTTOM
        return rename_reply(self.base.respond(key.key, prompt), lambda m: Approx(m, key.k - 1))


def approximants(system) -> StrategySystem:
    return _ApproxSystem(system)


def approx_term(term: Term, k: int) -> Term:
    return map_keys(term, lambda m: Approx(m, k))


# ---------------------------------------------------------------- finitary


# Echo combinators forward values without inspecting them, so they never
# widen the vocabulary and have no strategy children.
TRANSPARENT = {"S", "K", "I"}


def _transparent(system, key) -> bool:
    return isinstance(key, lib.Builtin) and key.name in TRANSPARENT and system.library \
        and system.table(key) is None


def finite_table(system, key):
    """Finite table of ``key`` or None; numerals and omega count as finite."""
    t = system.table(key)
    if t is not None:
        return t
    if isinstance(key, lib.Builtin) and system.library:
        if key.name == "num":
            return {(): Value(key.param)}
        if key.name == "omega":
            return {}
    return None


def children(system, key) -> list:
    if _transparent(system, key):
        return []
    t = finite_table(system, key)
    if t is None:
        raise ValueError(f"{key_label(key)} has no finite table")
    out = []
    for r in t.values():
        if isinstance(r, Query):
            for leaf in occurrences(r.term):
                if leaf.key not in out:
                    out.append(leaf.key)
    return out


def descendants(system, key) -> list:
    seen = [key]
    todo = [key]
    while todo:
        for c in children(system, todo.pop()):
            if c not in seen:
                seen.append(c)
                todo.append(c)
    return seen


def rank(system, key) -> int:
    memo = {}
    active = set()

    def go(k):
        if k in memo:
            return memo[k]
        if k in active:
            raise NotWellFounded(f"{key_label(k)} lies on a cycle")
        active.add(k)
        kids = children(system, k)
        r = 1 + max(go(c) for c in kids) if kids else 0
        active.discard(k)
        memo[k] = r
        return r

    return go(key)


@dataclass
class FinitaryCertificate:
    ranks: dict
    subsystem: System


def is_finitary(system, key):
    """(True, certificate) or (False, reason)."""
    try:
        keys = descendants(system, key)
    except ValueError as e:
        return False, str(e)
    try:
        ranks = {k: rank(system, k) for k in keys}
    except NotWellFounded as e:
        return False, str(e)
    sub = System({k: Strategy(system.type_of(k), dict(finite_table(system, k)))
                  for k in keys if not _transparent(system, k)}, system.nondeterministic)
    return True, FinitaryCertificate(ranks, sub)


def vocabulary(system, keys) -> list:
    """Naturals in table prompts and values of the given keys and their descendants."""
    vocab = set()
    seen = set()
    for key in keys:
        for d in descendants(system, key):
            if d in seen:
                continue
            seen.add(d)
            if _transparent(system, d):
                continue
            for w, r in finite_table(system, d).items():
                vocab.update(w)
                if isinstance(r, Value):
                    vocab.add(r.v)
    return sorted(vocab)


@dataclass
class Tabulation:
    system: System
    root: str
    origin: dict  # generated name -> closed term it tabulates
    vocabulary: list
    sentinel: int
    sentinel_failures: list = field(default_factory=list)

    def term_of(self, name) -> Term:
        return self.origin[name]


def tabulate(system, term: Term, budget: SearchBudget | None = None, max_entries: int = 100_000,
             prefix: str = "_t") -> Tabulation:
    """The derived strategy of closed ``term`` (and of every closed subterm it
    queries about) as finite tables over the system vocabulary."""
    machine = system if isinstance(system, Machine) else Machine(system, budget)
    roots = [leaf.key for leaf in occurrences(term)]
    vocab = vocabulary(machine.system, roots)
    sentinel = (max(vocab) + 1) if vocab else 0
    names = {}
    order = []
    tables = {}
    failures = []
    total = 0

    def name_for(t: Term):
        if t not in names:
            names[t] = f"{prefix}{len(names)}"
            order.append(t)
        return names[t]

    def rename(k):
        return name_for(k.term) if isinstance(k, Derived) else k

    name_for(term)
    i = 0
    while i < len(order):
        t = order[i]
        i += 1
        table = {}
        queue = deque([()])
        while queue:
            u = queue.popleft()
            r = machine.derived(t, u)[0]
            if isinstance(r, Bottom):
                continue
            total += 1
            if total > max_entries:
                raise BudgetExceeded(f"more than {max_entries} entries while tabulating")
            table[u] = rename_reply(r, rename)
            if isinstance(r, (Query, Hash)):
                queue.extend(u + (v,) for v in vocab)
                if not isinstance(machine.derived(t, u + (sentinel,))[0], Bottom):
                    failures.append((names[t], u + (sentinel,)))
        tables[names[t]] = Strategy(t.type, table)
    sysm = System(tables, machine.nondeterministic)
    return Tabulation(sysm, names[term], {n: t for t, n in names.items()}, vocab, sentinel, failures)


def extract_support(system, term: Term, budget: SearchBudget | None = None) -> System:
    """The entries consulted by a terminating run, as a closed restriction."""
    rec = []
    out = Machine(system, budget).eval_ground(term, record=rec)
    if not isinstance(out, Result):
        raise NoResult(f"evaluation ended with {out.kind}")
    used = {}
    for key, w in rec:
        used.setdefault(key, {})[w] = system.respond(key, w)
    strategies = {k: Strategy(system.type_of(k), t) for k, t in used.items()}
    return System(strategies, system.nondeterministic, library=False)
