"""The terminal system of strategies: strategies as functions on strings over
naturals and barred naturals, and the canonical map into it."""

from __future__ import annotations

import random
import re
from dataclasses import dataclass

from .strategy import (
    BOTTOM, Bottom, Hash, Query, StrategySystem, UnknownStrategy, Value, format_reply,
)
from .terms import (
    Hole, Strat, Term, Type, Var, _leaves, canonical_variables, erase, fill, format_type,
    key_label, occurrences,
)

__all__ = [
    "Bar", "UniversalStrategy", "hom_to_universal", "universal_respond", "UniversalSystem",
    "format_string", "parse_string", "check_conditions", "sample_strings", "audit",
    "homomorphism_failures",
]


@dataclass(frozen=True)
class Bar:
    """A barred natural j̄ (j >= 1) selecting the j-th placeholder of a query."""
    j: int

    def __str__(self):
        return f"b{self.j}"


def format_string(s) -> str:
    return " ".join(str(x) for x in s) if s else "Λ"


def parse_string(text: str) -> tuple:
    out = []
    for tok in text.replace(",", " ").split():
        if tok in ("Λ", "-"):
            continue
        m = re.fullmatch(r"b(\d+)", tok)
        out.append(Bar(int(m.group(1))) if m else int(tok))
    return tuple(out)


def _split(s):
    """(u, j, w) with u the bar-free prefix, or (s, None, ()) when s has no bar."""
    for i, x in enumerate(s):
        if isinstance(x, Bar):
            return tuple(s[:i]), x.j, tuple(s[i + 1:])
    return tuple(s), None, ()


def _holes(term: Term) -> list:
    return [x for x in _leaves(term) if isinstance(x, Hole)]


class UniversalStrategy:
    """A strategy known by its behaviour on strings; usable as a strategy key.

    Two handles are equal when they share a root and an address, so children
    of the same string are the same key.  Replies are memoized per root.
    """

    __slots__ = ("root", "address", "type", "_fn", "_memo")

    def __init__(self, fn, type: Type, root=None, address=(), memo=None):
        self._fn = fn
        self.type = type
        self.root = root if root is not None else object()
        self.address = tuple(address)
        self._memo = memo if memo is not None else {}

    def __call__(self, s) -> object:
        """The erased reply at string s: Value, Bottom, Hash or Query over holes."""
        full = self.address + tuple(s)
        hit = self._memo.get(full)
        if hit is None:
            hit = self._fn(full)
            self._memo[full] = hit
        return hit

    def child(self, u, j: int, type: Type) -> "UniversalStrategy":
        return UniversalStrategy(self._fn, type, self.root, self.address + tuple(u) + (Bar(j),),
                                 self._memo)

    def reply(self, prompt):
        return universal_respond(self, prompt)

    def __eq__(self, other):
        return isinstance(other, UniversalStrategy) and self.root is other.root \
            and self.address == other.address and self.type == other.type

    def __hash__(self):
        return hash((id(self.root), self.address))

    def label(self):
        return "q" + (f"[{format_string(self.address)}]" if self.address else "")

    def __repr__(self):
        return self.label()


class _Root:
    """Identity token for hom images: one per (system, strategy)."""

    __slots__ = ("system", "key")

    def __init__(self, system, key):
        self.system = system
        self.key = key


def _bar_reply(system, key, s):
    u, j, w = _split(s)
    r = system.respond(key, u)
    if j is None:
        return r
    if not isinstance(r, Query):
        return BOTTOM
    occ = occurrences(r.term)
    if not 1 <= j <= len(occ):
        return BOTTOM
    return _bar_reply(system, occ[j - 1].key, w)


def _erase_reply(r):
    return Query(erase(r.term)) if isinstance(r, Query) else r


_ROOTS: dict = {}


def hom_to_universal(system, key) -> UniversalStrategy:
    """The image of ``key`` in the terminal system."""
    ty = system.type_of(key)  # raises UnknownStrategy
    token = _ROOTS.setdefault((id(system), key), _Root(system, key))
    if token.system is not system:
        token = _ROOTS[(id(system), key)] = _Root(system, key)
    return UniversalStrategy(lambda s: _erase_reply(_bar_reply(system, key, s)), ty, token)


def universal_respond(q: UniversalStrategy, u) -> object:
    """Reply of q at a bar-free prompt with placeholders filled by the child strategies."""
    u = tuple(u)
    r = q(u)
    if not isinstance(r, Query):
        return r
    holes = _holes(r.term)
    kids = [Strat(q.child(u, j, h.type), h.type) for j, h in enumerate(holes, 1)]
    return Query(fill(r.term, kids))


class UniversalSystem(StrategySystem):
    """The terminal system: keys are UniversalStrategy handles."""

    nondeterministic = True

    def type_of(self, key):
        if isinstance(key, UniversalStrategy):
            return key.type
        raise UnknownStrategy(key_label(key))

    def respond(self, key, prompt):
        if isinstance(key, UniversalStrategy):
            return universal_respond(key, prompt)
        raise UnknownStrategy(key_label(key))


# ---------------------------------------------------------------- laws


def _variables_ok(term: Term, ty: Type) -> bool:
    allowed = dict(canonical_variables(ty))

    def walk(t):
        if isinstance(t, Var):
            return allowed.get(t.index) == t.type
        if hasattr(t, "fun"):
            return walk(t.fun) and walk(t.arg)
        return True

    return walk(term)


def _owner(q: UniversalStrategy, s):
    """The child strategy that answers s, and the bar-free rest of s."""
    cur, rest = q, tuple(s)
    while True:
        u, j, w = _split(rest)
        if j is None:
            return cur, rest
        r = cur(u)
        holes = _holes(r.term) if isinstance(r, Query) else []
        if not 1 <= j <= len(holes):
            return None, rest
        cur, rest = cur.child(u, j, holes[j - 1].type), w


def check_conditions(q: UniversalStrategy, strings, alphabet=(0, 1, Bar(1))) -> list:
    """Membership conditions on the probed strings; returns the failures."""
    fails = []
    for s in strings:
        r = q(s)
        if not isinstance(r, (Value, Bottom, Hash, Query)):
            fails.append(("codomain", s, repr(r)))
            continue
        if isinstance(r, Query) and any(not isinstance(x, Hole) for x in occurrences_any(r.term)):
            fails.append(("codomain", s, "query mentions strategies"))
        if isinstance(r, (Value, Bottom)):
            for x in alphabet:
                if not isinstance(q(s + (x,)), Bottom):
                    fails.append(("after-value", s + (x,), format_reply(q(s + (x,)))))
        owner, rest = _owner(q, s)
        if owner is not None and isinstance(r, Query) and not _variables_ok(r.term, owner.type):
            fails.append(("variables", s, format_reply(r)))
        if isinstance(r, Query):
            extra = s + (Bar(len(_holes(r.term)) + 1),)
            if not isinstance(q(extra), Bottom):
                fails.append(("missing-placeholder", extra, ""))
    return fails


def occurrences_any(t: Term) -> list:
    """Strategy leaves and placeholders, left to right."""
    return [x for x in _leaves(t) if isinstance(x, (Strat, Hole))]


def homomorphism_failures(system, key, prompts, probes) -> list:
    """Check that the image of ``key`` replies like ``key`` with every child
    strategy replaced by its own image, comparing children on ``probes``."""
    q = hom_to_universal(system, key)
    out = []
    for u in prompts:
        r = system.respond(key, u)
        img = universal_respond(q, u)
        if not isinstance(r, Query):
            if img != r:
                out.append((u, "reply"))
            continue
        if not isinstance(img, Query) or erase(img.term) != erase(r.term):
            out.append((u, "shape"))
            continue
        for j, (mine, theirs) in enumerate(zip(occurrences(img.term), occurrences(r.term)), 1):
            ref = hom_to_universal(system, theirs.key)
            if any(mine.key(s) != ref(s) for s in probes):
                out.append((u, f"child {j}"))
    return out


def sample_strings(q: UniversalStrategy, count: int, max_len: int = 6, max_value: int = 3,
                   rng: random.Random | None = None) -> list:
    """Strings that mostly follow q's own replies (answers after queries, bars into
    placeholders), with occasional arbitrary symbols."""
    rng = rng or random.Random(0)
    out = [()]
    while len(out) < count:
        s = ()
        for _ in range(rng.randint(1, max_len)):
            r = q(s)
            if isinstance(r, Query) and rng.random() < 0.3:
                s = s + (Bar(rng.randint(1, max(1, len(_holes(r.term))))),)
            elif rng.random() < 0.1:
                s = s + (Bar(rng.randint(1, 2)),)
            else:
                s = s + (rng.randint(0, max_value),)
            out.append(s)
            if len(out) >= count:
                break
    return out[:count]


def audit(system, key, n: int, seed: int = 0) -> dict:
    """Run the law suite on n sampled strings of one strategy."""
    rng = random.Random(seed)
    q = hom_to_universal(system, key)
    strings = sample_strings(q, n, rng=rng)
    fails = check_conditions(q, strings)
    usys = UniversalSystem()
    qq = hom_to_universal(usys, q)
    idem = [s for s in strings if qq(s) != q(s)]
    prompts = sorted({_split(s)[0] for s in strings}, key=lambda u: (len(u), u))
    hom = [u for u, _ in homomorphism_failures(system, key, prompts, strings[:20])]
    return {
        "strategy": key_label(key), "type": format_type(q.type), "strings": len(strings),
        "condition_failures": [(k, format_string(s), d) for k, s, d in fails],
        "idempotence_failures": [format_string(s) for s in idem],
        "homomorphism_failures": [format_string(s) for s in hom],
    }
