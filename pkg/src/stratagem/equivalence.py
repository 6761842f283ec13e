"""Bounded refutation of the observational preorder and its context formulation."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache

from .machine import Machine, Outcome, Result, SearchBudget
from .strategy import Query, Tab, Value, format_reply
from .terms import Arrow, NAT, Strat, Term, Type, Var, app, args_of, canonical_variables, format_term

__all__ = [
    "ArgBounds", "Refuted", "NotRefuted", "ground_leq", "strategies_of",
    "enumerate_arguments", "refute_preorder", "separating_observer",
    "context_probe", "ContextReport", "format_argument", "witness_text", "replay_witness",
]

EVIDENCE_NOTE = ("not refuted within the enumeration bounds; the preorder quantifies "
                 "over all argument strategies, so this is evidence only")


@dataclass(frozen=True)
class ArgBounds:
    rank: int = 0
    entries: int = 2
    max_value: int = 1


@dataclass
class Refuted:
    witness: tuple
    left: Outcome
    right: Outcome
    index: int

    def __bool__(self):
        return True

    def render(self) -> str:
        return "REFUTED: witness (" + ",".join(format_argument(a) for a in self.witness) + ")"


@dataclass
class NotRefuted:
    bounds: ArgBounds
    samples: int
    inconclusive: int = 0
    note: str = EVIDENCE_NOTE

    def __bool__(self):
        return False

    def render(self) -> str:
        return f"not refuted ({self.samples} argument tuples, {self.inconclusive} inconclusive)"


def ground_leq(a: Outcome, b: Outcome) -> bool:
    """a below b at ground type; anything but a Result counts as undefined."""
    if not isinstance(a, Result):
        return True
    return isinstance(b, Result) and a.value == b.value


def format_argument(leaf: Strat) -> str:
    key = leaf.key
    if isinstance(key, Tab) and not args_of(key.type):
        if not key.entries:
            return "Ω"
        if len(key.entries) == 1 and isinstance(key.entries[0][1], Value):
            return str(key.entries[0][1].v)
    return format_term(leaf)


# ---------------------------------------------------------------- enumeration


def _sort_key(entries: dict):
    return tuple((len(w), w, format_reply(r)) for w, r in sorted(entries.items()))


@lru_cache(maxsize=None)
def _queries(ty: Type, rank: int, entries: int, max_value: int) -> tuple:
    """Ground queries a table of type ``ty`` may ask: a variable applied to
    variables or to closed strategies of lower rank."""
    xs = canonical_variables(ty)
    pool = {}

    def candidates(t: Type):
        if t not in pool:
            opts = [Var(i, s) for i, s in xs if s == t]
            if rank > 0:
                opts.extend(strategies_of(t, rank - 1, entries, max_value))
            pool[t] = opts
        return pool[t]

    out = []
    for i, t in xs:
        head = Var(i, t)
        for args in itertools.product(*(candidates(a) for a in args_of(t))):
            out.append(app(head, *args))
    return tuple(out)


def _trees(queries, max_value, asked: tuple, prompt: tuple, s: int):
    """Tables rooted at ``prompt`` with exactly ``s`` entries."""
    if s == 1:
        for v in range(max_value + 1):
            yield {prompt: Value(v)}
    for q in queries:
        prior = dict(asked).get(q)
        answers = [prior] if prior is not None else list(range(max_value + 1))
        for rest in _forests(queries, max_value, asked + ((q, None),), prompt, answers, s - 1):
            out = {prompt: Query(q)}
            out.update(rest)
            yield out


def _forests(queries, max_value, asked, prompt, answers, s):
    if s == 0:
        yield {}
        return
    if not answers:
        return
    v, more = answers[0], answers[1:]
    q = asked[-1][0]
    here = asked[:-1] + ((q, v),)
    for k in range(s + 1):
        heads = [{}] if k == 0 else _trees(queries, max_value, here, prompt + (v,), k)
        for head in heads:
            for tail in _forests(queries, max_value, asked, prompt, more, s - k):
                merged = dict(head)
                merged.update(tail)
                yield merged


@lru_cache(maxsize=None)
def strategies_of(ty: Type, rank: int, entries: int, max_value: int) -> tuple:
    """Finitary table strategies of type ``ty`` within the bounds, as leaves,
    ordered by table size and then lexicographically."""
    qs = _queries(ty, rank, entries, max_value) if isinstance(ty, Arrow) else ()
    out = [Strat(Tab(ty, {}), ty)]
    for s in range(1, entries + 1):
        layer = list(_trees(qs, max_value, (), (), s))
        if not isinstance(ty, Arrow):
            layer = [t for t in layer if isinstance(t[()], Value)]
        layer.sort(key=_sort_key)
        out.extend(Strat(Tab(ty, t), ty) for t in layer)
    return tuple(out)


def enumerate_arguments(types, max_rank: int, max_entries: int, max_value: int):
    """Argument tuples ordered by total table size, then by index tuple."""
    pools = [strategies_of(t, max_rank, max_entries, max_value) for t in types]
    sizes = [[len(leaf.key.entries) for leaf in pool] for pool in pools]
    combos = sorted(itertools.product(*(range(len(p)) for p in pools)),
                    key=lambda ix: (sum(sizes[j][i] for j, i in enumerate(ix)), ix))
    for ix in combos:
        yield tuple(pools[j][i] for j, i in enumerate(ix))


# ---------------------------------------------------------------- refutation


def refute_preorder(system, p: Term, q: Term, bounds: ArgBounds = ArgBounds(),
                    budget: SearchBudget | None = None, machine: Machine | None = None,
                    limit: int | None = None):
    """Search for arguments on which p yields a value that q does not match.

    A left side that runs out of fuel is inconclusive, never a witness.
    """
    if p.type != q.type:
        raise TypeError("compared terms differ in type")
    m = machine or Machine(system, budget)
    samples = inconclusive = 0
    for i, args in enumerate(enumerate_arguments(args_of(p.type), bounds.rank,
                                                 bounds.entries, bounds.max_value)):
        if limit is not None and i >= limit:
            break
        samples += 1
        left = m.eval_ground(app(p, *args))
        if not isinstance(left, Result):
            inconclusive += left.kind == "FuelExhausted"
            continue
        right = m.eval_ground(app(q, *args))
        if not ground_leq(left, right):
            return Refuted(args, left, right, i)
    return NotRefuted(bounds, samples, inconclusive)


def separating_observer(ty: Type, args: tuple, value: int, c: int = 0) -> Strat:
    """Observer asking its argument at ``args`` and replying c only on ``value``."""
    head = Var(1, ty)
    obs = Arrow(ty, NAT)
    return Strat(Tab(obs, {(): Query(app(head, *args)), (value,): Value(c)}), obs)


@dataclass
class ContextReport:
    direct: object
    observer: object
    observers_tried: int
    agree: bool
    details: list = field(default_factory=list)


def context_probe(system, q: Term, q2: Term, context_count: int = 50,
                  bounds: ArgBounds = ArgBounds(), budget: SearchBudget | None = None) -> ContextReport:
    """Compare direct refutation of q below q2 with refutation by observers p
    applied to both sides.

    Observers are the separating observer built from the direct witness (if
    any) followed by enumerated observers whose query arguments stay inside
    the direct enumeration bounds.
    """
    m = Machine(system, budget)
    direct = refute_preorder(system, q, q2, bounds, machine=m)
    observers = []
    if isinstance(direct, Refuted):
        observers.append(separating_observer(q.type, direct.witness, direct.left.value))
    obs_ty = Arrow(q.type, NAT)
    for leaf in strategies_of(obs_ty, bounds.rank + 1, bounds.entries, bounds.max_value):
        if len(observers) >= context_count:
            break
        observers.append(leaf)
    observer_verdict = NotRefuted(bounds, len(observers))
    for i, p in enumerate(observers):
        left = m.eval_ground(app(p, q))
        if not isinstance(left, Result):
            continue
        right = m.eval_ground(app(p, q2))
        if not ground_leq(left, right):
            observer_verdict = Refuted((p,), left, right, i)
            break
    agree = bool(direct) == bool(observer_verdict)
    return ContextReport(direct, observer_verdict, len(observers), agree)


# ---------------------------------------------------------------- witnesses


def witness_text(verdict: Refuted, left: str, right: str) -> str:
    """The witness arguments as a strategy file naming them arg1, arg2, ..."""
    from .fileformat import format_system
    from .strategy import Strategy, System
    args = {f"arg{i}": Strategy(a.type, dict(a.key.entries))
            for i, a in enumerate(verdict.witness, 1)}
    header = "\n".join([f"left: {left}", f"right: {right}",
                        f"left outcome: {_describe(verdict.left)}",
                        f"right outcome: {_describe(verdict.right)}"])
    return format_system(System(args), header=header)


def _describe(out) -> str:
    return f"Result {out.value}" if isinstance(out, Result) else out.kind


def replay_witness(system, p: Term, q: Term, text: str, budget: SearchBudget | None = None) -> bool:
    """True when the serialized witness still separates p from q."""
    from .fileformat import parse_system
    wit = parse_system(text)
    merged = system.with_strategies(wit.strategies)
    names = sorted((k for k in wit.strategies if k.startswith("arg")), key=lambda k: int(k[3:]))
    args = [Strat(k, wit.strategies[k].type) for k in names]
    m = Machine(merged, budget)
    left = m.eval_ground(app(p, *args))
    return isinstance(left, Result) and not ground_leq(left, m.eval_ground(app(q, *args)))
