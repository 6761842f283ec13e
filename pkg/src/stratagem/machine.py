"""The configuration machine.

A configuration is a string over naturals and tasks.  Only the last task is
ever active and every natural after it is an answer it received, so the
machine keeps the string as: the unread part of the initial prompt, then a
stack of frames ``[task, answers]``.

Rules (one step each, each costs one unit of fuel):

    H1   h C w   =>  h v       head of C replies v to prompt w
    H2   h C w   =>  h C w C'  head of C replies query B; C' = B{args of C}
    H3   v h C   =>  h v       C is variable-headed; v is read from the prompt
    HASH h C w   =>  h C w r   head of C replies #; r is read from the prompt

Closed ground tasks are evaluated by searching over the answers to #.
"""

from __future__ import annotations

from dataclasses import dataclass

from .strategy import (
    BOTTOM, HASH, Bottom, Layered, Query, Reply, Strategy, StrategySystem, Value,
    entries,
)
from .terms import (
    Derived, Strat, Term, Var, app, args_of, canonical_variables, fn, format_term,
    replace_at, spine, splice, substitute, subterms,
)

__all__ = [
    "SearchBudget", "Configuration", "Outcome", "Result", "VariableQuery", "DeadEnd",
    "PrefixResult", "FuelExhausted", "HashPending", "RuntimeInconsistency",
    "Machine", "step", "eval_ground", "derived_strategy", "derived_key",
    "assoc_probe", "regroup", "canonicalize", "AUX_PREFIX",
]

AUX_PREFIX = "_aux"


@dataclass(frozen=True)
class SearchBudget:
    fuel: int = 100_000
    hash_bound: int = 8
    hash_depth: int = 16
    max_runs: int = 200_000  # total branch re-runs per ground evaluation


# ---------------------------------------------------------------- configurations


@dataclass(frozen=True)
class Configuration:
    prompt: tuple = ()
    frames: tuple = ()  # ((task, answers), ...)

    @classmethod
    def initial(cls, task: Term, prompt=()):
        return cls(tuple(prompt), ((task, ()),))

    def items(self) -> list:
        out = list(self.prompt)
        for task, answers in self.frames:
            out.append(task)
            out.extend(answers)
        return out

    def render(self) -> str:
        parts = [format_term(x) if isinstance(x, Term) else str(x) for x in self.items()]
        return " · ".join(parts) if parts else "Λ"

    def __str__(self):
        return self.render()


# ---------------------------------------------------------------- outcomes


class Outcome:
    kind = "outcome"

    def same(self, other) -> bool:
        return self.kind == other.kind and \
            getattr(self, "value", None) == getattr(other, "value", None)


@dataclass
class Result(Outcome):
    value: int
    steps: int = 0
    kind = "Result"


@dataclass
class VariableQuery(Outcome):
    residue: Configuration
    query: Term
    steps: int = 0
    kind = "VariableQuery"


@dataclass
class DeadEnd(Outcome):
    steps: int = 0
    kind = "DeadEnd"


@dataclass
class PrefixResult(Outcome):
    value: int
    consumed: int
    steps: int = 0
    kind = "PrefixResult"


@dataclass
class FuelExhausted(Outcome):
    steps: int = 0
    kind = "FuelExhausted"


@dataclass
class HashPending(Outcome):
    """A # was reached after the prompt ran out (the derived strategy replies #)."""

    steps: int = 0
    kind = "HashPending"


@dataclass
class RuntimeInconsistency(Outcome):
    values: tuple
    branches: tuple
    steps: int = 0
    kind = "RuntimeInconsistency"


# ---------------------------------------------------------------- machine


class Machine(StrategySystem):
    """A system extended by derived strategies ``Derived(A)`` of closed terms A.

    Derived replies are memoized per (term, prompt) for the lifetime of the
    machine.
    """

    def __init__(self, system: StrategySystem, budget: SearchBudget | None = None):
        self.system = system
        self.budget = budget or SearchBudget()
        self.nondeterministic = system.nondeterministic
        self.library = system.library
        self._memo = {}
        self.stats = {"runs": 0, "steps": 0}

    # StrategySystem interface
    def type_of(self, key):
        if isinstance(key, Derived):
            return key.type
        return self.system.type_of(key)

    def respond(self, key, prompt) -> Reply:
        if isinstance(key, Derived):
            return self.derived(key.term, tuple(prompt))[0]
        return self.system.respond(key, prompt)

    def names(self):
        return self.system.names()

    def table(self, key):
        return None if isinstance(key, Derived) else self.system.table(key)

    # one run: deterministic given the prompt
    def run(self, task: Term, prompt=(), fuel: int | None = None, trace=None, record=None) -> Outcome:
        fuel = self.budget.fuel if fuel is None else fuel
        u = tuple(prompt)
        pos = 0
        frames = [[task, []]]
        steps = 0
        respond = self.respond
        self.stats["runs"] += 1
        while True:
            top = frames[-1]
            head, args = spine(top[0])
            if type(head) is Var:
                if pos >= len(u):
                    return VariableQuery(_snapshot(u, pos, frames), top[0], steps)
                if steps >= fuel:
                    return FuelExhausted(steps)
                steps += 1
                frames.pop()
                frames[-1][1].append(u[pos])
                pos += 1
                tag = "H3"
            else:
                w = tuple(top[1])
                reply = respond(head.key, w)
                kind = type(reply)
                if kind is Bottom:
                    return DeadEnd(steps)
                if steps >= fuel:
                    return FuelExhausted(steps)
                if record is not None:
                    record.append((head.key, w))
                steps += 1
                if kind is Value:
                    frames.pop()
                    if not frames:
                        self.stats["steps"] += steps
                        if trace is not None:
                            trace.append(("H1", " · ".join(map(str, u[pos:] + (reply.v,)))))
                        if pos < len(u):
                            return PrefixResult(reply.v, pos, steps)
                        return Result(reply.v, steps)
                    frames[-1][1].append(reply.v)
                    tag = "H1"
                elif kind is Query:
                    frames.append([substitute(reply.term, args), []])
                    tag = "H2"
                else:
                    if pos >= len(u):
                        steps -= 1
                        if record is not None:
                            record.pop()
                        return HashPending(steps)
                    top[1].append(u[pos])
                    pos += 1
                    tag = "HASH"
            if trace is not None:
                trace.append((tag, _snapshot(u, pos, frames).render()))

    def derived(self, term: Term, prompt: tuple):
        """(reply, outcome) of the derived strategy of closed ``term`` at ``prompt``."""
        key = (term, prompt)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        ys = [Var(i, t) for i, t in canonical_variables(term.type)]
        out = self.run(app(term, *ys), prompt)
        if isinstance(out, Result):
            reply = Value(out.value)
        elif isinstance(out, VariableQuery):
            reply = Query(splice(out.query))
        elif isinstance(out, HashPending):
            reply = HASH
        else:
            reply = BOTTOM
        self._memo[key] = (reply, out)
        return reply, out

    def eval_ground(self, term: Term, trace=None, record=None) -> Outcome:
        if args_of(term.type):
            raise TypeError("eval_ground needs a ground term")
        b = self.budget
        results = []
        pending = [False]
        runs = [0]
        total = [0]

        def explore(u):
            if runs[0] >= b.max_runs:
                pending[0] = True
                return
            runs[0] += 1
            rec = [] if record is not None else None
            tr = [] if trace is not None else None
            out = self.run(term, u, trace=tr, record=rec)
            total[0] += out.steps
            if isinstance(out, HashPending):
                if len(u) >= b.hash_depth:
                    pending[0] = True
                    return
                for r in range(b.hash_bound):
                    explore(u + (r,))
            elif isinstance(out, Result):
                results.append((u, out, tr, rec))
            elif isinstance(out, FuelExhausted):
                pending[0] = True

        explore(())
        self.last_search = {"branches": runs[0], "results": len(results), "steps": total[0]}
        if results:
            values = sorted({r[1].value for r in results})
            if len(values) > 1:
                firsts = tuple(next(r[0] for r in results if r[1].value == v) for v in values)
                return RuntimeInconsistency(tuple(values), firsts, total[0])
            u, out, tr, rec = results[0]
            if trace is not None:
                trace.extend(tr)
            if record is not None:
                record.extend(rec)
            self.last_search["answers"] = u
            return Result(out.value, out.steps)
        if pending[0]:
            return FuelExhausted(total[0])
        return DeadEnd(total[0])


def _snapshot(u, pos, frames) -> Configuration:
    return Configuration(u[pos:], tuple((t, tuple(a)) for t, a in frames))


# ---------------------------------------------------------------- functional API


def step(system, config: Configuration):
    """One machine step; returns the next Configuration or a terminal Outcome."""
    m = system if isinstance(system, Machine) else Machine(system)
    frames = [[t, list(a)] for t, a in config.frames]
    if not frames:
        if len(config.prompt) == 1:
            return Result(config.prompt[0])
        if config.prompt:
            return PrefixResult(config.prompt[-1], len(config.prompt) - 1)
        return DeadEnd()
    task, answers = frames[-1]
    head, args = spine(task)
    u = config.prompt
    if type(head) is Var:
        if not u or len(frames) < 2:
            return VariableQuery(config, task)
        frames.pop()
        frames[-1][1].append(u[0])
        return _snapshot(u, 1, frames)
    reply = m.respond(head.key, tuple(answers))
    if isinstance(reply, Bottom):
        return DeadEnd()
    if isinstance(reply, Value):
        frames.pop()
        if not frames:
            return Configuration(u + (reply.v,), ())
        frames[-1][1].append(reply.v)
        return _snapshot(u, 0, frames)
    if isinstance(reply, Query):
        frames.append([substitute(reply.term, args), []])
        return _snapshot(u, 0, frames)
    if not u:
        return HashPending()
    frames[-1][1].append(u[0])
    return _snapshot(u, 1, frames)


def eval_ground(system, term: Term, budget: SearchBudget | None = None, trace=None) -> Outcome:
    return Machine(system, budget).eval_ground(term, trace=trace)


def derived_key(term: Term) -> Strat:
    return Strat(Derived(term), term.type)


def derived_strategy(system, term: Term, budget: SearchBudget | None = None):
    """(machine system, leaf of the derived strategy of ``term``)."""
    m = system if isinstance(system, Machine) else Machine(system, budget)
    return m, derived_key(term)


def regroup(term: Term, grouping) -> Term:
    """Replace the subterms at the given paths by their derived strategies."""
    for path in sorted(grouping, key=len, reverse=True):
        sub = dict(subterms(term))[tuple(path)]
        term = replace_at(term, tuple(path), derived_key(sub))
    return term


def assoc_probe(system, term: Term, grouping, budget: SearchBudget | None = None) -> bool:
    direct = Machine(system, budget).eval_ground(term)
    grouped = Machine(system, budget).eval_ground(regroup(term, grouping))
    return direct.same(grouped)


# ---------------------------------------------------------------- canonical form


def _is_full_application(t, n):
    head, args = spine(t)
    return type(head) is Strat and len(args) == n and \
        all(type(a) is Var and a.index == i + 1 for i, a in enumerate(args))


def canonicalize(system, key, budget: SearchBudget | None = None, probe_bound: int = 3):
    """Canonical-form equivalent of ``key``: (new system, new key).

    The new strategy replies like the derived strategy of ``key`` (whose
    queries are all variable-headed), with every query argument D that is
    not already a full application replaced by ``aux x1 .. xn`` where
    ``aux x1 .. xn z.. = E x1 .. xn z..`` and E is the S/K/I abstraction
    of D over the canonical variables.
    """
    from .library import abstract_all
    from .strategy import is_canonical

    if is_canonical(system, key, probe_bound):
        return system, key
    ktype = system.type_of(key)
    var_types = [t for _, t in canonical_variables(ktype)]
    n = len(var_types)
    machine = Machine(system, budget)
    target = Strat(key, ktype)
    aux = {}
    existing = {k for k in system.names() if isinstance(k, str)}

    def fresh(prefix):
        i = 0
        while f"{prefix}{i}" in existing:
            i += 1
        existing.add(f"{prefix}{i}")
        return f"{prefix}{i}"

    def aux_for(d: Term) -> Term:
        if _is_full_application(d, n):
            return d
        if d not in aux:
            name = fresh(AUX_PREFIX)
            atype = fn(*var_types, d.type)
            extra[name] = Strategy(atype, rule=_alias_rule(abstract_all(d, var_types), atype))
            aux[d] = Strat(name, atype)
        return app(aux[d], *[Var(i + 1, t) for i, t in enumerate(var_types)])

    def rule(w):
        reply = machine.derived(target, tuple(w))[0]
        if isinstance(reply, Query):
            head, args = spine(reply.term)
            return Query(app(head, *[aux_for(a) for a in args]))
        return reply

    new_key = fresh(f"_canon_{key}_" if isinstance(key, str) else "_canon")
    # aux strategies are added to ``extra`` as replies get computed
    extra = {new_key: Strategy(ktype, rule=rule)}
    layered = Layered(system, extra)
    entries(layered, new_key, probe_bound)
    return layered, new_key


def _alias_rule(e: Term, atype):
    ys = [Var(i, t) for i, t in canonical_variables(atype)]
    q = Query(app(e, *ys))

    def rule(w):
        if not w:
            return q
        return Value(w[0]) if len(w) == 1 else BOTTOM
    return rule
