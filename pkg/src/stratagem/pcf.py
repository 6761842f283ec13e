"""PCF and PCF+ front end.

Surface syntax::

    \\x:nat->nat. e      abstraction (the type runs up to the dot)
    f a b                application
    ( e )                grouping
    0 1 2 ...            numerals
    succ pred eq if Y S K I omega   constants (+ pif por under pcf+)
    -- comment

Polymorphic constants (S, K, I, Y, omega) get their instance types by
unification; anything left undetermined defaults to ``nat``.
"""

from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass

from . import library as lib
from .strategy import BOTTOM, HASH, Query, System, Value, tab
from .terms import (
    NAT, App, Arrow, Strat, Term, Type, Var, canonical_variables, fn,
    format_term, key_label, parse_type, size, substitute,
)

__all__ = [
    "PVar", "PLam", "PApp", "PConst", "PNum", "PcfSyntaxError", "PcfTypeError",
    "parse_pcf", "typecheck", "compile_term", "compile_program", "format_pcf",
    "beta_step", "free_vars", "PCF_CONSTANTS", "PCF_PLUS_CONSTANTS",
    "pair", "unpair", "encode_strict_finite", "decode_strict_finite",
    "hash_check_term", "strict_universal", "strict_universal_term", "correct",
    "InconsistentTables", "union_value", "consistent_functions", "strict_finite_leaf",
    "QueryEnumeration", "star_transform", "star_oracle",
]


class PcfSyntaxError(ValueError):
    pass


class PcfTypeError(TypeError):
    pass


class InconsistentTables(ValueError):
    pass


# ---------------------------------------------------------------- AST


@dataclass(frozen=True)
class PVar:
    name: str


@dataclass(frozen=True)
class PLam:
    name: str
    type: Type
    body: object


@dataclass(frozen=True)
class PApp:
    fun: object
    arg: object


@dataclass(frozen=True)
class PConst:
    name: str


@dataclass(frozen=True)
class PNum:
    n: int


PCF_CONSTANTS = {"succ", "pred", "eq", "if", "Y", "S", "K", "I", "omega",
                 "mu", "exists_ws", "exists_s"}
PCF_PLUS_CONSTANTS = PCF_CONSTANTS | {"pif", "por", "bounded_exists",
                                      "fin_len", "fin_arg", "fin_val"}


def format_pcf(t) -> str:
    if isinstance(t, PVar):
        return t.name
    if isinstance(t, PConst):
        return t.name
    if isinstance(t, PNum):
        return str(t.n)
    if isinstance(t, PLam):
        return f"\\{t.name}:{t.type}. {format_pcf(t.body)}"
    f = format_pcf(t.fun)
    if isinstance(t.fun, PLam):
        f = f"({f})"
    a = format_pcf(t.arg)
    if isinstance(t.arg, (PApp, PLam)):
        a = f"({a})"
    return f"{f} {a}"


# ---------------------------------------------------------------- parser


_TOKEN = re.compile(r"\s*(\\|\.|\(|\)|:|\d+|[A-Za-z_][A-Za-z0-9_']*)")


def _strip_comments(text: str) -> str:
    return "\n".join(line.split("--", 1)[0] for line in text.splitlines())


def parse_pcf(text: str, lang: str = "pcf"):
    text = _strip_comments(text)
    p = _Parser(text, PCF_PLUS_CONSTANTS if lang == "pcf+" else PCF_CONSTANTS)
    t = p.expr(set())
    p.skip_ws()
    if p.pos != len(text):
        raise PcfSyntaxError(p.where("unexpected input"))
    return t


class _Parser:
    def __init__(self, text, constants):
        self.text = text
        self.pos = 0
        self.constants = constants

    def where(self, msg):
        line = self.text.count("\n", 0, self.pos) + 1
        col = self.pos - (self.text.rfind("\n", 0, self.pos) + 1) + 1
        return f"{msg} at line {line}, column {col}"

    def skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self):
        m = _TOKEN.match(self.text, self.pos)
        return m.group(1) if m else None

    def take(self):
        m = _TOKEN.match(self.text, self.pos)
        if not m:
            self.skip_ws()
            if self.pos >= len(self.text):
                raise PcfSyntaxError(self.where("unexpected end of input"))
            raise PcfSyntaxError(self.where(f"unexpected character {self.text[self.pos]!r}"))
        self.pos = m.end()
        return m.group(1)

    def expr(self, bound):
        if self.peek() == "\\":
            self.take()
            name = self.take()
            if not re.match(r"[A-Za-z_]", name):
                raise PcfSyntaxError(self.where("expected a variable name"))
            if self.take() != ":":
                raise PcfSyntaxError(self.where("expected ':'"))
            dot = self.text.find(".", self.pos)
            if dot < 0:
                raise PcfSyntaxError(self.where("expected '.' after the binder type"))
            try:
                ty = parse_type(self.text[self.pos:dot])
            except ValueError as e:
                raise PcfSyntaxError(self.where(str(e))) from None
            self.pos = dot + 1
            return PLam(name, ty, self.expr(bound | {name}))
        items = []
        while True:
            tok = self.peek()
            if tok is None or tok in (")",):
                break
            if tok == "\\":
                items.append(self.expr(bound))
                break
            items.append(self.atom(bound))
        if not items:
            raise PcfSyntaxError(self.where("expected an expression"))
        t = items[0]
        for a in items[1:]:
            t = PApp(t, a)
        return t

    def atom(self, bound):
        start = self.pos
        tok = self.take()
        if tok == "(":
            t = self.expr(bound)
            if self.take() != ")":
                raise PcfSyntaxError(self.where("expected ')'"))
            return t
        if tok.isdigit():
            return PNum(int(tok))
        if re.match(r"[A-Za-z_]", tok):
            if tok in bound:
                return PVar(tok)
            if tok in self.constants:
                return PConst(tok)
            self.pos = start
            self.skip_ws()
            if tok in PCF_PLUS_CONSTANTS:
                raise PcfSyntaxError(self.where(f"constant {tok!r} needs --lang pcf+"))
            raise PcfSyntaxError(self.where(f"unknown identifier {tok!r}"))
        self.pos = start
        self.skip_ws()
        raise PcfSyntaxError(self.where(f"unexpected {tok!r}"))


# ---------------------------------------------------------------- typing


class _TV(Type):
    _ids = itertools.count()

    def __init__(self):
        self.id = next(self._ids)

    def __repr__(self):
        return f"'t{self.id}"

    def __eq__(self, other):
        return self is other

    def __hash__(self):
        return hash(("tv", self.id))


def _const_scheme(name):
    if name in lib.MONOMORPHIC:
        return lib.MONOMORPHIC[name].type
    a, b, c = _TV(), _TV(), _TV()
    return {
        "S": fn(fn(a, b, c), fn(a, b), a, c),
        "K": fn(a, b, a),
        "I": fn(a, a),
        "Y": fn(fn(a, a), a),
        "omega": a,
    }[name]


class _Typer:
    def __init__(self):
        self.subst = {}

    def find(self, t):
        while isinstance(t, _TV) and t in self.subst:
            t = self.subst[t]
        return t

    def resolve(self, t):
        t = self.find(t)
        if isinstance(t, Arrow):
            return Arrow(self.resolve(t.arg), self.resolve(t.res))
        if isinstance(t, _TV):
            return NAT
        return t

    def occurs(self, v, t):
        t = self.find(t)
        if t is v:
            return True
        return isinstance(t, Arrow) and (self.occurs(v, t.arg) or self.occurs(v, t.res))

    def unify(self, a, b, where):
        a, b = self.find(a), self.find(b)
        if a is b:
            return
        if isinstance(a, _TV):
            if self.occurs(a, b):
                raise PcfTypeError(f"infinite type in {where}")
            self.subst[a] = b
        elif isinstance(b, _TV):
            self.unify(b, a, where)
        elif isinstance(a, Arrow) and isinstance(b, Arrow):
            self.unify(a.arg, b.arg, where)
            self.unify(a.res, b.res, where)
        elif a != b:
            raise PcfTypeError(f"type mismatch in {where}")

    def infer(self, t, env, notes):
        if isinstance(t, PVar):
            return env[t.name]
        if isinstance(t, PNum):
            return NAT
        if isinstance(t, PConst):
            ty = _const_scheme(t.name)
            notes.append((t, ty))
            return ty
        if isinstance(t, PLam):
            res = self.infer(t.body, {**env, t.name: t.type}, notes)
            return Arrow(t.type, res)
        f = self.infer(t.fun, env, notes)
        a = self.infer(t.arg, env, notes)
        r = _TV()
        self.unify(f, Arrow(a, r), format_pcf(t))
        return r


def typecheck(t) -> Type:
    typer = _Typer()
    try:
        return typer.resolve(typer.infer(t, {}, []))
    except KeyError as e:
        raise PcfTypeError(f"unbound variable {e.args[0]}") from None


def _elaborate(t):
    """Type of ``t`` and the instance type of every constant occurrence (by id)."""
    typer = _Typer()
    notes = []
    try:
        ty = typer.infer(t, {}, notes)
    except KeyError as e:
        raise PcfTypeError(f"unbound variable {e.args[0]}") from None
    return typer.resolve(ty), {id(c): typer.resolve(ct) for c, ct in notes}


# ---------------------------------------------------------------- compilation


def _builtin_for(name, ty):
    if name in lib.MONOMORPHIC:
        return lib.MONOMORPHIC[name]
    b = lib.Builtin(name, ty)
    return lib.leaf(b)


def compile_term(t) -> Term:
    """Closed PCF term to a closed combinator term over library builtins."""
    ty, instances = _elaborate(t)
    counter = itertools.count(1)

    def go(s, env):
        if isinstance(s, PVar):
            return env[s.name]
        if isinstance(s, PNum):
            return lib.numeral(s.n)
        if isinstance(s, PConst):
            return _builtin_for(s.name, instances[id(s)])
        if isinstance(s, PLam):
            idx = next(counter)
            body = go(s.body, {**env, s.name: Var(idx, s.type)})
            return lib.abstract(body, idx, s.type)
        return App(go(s.fun, env), go(s.arg, env))

    out = go(t, {})
    assert out.type == ty
    return out


def compile_program(text: str, lang: str = "pcf"):
    """(system, closed term) for a PCF source text."""
    t = parse_pcf(text, lang)
    term = compile_term(t)
    return System(nondeterministic=(lang == "pcf+")), term


# ---------------------------------------------------------------- beta reduction


def free_vars(t) -> set:
    if isinstance(t, PVar):
        return {t.name}
    if isinstance(t, PLam):
        return free_vars(t.body) - {t.name}
    if isinstance(t, PApp):
        return free_vars(t.fun) | free_vars(t.arg)
    return set()


def _subst(t, name, value):
    if isinstance(t, PVar):
        return value if t.name == name else t
    if isinstance(t, PApp):
        return PApp(_subst(t.fun, name, value), _subst(t.arg, name, value))
    if isinstance(t, PLam):
        if t.name == name:
            return t
        if t.name in free_vars(value):
            fresh = next(f"{t.name}{i}" for i in itertools.count()
                         if f"{t.name}{i}" not in free_vars(value) | free_vars(t.body))
            body = _subst(t.body, t.name, PVar(fresh))
            return PLam(fresh, t.type, _subst(body, name, value))
        return PLam(t.name, t.type, _subst(t.body, name, value))
    return t


def beta_step(t):
    """Contract the leftmost-outermost beta redex, or None when there is none."""
    if isinstance(t, PApp):
        if isinstance(t.fun, PLam):
            return _subst(t.fun.body, t.fun.name, t.arg)
        f = beta_step(t.fun)
        if f is not None:
            return PApp(f, t.arg)
        a = beta_step(t.arg)
        return None if a is None else PApp(t.fun, a)
    if isinstance(t, PLam):
        b = beta_step(t.body)
        return None if b is None else PLam(t.name, t.type, b)
    return None


# ---------------------------------------------------------------- strict finite functions


def pair(x: int, y: int) -> int:
    return (x + y) * (x + y + 1) // 2 + y


def unpair(z: int):
    w = (math.isqrt(8 * z + 1) - 1) // 2
    y = z - w * (w + 1) // 2
    return w - y, y


def encode_strict_finite(pairs) -> int:
    """Bijective numbering of finite maps a -> b (a distinct); the empty map is 0.

    Keys are sorted and stored as gaps so that every natural decodes to a
    valid map.
    """
    pairs = list(pairs.items()) if isinstance(pairs, dict) else list(pairs)
    items = sorted(pairs)
    if len({a for a, _ in items}) != len(items):
        raise ValueError("arguments must be distinct")
    if not items:
        return 0
    codes = []
    prev = -1
    for a, b in items:
        codes.append(pair(a - prev - 1, b))
        prev = a
    packed = codes[-1]
    for c in reversed(codes[:-1]):
        packed = pair(c, packed)
    return 1 + pair(len(codes) - 1, packed)


def decode_strict_finite(code: int) -> list:
    if code == 0:
        return []
    n1, packed = unpair(code - 1)
    codes = []
    for _ in range(n1):
        c, packed = unpair(packed)
        codes.append(c)
    codes.append(packed)
    out = []
    prev = -1
    for c in codes:
        gap, b = unpair(c)
        prev = prev + gap + 1
        out.append((prev, b))
    return out


def strict_finite_leaf(pairs) -> Strat:
    """The strict finite function as a strategy of type nat -> nat."""
    entries = {(): Query(Var(1, NAT))}
    for a, b in dict(pairs).items():
        entries[(a,)] = Value(b)
    return tab(fn(NAT, NAT), entries)


def consistent_functions(f: dict, g: dict) -> bool:
    return all(g[a] == b for a, b in f.items() if a in g)


def union_value(alpha, beta, f: dict):
    """Brute-force value of the union of [beta(k)/phi_alpha(k)] at the strict finite f."""
    vals = {b for c, b in zip(alpha, beta)
            if all(f.get(a) == v for a, v in decode_strict_finite(c))}
    if len(vals) > 1:
        raise InconsistentTables("union does not exist")
    return vals.pop() if vals else None


def correct(alpha, beta):
    """Longest prefix whose union of strict finite functionals exists."""
    alpha, beta = list(alpha), list(beta)
    phis = [dict(decode_strict_finite(c)) for c in alpha]
    for k in range(len(alpha)):
        for j in range(k):
            if beta[j] != beta[k] and consistent_functions(phis[j], phis[k]):
                return alpha[:k], beta[:k]
    return alpha, beta


def strict_universal(alpha, beta, correction: bool = True) -> Strat:
    """Strategy for the strict functional sup_k [beta(k)/phi_alpha(k)].

    It replies # first; the answer k selects the k-th table, whose points are
    then asked in order and must be matched exactly before beta(k) is given.
    """
    if len(alpha) != len(beta):
        raise ValueError("alpha and beta differ in length")
    fixed = correct(alpha, beta)
    if not correction and fixed != (list(alpha), list(beta)):
        raise InconsistentTables("the union does not exist")
    alpha, beta = fixed
    ty = fn(fn(NAT, NAT), NAT)
    if not alpha:
        return tab(ty, {})
    f = Var(1, fn(NAT, NAT))
    entries = {(): HASH}
    for k, (c, b) in enumerate(zip(alpha, beta)):
        phi = decode_strict_finite(c)
        prompt = (k,)
        for a, v in phi:
            entries[prompt] = Query(App(f, lib.numeral(a)))
            prompt = prompt + (v,)
        entries[prompt] = Value(b)
    return tab(ty, entries)


def hash_check_term():
    """PCF+ term of type (nat, nat->nat) -> nat: 1 if the coded table clashes with f,
    0 if f extends it, undefined otherwise."""
    src = r"""
    \c:nat. \f:nat->nat.
      bounded_exists (fin_len c)
        (\i:nat. if (eq (f (fin_arg c i)) (fin_val c i)) 0 1)
    """
    return parse_pcf(src, "pcf+")


def _lookup_source(values, var):
    body = "omega"
    for i in reversed(range(len(values))):
        body = f"(if (eq {var} {i}) {values[i]} {body})"
    return body


def strict_universal_term(alpha, beta):
    """PCF+ rendering of the same functional via the pif recursion over k."""
    hash_src = format_pcf(hash_check_term())
    src = (
        "\\f:nat->nat. Y (\\F:nat->(nat->nat)->nat. \\r:nat. \\g:nat->nat. "
        f"pif (({hash_src}) {_lookup_source(alpha, 'r')} g) (F (succ r) g) {_lookup_source(beta, 'r')})"
        " 0 f"
    )
    return parse_pcf(src, "pcf+")


# ---------------------------------------------------------------- query enumeration


class QueryEnumeration:
    """Ground terms over given leaves, ordered by size, then by construction order."""

    def __init__(self, leaves):
        self.leaves = sorted(set(leaves), key=lambda t: (format_term(t), str(t.type)))
        types = set()
        for leaf in self.leaves:
            t = leaf.type
            while True:
                types.add(t)
                if not isinstance(t, Arrow):
                    break
                t = t.res
        self.arrows = sorted((t for t in types if isinstance(t, Arrow)), key=str)
        self._memo = {}

    def of_size(self, ty: Type, s: int) -> list:
        key = (ty, s)
        if key in self._memo:
            return self._memo[key]
        if s == 1:
            out = [x for x in self.leaves if x.type == ty]
        else:
            out = []
            for i in range(1, s):
                for ft in self.arrows:
                    if ft.res != ty:
                        continue
                    args = self.of_size(ft.arg, s - i)
                    if not args:
                        continue
                    for f in self.of_size(ft, i):
                        out.extend(App(f, x) for x in args)
        self._memo[key] = out
        return out

    def index(self, term: Term) -> int:
        s = size(term)
        base = sum(len(self.of_size(NAT, j)) for j in range(1, s))
        try:
            return base + self.of_size(NAT, s).index(term)
        except ValueError:
            raise KeyError(f"{format_term(term)} is not built from the enumeration leaves") from None

    def term(self, a: int, max_size: int = 12) -> Term | None:
        for s in range(1, max_size + 1):
            layer = self.of_size(NAT, s)
            if a < len(layer):
                return layer[a]
            a -= len(layer)
        return None


class _Star:
    """m with every query A replaced by f(a), a the index of A."""

    def __init__(self, system, key, enum):
        self.system = system
        self.key = key
        self.enum = enum
        self.type = fn(fn(NAT, NAT), NAT)

    def reply(self, prompt):
        r = self.system.respond(self.key, prompt)
        if isinstance(r, Query):
            return Query(App(Var(1, fn(NAT, NAT)), lib.numeral(self.enum.index(r.term))))
        return r

    def label(self):
        return f"{key_label(self.key)}*"


def star_transform(system, key, names=None):
    """(leaf of m*, enumeration used).  ``names`` are the strategy keys
    allowed in queries besides m's canonical variables."""
    ty = system.type_of(key)
    leaves = [Var(i, t) for i, t in canonical_variables(ty)]
    for k in names if names is not None else system.names():
        leaves.append(Strat(k, system.type_of(k)))
    enum = QueryEnumeration(leaves)
    star = _Star(system, key, enum)
    return Strat(star, star.type), enum


class _StarOracle:
    """g(a) = value of the a-th query with the given arguments substituted."""

    def __init__(self, system, enum, args, budget):
        self.system = system
        self.enum = enum
        self.args = list(args)
        self.budget = budget
        self.type = fn(NAT, NAT)

    def reply(self, prompt):
        from .machine import Machine, Result
        if not prompt:
            return Query(Var(1, NAT))
        if len(prompt) > 1:
            return BOTTOM
        q = self.enum.term(prompt[0])
        if q is None:
            return BOTTOM
        out = Machine(self.system, self.budget).eval_ground(substitute(q, self.args))
        return Value(out.value) if isinstance(out, Result) else BOTTOM

    def label(self):
        return "g"


def star_oracle(system, enum, args, budget=None) -> Strat:
    o = _StarOracle(system, enum, args, budget)
    return Strat(o, o.type)
