"""Builtin programmatic strategies.

Every builtin is a :class:`Builtin` key: a name, the instance type and an
optional integer parameter.  Polymorphic combinators (S, K, I, Y, omega) are
instantiated by their full type.  Booleans are 1 (true) and 0 (false).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache

from .strategy import BOTTOM, HASH, Query, Reply, Value
from .terms import (
    NAT, App, Arrow, IllTyped, Strat, Type, Var, app, args_of, fn, format_type,
    is_closed, parse_type,
)

__all__ = [
    "Builtin", "numeral", "omega", "S", "K", "I", "Y", "SUCC", "PRED", "EQ", "IF",
    "PIF", "POR", "MU", "EXISTS_WS", "EXISTS_WS_REC", "EXISTS_S", "BOUNDED_EXISTS",
    "FIN_LEN", "FIN_ARG", "FIN_VAL", "mu_bounded", "exists_s_n", "psi",
    "abstract", "abstract_all", "resolve_builtin", "MONOMORPHIC", "POLYMORPHIC",
    "NONDETERMINISTIC", "leaf", "library",
]

PRED1 = fn(NAT, NAT)  # nat -> nat


@dataclass(frozen=True)
class Builtin:
    name: str
    type: Type
    param: int | None = None

    def reply(self, prompt) -> Reply:
        return _RULES[self.name](self, tuple(prompt))

    def label(self) -> str:
        if self.name == "num":
            return str(self.param)
        base = self.name if self.param is None else f"{self.name}_{self.param}"
        if self.name in POLYMORPHIC:
            return f"{base}[{format_type(self.type)}]"
        return base

    def __repr__(self):
        return self.label()


def leaf(b: Builtin) -> Strat:
    return Strat(b, b.type)


# ---------------------------------------------------------------- constructors


def numeral(n: int) -> Strat:
    return leaf(Builtin("num", NAT, n))


def omega(t: Type = NAT) -> Strat:
    return leaf(Builtin("omega", t))


def S(a: Type, b: Type, c: Type) -> Strat:
    """S : (a->b->c) -> (a->b) -> a -> c."""
    return leaf(Builtin("S", fn(fn(a, b, c), fn(a, b), a, c)))


def K(a: Type, b: Type) -> Strat:
    """K : a -> b -> a."""
    return leaf(Builtin("K", fn(a, b, a)))


def I(a: Type) -> Strat:
    return leaf(Builtin("I", fn(a, a)))


def Y(s: Type) -> Strat:
    """Y : (s->s) -> s."""
    return leaf(Builtin("Y", fn(fn(s, s), s)))


def _mono(name, t, param=None):
    return leaf(Builtin(name, t, param))


SUCC = _mono("succ", PRED1)
PRED = _mono("pred", PRED1)
EQ = _mono("eq", fn(NAT, NAT, NAT))
IF = _mono("if", fn(NAT, NAT, NAT, NAT))
PIF = _mono("pif", fn(NAT, NAT, NAT, NAT))
POR = _mono("por", fn(NAT, NAT, NAT))
MU = _mono("mu", fn(PRED1, NAT))
EXISTS_WS = _mono("exists_ws", fn(PRED1, NAT))
EXISTS_WS_REC = _mono("exists_ws_rec", fn(PRED1, NAT))
EXISTS_S = _mono("exists_s", fn(PRED1, NAT))
BOUNDED_EXISTS = _mono("bounded_exists", fn(NAT, PRED1, NAT))
FIN_LEN = _mono("fin_len", PRED1)
FIN_ARG = _mono("fin_arg", fn(NAT, NAT, NAT))
FIN_VAL = _mono("fin_val", fn(NAT, NAT, NAT))


def mu_bounded(n: int) -> Strat:
    return _mono("mu_le", fn(PRED1, NAT), n)


def exists_s_n(n: int) -> Strat:
    return _mono("exists_s_le", fn(PRED1, NAT), n)


def psi(a: Type, k: int) -> Strat:
    """Projection onto values <= k at type a, as a strategy of type a -> a."""
    return leaf(Builtin("psi", fn(a, a), k))


MONOMORPHIC = {
    "succ": SUCC, "pred": PRED, "eq": EQ, "if": IF, "pif": PIF, "por": POR,
    "mu": MU, "exists_ws": EXISTS_WS, "exists_ws_rec": EXISTS_WS_REC,
    "exists_s": EXISTS_S, "bounded_exists": BOUNDED_EXISTS,
    "fin_len": FIN_LEN, "fin_arg": FIN_ARG, "fin_val": FIN_VAL,
}
POLYMORPHIC = {"S", "K", "I", "Y", "omega", "psi"}
NONDETERMINISTIC = {"pif", "por", "bounded_exists"}
_PARAMETRIC = {"mu_le": mu_bounded, "exists_s_le": exists_s_n}


def library() -> dict:
    """Monomorphic builtins by name (polymorphic ones are built per instance)."""
    return dict(MONOMORPHIC)


def resolve_builtin(name: str, annotation: str | None):
    """Key and type for a builtin identifier, or None when unknown."""
    if name.isdigit():
        b = numeral(int(name)).key
        return b, b.type
    if name in MONOMORPHIC:
        b = MONOMORPHIC[name].key
        return b, b.type
    m = re.fullmatch(r"(mu_le|exists_s_le)_(\d+)", name)
    if m:
        b = _PARAMETRIC[m.group(1)](int(m.group(2))).key
        return b, b.type
    m = re.fullmatch(r"(S|K|I|Y|omega|psi)(?:_(\d+))?", name)
    if m:
        if annotation is None:
            if m.group(1) != "omega":
                raise IllTyped(f"{name} needs a [type] annotation")
            t = NAT
        else:
            t = parse_type(annotation)
        param = int(m.group(2)) if m.group(2) else None
        if (m.group(1) == "psi") != (param is not None):
            return None
        b = Builtin(m.group(1), t, param)
        _check_instance(b)
        return b, t
    return None


def _check_instance(b: Builtin):
    t = b.type
    a = args_of(t)
    ok = {
        "omega": True,
        "I": len(a) >= 1 and a[0] == _drop(t, 1),
        "K": len(a) >= 2 and a[0] == _drop(t, 2),
        "Y": len(a) >= 1 and a[0] == fn(_drop(t, 1), _drop(t, 1)),
        "psi": len(a) >= 1 and a[0] == _drop(t, 1),
        "S": len(a) >= 3 and _s_ok(t),
    }[b.name]
    if not ok:
        raise IllTyped(f"{b.name} cannot have type {format_type(t)}")


def _drop(t: Type, n: int) -> Type:
    for _ in range(n):
        t = t.res
    return t


def _s_ok(t: Type) -> bool:
    x, y, z = args_of(t)[:3]
    c = _drop(t, 3)
    return x == fn(z, fn(y.res if isinstance(y, Arrow) else y, c)) and \
        isinstance(y, Arrow) and y.arg == z


# ---------------------------------------------------------------- rules


def _vars(t: Type):
    return [Var(i + 1, a) for i, a in enumerate(args_of(t))]


@lru_cache(maxsize=None)
def _combinator_query(b: Builtin):
    x = _vars(b.type)
    if b.name == "I":
        return app(*x)
    if b.name == "K":
        return app(x[0], *x[2:])
    if b.name == "S":
        return app(App(App(x[0], x[2]), App(x[1], x[2])), *x[3:])
    if b.name == "Y":
        return app(App(x[0], App(leaf(b), x[0])), *x[1:])
    raise KeyError(b.name)


def _echo(b, w):
    if not w:
        return Query(_combinator_query(b))
    return Value(w[0]) if len(w) == 1 else BOTTOM


def _omega(b, w):
    return BOTTOM


def _num(b, w):
    return Value(b.param) if not w else BOTTOM


@lru_cache(maxsize=None)
def _var_query(i: int, t: Type):
    return Var(i, args_of(t)[i - 1])


def _ask(b, i):
    return Query(_var_query(i, b.type))


def _succ(b, w):
    if not w:
        return _ask(b, 1)
    return Value(w[0] + 1) if len(w) == 1 else BOTTOM


def _pred(b, w):
    if not w:
        return _ask(b, 1)
    return Value(max(w[0] - 1, 0)) if len(w) == 1 else BOTTOM


def _eq(b, w):
    if len(w) < 2:
        return _ask(b, len(w) + 1)
    return Value(int(w[0] == w[1])) if len(w) == 2 else BOTTOM


def _if(b, w):
    if not w:
        return _ask(b, 1)
    if w[0] not in (0, 1):
        return BOTTOM
    if len(w) == 1:
        return _ask(b, 2 if w[0] == 1 else 3)
    return Value(w[1]) if len(w) == 2 else BOTTOM


def _pif(b, w):
    # branch 0 asks the test first, branch 1 asks both branches and compares
    if not w:
        return HASH
    if w[0] == 0:
        if len(w) == 1:
            return _ask(b, 1)
        if w[1] not in (0, 1):
            return BOTTOM
        if len(w) == 2:
            return _ask(b, 2 if w[1] == 1 else 3)
        return Value(w[2]) if len(w) == 3 else BOTTOM
    if w[0] == 1:
        if len(w) == 1:
            return _ask(b, 2)
        if len(w) == 2:
            return _ask(b, 3)
        if len(w) == 3 and w[1] == w[2]:
            return Value(w[1])
    return BOTTOM


def _por(b, w):
    if not w:
        return HASH
    if w[0] == 0:
        if len(w) == 1:
            return _ask(b, 1)
        if len(w) == 2:
            if w[1] == 1:
                return Value(1)
            return _ask(b, 2) if w[1] == 0 else BOTTOM
        return Value(w[2]) if len(w) == 3 and w[1] == 0 else BOTTOM
    if w[0] == 1:
        if len(w) == 1:
            return _ask(b, 2)
        if len(w) == 2 and w[1] == 1:
            return Value(1)
    return BOTTOM


@lru_cache(maxsize=None)
def _pred_at(n: int):
    return App(Var(1, PRED1), numeral(n))


@lru_cache(maxsize=None)
def _pred_at_bottom():
    return App(Var(1, PRED1), omega())


def _search(w, limit):
    """Position of the first 1 in a run of 0s, 'ask' for the next index, or None."""
    for i, a in enumerate(w):
        if a == 1:
            return ("found", i) if i == len(w) - 1 else None
        if a != 0:
            return None
    if limit is not None and len(w) > limit:
        return ("exhausted", len(w))
    return ("ask", len(w))


def _mu(b, w):
    s = _search(w, b.param)
    if s is None or s[0] == "exhausted":
        return BOTTOM
    return Query(_pred_at(s[1])) if s[0] == "ask" else Value(s[1])


def _exists_ws(b, w):
    s = _search(w, None)
    if s is None:
        return BOTTOM
    return Query(_pred_at(s[1])) if s[0] == "ask" else Value(1)


@lru_cache(maxsize=None)
def _exists_ws_rec_query():
    # m (S (K $1) (S (K succ) I)), i.e. m applied to \x. P (x + 1)
    p = Var(1, PRED1)
    shifted = app(S(NAT, NAT, NAT), App(K(PRED1, NAT), p),
                  app(S(NAT, NAT, NAT), App(K(PRED1, NAT), SUCC), I(NAT)))
    return App(EXISTS_WS_REC, shifted)


def _exists_ws_rec(b, w):
    if not w:
        return Query(_pred_at(0))
    if w[0] == 1:
        return Value(1) if len(w) == 1 else BOTTOM
    if w[0] != 0:
        return BOTTOM
    if len(w) == 1:
        return Query(_exists_ws_rec_query())
    return Value(w[1]) if len(w) == 2 else BOTTOM


def _exists_s_le(b, w):
    # ask P0..Pn; if all false, answer P(bottom)
    n = b.param
    for i, a in enumerate(w[: n + 1]):
        if a == 1:
            return Value(1) if i == len(w) - 1 else BOTTOM
        if a != 0:
            return BOTTOM
    if len(w) <= n:
        return Query(_pred_at(len(w)))
    if len(w) == n + 1:
        return Query(_pred_at_bottom())
    return Value(w[n + 1]) if len(w) == n + 2 else BOTTOM


@lru_cache(maxsize=None)
def _exists_s_query():
    p = Var(1, PRED1)
    return App(p, App(MU, p))


def _exists_s(b, w):
    if not w:
        return Query(_exists_s_query())
    return Value(w[0]) if len(w) == 1 else BOTTOM


@lru_cache(maxsize=None)
def _bounded_pred(i: int):
    return App(Var(2, PRED1), numeral(i))


def _bounded_exists(b, w):
    # <n> -> #; branch r < n asks P r and accepts true; branch n asks P0..P(n-1)
    if not w:
        return _ask(b, 1)
    n = w[0]
    if n == 0:
        return Value(0) if len(w) == 1 else BOTTOM
    if len(w) == 1:
        return HASH
    r = w[1]
    rest = w[2:]
    if r < n:
        if not rest:
            return Query(_bounded_pred(r))
        return Value(1) if rest == (1,) else BOTTOM
    if r != n:
        return BOTTOM
    for i, a in enumerate(rest):
        if a == 1:
            return Value(1) if i == len(rest) - 1 else BOTTOM
        if a != 0:
            return BOTTOM
    if len(rest) < n:
        return Query(_bounded_pred(len(rest)))
    return Value(0)


def _psi(b, w):
    if not w:
        return Query(_psi_query(b))
    if len(w) == 1 and w[0] <= b.param:
        return Value(w[0])
    return BOTTOM


@lru_cache(maxsize=None)
def _psi_query(b: Builtin):
    x = _vars(b.type)
    return app(x[0], *[_psi_arg(a, b.param) for a in x[1:]])


def _psi_arg(v: Var, k: int):
    return App(psi(v.type, k), v)


def _fin(kind):
    def rule(b, w):
        need = 1 if kind == "len" else 2
        if len(w) < need:
            return _ask(b, len(w) + 1)
        if len(w) > need:
            return BOTTOM
        from .pcf import decode_strict_finite
        pairs = decode_strict_finite(w[0])
        if kind == "len":
            return Value(len(pairs))
        i = w[1]
        if i >= len(pairs):
            return BOTTOM
        return Value(pairs[i][0] if kind == "arg" else pairs[i][1])
    return rule


_RULES = {
    "num": _num, "omega": _omega, "S": _echo, "K": _echo, "I": _echo, "Y": _echo,
    "succ": _succ, "pred": _pred, "eq": _eq, "if": _if, "pif": _pif, "por": _por,
    "mu": _mu, "mu_le": _mu, "exists_ws": _exists_ws, "exists_ws_rec": _exists_ws_rec,
    "exists_s_le": _exists_s_le, "exists_s": _exists_s,
    "bounded_exists": _bounded_exists, "psi": _psi,
    "fin_len": _fin("len"), "fin_arg": _fin("arg"), "fin_val": _fin("val"),
}


# ---------------------------------------------------------------- bracket abstraction


def _mentions(t, index):
    if type(t) is Var:
        return t.index == index
    if type(t) is App:
        return _mentions(t.fun, index) or _mentions(t.arg, index)
    return False


def abstract(t, index: int, vtype: Type):
    """Combinator term E with E x = t, eliminating ``Var(index)``; no eta step."""
    if type(t) is Var and t.index == index:
        return I(vtype)
    if not _mentions(t, index):
        return App(K(t.type, vtype), t)
    f = abstract(t.fun, index, vtype)
    a = abstract(t.arg, index, vtype)
    ft = t.fun.type
    return app(S(vtype, ft.arg, ft.res), f, a)


def abstract_all(t, var_types) -> object:
    """Closed E with E x1 .. xn = t for ``$1..$n`` of the given types."""
    for i in range(len(var_types), 0, -1):
        t = abstract(t, i, var_types[i - 1])
    assert is_closed(t)
    return t
