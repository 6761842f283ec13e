"""Line-oriented strategy files.

    -- comment
    mode nondeterministic
    strategy f : nat -> nat
    rule f | _ -> ? $1
    rule f | 0 -> 7
    define g : nat -> nat = K[nat->nat->nat] 3
    define h : (nat,nat)->nat = pcf \\p:nat. \\q:nat. if p 1 q

Right-hand sides are a natural, ``#``, ``bot`` or ``? <term>``.  A ``define``
makes a strategy that asks the given closed term applied to its canonical
variables and echoes the answer.  Unknown identifiers in terms resolve to
library builtins.
"""

from __future__ import annotations

import re

from . import library as lib
from .machine import _alias_rule
from .pcf import PcfSyntaxError, PcfTypeError, compile_term, parse_pcf, typecheck
from .strategy import (
    BOTTOM, HASH, Bottom, Hash, NotFinite, Query, Strategy, System, Tab, Value,
)
from .terms import (
    Derived, IllTyped, TermSyntaxError, canonical_variables, format_term, format_type, is_closed,
    key_label, map_keys, parse_term, parse_type,
)

__all__ = ["FormatError", "parse_system", "format_system", "parse_reply", "format_prompt",
           "resolver", "read_term"]


class FormatError(ValueError):
    pass


_NAME = r"[A-Za-z_][A-Za-z0-9_']*"


def resolver(types: dict):
    """Resolve names declared in ``types`` first, then library builtins."""
    def resolve(name, ann):
        if name in types and ann is None:
            return name, types[name]
        hit = lib.resolve_builtin(name, ann)
        if hit is None:
            raise TermSyntaxError(f"unknown strategy {name!r}")
        return hit
    return resolve


def read_term(text: str, system: System, var_types=()):
    types = {k: s.type for k, s in system.strategies.items() if isinstance(k, str)}
    return parse_term(text, resolver(types), var_types)


def parse_reply(text: str, resolve, var_types):
    text = text.strip()
    if text == "#":
        return HASH
    if text == "bot":
        return BOTTOM
    if text.isdigit():
        return Value(int(text))
    if text.startswith("?"):
        return Query(parse_term(text[1:].strip(), resolve, var_types))
    raise TermSyntaxError(f"bad reply {text!r}")


def format_prompt(w) -> str:
    return " ".join(map(str, w)) if w else "_"


def parse_system(text: str) -> System:
    lines = []
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("--", 1)[0].strip()
        if line:
            lines.append((n, line))
    nondet = False
    types = {}
    order = []
    # declarations first so rules may refer forward
    for n, line in lines:
        if line == "mode nondeterministic":
            nondet = True
        elif line.startswith(("strategy ", "define ")):
            m = re.match(rf"(strategy|define)\s+({_NAME})\s*:\s*(.+?)\s*(=\s*(.*))?$", line)
            if not m or (m.group(1) == "define") != (m.group(4) is not None):
                raise FormatError(f"line {n}: malformed declaration")
            name = m.group(2)
            if name in types:
                raise FormatError(f"line {n}: {name} declared twice")
            try:
                types[name] = parse_type(m.group(3))
            except ValueError as e:
                raise FormatError(f"line {n}: {e}") from None
            order.append((n, m.group(1), name, m.group(5)))
        elif not line.startswith("rule ") and not line.startswith("mode "):
            raise FormatError(f"line {n}: cannot parse {line!r}")
        elif line.startswith("mode "):
            raise FormatError(f"line {n}: unknown mode {line[5:]!r}")
    resolve = resolver(types)
    tables = {name: {} for _, kind, name, _ in order if kind == "strategy"}
    strategies = {}
    for n, kind, name, body in order:
        if kind != "define":
            continue
        try:
            if body.startswith("pcf "):
                src = body[4:]
                t = parse_pcf(src, "pcf+" if nondet else "pcf")
                if typecheck(t) != types[name]:
                    raise IllTyped(f"pcf term has type {format_type(typecheck(t))}")
                term = compile_term(t)
            else:
                term = parse_term(body, resolve)
        except (TermSyntaxError, IllTyped, PcfSyntaxError, PcfTypeError) as e:
            raise FormatError(f"line {n}: {e}") from None
        if term.type != types[name] or not is_closed(term):
            raise FormatError(f"line {n}: definition of {name} is not a closed term of its type")
        strategies[name] = Strategy(types[name], rule=_alias_rule(term, types[name]), source=body)
    for n, line in lines:
        if not line.startswith("rule "):
            continue
        m = re.match(rf"rule\s+({_NAME})\s*\|\s*([^|]*?)\s*(?:\|\s*)?->\s*(.+)$", line)
        if not m:
            raise FormatError(f"line {n}: malformed rule")
        name, prompt, rhs = m.groups()
        if name not in tables:
            raise FormatError(f"line {n}: rule for undeclared table strategy {name}")
        try:
            w = () if prompt in ("", "_") else tuple(int(x) for x in prompt.split())
        except ValueError:
            raise FormatError(f"line {n}: prompt must be naturals or _") from None
        xs = [t for _, t in canonical_variables(types[name])]
        try:
            r = parse_reply(rhs, resolve, xs)
        except (TermSyntaxError, IllTyped) as e:
            raise FormatError(f"line {n}: {e}") from None
        if isinstance(r, Hash) and not nondet:
            raise FormatError(f"line {n}: '#' needs 'mode nondeterministic'")
        if w in tables[name]:
            raise FormatError(f"line {n}: duplicate rule for {name} at {format_prompt(w)}")
        if not isinstance(r, Bottom):
            tables[name][w] = r
    for name, table in tables.items():
        strategies[name] = Strategy(types[name], table)
    ordered = {name: strategies[name] for _, _, name, _ in order}
    return System(ordered, nondeterministic=nondet)


def format_system(system: System, header: str | None = None) -> str:
    """Print a system; anonymous tables and other non-name keys get fresh names."""
    names = {}
    pending = []
    used = {k for k in system.strategies if isinstance(k, str)}

    def allocate(key, base):
        name = base
        i = 0
        while name in used:
            name = f"{base}{i}"
            i += 1
        used.add(name)
        names[key] = name
        return name

    for key in system.strategies:
        if not isinstance(key, str):
            allocate(key, "_" + re.sub(r"\W", "_", key_label(key)) if isinstance(key, lib.Builtin)
                     else getattr(key, "name", None) or "_m")

    def rename(key):
        if isinstance(key, str):
            return key
        if key in names:
            return names[key]
        if isinstance(key, Tab):
            pending.append(key)
            return allocate(key, key.name or "_tab")
        if isinstance(key, (lib.Builtin, Derived)):
            return key
        raise NotFinite(f"cannot print strategy {key_label(key)}")

    out = [f"-- {line}" for line in (header or "").splitlines()]
    if system.nondeterministic:
        out.append("mode nondeterministic")

    def emit(name, ty, table):
        out.append(f"strategy {name} : {format_type(ty)}")
        for w, r in sorted(table.items(), key=lambda e: (len(e[0]), e[0])):
            out.append(f"rule {name} | {format_prompt(w)} -> {_format_rhs(r, rename)}")

    for key, s in system.strategies.items():
        name = rename(key)
        if s.source is not None:
            out.append(f"define {name} : {format_type(s.type)} = {s.source}")
        elif s.table is not None:
            emit(name, s.type, s.table)
        else:
            raise NotFinite(f"{name} is programmatic and has no printable definition")
    while pending:
        t = pending.pop(0)
        emit(names[t], t.type, dict(t.entries))
    return "\n".join(out) + "\n"


def _format_rhs(r, rename) -> str:
    if isinstance(r, Value):
        return str(r.v)
    if isinstance(r, Hash):
        return "#"
    if isinstance(r, Query):
        return "? " + format_term(map_keys(r.term, rename))
    return "bot"
