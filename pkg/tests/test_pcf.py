import math
import os
import random

import pytest
from hypothesis import given, strategies as st

from conftest import PROGRAMS
from generators import N1, random_pcf, random_strict_finite, random_system
from oracles import all_strict_finite, brute_union, consistent_tables, hash_contract
from stratagem import library as lib
from stratagem.machine import Machine, Result, SearchBudget, eval_ground
from stratagem.pcf import (
    InconsistentTables, PcfSyntaxError, PcfTypeError, beta_step, compile_program, compile_term,
    correct, decode_strict_finite, encode_strict_finite, hash_check_term, parse_pcf,
    star_oracle, star_transform, strict_finite_leaf, strict_universal, strict_universal_term,
    typecheck, union_value,
)
from stratagem.strategy import (
    HASH, Query, Strategy, System, Value, check_wittingly_consistent, well_formed,
)
from stratagem.terms import NAT, Var, app, fn

seeds = st.integers(0, 2**32 - 1)
ND = System({}, nondeterministic=True)


def run(src, lang="pcf", budget=None):
    system, term = compile_program(src, lang)
    return Machine(system, budget).eval_ground(term)


def value(src, lang="pcf", budget=None):
    out = run(src, lang, budget)
    return out.value if isinstance(out, Result) else None


# ---------------------------------------------------------------- front end


def test_typecheck_examples():
    assert typecheck(parse_pcf(r"\x:nat. x")) == N1
    assert typecheck(parse_pcf(r"\f:nat->nat. Y f")) == fn(N1, NAT)
    assert typecheck(parse_pcf(r"\f:(nat->nat)->nat->nat. Y f")) == fn(fn(N1, N1), N1)


def test_pcf_plus_gating():
    with pytest.raises((PcfSyntaxError, PcfTypeError)):
        typecheck(parse_pcf("pif 1 2 3", "pcf"))
    assert typecheck(parse_pcf("pif 1 2 3", "pcf+")) == NAT


def test_ill_typed_rejected():
    with pytest.raises(PcfTypeError):
        typecheck(parse_pcf("succ succ"))


def test_identity_compiles_to_echo():
    m = Machine(System({}))
    t = compile_term(parse_pcf(r"\x:nat. x"))
    assert m.derived(t, ())[0] == Query(Var(1, NAT))
    assert [m.derived(t, (v,))[0] for v in range(3)] == [Value(0), Value(1), Value(2)]


def test_factorial_three():
    with open(os.path.join(PROGRAMS, "fact3.pcf")) as f:
        assert value(f.read()) == math.factorial(3)


def test_exists_ws_compiled():
    assert value(r"exists_ws (\x:nat. eq x 2)") == 1


def test_library_builtins_well_formed():
    keys = [b.key for b in lib.library().values()] + [lib.exists_s_n(2).key, lib.mu_bounded(2).key]
    s = System({}, nondeterministic=True)
    assert well_formed(s, prompt_bound=2, keys=keys) == []


def test_bounded_quantifier_examples():
    p1 = compile_term(parse_pcf(r"\x:nat. eq x 1"))
    p0 = compile_term(parse_pcf(r"\x:nat. 0"))
    e2 = lib.exists_s_n(2)
    assert eval_ground(System({}), app(e2, p1)).value == 1
    assert eval_ground(System({}), app(e2, p0)).value == 0
    assert value("pif omega 4 4", "pcf+") == 4


# ---------------------------------------------------------------- beta soundness


@given(seeds)
def test_beta_step_soundness(seed):
    rng = random.Random(seed)
    t = parse_pcf(random_pcf(rng, 4))
    budget = SearchBudget(fuel=50_000)
    reduced = beta_step(t)
    if reduced is None:
        return
    a = Machine(System({}), budget).eval_ground(compile_term(t))
    b = Machine(System({}), budget).eval_ground(compile_term(reduced))
    assert a.same(b)


# ---------------------------------------------------------------- strict finite functions


def test_encode_examples():
    assert encode_strict_finite({}) == 0
    assert decode_strict_finite(0) == []


def test_encode_roundtrip_and_injective():
    rng = random.Random(7)
    seen = {}
    for _ in range(500):
        f = {a: rng.randint(0, 6) for a in rng.sample(range(8), rng.randint(0, 4))}
        c = encode_strict_finite(f)
        assert dict(decode_strict_finite(c)) == f
        key = tuple(sorted(f.items()))
        assert seen.setdefault(c, key) == key


def test_encode_surjective_prefix():
    for c in range(3000):
        assert encode_strict_finite(decode_strict_finite(c)) == c


def test_strict_finite_leaf():
    leaf = strict_finite_leaf({2: 5})
    assert eval_ground(System({}), app(leaf, lib.numeral(2))).value == 5
    assert eval_ground(System({}), app(leaf, lib.numeral(1))).kind == "DeadEnd"


@pytest.mark.parametrize("f,expected", [({0: 5}, 0), ({0: 6}, 1), ({}, None)])
def test_hash_check_examples(f, expected):
    c = encode_strict_finite({0: 5})
    t = compile_term(hash_check_term())
    out = eval_ground(ND, app(t, lib.numeral(c), strict_finite_leaf(f)))
    assert (out.value if isinstance(out, Result) else None) == expected


def test_hash_check_undefined_code():
    t = compile_term(hash_check_term())
    out = eval_ground(ND, app(t, lib.omega(), strict_finite_leaf({0: 5})))
    assert not isinstance(out, Result)


@given(seeds)
def test_hash_check_contract(seed):
    rng = random.Random(seed)
    c_map = random_strict_finite(rng)
    f = random_strict_finite(rng)
    t = compile_term(hash_check_term())
    out = eval_ground(ND, app(t, lib.numeral(encode_strict_finite(c_map)), strict_finite_leaf(f)))
    assert (out.value if isinstance(out, Result) else None) == hash_contract(c_map, f)


# ---------------------------------------------------------------- strict universal


def test_strict_universal_empty():
    leaf = strict_universal([], [])
    assert leaf.key.entries == ()


def test_strict_universal_single():
    leaf = strict_universal([encode_strict_finite({0: 1})], [9])
    for f in all_strict_finite(support=(0, 1)):
        out = eval_ground(ND, app(leaf, strict_finite_leaf(f)))
        expected = 9 if f.get(0) == 1 else None
        assert (out.value if isinstance(out, Result) else None) == expected


def test_strict_universal_two_entries():
    tables = [({0: 1}, 4), ({1: 2}, 4)]
    alpha = [encode_strict_finite(p) for p, _ in tables]
    beta = [b for _, b in tables]
    leaf = strict_universal(alpha, beta)
    for f in all_strict_finite(support=(0, 1)):
        out = eval_ground(ND, app(leaf, strict_finite_leaf(f)))
        assert (out.value if isinstance(out, Result) else None) == brute_union(tables, f)
        assert union_value(alpha, beta, f) == brute_union(tables, f)


def test_strict_universal_term_agrees_where_defined():
    tables = [({0: 1}, 4), ({0: 2, 1: 2}, 6)]
    alpha = [encode_strict_finite(p) for p, _ in tables]
    beta = [b for _, b in tables]
    term = compile_term(strict_universal_term(alpha, beta))
    for f in [{0: 1}, {0: 2, 1: 2}, {0: 1, 1: 3}]:
        out = eval_ground(ND, app(term, strict_finite_leaf(f)),
                          SearchBudget(fuel=2_000, hash_bound=3))
        assert out.value == brute_union(tables, f)


def test_strict_universal_is_consistent():
    rng = random.Random(3)
    for _ in range(20):
        tables = consistent_tables(rng)
        alpha = [encode_strict_finite(p) for p, _ in tables]
        leaf = strict_universal(alpha, [b for _, b in tables])
        s = System({"F": Strategy(leaf.type, dict(leaf.key.entries))}, nondeterministic=True)
        assert check_wittingly_consistent(s)
        assert leaf.key.reply(()) == HASH or not tables


def test_correct_examples():
    assert correct([], []) == ([], [])
    a = [encode_strict_finite({0: 1}), encode_strict_finite({1: 1})]
    assert correct(a, [3, 3]) == (a, [3, 3])
    assert correct(a, [3, 4]) == (a[:1], [3])


def test_strict_universal_without_correction():
    a = [encode_strict_finite({0: 1}), encode_strict_finite({1: 1})]
    with pytest.raises(InconsistentTables):
        strict_universal(a, [3, 4], correction=False)


# ---------------------------------------------------------------- star transform


def test_star_constant():
    s = System({"c": Strategy(NAT, {(): Value(6)})})
    star, _ = star_transform(s, "c")
    assert eval_ground(s, app(star, strict_finite_leaf({}))).value == 6


def test_star_if_asks_first_query():
    star, enum = star_transform(System({}), lib.IF.key, names=[])
    assert enum.term(0) == Var(1, NAT)
    assert star.key.reply(()) == Query(app(Var(1, N1), lib.numeral(0)))


@given(seeds)
def test_star_roundtrip(seed):
    rng = random.Random(seed)
    s = random_system(rng, n=3)
    key = rng.choice(s.names())
    ty = s.type_of(key)
    from stratagem.terms import args_of, Strat
    args = [lib.numeral(rng.randint(0, 2)) for _ in args_of(ty)]
    if any(t != NAT for t in args_of(ty)):
        return
    names = s.names() + [lib.numeral(v).key for v in range(3)] + [lib.SUCC.key, lib.EQ.key]
    star, enum = star_transform(s, key, names)
    budget = SearchBudget(fuel=5_000)
    g = star_oracle(s, enum, args, budget)
    direct = Machine(s, budget).eval_ground(app(Strat(key, ty), *args))
    via = Machine(s, budget).eval_ground(app(star, g))
    assert direct.value == via.value if isinstance(direct, Result) else not isinstance(via, Result)
