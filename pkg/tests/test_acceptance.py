"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py`` or ``python scripts/run_acceptance.py``.
"""

import itertools
import math
import os
import random

import pytest

from conftest import PROGRAMS
from generators import (
    N1, N2, closed_subterm_paths, finitary_system, finitary_term, library_term, random_strict_finite,
    random_system, random_table, random_task, recursive_functional,
)
from oracles import (
    all_strict_finite, brute_force_conflict, brute_union, check_tabulation, consistent_tables,
    hash_contract, restriction_of,
)
from stratagem import library as lib
from stratagem.equivalence import (
    ArgBounds, NotRefuted, Refuted, context_probe, refute_preorder, replay_witness, witness_text,
)
from stratagem.fileformat import parse_system, read_term
from stratagem.finitary import (
    BudgetExceeded, Ranked, extract_support, k_restrict, projection_strategy, rank_transform,
)
from stratagem.machine import (
    FuelExhausted, Machine, Result, RuntimeInconsistency, SearchBudget, assoc_probe,
)
from stratagem.pcf import (
    compile_program, compile_term, correct, encode_strict_finite, hash_check_term, parse_pcf,
    strict_finite_leaf, strict_universal,
)
from stratagem.strategy import (
    BOTTOM, Inconsistent, Query, Strategy, System, Tab, Value, check_wittingly_consistent,
    m_consistent, probe_prompts,
)
from stratagem.terms import NAT, Strat, Var, app
from stratagem.universal import (
    Bar, UniversalSystem, hom_to_universal, homomorphism_failures, sample_strings,
)

ND = System({}, nondeterministic=True)
SMALL = SearchBudget(fuel=20_000)
CASE = SearchBudget(fuel=10_000)
OMEGA = None  # the undefined argument in brute-force tables

RUNTIME_INCONSISTENCIES = []


@pytest.fixture(autouse=True, scope="module")
def watch_runtime_inconsistency():
    """Record every RuntimeInconsistency any evaluation in this module reports."""
    original = Machine.eval_ground

    def watched(self, term, *args, **kwargs):
        out = original(self, term, *args, **kwargs)
        if isinstance(out, RuntimeInconsistency):
            RUNTIME_INCONSISTENCIES.append(term)
        return out

    Machine.eval_ground = watched
    yield
    Machine.eval_ground = original


def report(capsys, number, summary, failures):
    status = "PASS" if not failures else "FAIL"
    with capsys.disabled():
        print(f"\n{status} criterion {number}: {summary}"
              + (f" ({len(failures)} failures, first: {failures[0]})" if failures else ""))
    assert not failures, failures[:5]


def n(v):
    return lib.numeral(v)


def arg(v):
    return lib.omega() if v is OMEGA else n(v)


def value(system, term, budget=SMALL):
    out = Machine(system, budget).eval_ground(term)
    return out.value if isinstance(out, Result) else None


def load(name):
    with open(os.path.join(PROGRAMS, name)) as f:
        return f.read()


# ---------------------------------------------------------------- 1


def if_oracle(x, y, z):
    return y if x == 1 else z if x == 0 else None


def pif_oracle(x, y, z):
    if x == 1:
        return y
    if x == 0:
        return z
    return y if y == z else None


def por_oracle(x, y):
    if 1 in (x, y):
        return 1
    return 0 if x == y == 0 else None


def test_criterion_1_conditionals(capsys):
    fails = []
    bools = [0, 1, OMEGA]
    vals = [0, 1, 2, 3, OMEGA]
    for x in bools:
        for y in vals:
            for z in vals:
                got = value(System({}), app(lib.IF, arg(x), arg(y), arg(z)), CASE)
                if got != if_oracle(x, y, z):
                    fails.append(("if", x, y, z, got))
    cases = [(x, y, z) for x in bools for y in bools for z in bools]
    cases += [(x, v, v) for x in bools for v in range(6)]
    for x, y, z in cases:
        got = value(ND, app(lib.PIF, arg(x), arg(y), arg(z)), CASE)
        if got != pif_oracle(x, y, z):
            fails.append(("pif", x, y, z, got))
    for x in bools:
        for y in bools:
            got = value(ND, app(lib.POR, arg(x), arg(y)), CASE)
            if got != por_oracle(x, y):
                fails.append(("por", x, y, got))
    checked = {"if": 3 * 25, "pif": len(cases), "por": 9}
    report(capsys, 1, f"if/pif/por match brute-force tables on {checked}", fails)


# ---------------------------------------------------------------- 2


def pcf_pred(src):
    return compile_term(parse_pcf(src))


def finitary_predicate(rng):
    """A predicate defined on a random subset of 0..5, or a constant."""
    kind = rng.random()
    if kind < 0.15:
        return Strat(Tab(N1, {(): Value(rng.randint(0, 1))}), N1)
    dom = rng.sample(range(6), rng.randint(0, 6))
    table = {(): Query(Var(1, NAT))}
    table.update({(a,): Value(int(rng.random() < 0.3)) for a in dom})
    return Strat(Tab(N1, table), N1)


def test_criterion_2_quantifiers(capsys):
    fails = []
    for k in range(6):
        got = value(System({}), app(lib.EXISTS_WS, pcf_pred(rf"\x:nat. eq x {k}")))
        if got != 1:
            fails.append(("exists_ws eq", k, got))
    zero = Machine(System({}), CASE).eval_ground(app(lib.EXISTS_WS, pcf_pred(r"\x:nat. 0")))
    if not isinstance(zero, FuelExhausted):
        fails.append(("exists_ws const 0", zero.kind))
    e2 = lib.exists_s_n(2)
    for src, expected in [(r"\x:nat. eq x 1", 1), (r"\x:nat. 0", 0), (r"\x:nat. eq x 5", None)]:
        got = value(System({}), app(e2, pcf_pred(src)), CASE)
        if got != expected:
            fails.append(("exists_s_2", src, got))
    rng = random.Random(2)
    limit_values = []
    constants = [Strat(Tab(N1, {(): Value(c)}), N1) for c in (0, 1)]
    for i, p in enumerate(constants + [finitary_predicate(rng) for _ in range(18)]):
        limits = [value(System({}), app(lib.exists_s_n(m), p), CASE) for m in range(9)]
        defined = [v for v in limits if v is not None]
        if any(v != limits[-1] for v in defined):
            fails.append(("exists_s_n not monotone", i, limits))
        direct = value(System({}), app(lib.EXISTS_S, p), CASE)
        via_mu = value(System({}), app(p, app(lib.MU, p)), CASE)
        limit_values.append(limits[-1])
        if not direct == via_mu == limits[-1]:
            fails.append(("exists_s vs limit", i, direct, via_mu, limits))
    spread = {v: limit_values.count(v) for v in (0, 1, None)}
    report(capsys, 2, f"weak/finite/full sequential quantifiers; 20 predicates agree with "
                      f"finite limits (values {spread})", fails)


# ---------------------------------------------------------------- 3


def test_criterion_3_associativity(capsys):
    fails = []
    for seed in range(200):
        rng = random.Random(seed)
        t = library_term(rng, 3, nondet=True)
        paths = closed_subterm_paths(t)
        grouping = rng.sample(paths, min(len(paths), rng.randint(1, 3)))
        if not assoc_probe(ND, t, grouping, SMALL):
            fails.append(seed)
    report(capsys, 3, "200 regrouped evaluations match direct ones", fails)


# ---------------------------------------------------------------- 4


def test_criterion_4_monotonicity(capsys):
    fails = []
    results = 0
    for seed in range(200):
        rng = random.Random(seed)
        s = random_system(rng)
        sub = restriction_of(rng, s)
        t = random_task(rng, s)
        small = Machine(sub, SMALL).eval_ground(t)
        if isinstance(small, Result):
            results += 1
            full = Machine(s, SMALL).eval_ground(t)
            if not (isinstance(full, Result) and full.value == small.value):
                fails.append(seed)
    report(capsys, 4, f"200 restriction triples, {results} restricted results preserved", fails)


# ---------------------------------------------------------------- 5


def test_criterion_5_tabulation(capsys):
    fails = []
    prompts = 0
    for seed in range(50):
        rng = random.Random(seed)
        s = finitary_system(rng, layers=2, max_entries=6)
        t = finitary_term(rng, s)
        try:
            prompts += check_tabulation(s, t)
        except BudgetExceeded as e:
            fails.append((seed, str(e)))
        except AssertionError as e:
            fails.append((seed, str(e)))
    report(capsys, 5, f"50 tabulations agree with derived strategies on {prompts} prompts", fails)


# ---------------------------------------------------------------- 6


def support_bound(sup):
    vals = [0]
    for st_ in sup.strategies.values():
        for w, r in st_.table.items():
            vals.extend(w)
            if isinstance(r, Value):
                vals.append(r.v)
    return max(vals)


def test_criterion_6_restriction_lattice(capsys):
    fails = []
    entries = agreements = 0
    for seed in range(50):
        rng = random.Random(seed)
        s = random_system(rng)
        restricted = [k_restrict(s, k) for k in range(5)]
        for key in s.names():
            for w in probe_prompts(s, key, 4, 3):
                full = s.respond(key, w)
                for k in range(4):
                    r = restricted[k].respond(key, w)
                    entries += 1
                    if r != restricted[k + 1].respond(key, w) and r != BOTTOM:
                        fails.append(("chain", seed, key, w, k))
                    if r != BOTTOM and r != full:
                        fails.append(("subset", seed, key, w, k))
        t = random_task(rng, s)
        out = Machine(s, SMALL).eval_ground(t)
        if isinstance(out, Result):
            k = support_bound(extract_support(s, t, SMALL))
            again = Machine(k_restrict(s, k), SMALL).eval_ground(t)
            agreements += 1
            if again != out:
                fails.append(("data <= k", seed, k))
    for seed in range(50):
        rng = random.Random(1000 + seed)
        k = rng.randint(0, 2)
        s = finitary_system(rng, max_value=3)
        keys = [x for x in s.names() if s.type_of(x) in (N1, N2)]
        if not keys:
            continue
        key = rng.choice(keys)
        ty = s.type_of(key)
        args = [n(rng.randint(0, 3)) for _ in range(2 if ty == N2 else 1)]
        psi = projection_strategy(ty, k)
        once = Machine(s, SMALL).eval_ground(app(psi, Strat(key, ty), *args))
        twice = Machine(s, SMALL).eval_ground(app(psi, app(psi, Strat(key, ty)), *args))
        if not once.same(twice):
            fails.append(("psi", seed))
    report(capsys, 6, f"k-chain on {entries} probed entries, {agreements} small-data runs, "
                      "psi idempotent on 50 samples", fails)


# ---------------------------------------------------------------- 7


def opponent(rng):
    r = rng.random()
    if r < 0.4:
        return library_term(rng, 2, ty=N1)
    if r < 0.8:
        return Strat(Tab(N1, random_table(rng, N1, [lib.SUCC, lib.EQ], max_value=2)), N1)
    return library_term(rng, 1, ty=N2)


def test_criterion_7_preorder(capsys):
    fails = []
    rng = random.Random(7)
    bounds = ArgBounds(rank=0, entries=2, max_value=1)
    for i in range(200):
        q = opponent(rng)
        if refute_preorder(System({}), lib.omega(q.type), q, bounds, SMALL):
            fails.append(("omega refuted", i))
    s = parse_system(load("por.strat"))
    p, q = read_term("por", s), read_term("strict_or", s)
    fwd = refute_preorder(s, p, q, bounds)
    if not isinstance(fwd, Refuted) or fwd.render() != "REFUTED: witness (Ω,1)":
        fails.append(("por/strict_or", fwd.render()))
    elif not replay_witness(s, p, q, witness_text(fwd, "por", "strict_or")):
        fails.append(("witness replay",))
    back = refute_preorder(s, q, p, ArgBounds(rank=0, entries=3, max_value=3))
    if not isinstance(back, NotRefuted):
        fails.append(("strict_or/por", back.render()))
    refuted = 0
    for i in range(50):
        a, b = opponent(rng), opponent(rng)
        if a.type != b.type:
            b = lib.omega(a.type) if rng.random() < 0.5 else a
        r = context_probe(System({}), a, b, bounds=bounds, budget=SMALL)
        refuted += bool(r.direct)
        if not r.agree:
            fails.append(("context", i))
    report(capsys, 7, f"omega below 200 opponents; por/strict_or witness replays; "
                      f"context probes agree on 50 pairs ({refuted} refuted)", fails)


# ---------------------------------------------------------------- 8


def mutated_pif():
    s = parse_system(load("pif.strat"))
    table = dict(s.table("pif"))
    for w, r in list(table.items()):
        if w[:1] == (1,) and len(w) == 3 and isinstance(r, Value):
            table[w] = Value(r.v + 1)
    return System({"pif": Strategy(s.type_of("pif"), table)}, nondeterministic=True)


def test_criterion_8_witting_consistency(capsys):
    fails = []
    pif = parse_system(load("pif.strat"))
    if not check_wittingly_consistent(pif):
        fails.append(("pif",))
    bad = mutated_pif()
    verdict = check_wittingly_consistent(bad)
    table = bad.table("pif")
    if not isinstance(verdict, Inconsistent):
        fails.append(("mutated pif accepted",))
    elif not (m_consistent(table, verdict.left, verdict.right)
              and table[verdict.left] != table[verdict.right]):
        fails.append(("invalid witness", verdict))
    if brute_force_conflict(table) is None:
        fails.append(("oracle disagrees on mutated pif",))
    for seed in range(100):
        s = random_system(random.Random(seed))
        if not check_wittingly_consistent(s):
            fails.append(("sequential", seed))
        if any(brute_force_conflict(s.table(k)) for k in s.names()):
            fails.append(("oracle sequential", seed))
    hash_runs = 0
    for seed in range(100):
        rng = random.Random(seed)
        s = random_system(rng, nondet=True)
        if not check_wittingly_consistent(s):
            continue
        hash_runs += 1
        Machine(s, SearchBudget(fuel=5_000, hash_bound=3, hash_depth=4)).eval_ground(
            random_task(rng, s))
    for x in (0, 1, None):
        for v in range(4):
            Machine(pif, CASE).eval_ground(app(Strat("pif", pif.type_of("pif")), arg(x), n(v), n(v)))
    if RUNTIME_INCONSISTENCIES:
        fails.append(("runtime inconsistency", len(RUNTIME_INCONSISTENCIES)))
    report(capsys, 8, f"pif consistent, mutation caught, 100 sequential systems consistent, "
                      f"{hash_runs} consistent hash systems run without runtime inconsistency",
           fails)


# ---------------------------------------------------------------- 9


def first_conflict(tables):
    """Index of the first entry clashing with an earlier one (pairwise scan)."""
    for i, (phi, b) in enumerate(tables):
        for psi, c in tables[:i]:
            if b != c and all(psi.get(a, v) == v for a, v in phi.items()):
                return i
    return len(tables)


def test_criterion_9_strict_universal(capsys):
    fails = []
    rng = random.Random(9)
    evaluated = 0
    for i in range(10):
        tables = consistent_tables(rng)
        alpha = [encode_strict_finite(p) for p, _ in tables]
        leaf = strict_universal(alpha, [b for _, b in tables])
        m = Machine(ND, CASE)
        for f in all_strict_finite():
            out = m.eval_ground(app(leaf, strict_finite_leaf(f)))
            evaluated += 1
            got = out.value if isinstance(out, Result) else None
            if got != brute_union(tables, f):
                fails.append(("union", i, f, got))
    for i in range(10):
        prefix = consistent_tables(rng)
        j = rng.randrange(len(prefix))
        phi, b = prefix[j]
        clash = (dict(phi), b + 1)
        tables = prefix + [clash] + consistent_tables(rng)
        alpha = [encode_strict_finite(p) for p, _ in tables]
        beta = [c for _, c in tables]
        cut = first_conflict(tables)
        if cut != len(prefix):
            fails.append(("plant", i))
        if correct(alpha, beta) != (alpha[:cut], beta[:cut]):
            fails.append(("correct", i, cut))
    hash_term = compile_term(hash_check_term())
    for i in range(30):
        c_map, f = random_strict_finite(rng), random_strict_finite(rng)
        code = n(encode_strict_finite(c_map))
        got = value(ND, app(hash_term, code, strict_finite_leaf(f)), CASE)
        if got != hash_contract(c_map, f):
            fails.append(("hash", c_map, f, got))
    if RUNTIME_INCONSISTENCIES:
        fails.append(("runtime inconsistency", len(RUNTIME_INCONSISTENCIES)))
    report(capsys, 9, f"strict universal matches brute-force union on {evaluated} functions; "
                      "correction cuts 10 planted conflicts; hash contract on 30 probes", fails)


# ---------------------------------------------------------------- 10


def test_criterion_10_universal_laws(capsys):
    fails = []
    probes = [s for k in range(3) for s in itertools.product((0, 1, 2, Bar(1), Bar(2)), repeat=k)]
    entries = 0
    for seed in range(20):
        s = random_system(random.Random(seed), nondet=seed % 2 == 0)
        for key in s.names():
            entries += len(s.table(key))
            bad = homomorphism_failures(s, key, list(s.table(key)), probes)
            fails.extend(("hom", seed, key, u) for u, _ in bad)
    rng = random.Random(10)
    strings = 0
    while strings < 100:
        s = random_system(rng, nondet=True)
        key = rng.choice(s.names())
        q = hom_to_universal(s, key)
        qq = hom_to_universal(UniversalSystem(), q)
        for w in sample_strings(q, 20, max_len=6, rng=rng):
            strings += 1
            if qq(w) != q(w):
                fails.append(("idempotence", key, w))
    checked = 0
    while checked < 100:
        s = random_system(rng)
        ranked, pi = rank_transform(s)
        key = rng.choice(s.names())
        level = rng.randint(0, 3)
        lifted, base = hom_to_universal(ranked, Ranked(key, level)), hom_to_universal(s, key)
        for w in sample_strings(base, 20, rng=rng):
            checked += 1
            if lifted(w) != base(w) or pi(Ranked(key, level)) != key:
                fails.append(("projection", key, w))
    report(capsys, 10, f"homomorphism on {entries} entries of 20 systems; idempotence on "
                       f"{strings} strings; projection invariance on {checked} probes", fails)


# ---------------------------------------------------------------- 11


def pcf_value(src, fuel):
    system, term = compile_program(src)
    return value(system, term, SearchBudget(fuel=fuel))


def test_criterion_11_pcf_programs(capsys):
    fails = []
    fact = pcf_value(load("fact5.pcf"), 1_000_000)
    if fact != math.factorial(5):
        fails.append(("fact5", fact))
    ack = pcf_value(load("ack23.pcf"), 1_000_000)
    expected = ackermann(2, 3)
    if ack != expected:
        fails.append(("ack23", ack, expected))
    rng = random.Random(11)
    defined = 0
    for i in range(20):
        f = recursive_functional(rng)
        x = str(rng.randint(0, 4))
        fixed = pcf_value(f"Y {f} {x}", 20_000)
        unfolded = pcf_value(f"{f} (Y {f}) {x}", 20_000)
        approx, term = [], "omega"
        for _ in range(8):
            approx.append(pcf_value(f"{term} {x}", 20_000))
            term = f"({f} {term})"
        known = [v for v in approx if v is not None]
        defined += fixed is not None
        if fixed != unfolded:
            fails.append(("unfold", i, fixed, unfolded))
        if any(v != fixed for v in known) or (fixed is not None and not known):
            fails.append(("approximants", i, fixed, approx))
        first = next((k for k, v in enumerate(approx) if v is not None), len(approx))
        if any(v is None for v in approx[first:]):
            fails.append(("not stable", i, approx))
    report(capsys, 11, f"fact5 = {fact}, ack(2,3) = {ack}; Y property on 20 samples "
                       f"({defined} defined)", fails)


def ackermann(m, k):
    if m == 0:
        return k + 1
    if k == 0:
        return ackermann(m - 1, 1)
    return ackermann(m - 1, ackermann(m, k - 1))
