"""Machine cost profile: steps for the recursive PCF programs and the cost of
hash search as the answer bound grows.

    python scripts/profile_costs.py [--hash-bounds 1 2 4 8] [--csv out.csv]
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
import time
from dataclasses import asdict, dataclass, field

from stratagem.machine import Machine, Result, SearchBudget
from stratagem.pcf import (
    compile_program, compile_term, encode_strict_finite, strict_finite_leaf, strict_universal_term,
)
from stratagem.strategy import System
from stratagem.terms import app

PROGRAMS = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "programs")


@dataclass
class ProfileConfig:
    programs: list = field(default_factory=lambda: ["fact3.pcf", "fact5.pcf", "ack23.pcf"])
    fuel: int = 1_000_000
    hash_bounds: list = field(default_factory=lambda: [1, 2, 4, 8])
    hash_program: str = "pif_bottom.pcf"
    # the strict-universal term branches on every # answer; larger bounds take minutes
    universal_max_bound: int = 4


@dataclass
class Row:
    workload: str
    hash_bound: int
    outcome: str
    steps: int
    branches: int
    seconds: float


def measure(name, system, term, budget) -> Row:
    m = Machine(system, budget)
    t0 = time.perf_counter()
    out = m.eval_ground(term)
    dt = time.perf_counter() - t0
    desc = f"Result {out.value}" if isinstance(out, Result) else out.kind
    return Row(name, budget.hash_bound, desc, m.last_search.get("steps", out.steps),
               m.last_search.get("branches", 1), round(dt, 4))


def strict_universal_workload():
    tables = [({0: 1}, 4), ({0: 2, 1: 2}, 6)]
    alpha = [encode_strict_finite(p) for p, _ in tables]
    term = compile_term(strict_universal_term(alpha, [b for _, b in tables]))
    return app(term, strict_finite_leaf({0: 2, 1: 2}))


def run(cfg: ProfileConfig) -> list:
    rows = []
    for name in cfg.programs:
        with open(os.path.join(PROGRAMS, name)) as f:
            system, term = compile_program(f.read())
        rows.append(measure(name, system, term, SearchBudget(fuel=cfg.fuel)))
    with open(os.path.join(PROGRAMS, cfg.hash_program)) as f:
        system, term = compile_program(f.read(), "pcf+")
    nd = System({}, nondeterministic=True)
    universal = strict_universal_workload()
    for hb in cfg.hash_bounds:
        budget = SearchBudget(fuel=cfg.fuel, hash_bound=hb)
        rows.append(measure(cfg.hash_program, system, term, budget))
        if hb <= cfg.universal_max_bound:
            rows.append(measure("strict-universal term", nd, universal,
                                SearchBudget(fuel=20_000, hash_bound=hb)))
    return rows


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--hash-bounds", type=int, nargs="+")
    ap.add_argument("--fuel", type=int)
    ap.add_argument("--csv", help="also write the rows as CSV")
    args = ap.parse_args()
    cfg = ProfileConfig()
    if args.hash_bounds:
        cfg.hash_bounds = args.hash_bounds
    if args.fuel:
        cfg.fuel = args.fuel
    rows = run(cfg)
    cols = list(asdict(rows[0]))
    print("  ".join(f"{c:>22}" for c in cols))
    for r in rows:
        print("  ".join(f"{v!s:>22}" for v in asdict(r).values()))
    if args.csv:
        with open(args.csv, "w", newline="") as f:
            w = csv.DictWriter(f, fieldnames=cols)
            w.writeheader()
            w.writerows(asdict(r) for r in rows)
    return 0


if __name__ == "__main__":
    sys.exit(main())
