"""Refutation rate of the bounded preorder check as the argument bounds grow.

Draws random pairs of closed nat->nat library terms and counts, for each
(entries, max_value) bound, how many pairs get a counterexample.  The counts
can only grow with the bounds, since each enumeration contains the smaller
one.

    python scripts/preorder_bounds.py [--pairs 100] [--seed 0]
"""

from __future__ import annotations

import argparse
import os
import random
import sys
from dataclasses import dataclass, field

sys.path.insert(0, os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "tests"))

from generators import N1, library_term  # noqa: E402
from stratagem.equivalence import ArgBounds, refute_preorder, strategies_of  # noqa: E402
from stratagem.machine import Machine, SearchBudget  # noqa: E402
from stratagem.strategy import System  # noqa: E402


@dataclass
class BoundsConfig:
    pairs: int = 100
    seed: int = 0
    depth: int = 2
    fuel: int = 20_000
    grid: list = field(default_factory=lambda: [(1, 1), (2, 1), (2, 2), (3, 2), (3, 3)])


def run(cfg: BoundsConfig) -> list:
    rng = random.Random(cfg.seed)
    pairs = [(library_term(rng, cfg.depth, ty=N1), library_term(rng, cfg.depth, ty=N1))
             for _ in range(cfg.pairs)]
    m = Machine(System({}), SearchBudget(fuel=cfg.fuel))
    rows = []
    for entries, max_value in cfg.grid:
        bounds = ArgBounds(rank=0, entries=entries, max_value=max_value)
        refuted = sum(bool(refute_preorder(None, p, q, bounds, machine=m)) for p, q in pairs)
        rows.append((entries, max_value, len(strategies_of(N1, 0, entries, max_value)), refuted))
    return rows


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--pairs", type=int, default=BoundsConfig.pairs)
    ap.add_argument("--seed", type=int, default=BoundsConfig.seed)
    args = ap.parse_args()
    cfg = BoundsConfig(pairs=args.pairs, seed=args.seed)
    print(f"{'entries':>8} {'values<=':>9} {'arguments':>10} {'refuted':>8} / {cfg.pairs}")
    for entries, max_value, size, refuted in run(cfg):
        print(f"{entries:>8} {max_value:>9} {size:>10} {refuted:>8}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
