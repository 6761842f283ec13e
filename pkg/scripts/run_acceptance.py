"""Run the acceptance suite and print one PASS/FAIL line per criterion.

    python scripts/run_acceptance.py [--thorough]
"""

from __future__ import annotations

import argparse
import os
import sys

import pytest

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--thorough", action="store_true",
                    help="use the larger hypothesis profile for the property tests as well")
    args = ap.parse_args()
    targets = [os.path.join(ROOT, "tests", "test_acceptance.py")]
    if args.thorough:
        os.environ["HYPOTHESIS_PROFILE"] = "thorough"
        targets = [os.path.join(ROOT, "tests")]
    return pytest.main(["-q", "-p", "no:cacheprovider", *targets])


if __name__ == "__main__":
    sys.exit(main())
