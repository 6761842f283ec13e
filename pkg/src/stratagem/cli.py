"""Command-line interface.

Exit codes: 0 success, 1 usage or input error, 2 no result (dead-end,
divergence, inconsistency, failed audit), 3 preorder refuted.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import equivalence as eq
from . import finitary as fin
from .fileformat import FormatError, format_system, parse_system, read_term
from .machine import (
    DeadEnd, FuelExhausted, Machine, Result, RuntimeInconsistency, SearchBudget,
)
from .pcf import PcfSyntaxError, PcfTypeError, compile_program
from .strategy import (
    Bottom, NotFinite, Strategy, System, UnknownStrategy, check_wittingly_consistent,
    format_reply, probe_prompts, well_formed,
)
from .terms import IllTyped, Strat, TermSyntaxError, args_of, format_term, format_type, key_label
from .universal import audit, format_string, hom_to_universal, parse_string

EXIT_OK, EXIT_USAGE, EXIT_NO_RESULT, EXIT_REFUTED = 0, 1, 2, 3
INPUT_ERRORS = (FormatError, PcfSyntaxError, PcfTypeError, TermSyntaxError, IllTyped,
                UnknownStrategy, NotFinite, OSError, fin.NotWellFounded, fin.BudgetExceeded,
                fin.DanglingReference)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def seed() -> int:
    return int(os.environ.get("STRATAGEM_SEED", "0"))


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path, encoding="utf-8") as f:
        return f.read()


def _write(text: str, path: str | None):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as f:
            f.write(text)


def _budget(args) -> SearchBudget:
    return SearchBudget(fuel=args.fuel, hash_bound=args.hash_bound, hash_depth=args.hash_depth,
                        max_runs=args.max_runs)


def _add_budget(p):
    p.add_argument("--fuel", type=int, default=100_000, help="machine steps per run")
    p.add_argument("--hash-bound", type=int, default=8, help="answers to # are drawn below this")
    p.add_argument("--hash-depth", type=int, default=16, help="max answers to # per branch")
    p.add_argument("--max-runs", type=int, default=200_000, help="max runs per search")


def _load_system(path: str) -> System:
    return parse_system(_read(path))


def _strategy_key(system, text: str):
    t = read_term(text, system)
    if not isinstance(t, Strat):
        raise TermSyntaxError(f"{text!r} is not a single strategy")
    return t.key


def describe(out) -> str:
    if isinstance(out, Result):
        return f"Result {out.value}"
    if isinstance(out, DeadEnd):
        return "dead-end"
    if isinstance(out, FuelExhausted):
        return "diverged"
    if isinstance(out, RuntimeInconsistency):
        return "runtime inconsistency: values " + " ".join(map(str, out.values))
    return out.kind


# ---------------------------------------------------------------- commands


def cmd_eval(args) -> int:
    text = _read(args.file)
    if args.file.endswith(".strat"):
        system = parse_system(text)
        term = read_term(args.term or "main", system)
    else:
        if args.term:
            raise UsageError("--term applies to strategy files only")
        system, term = compile_program(text, args.lang)
    if args_of(term.type):
        raise IllTyped(f"program has type {format_type(term.type)}, not nat")
    m = Machine(system, _budget(args))
    trace = [] if args.trace else None
    out = m.eval_ground(term, trace=trace)
    if trace is not None:
        for tag, config in trace:
            print(f"{tag:<4} {config}")
    print(describe(out))
    report = {
        "argv": args.argv,
        "outcome": out.kind,
        "value": getattr(out, "value", None) if not isinstance(out, RuntimeInconsistency) else list(out.values),
        "steps": out.steps,
        "budget": vars(_budget(args)),
        "search": {k: list(v) if isinstance(v, tuple) else v for k, v in m.last_search.items()},
        "seed": seed(),
    }
    if args.json:
        print(json.dumps(report, sort_keys=True))
    if args.report:
        _write(json.dumps(report, sort_keys=True, indent=2) + "\n", args.report)
    return EXIT_OK if isinstance(out, Result) else EXIT_NO_RESULT


def cmd_compile(args) -> int:
    system, term = compile_program(_read(args.file), args.lang)
    defined = System({args.name: Strategy(term.type, source=format_term(term))},
                     nondeterministic=system.nondeterministic)
    _write(format_system(defined, header=f"compiled from {args.file}"), args.output)
    return EXIT_OK


def cmd_apply(args) -> int:
    system = _load_system(args.system)
    term = read_term(args.term, system)
    m = Machine(system, _budget(args))
    table = {}
    for w in probe_prompts(_DerivedView(m, term), None, args.bound, args.max_len):
        r = m.derived(term, w)[0]
        if not isinstance(r, Bottom):
            table[w] = r
    out = system.with_strategies({args.name: Strategy(term.type, table)})
    _write(format_system(out, header=f"{args.name} probes [[{format_term(term)}]] "
                                     f"at values <= {args.bound}"), args.output)
    return EXIT_OK


class _DerivedView:
    """Adapter so prompt probing can query one derived strategy."""

    def __init__(self, machine, term):
        self.machine = machine
        self.term = term

    def respond(self, key, w):
        return self.machine.derived(self.term, tuple(w))[0]


def cmd_restrict(args) -> int:
    system = _load_system(args.system)
    keep = args.keep.split(",") if args.keep else system.names()
    missing = [k for k in keep if k not in system.strategies]
    if missing:
        raise UnknownStrategy(", ".join(missing))
    sub = fin.restrict(system, keep)
    if args.k is not None:
        sub = fin.materialize(fin.k_restrict(sub, args.k), sub.names(), args.k, args.max_len)
    _write(format_system(sub), args.output)
    return EXIT_OK


def cmd_tabulate(args) -> int:
    system = _load_system(args.system)
    term = read_term(args.term, system)
    tab = fin.tabulate(system, term, _budget(args), max_entries=args.max_entries)
    header = "\n".join(f"{name} tabulates [[{format_term(t)}]]" for name, t in tab.origin.items())
    _write(format_system(tab.system, header=header), args.output)
    if args.vocab_report:
        print(json.dumps({"vocabulary": tab.vocabulary, "sentinel": tab.sentinel,
                          "sentinel_failures": [[n, list(w)] for n, w in tab.sentinel_failures]}),
              file=sys.stderr)
    return EXIT_OK if not tab.sentinel_failures else EXIT_NO_RESULT


def cmd_check_wc(args) -> int:
    system = _load_system(args.system)
    for v in well_formed(system):
        print(f"warning: {v}", file=sys.stderr)
    verdict = check_wittingly_consistent(system)
    if verdict:
        print("consistent")
        return EXIT_OK
    print(f"inconsistent: {verdict}")
    return EXIT_NO_RESULT


def cmd_compare(args) -> int:
    system = _load_system(args.system)
    if args.right is None:
        if not system.names():
            raise UsageError("compare needs two terms when the file declares no strategy")
        left_text, right_text = system.names()[0], args.left
    else:
        left_text, right_text = args.left, args.right
    p, q = read_term(left_text, system), read_term(right_text, system)
    bounds = eq.ArgBounds(args.arg_rank, args.arg_entries, args.arg_max_value)
    verdict = eq.refute_preorder(system, p, q, bounds, _budget(args))
    print(verdict.render())
    if isinstance(verdict, eq.Refuted):
        if args.emit_witness:
            _write(eq.witness_text(verdict, left_text, right_text), args.emit_witness)
        return EXIT_REFUTED
    print(f"note: {verdict.note}", file=sys.stderr)
    return EXIT_OK


def cmd_universal(args) -> int:
    system = _load_system(args.system)
    key = _strategy_key(system, args.strategy)
    q = hom_to_universal(system, key)
    status = EXIT_OK
    if args.probe is not None:
        s = parse_string(args.probe)
        r = q(s)
        print(f"{format_string(s)} -> {format_reply(r)}")
    if args.audit:
        rep = audit(system, key, args.audit, seed=seed())
        print(json.dumps(rep, sort_keys=True))
        if rep["condition_failures"] or rep["idempotence_failures"] or rep["homomorphism_failures"]:
            status = EXIT_NO_RESULT
    if args.probe is None and not args.audit:
        print(f"{key_label(key)} : {format_type(q.type)}")
    return status


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="stratagem", description="Evaluate and compare systems of strategies.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("eval", help="evaluate a closed ground program")
    p.add_argument("file", help=".pcf program or .strat system ('-' for stdin)")
    p.add_argument("--lang", choices=["pcf", "pcf+"], default="pcf")
    p.add_argument("--term", help="ground term to evaluate in a .strat system (default: main)")
    p.add_argument("--trace", action="store_true", help="print one line per machine step")
    p.add_argument("--json", action="store_true", help="print the machine-readable report")
    p.add_argument("--report", help="write the machine-readable report to a file")
    _add_budget(p)
    p.set_defaults(run=cmd_eval)

    p = sub.add_parser("compile", help="compile a PCF program to a strategy file")
    p.add_argument("file")
    p.add_argument("--lang", choices=["pcf", "pcf+"], default="pcf")
    p.add_argument("--name", default="main")
    p.add_argument("-o", "--output")
    p.set_defaults(run=cmd_compile)

    p = sub.add_parser("apply", help="probe the derived strategy of a closed term")
    p.add_argument("system")
    p.add_argument("term")
    p.add_argument("--name", default="applied")
    p.add_argument("--bound", type=int, default=3, help="largest answer value probed")
    p.add_argument("--max-len", type=int, default=4, help="longest prompt probed")
    p.add_argument("-o", "--output")
    _add_budget(p)
    p.set_defaults(run=cmd_apply)

    p = sub.add_parser("restrict", help="restrict a system to names and/or values <= k")
    p.add_argument("system")
    p.add_argument("-k", type=int)
    p.add_argument("--keep", help="comma-separated names to keep")
    p.add_argument("--max-len", type=int, default=8, help="longest prompt when tabulating rules")
    p.add_argument("-o", "--output")
    p.set_defaults(run=cmd_restrict)

    p = sub.add_parser("tabulate", help="tabulate the derived strategy of a term over finitary tables")
    p.add_argument("system")
    p.add_argument("term")
    p.add_argument("--max-entries", type=int, default=100_000)
    p.add_argument("--vocab-report", action="store_true", help="print the vocabulary to stderr")
    p.add_argument("-o", "--output")
    _add_budget(p)
    p.set_defaults(run=cmd_tabulate)

    p = sub.add_parser("check-wc", help="check witting consistency of a finite system")
    p.add_argument("system")
    p.set_defaults(run=cmd_check_wc)

    p = sub.add_parser("compare", help="search for a counterexample to LEFT below RIGHT")
    p.add_argument("system")
    p.add_argument("left", help="left term, or the right one when only one is given")
    p.add_argument("right", nargs="?", help="right term (the left defaults to the first strategy)")
    p.add_argument("--arg-rank", type=int, default=0)
    p.add_argument("--arg-entries", type=int, default=2)
    p.add_argument("--arg-max-value", type=int, default=1)
    p.add_argument("--emit-witness", help="write the witness arguments as a strategy file")
    _add_budget(p)
    p.set_defaults(run=cmd_compare)

    p = sub.add_parser("universal", help="query the image of a strategy in the terminal system")
    p.add_argument("system")
    p.add_argument("strategy")
    p.add_argument("--probe", help="string such as '0 b1 3' (b<j> is a barred j)")
    p.add_argument("--audit", type=int, default=0, metavar="N", help="check the laws on N strings")
    p.set_defaults(run=cmd_universal)
    return ap


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
        args.argv = argv
        return args.run(args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except INPUT_ERRORS as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
