"""Command-line entry point (``twoway`` / ``python -m twoway``)."""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

from . import serialize
from .bits import as_bits, bits_to_str
from .constructions import build_eq_shuffled, build_saf_2da, build_usaf_2dfa
from .harness import EXHAUSTIVE_LIMIT, VerificationPlan, format_table, json_lines, report_tables, verify
from .machine import Kind, UniformMachine, validate_machine, validate_uniform
from .markov import (absorption_probability, chain_from_rows, crossing_matrices, expected_absorption_time,
                     verify_crossing_identity)
from .measures import (ResourceGuard, SubfunctionPartition, check_order, count_subfunctions, hierarchy_report,
                       identity_order, interleaving_order, min_size_lower_bound, n_min_exhaustive,
                       n_min_heuristic, sampled_subfunction_lower_bound, size_bound, subfunction_profile)
from .simulate import (acceptance_probability, decide_probabilistic, expected_running_time, run_deterministic,
                       run_nondeterministic, run_uniform_2dfa, run_uniform_2nfa)
from .witness import ParameterError, parse_oracle


def _range(text: str) -> list:
    """``a..b`` (inclusive) or a comma list."""
    if ".." in text:
        a, b = text.split("..")
        return list(range(int(a), int(b) + 1))
    return [int(x) for x in text.split(",")]


def _number(text: str):
    """Exact rational for things like 1/5 or 0.2."""
    return Fraction(text)


def _emit(text: str) -> None:
    sys.stdout.write(text.rstrip("\n") + "\n")


def _write_machine(m, path) -> None:
    if path:
        serialize.save(m, path)


def _construction(args, m, report, extra=None) -> int:
    _write_machine(m, args.output)
    row = {"states": report.actual_states, "bound": report.declared_state_bound,
           "within_bound": report.within_bound}
    row.update(extra or {})
    row["phases"] = "; ".join(f"{name}={k}" for name, k in report.phase_state_accounting)
    _emit(report_tables([row]))
    for note in report.notes:
        _emit(f"note: {note}")
    if args.output:
        _emit(f"machine written to {args.output}")
    return 0 if report.within_bound else 1


def cmd_build_saf(args) -> int:
    m, report = build_saf_2da(args.t, args.n)
    return _construction(args, m, report, {"t": args.t, "n": args.n})


def cmd_build_usaf(args) -> int:
    m, report = build_usaf_2dfa(args.t)
    return _construction(args, m, report, {"t": args.t})


def cmd_build_eq(args) -> int:
    theta, m, report = build_eq_shuffled(args.n)
    return _construction(args, m, report, {"n": args.n, "shuffle": ",".join(map(str, theta))})


def cmd_simulate(args) -> int:
    m = serialize.load(args.machine)
    w = as_bits(args.input)
    problems = validate_uniform(m) if isinstance(m, UniformMachine) else validate_machine(m)
    for p in problems:
        _emit(f"warning: {p}")
    row = {"input": bits_to_str(w)}
    if isinstance(m, UniformMachine):
        if m.kind is Kind.DET:
            out = run_uniform_2dfa(m, w, trace=args.trace)
            row.update(verdict=out.verdict.value, steps=out.steps)
        else:
            row.update(verdict=run_uniform_2nfa(m, w).value)
    elif m.kind is Kind.DET:
        out = run_deterministic(m, w, trace=args.trace)
        row.update(verdict=out.verdict.value, steps=out.steps)
    elif m.kind is Kind.NONDET:
        row.update(verdict=run_nondeterministic(m, w).value)
    else:
        p = acceptance_probability(m, w)
        row.update(accept=p.accept, reject=p.reject, nonhalting=p.nonhalting,
                   expected_time=expected_running_time(m, w),
                   verdict=decide_probabilistic(m, w, float(args.eps)).value)
    _emit(report_tables([row]))
    if args.trace and m.kind is Kind.DET:
        _emit(format_table([{"step": k, "state": s + 1, "square": pos + (0 if isinstance(m, UniformMachine) else 1)}
                            for k, (s, pos) in enumerate(out.trace)]))
    return 0


def cmd_verify(args) -> int:
    machine = serialize.load(args.machine) if args.machine else None
    plan = VerificationPlan(oracle=args.oracle, builder=args.builder, machine=machine, n=args.n,
                            exhaustive=args.exhaustive, samples=args.samples or 0, seed=args.seed, jobs=args.jobs)
    rep = verify(plan)
    header = {"prng": rep.prng}
    d = rep.as_dict()
    row = {k: d[k] for k in ("mode", "domain", "checked", "mismatch_count", "diverge_count", "max_steps", "states",
                             "declared_bound", "passed")}
    _emit(f"# prng: {header['prng']}")
    table = format_table([dict(row, wall_clock_s=rep.wall_clock)])
    _emit(table)
    if rep.counterexamples:
        _emit("")
        _emit(format_table([{"input": a, "minimized": b} for a, b in rep.counterexamples]))
    for note in rep.notes:
        _emit(f"note: {note}")
    _emit("")
    _emit(json_lines([d]))
    return 0 if rep.passed else 1


def _order_from(arg: str, f):
    n = f.n
    if arg == "id":
        return identity_order(n), "id"
    if arg == "interleave":
        return interleaving_order(n), "interleave"
    if arg.startswith("perm:"):
        order = [int(x) - 1 for x in arg[5:].split(",")]
        return check_order(order, n), arg
    if arg == "search:exhaustive":
        value, order = n_min_exhaustive(f)
        return order, f"exhaustive (N(f) = {value})"
    if arg == "search:heuristic":
        value, order = n_min_heuristic(f, budget=200, seed=0)
        return order, f"heuristic (N(f) <= {value})"
    raise ParameterError(f"bad --order {arg!r}")


def cmd_measure(args) -> int:
    f = parse_oracle(args.oracle, args.n)
    order, label = _order_from(args.order, f)
    splits = list(range(1, f.n)) if args.split == "all" else [int(args.split)]
    rows = []
    if args.sampled:
        p, q = (int(x) for x in args.sampled.split(","))
        for i in splits:
            lb = sampled_subfunction_lower_bound(f, SubfunctionPartition(order, i), p, q, args.seed)
            rows.append({"oracle": args.oracle, "n": f.n, "order": label, "split": i, "sampled_lower_bound": lb,
                         "prefixes": p, "probes": q, "seed": args.seed})
    else:
        if args.split == "all":
            prof = subfunction_profile(f, order)
            counts = prof.per_split
        else:
            counts = [count_subfunctions(f, SubfunctionPartition(order, splits[0]))]
        for i, c in zip(splits, counts):
            rows.append({"oracle": args.oracle, "n": f.n, "order": label, "split": i, "N_i": c})
        if args.split == "all":
            rows.append({"oracle": args.oracle, "n": f.n, "order": label, "split": "max", "N_i": max(counts, default=1)})
    _emit(report_tables(rows))
    return 0


def cmd_bounds(args) -> int:
    rows = []
    T = int(args.T) if args.T is not None else None
    eps = _number(args.eps) if args.eps is not None else None
    for d in _range(args.d):
        row = {"model": args.model, "d": d}
        if args.model == "prob":
            row.update(T=T, eps=str(eps))
        row["bound"] = size_bound(args.model, d, T, eps)
        rows.append(row)
    _emit(report_tables(rows))
    if args.min_size is not None:
        _emit("")
        _emit(report_tables([{"model": args.model, "N": args.min_size,
                              "min_size": min_size_lower_bound(args.min_size, args.model, T, eps)}]))
    return 0


def cmd_hierarchy(args) -> int:
    rows = [r.as_dict() for r in hierarchy_report(_range(args.d_grid), args.n, args.T)]
    _emit(report_tables(rows))
    return 0


def cmd_markov(args) -> int:
    m = serialize.load(args.machine)
    w = as_bits(args.input)
    cm = crossing_matrices(m, w, args.split)
    _emit(f"# crossing matrix, d={cm.d}, u={cm.u}, size {cm.size}")
    _emit(format_table([{"row": f"b_{i}", **{f"b_{j}": float(cm.M[i, j]) for j in range(cm.size)}}
                        for i in range(cm.size)]))
    if args.verify_crossing:
        rep = verify_crossing_identity(m, w, args.split, tol=args.tol, eps=float(args.eps) if args.eps else None)
        _emit("")
        _emit(report_tables([rep.as_dict()]))
        return 0 if rep.agree else 1
    return 0


def cmd_chain(args) -> int:
    rows = json.loads(Path(args.file).read_text())
    chain = chain_from_rows(rows)
    out = {"m": chain.m, "a": absorption_probability(chain)}
    if args.analyze:
        out["T"] = expected_absorption_time(chain)
    _emit(report_tables([out]))
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="twoway", description="Nonuniform two-way automata workbench")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-saf", help="deterministic machine for 2-SAF_t")
    p.add_argument("--t", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_build_saf)

    p = sub.add_parser("build-usaf", help="uniform 2DFA for 2-USAF_t")
    p.add_argument("--t", type=int, required=True)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_build_usaf)

    p = sub.add_parser("build-eq", help="shuffled machine for EQ")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_build_eq)

    p = sub.add_parser("simulate", help="run a machine file on one input")
    p.add_argument("--machine", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--trace", action="store_true")
    p.add_argument("--eps", default="0.2", help="decision margin for probabilistic machines")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="cross-check a machine against an oracle")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--machine")
    src.add_argument("--builder", help="saf:t=T,n=N | usaf:t=T | eq:n=N")
    p.add_argument("--oracle", required=True, help="saf:t=T | usaf:t=T | eq | table:PATH")
    p.add_argument("--n", type=int, help="input length (required for uniform machines)")
    mode = p.add_mutually_exclusive_group(required=True)
    mode.add_argument("--exhaustive", action="store_true", help=f"all 2^n inputs (n <= {EXHAUSTIVE_LIMIT})")
    mode.add_argument("--samples", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1, help="kernel threads; 0 uses every core")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("measure", help="subfunction counts")
    p.add_argument("--oracle", required=True)
    p.add_argument("--n", type=int)
    p.add_argument("--order", default="id", help="id | interleave | perm:<csv, 1-based> | search:exhaustive | "
                                                 "search:heuristic")
    p.add_argument("--split", default="all")
    p.add_argument("--sampled", help="P,Q: number of prefixes and probes")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_measure)

    p = sub.add_parser("bounds", help="size bound formulas")
    p.add_argument("--model", choices=["det", "nondet", "prob"], required=True)
    p.add_argument("--d", required=True, help="D or a..b")
    p.add_argument("--T")
    p.add_argument("--eps")
    p.add_argument("--min-size", type=int, help="also report the smallest d whose bound reaches this N")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("hierarchy", help="evaluate hierarchy guards")
    p.add_argument("--d-grid", required=True, help="a..b or a comma list")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--T", type=int, default=256)
    p.set_defaults(func=cmd_hierarchy)

    p = sub.add_parser("markov", help="crossing matrices of a probabilistic machine")
    p.add_argument("--machine", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--split", type=int, required=True)
    p.add_argument("--verify-crossing", action="store_true")
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--eps")
    p.set_defaults(func=cmd_markov)

    p = sub.add_parser("chain", help="absorption analysis of a stochastic matrix file")
    p.add_argument("--file", required=True)
    p.add_argument("--analyze", action="store_true")
    p.set_defaults(func=cmd_chain)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ParameterError, ResourceGuard, serialize.FormatError, ValueError, TypeError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
