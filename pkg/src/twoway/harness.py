"""Oracle cross-checks of machines and report formatting."""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import fast
from .bits import bits_to_str, int_to_bits
from .constructions import build_eq_shuffled, build_saf_2da, build_usaf_2dfa
from .generators import PRNG_NAME, child_seeds, random_inputs, random_usaf_inputs
from .machine import Kind, NonuniformMachine, UniformMachine
from .simulate import Verdict, decide_probabilistic, simulate
from .witness import ParameterError, UsafOracle, parse_oracle, usaf_params

EXHAUSTIVE_LIMIT = 26
CHUNK = 1 << 22
MAX_COUNTEREXAMPLES = 100


def parse_builder(spec: str):
    """``saf:t=T,n=N`` | ``usaf:t=T`` | ``eq:n=N`` -> (name, params)."""
    name, _, rest = spec.partition(":")
    params = {}
    for item in filter(None, rest.split(",")):
        key, _, val = item.partition("=")
        if not val.isdigit():
            raise ParameterError(f"bad builder parameter {item!r} in {spec!r}")
        params[key.strip()] = int(val)
    need = {"saf": {"t", "n"}, "usaf": {"t"}, "eq": {"n"}}
    if name not in need:
        raise ParameterError(f"unknown builder {name!r} (expected saf, usaf or eq)")
    if set(params) != need[name]:
        raise ParameterError(f"builder {name} takes parameters {sorted(need[name])}, got {sorted(params)}")
    return name, params


def build(spec: str):
    """Run a builder; returns (machine, report)."""
    name, p = parse_builder(spec)
    if name == "saf":
        return build_saf_2da(p["t"], p["n"])
    if name == "usaf":
        return build_usaf_2dfa(p["t"])
    _, m, report = build_eq_shuffled(p["n"])
    return m, report


@dataclass
class VerificationPlan:
    oracle: str
    builder: Optional[str] = None
    machine: object = None  # a machine object used instead of a builder
    n: Optional[int] = None
    exhaustive: bool = False
    samples: int = 0
    seed: int = 0
    jobs: int = 1
    eps: float = 0.2  # decision threshold for probabilistic machines


@dataclass
class VerificationReport:
    checked: int
    mismatch_count: int
    counterexamples: list  # (input, minimized input) bit strings
    diverge_count: int
    max_steps: Optional[int]
    wall_clock: float
    states: int
    declared_bound: Optional[int]
    mode: str
    domain: str
    prng: str = PRNG_NAME
    seed: Optional[int] = None
    notes: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.mismatch_count == 0 and self.diverge_count == 0

    def as_dict(self) -> dict:
        out = {k: v for k, v in self.__dict__.items() if k != "wall_clock"}
        out["passed"] = self.passed
        return out


def _verdict_codes(m, xs: np.ndarray, n: int, eps: float):
    """(verdicts, steps) for a batch; 0 reject, 1 accept, 2 diverge or undecided."""
    if m.kind is Kind.DET:
        return fast.run_batch(m, xs, n if isinstance(m, UniformMachine) else None)
    verdicts = np.empty(len(xs), dtype=np.int8)
    steps = np.full(len(xs), -1, dtype=np.int64)
    for k, x in enumerate(xs.tolist()):
        w = int_to_bits(int(x), n)
        if m.kind is Kind.PROB:
            v = decide_probabilistic(m, w, eps)
        else:
            v = simulate(m, w)
        verdicts[k] = {Verdict.ACCEPT: 1, Verdict.REJECT: 0}.get(v, 2)
    return verdicts, steps


def _minimize(m, oracle, x: int, n: int, in_domain, eps: float) -> int:
    """Greedily clear 1-bits (most significant first) while the input stays a counterexample."""
    def bad(y):
        arr = np.array([y], dtype=np.uint64)
        v, _ = _verdict_codes(m, arr, n, eps)
        return int(v[0]) != int(oracle.batch(arr)[0])

    for k in range(n - 1, -1, -1):
        if x >> k & 1:
            y = x & ~(1 << k)
            if in_domain(y) and bad(y):
                x = y
    return x


def verify(plan: VerificationPlan) -> VerificationReport:
    """Compare machine and oracle verdicts on every input in scope.

    Inputs are processed in fixed chunks whose random streams come from
    ``SeedSequence.spawn``, so results do not depend on ``jobs``.
    """
    started = time.perf_counter()
    declared = None
    notes = []
    if plan.machine is not None:
        m = plan.machine
    elif plan.builder:
        m, rep = build(plan.builder)
        declared = rep.declared_state_bound
        notes += rep.notes
    else:
        raise ParameterError("plan needs a builder or a machine")
    n = plan.n if plan.n is not None else getattr(m, "n", None)
    if n is None:
        raise ParameterError("uniform machines need an input length n")
    if isinstance(m, NonuniformMachine) and m.n != n:
        raise ParameterError(f"machine has n={m.n} but the plan asks for n={n}")
    oracle = parse_oracle(plan.oracle, n)
    wellformed = isinstance(oracle, UsafOracle)
    if wellformed:
        params = usaf_params(n, oracle.params.t)
        in_domain = lambda y: bool(oracle.wellformed_batch(np.array([y], dtype=np.uint64))[0])  # noqa: E731
        if n % (2 * params.t):
            notes.append("n is not a multiple of 2t; the uniform construction is only claimed for 2t | n")
    else:
        in_domain = lambda y: True  # noqa: E731
    fast.set_threads(plan.jobs)

    if plan.exhaustive:
        if n > EXHAUSTIVE_LIMIT:
            raise ParameterError(f"exhaustive mode needs 2^n <= 2^{EXHAUSTIVE_LIMIT} (n = {n})")
        if wellformed:
            raise ParameterError("exhaustive mode is not available for the well-formed USAF domain")
        total = 1 << n
        chunks = [(lo, min(lo + CHUNK, total)) for lo in range(0, total, CHUNK)]
        mode = "exhaustive"
    else:
        if plan.samples <= 0:
            raise ParameterError("sample mode needs --samples > 0")
        total = plan.samples
        chunks = [(lo, min(lo + CHUNK, total)) for lo in range(0, total, CHUNK)]
        seeds = child_seeds(plan.seed, len(chunks))
        mode = f"sample({plan.samples}, seed={plan.seed})"

    mismatches, mismatch_count, diverges, max_steps = [], 0, 0, -1
    for k, (lo, hi) in enumerate(chunks):
        if plan.exhaustive:
            xs = np.arange(lo, hi, dtype=np.uint64)
        elif wellformed:
            xs = random_usaf_inputs(params, hi - lo, seeds[k])
        else:
            xs = random_inputs(n, hi - lo, seeds[k])
        verdicts, steps = _verdict_codes(m, xs, n, plan.eps)
        want = oracle.batch(xs)
        bad = verdicts.astype(np.int16) != want.astype(np.int16)
        diverges += int(np.count_nonzero(verdicts == 2))
        mismatch_count += int(np.count_nonzero(bad & (verdicts != 2)))
        if steps.size:
            max_steps = max(max_steps, int(steps.max()))
        if bad.any():
            mismatches.extend(int(x) for x in xs[bad].tolist())
            mismatches = sorted(set(mismatches))[:MAX_COUNTEREXAMPLES]
    examples = []
    for x in mismatches:
        y = _minimize(m, oracle, x, n, in_domain, plan.eps)
        examples.append((bits_to_str(int_to_bits(x, n)), bits_to_str(int_to_bits(y, n))))
    return VerificationReport(
        checked=total,
        mismatch_count=mismatch_count,
        counterexamples=examples,
        diverge_count=diverges,
        max_steps=max_steps if max_steps >= 0 else None,
        wall_clock=time.perf_counter() - started,
        states=m.num_states,
        declared_bound=declared,
        mode=mode,
        domain="usaf well-formed" if wellformed else "all inputs",
        seed=None if plan.exhaustive else plan.seed,
        notes=notes,
    )


# ---------------------------------------------------------------------------
# output


def fmt_value(v) -> str:
    if isinstance(v, bool) or v is None:
        return str(v).lower() if isinstance(v, bool) else "-"
    if isinstance(v, float):
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".12g")
    return str(v)


def _json_ready(v):
    if isinstance(v, float):
        if math.isinf(v) or math.isnan(v):
            return str(v)
        return float(format(v, ".12g"))
    if isinstance(v, (list, tuple)):
        return [_json_ready(x) for x in v]
    if isinstance(v, dict):
        return {k: _json_ready(x) for k, x in v.items()}
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return _json_ready(float(v))
    if isinstance(v, int) and v.bit_length() > 53:
        return str(v)  # big integers stay exact
    return v


def format_table(rows: list, columns: Optional[list] = None) -> str:
    """Aligned text table; an empty ``rows`` gives only the header."""
    if columns is None:
        columns = list(rows[0].keys()) if rows else []
    cells = [[fmt_value(r.get(c)) for c in columns] for r in rows]
    widths = [max([len(c)] + [len(row[k]) for row in cells]) for k, c in enumerate(columns)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(columns, widths)).rstrip()]
    lines.append("  ".join("-" * w for w in widths))
    for row in cells:
        lines.append("  ".join(v.ljust(w) for v, w in zip(row, widths)).rstrip())
    return "\n".join(lines)


def json_lines(records: list) -> str:
    return "\n".join(json.dumps(_json_ready(r), sort_keys=False) for r in records)


def report_tables(results: list, columns: Optional[list] = None, extra: Optional[dict] = None) -> str:
    """Table followed by one JSON object per row.

    ``extra`` holds table-only columns (such as wall-clock time) that must not
    reach the JSON lines, which stay byte-identical across runs.
    """
    rows = results
    if extra:
        rows = [dict(r, **extra.get(i, {})) for i, r in enumerate(results)]
        if columns is not None:
            columns = columns + [c for c in next(iter(extra.values()), {}) if c not in columns]
    text = format_table(rows, columns)
    if results:
        text += "\n\n" + json_lines(results)
    return text
