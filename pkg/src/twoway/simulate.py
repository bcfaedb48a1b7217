"""Exact simulators for nonuniform and uniform two-way automata."""

from __future__ import annotations

import enum
import math
from collections import deque
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .bits import BitsLike, as_bits
from .machine import LEFT_END, RIGHT_END, Kind, NonuniformMachine, UniformMachine

PROB_EQ_TOL = 1e-9


class Verdict(str, enum.Enum):
    ACCEPT = "accept"
    REJECT = "reject"
    DIVERGE = "diverge"
    UNDECIDED = "undecided"


@dataclass(frozen=True)
class RunOutcome:
    verdict: Verdict
    steps: Optional[int]
    trace: Optional[tuple] = None  # (state, square) pairs, 0-based

    @property
    def halted(self) -> bool:
        return self.verdict in (Verdict.ACCEPT, Verdict.REJECT)


@dataclass(frozen=True)
class AcceptanceProbability:
    accept: float
    reject: float
    nonhalting: float


class InconsistentChain(RuntimeError):
    pass


def _need(m, kind):
    if m.kind is not kind:
        raise TypeError(f"expected a {kind.value} machine, got {m.kind.value}")


def run_deterministic(m: NonuniformMachine, w: BitsLike, trace: bool = False) -> RunOutcome:
    """Simulate from (initial, square 1); Diverge once d*n steps pass without halting."""
    _need(m, Kind.DET)
    tape = m.tape(w)
    state, pos, steps = m.initial, 0, 0
    limit = m.num_states * m.n
    seen = [(state, pos)] if trace else None
    while steps <= limit:
        (tr,) = m.step_options(pos, state, tape[pos])
        steps += 1
        state = tr.target
        if state == m.accept or state == m.reject:
            verdict = Verdict.ACCEPT if state == m.accept else Verdict.REJECT
            if trace:
                seen.append((state, pos))
            return RunOutcome(verdict, steps, tuple(seen) if trace else None)
        pos += int(tr.move)
        if not 0 <= pos < m.n:
            raise RuntimeError(f"head left the tape at step {steps}; validate the machine first")
        if trace:
            seen.append((state, pos))
    return RunOutcome(Verdict.DIVERGE, None, tuple(seen) if trace else None)


def run_nondeterministic(m: NonuniformMachine, w: BitsLike) -> Verdict:
    """Accept iff an accepting configuration is reachable from (initial, square 1)."""
    _need(m, Kind.NONDET)
    tape = m.tape(w)
    start = (m.initial, 0)
    seen = {start}
    todo = deque([start])
    while todo:
        state, pos = todo.popleft()
        for tr in m.step_options(pos, state, tape[pos]):
            if tr.target == m.accept:
                return Verdict.ACCEPT
            if tr.target == m.reject:
                continue
            nxt = (tr.target, pos + int(tr.move))
            if 0 <= nxt[1] < m.n and nxt not in seen:
                seen.add(nxt)
                todo.append(nxt)
    return Verdict.REJECT


# ---------------------------------------------------------------------------
# probabilistic machines


def configuration_chain(m: NonuniformMachine, w: BitsLike):
    """Sub-stochastic transition data over the configurations reachable from the start.

    Returns ``(configs, Q, acc, rej)``: ``configs`` lists reachable
    non-halting configurations (``configs[0]`` is the start), ``Q[i, j]`` the
    one-step probability between them, and ``acc``/``rej`` the one-step
    probability of halting in the accept/reject state.
    """
    _need(m, Kind.PROB)
    tape = m.tape(w)
    index = {(m.initial, 0): 0}
    configs = [(m.initial, 0)]
    rows = []
    k = 0
    while k < len(configs):
        state, pos = configs[k]
        row, a, r = {}, 0.0, 0.0
        for tr in m.step_options(pos, state, tape[pos]):
            if tr.prob == 0:
                continue
            if tr.target == m.accept:
                a += tr.prob
            elif tr.target == m.reject:
                r += tr.prob
            else:
                nxt = (tr.target, pos + int(tr.move))
                if nxt not in index:
                    index[nxt] = len(configs)
                    configs.append(nxt)
                j = index[nxt]
                row[j] = row.get(j, 0.0) + tr.prob
        rows.append((row, a, r))
        k += 1
    size = len(configs)
    Q = np.zeros((size, size))
    acc = np.zeros(size)
    rej = np.zeros(size)
    for i, (row, a, r) in enumerate(rows):
        for j, p in row.items():
            Q[i, j] = p
        acc[i], rej[i] = a, r
    return configs, Q, acc, rej


def can_reach(Q: np.ndarray, exits: np.ndarray) -> np.ndarray:
    """Boolean mask of states from which some state with ``exits > 0`` is reachable."""
    size = Q.shape[0]
    ok = exits > 0
    preds = [np.nonzero(Q[:, j] > 0)[0] for j in range(size)]
    todo = deque(np.nonzero(ok)[0].tolist())
    while todo:
        j = todo.popleft()
        for i in preds[j]:
            if not ok[i]:
                ok[i] = True
                todo.append(i)
    return ok


def absorb(Q: np.ndarray, R: np.ndarray):
    """Absorption probabilities ``X`` solving ``X = Q X + R`` with zero rows for trapped states.

    ``R`` has one column per absorbing target.  States that cannot reach any
    target get probability 0 everywhere.  Returns ``(X, live)``.
    """
    R = np.atleast_2d(R.T).T if R.ndim == 1 else R
    live = can_reach(Q, R.sum(axis=1))
    X = np.zeros_like(R, dtype=float)
    if live.any():
        idx = np.nonzero(live)[0]
        A = np.eye(len(idx)) - Q[np.ix_(idx, idx)]
        try:
            sol = np.linalg.solve(A, R[idx])
        except np.linalg.LinAlgError as exc:
            raise InconsistentChain("inconsistent chain") from exc
        resid = np.abs(A @ sol - R[idx]).max() if sol.size else 0.0
        if resid > 1e-8:
            raise InconsistentChain(f"inconsistent chain (residual {resid:.3g})")
        X[idx] = sol
    return X, live


def acceptance_probability(m: NonuniformMachine, w: BitsLike) -> AcceptanceProbability:
    configs, Q, acc, rej = configuration_chain(m, w)
    X, _ = absorb(Q, np.column_stack([acc, rej]))
    a, r = float(X[0, 0]), float(X[0, 1])
    a, r = min(max(a, 0.0), 1.0), min(max(r, 0.0), 1.0)
    return AcceptanceProbability(a, r, max(0.0, 1.0 - a - r))


def expected_running_time(m: NonuniformMachine, w: BitsLike) -> float:
    """Expected number of transitions until halting; ``math.inf`` if halting is not certain."""
    configs, Q, acc, rej = configuration_chain(m, w)
    X, live = absorb(Q, np.column_stack([acc, rej]))
    if 1.0 - X[0].sum() > PROB_EQ_TOL:
        return math.inf
    # every reachable config halts almost surely here, so I - Q is invertible
    T = np.linalg.solve(np.eye(len(configs)) - Q, np.ones(len(configs)))
    return float(T[0])


def decide_probabilistic(m: NonuniformMachine, w: BitsLike, eps: float) -> Verdict:
    if not 0 < eps <= 0.5:
        raise ValueError(f"eps must lie in (0, 1/2], got {eps}")
    p = acceptance_probability(m, w)
    if p.accept >= 0.5 + eps - PROB_EQ_TOL:
        return Verdict.ACCEPT
    if p.reject >= 0.5 + eps - PROB_EQ_TOL:
        return Verdict.REJECT
    return Verdict.UNDECIDED


def monte_carlo_acceptance(m: NonuniformMachine, w: BitsLike, runs: int, seed, max_steps: int = 100_000):
    """Empirical (accept, reject, unfinished) frequencies of ``runs`` sampled executions.

    All runs advance in lock-step as numpy arrays, one random draw per run
    per step.
    """
    _need(m, Kind.PROB)
    tape = m.tape(w)
    rng = np.random.default_rng(seed)
    d, n = m.num_states, m.n
    width = max((len(m.step_options(p, s, tape[p])) for p in range(n) for s in range(d)), default=0)
    cum = np.ones((n, d, max(width, 1)))
    tgt = np.zeros((n, d, max(width, 1)), dtype=np.int64)
    mov = np.zeros((n, d, max(width, 1)), dtype=np.int64)
    for p in range(n):
        for s in m.working_states:
            opts = m.step_options(p, s, tape[p])
            acc = 0.0
            for k, tr in enumerate(opts):
                acc += tr.prob
                cum[p, s, k] = acc
                tgt[p, s, k] = tr.target
                mov[p, s, k] = int(tr.move)
            cum[p, s, len(opts) - 1:] = np.inf  # guards against rounding in the last bucket
            tgt[p, s, len(opts):] = tgt[p, s, len(opts) - 1]
            mov[p, s, len(opts):] = mov[p, s, len(opts) - 1]
    state = np.full(runs, m.initial, dtype=np.int64)
    pos = np.zeros(runs, dtype=np.int64)
    active = np.ones(runs, dtype=bool)
    for _ in range(max_steps):
        idx = np.nonzero(active)[0]
        if idx.size == 0:
            break
        u = rng.random(idx.size)
        c = cum[pos[idx], state[idx]]
        k = (u[:, None] >= c).sum(axis=1)
        ns = tgt[pos[idx], state[idx], k]
        pos[idx] += np.where((ns == m.accept) | (ns == m.reject), 0, mov[pos[idx], state[idx], k])
        state[idx] = ns
        active[idx] = (ns != m.accept) & (ns != m.reject)
    a = np.count_nonzero(state == m.accept) / runs
    r = np.count_nonzero(state == m.reject) / runs
    return a, r, 1.0 - a - r


# ---------------------------------------------------------------------------
# uniform machines


def uniform_tape(w: BitsLike) -> tuple:
    return (LEFT_END,) + as_bits(w) + (RIGHT_END,)


def run_uniform_2dfa(m: UniformMachine, w: BitsLike, trace: bool = False) -> RunOutcome:
    """Simulate on the tape <w> starting at the left endmarker."""
    _need(m, Kind.DET)
    tape = uniform_tape(w)
    state, pos, steps = m.initial, 0, 0
    limit = m.num_states * len(tape)
    seen = [(state, pos)] if trace else None
    while steps <= limit:
        (tr,) = m.transitions[(state, tape[pos])]
        steps += 1
        state = tr.target
        if m.is_halting(state):
            if trace:
                seen.append((state, pos))
            verdict = Verdict.ACCEPT if state == m.accept else Verdict.REJECT
            return RunOutcome(verdict, steps, tuple(seen) if trace else None)
        pos += int(tr.move)
        if not 0 <= pos < len(tape):
            raise RuntimeError(f"head left the tape at step {steps}; validate the machine first")
        if trace:
            seen.append((state, pos))
    return RunOutcome(Verdict.DIVERGE, None, tuple(seen) if trace else None)


def run_uniform_2nfa(m: UniformMachine, w: BitsLike) -> Verdict:
    _need(m, Kind.NONDET)
    tape = uniform_tape(w)
    start = (m.initial, 0)
    seen = {start}
    todo = deque([start])
    while todo:
        state, pos = todo.popleft()
        for tr in m.transitions.get((state, tape[pos]), ()):
            if tr.target == m.accept:
                return Verdict.ACCEPT
            if tr.target == m.reject:
                continue
            nxt = (tr.target, pos + int(tr.move))
            if 0 <= nxt[1] < len(tape) and nxt not in seen:
                seen.add(nxt)
                todo.append(nxt)
    return Verdict.REJECT


def simulate(m, w: BitsLike):
    """Dispatch on the machine type; returns a RunOutcome, Verdict or AcceptanceProbability."""
    if isinstance(m, UniformMachine):
        return run_uniform_2dfa(m, w) if m.kind is Kind.DET else run_uniform_2nfa(m, w)
    if m.kind is Kind.DET:
        return run_deterministic(m, w)
    if m.kind is Kind.NONDET:
        return run_nondeterministic(m, w)
    return acceptance_probability(m, w)
