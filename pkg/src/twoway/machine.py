"""Nonuniform two-way automata and their uniform (endmarker) counterpart.

States are 0-based integers internally; the JSON format writes them 1-based.
Tape squares are 0-based internally (square 1 of the model is index 0).

A nonuniform machine for inputs of length ``n`` has one transition table per
tape square.  Each table maps ``(state, symbol)`` to a tuple of
:class:`Transition` objects: exactly one for deterministic machines, any number
(possibly zero) for nondeterministic ones, and a probability distribution for
probabilistic ones.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional, Sequence, Tuple

import numpy as np

from .bits import BitsLike, as_bits

PROB_TOL = 1e-12

LEFT_END = 2
RIGHT_END = 3
SYMBOL_NAMES = {0: "0", 1: "1", LEFT_END: "<", RIGHT_END: ">"}


class Kind(str, enum.Enum):
    DET = "det"
    NONDET = "nondet"
    PROB = "prob"


class Move(enum.IntEnum):
    L = -1
    S = 0
    R = 1


@dataclass(frozen=True)
class Transition:
    target: int
    move: Move
    prob: float = 1.0


Table = Mapping[Tuple[int, int], Tuple[Transition, ...]]


@dataclass(frozen=True)
class NonuniformMachine:
    kind: Kind
    n: int
    num_states: int
    transitions: Tuple[Table, ...]
    initial: int = 0
    accept: int = 1
    reject: int = 2
    shuffle: Optional[Tuple[int, ...]] = None
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    def is_halting(self, s: int) -> bool:
        return s == self.accept or s == self.reject

    @property
    def working_states(self) -> list:
        return [s for s in range(self.num_states) if not self.is_halting(s)]

    def step_options(self, pos: int, state: int, symbol: int) -> Tuple[Transition, ...]:
        return self.transitions[pos].get((state, symbol), ())

    def with_shuffle(self, theta: Optional[Sequence[int]]) -> "NonuniformMachine":
        return NonuniformMachine(self.kind, self.n, self.num_states, self.transitions, self.initial,
                                 self.accept, self.reject, None if theta is None else tuple(theta))

    def tape(self, w: BitsLike) -> tuple:
        """The tape contents for input ``w`` after the optional shuffle."""
        w = as_bits(w)
        if len(w) != self.n:
            raise ValueError(f"input length {len(w)} != n = {self.n}")
        return apply_shuffle(self.shuffle, w) if self.shuffle is not None else w

    def det_arrays(self):
        """(next_state, move) arrays of shape (n, d, 2) for deterministic machines.

        Missing entries and halting rows are filled with -1 / 0.
        """
        if "det" not in self._cache:
            if self.kind is not Kind.DET:
                raise TypeError("det_arrays needs a deterministic machine")
            nxt = np.full((self.n, self.num_states, 2), -1, dtype=np.int32)
            mv = np.zeros((self.n, self.num_states, 2), dtype=np.int8)
            for i, table in enumerate(self.transitions):
                for (s, a), opts in table.items():
                    if len(opts) == 1:
                        nxt[i, s, a] = opts[0].target
                        mv[i, s, a] = int(opts[0].move)
            self._cache["det"] = (nxt, mv)
        return self._cache["det"]


@dataclass(frozen=True)
class UniformMachine:
    """A 2DFA/2NFA over {0, 1, <, >}; the input is written between < and >.

    The head starts on the left endmarker (square 0).
    """

    kind: Kind
    num_states: int
    transitions: Mapping[Tuple[int, int], Tuple[Transition, ...]]
    initial: int = 0
    accept: int = 1
    reject: int = 2
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    def is_halting(self, s: int) -> bool:
        return s == self.accept or s == self.reject

    def det_arrays(self):
        if "det" not in self._cache:
            if self.kind is not Kind.DET:
                raise TypeError("det_arrays needs a deterministic machine")
            nxt = np.full((self.num_states, 4), -1, dtype=np.int32)
            mv = np.zeros((self.num_states, 4), dtype=np.int8)
            for (s, a), opts in self.transitions.items():
                if len(opts) == 1:
                    nxt[s, a] = opts[0].target
                    mv[s, a] = int(opts[0].move)
            self._cache["det"] = (nxt, mv)
        return self._cache["det"]


# ---------------------------------------------------------------------------
# shuffling


def check_permutation(theta: Sequence[int], n: Optional[int] = None) -> None:
    theta = list(theta)
    if n is not None and len(theta) != n:
        raise ValueError(f"shuffle arity: permutation of length {len(theta)} for n = {n}")
    if sorted(theta) != list(range(1, len(theta) + 1)):
        raise ValueError(f"not a permutation of 1..{len(theta)}: {theta}")


def apply_shuffle(theta: Sequence[int], w: BitsLike) -> tuple:
    """Place symbol j of ``w`` on tape square theta(j) (both 1-based)."""
    w = as_bits(w)
    if len(theta) != len(w):
        raise ValueError(f"shuffle arity: permutation of length {len(theta)} for input of length {len(w)}")
    check_permutation(theta)
    out = [0] * len(w)
    for j, sq in enumerate(theta):
        out[sq - 1] = w[j]
    return tuple(out)


def interleaving_permutation(n: int) -> tuple:
    """theta with x_i and x_{i+n/2} on adjacent squares 2i+1, 2i+2 (1-based)."""
    if n % 2:
        raise ValueError("interleaving needs even n")
    h = n // 2
    theta = [0] * n
    for i in range(h):
        theta[i] = 2 * i + 1
        theta[i + h] = 2 * i + 2
    return tuple(theta)


# ---------------------------------------------------------------------------
# validation


def _fmt(pos, state, sym) -> str:
    return f"position {pos + 1}, state {state + 1}, symbol {SYMBOL_NAMES.get(sym, sym)}"


def _check_states(m, violations) -> None:
    d = m.num_states
    for name in ("initial", "accept", "reject"):
        s = getattr(m, name)
        if not 0 <= s < d:
            violations.append(f"{name} state {s + 1} out of range 1..{d}")
    if m.accept == m.reject:
        violations.append("accept and reject states coincide")
    if m.is_halting(m.initial):
        violations.append("initial state is a halting state")


def _check_options(m, opts, where, violations) -> None:
    d = m.num_states
    if m.kind is Kind.DET and len(opts) != 1:
        violations.append(f"deterministic entry with {len(opts)} transitions at {where}")
    for tr in opts:
        if not 0 <= tr.target < d:
            violations.append(f"target state {tr.target + 1} out of range at {where}")
    if m.kind is Kind.PROB:
        if not opts:
            violations.append(f"empty probability row at {where}")
        elif any(tr.prob < 0 or tr.prob > 1 for tr in opts):
            violations.append(f"probability outside [0,1] at {where}")
        elif abs(sum(tr.prob for tr in opts) - 1.0) > PROB_TOL:
            violations.append(f"probabilities sum to {sum(tr.prob for tr in opts)!r} at {where}")


def validate_machine(m: NonuniformMachine) -> list:
    """Return a list of human-readable violations; empty iff ``m`` is well formed."""
    violations = []
    d, n = m.num_states, m.n
    if n < 1:
        violations.append(f"input length n={n} < 1")
    if d < 3:
        violations.append(f"only {d} states; need initial, accept and reject")
    _check_states(m, violations)
    if m.shuffle is not None:
        try:
            check_permutation(m.shuffle, n)
        except ValueError as exc:
            violations.append(str(exc))
    if len(m.transitions) != n:
        violations.append(f"{len(m.transitions)} transition tables for n = {n}")
        return violations
    for pos, table in enumerate(m.transitions):
        for (s, a) in table:
            if not 0 <= s < d or a not in (0, 1):
                violations.append(f"bad key {(s + 1, a)} at position {pos + 1}")
            elif m.is_halting(s) and table[(s, a)]:
                violations.append(f"halting state has outgoing transitions at {_fmt(pos, s, a)}")
        for s in m.working_states:
            for a in (0, 1):
                where = _fmt(pos, s, a)
                if (s, a) not in table:
                    if m.kind is not Kind.NONDET:
                        violations.append(f"missing transition at {where}")
                    continue
                opts = table[(s, a)]
                _check_options(m, opts, where, violations)
                for tr in opts:
                    halting = m.is_halting(tr.target)
                    if halting and pos != n - 1:
                        violations.append(f"halting state entered before rightmost square at {where}")
                    if not halting and pos == 0 and tr.move is Move.L:
                        violations.append(f"Left move at position 1 ({where})")
                    if not halting and pos == n - 1 and tr.move is Move.R:
                        violations.append(f"Right move at position n ({where})")
    return violations


def validate_uniform(m: UniformMachine) -> list:
    violations = []
    d = m.num_states
    if d < 3:
        violations.append(f"only {d} states; need initial, accept and reject")
    _check_states(m, violations)
    for (s, a), opts in m.transitions.items():
        if not 0 <= s < d or a not in SYMBOL_NAMES:
            violations.append(f"bad key {(s + 1, a)}")
        elif m.is_halting(s) and opts:
            violations.append(f"halting state has outgoing transitions (state {s + 1}, symbol {SYMBOL_NAMES[a]})")
    for s in range(d):
        if m.is_halting(s):
            continue
        for a in SYMBOL_NAMES:
            where = f"state {s + 1}, symbol {SYMBOL_NAMES[a]}"
            if (s, a) not in m.transitions:
                if m.kind is Kind.DET:
                    violations.append(f"missing transition at {where}")
                continue
            opts = m.transitions[(s, a)]
            _check_options(m, opts, where, violations)
            for tr in opts:
                halting = m.is_halting(tr.target)
                if halting and a != RIGHT_END:
                    violations.append(f"halting state entered away from the right endmarker at {where}")
                if not halting and a == LEFT_END and tr.move is Move.L:
                    violations.append(f"Left move on the left endmarker at {where}")
                if not halting and a == RIGHT_END and tr.move is Move.R:
                    violations.append(f"Right move on the right endmarker at {where}")
    return violations


# ---------------------------------------------------------------------------
# construction helpers and embeddings


def det_machine(n: int, num_states: int, table_fn, initial=0, accept=1, reject=2, shuffle=None) -> NonuniformMachine:
    """Build a deterministic machine from ``table_fn(pos, state, symbol) -> (target, Move)``."""
    tables = []
    for pos in range(n):
        table = {}
        for s in range(num_states):
            if s in (accept, reject):
                continue
            for a in (0, 1):
                tgt, mv = table_fn(pos, s, a)
                table[(s, a)] = (Transition(tgt, Move(mv)),)
        tables.append(table)
    return NonuniformMachine(Kind.DET, n, num_states, tuple(tables), initial, accept, reject,
                             None if shuffle is None else tuple(shuffle))


def as_nondeterministic(m: NonuniformMachine) -> NonuniformMachine:
    if m.kind is not Kind.DET:
        raise TypeError("expected a deterministic machine")
    return NonuniformMachine(Kind.NONDET, m.n, m.num_states, m.transitions, m.initial, m.accept, m.reject, m.shuffle)


def as_probabilistic(m: NonuniformMachine) -> NonuniformMachine:
    if m.kind is not Kind.DET:
        raise TypeError("expected a deterministic machine")
    tables = tuple({k: tuple(Transition(tr.target, tr.move, 1.0) for tr in v) for k, v in t.items()}
                   for t in m.transitions)
    return NonuniformMachine(Kind.PROB, m.n, m.num_states, tables, m.initial, m.accept, m.reject, m.shuffle)


def replace_transition(m: NonuniformMachine, pos: int, state: int, symbol: int, opts) -> NonuniformMachine:
    """Copy of ``m`` with one table entry replaced (used for fault injection)."""
    tables = list(m.transitions)
    table = dict(tables[pos])
    table[(state, symbol)] = tuple(opts)
    tables[pos] = table
    return NonuniformMachine(m.kind, m.n, m.num_states, tuple(tables), m.initial, m.accept, m.reject, m.shuffle)
