"""Seeded random machines and input samplers.

All randomness comes from numpy's PCG64 generator seeded through
``SeedSequence``; independent streams are obtained with ``spawn`` so a run
split into chunks draws the same numbers as a sequential one.
"""

from __future__ import annotations

import numpy as np

from .machine import Kind, Move, NonuniformMachine, Transition
from .witness import UsafParams

PRNG_NAME = "numpy PCG64 (SeedSequence-seeded, spawn-split)"


def make_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    return np.random.Generator(np.random.PCG64(seed))


def child_seeds(seed, count: int) -> list:
    return np.random.SeedSequence(seed).spawn(count)


def _allowed(pos: int, n: int, working: int):
    """Every (target, move) a transition at ``pos`` may use; halting targets only at the last square."""
    moves = [Move.S]
    if pos > 0:
        moves.append(Move.L)
    if pos < n - 1:
        moves.append(Move.R)
    opts = [(s, mv) for s in range(working) for mv in moves]
    if pos == n - 1:
        opts += [(working, Move.S), (working + 1, Move.S)]
    return opts


def random_machine(kind: Kind, n: int, num_states: int, seed, max_branch: int = 3,
                   forward_bias: float = 0.0) -> NonuniformMachine:
    """A uniformly wired random machine; accept and reject are the last two states.

    Deterministic rows pick one allowed transition, nondeterministic rows a
    subset of size 0..max_branch, probabilistic rows 1..max_branch
    transitions with Dirichlet(1) weights.  With ``forward_bias`` > 0 a
    deterministic row instead picks, with that probability, a forward option
    (a right move, or a halting target at the last square); such machines
    halt far more often.
    """
    if num_states < 3:
        raise ValueError("need at least 3 states")
    rng = make_rng(seed)
    working = num_states - 2
    tables = []
    for pos in range(n):
        allowed = _allowed(pos, n, working)
        table = {}
        for s in range(working):
            for a in (0, 1):
                if kind is Kind.DET:
                    forward = [o for o in allowed if o[1] is Move.R or o[0] >= working]
                    pool = forward if forward_bias and rng.random() < forward_bias else allowed
                    picks = [pool[rng.integers(len(pool))]]
                    probs = [1.0]
                elif kind is Kind.NONDET:
                    k = int(rng.integers(0, min(max_branch, len(allowed)) + 1))
                    picks = [allowed[i] for i in rng.choice(len(allowed), size=k, replace=False)]
                    probs = [1.0] * k
                else:
                    k = int(rng.integers(1, min(max_branch, len(allowed)) + 1))
                    picks = [allowed[i] for i in rng.choice(len(allowed), size=k, replace=False)]
                    probs = rng.dirichlet(np.ones(k)).tolist()
                    probs[-1] = 1.0 - sum(probs[:-1])
                table[(s, a)] = tuple(Transition(tg, mv, p) for (tg, mv), p in zip(picks, probs))
        tables.append(table)
    return NonuniformMachine(kind, n, num_states, tuple(tables), 0, working, working + 1)


def random_usaf_inputs(params: UsafParams, count: int, seed) -> np.ndarray:
    """``count`` well-formed USAF inputs (big-endian integers) with uniform payload bits."""
    if params.n > 64:
        raise ValueError("integer encoding needs n <= 64")
    rng = make_rng(seed)
    n = params.n
    cols = rng.integers(0, 2, size=(count, n), dtype=np.uint8)
    for p in range(params.blocks):
        for m in range(params.pairs):
            cols[:, params.mark_index(p, m)] = 0 if m < params.c else 1
    weights = np.uint64(1) << np.arange(n - 1, -1, -1, dtype=np.uint64)
    return (cols.astype(np.uint64) * weights).sum(axis=1, dtype=np.uint64)


def random_inputs(n: int, count: int, seed) -> np.ndarray:
    if n > 64:
        raise ValueError("integer encoding needs n <= 64")
    rng = make_rng(seed)
    hi = rng.integers(0, 1 << 32, size=count, dtype=np.uint64)
    lo = rng.integers(0, 1 << 32, size=count, dtype=np.uint64)
    xs = (hi << np.uint64(32)) | lo
    if n < 64:
        xs &= np.uint64((1 << n) - 1)
    return xs
