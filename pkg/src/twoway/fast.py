"""Compiled batch simulators for deterministic machines.

Verdict codes: 0 reject, 1 accept, 2 diverge.  Inputs are big-endian
integers (see :mod:`twoway.bits`).  The kernels mirror
:func:`twoway.simulate.run_deterministic` and
:func:`twoway.simulate.run_uniform_2dfa` step for step; the test-suite checks
them against each other.
"""

from __future__ import annotations

import numba
import numpy as np
from numba import njit, prange

from .machine import Kind, NonuniformMachine, UniformMachine

# the TBB shipped here is too old for numba; the portable pool avoids a warning
numba.config.THREADING_LAYER = "workqueue"

REJECT, ACCEPT, DIVERGE = 0, 1, 2


@njit(parallel=True, cache=True)
def _det_kernel(nxt, mv, initial, accept, reject, shifts, xs, limit, verdicts, steps):
    for k in prange(xs.shape[0]):
        x = xs[k]
        state = initial
        pos = 0
        count = 0
        verdicts[k] = DIVERGE
        steps[k] = -1
        while count <= limit:
            sym = (x >> shifts[pos]) & np.uint64(1)
            ns = nxt[pos, state, sym]
            count += 1
            if ns == accept or ns == reject:
                verdicts[k] = ACCEPT if ns == accept else REJECT
                steps[k] = count
                break
            pos += mv[pos, state, sym]
            state = ns


@njit(parallel=True, cache=True)
def _uniform_kernel(nxt, mv, initial, accept, reject, n, xs, limit, verdicts, steps):
    for k in prange(xs.shape[0]):
        x = xs[k]
        state = initial
        pos = 0
        count = 0
        verdicts[k] = DIVERGE
        steps[k] = -1
        while count <= limit:
            if pos == 0:
                sym = 2
            elif pos == n + 1:
                sym = 3
            else:
                sym = np.int64((x >> np.uint64(n - pos)) & np.uint64(1))
            ns = nxt[state, sym]
            count += 1
            if ns == accept or ns == reject:
                verdicts[k] = ACCEPT if ns == accept else REJECT
                steps[k] = count
                break
            pos += mv[state, sym]
            state = ns


def _tape_shifts(m: NonuniformMachine) -> np.ndarray:
    """Bit shift that extracts the symbol on each tape square (after shuffling)."""
    n = m.n
    source = list(range(n))
    if m.shuffle is not None:
        for j, sq in enumerate(m.shuffle):
            source[sq - 1] = j
    return np.array([n - 1 - source[pos] for pos in range(n)], dtype=np.uint64)


def run_batch(m, xs, n: int = None):
    """Run a deterministic machine on many inputs; returns ``(verdicts, steps)`` arrays.

    ``n`` is required for uniform machines.
    """
    xs = np.ascontiguousarray(xs, dtype=np.uint64)
    verdicts = np.empty(xs.shape[0], dtype=np.int8)
    steps = np.empty(xs.shape[0], dtype=np.int64)
    if m.kind is not Kind.DET:
        raise TypeError("batch simulation supports deterministic machines only")
    if isinstance(m, UniformMachine):
        if n is None or not 1 <= n <= 64:
            raise ValueError("uniform batch runs need 1 <= n <= 64")
        nxt, mv = m.det_arrays()
        limit = m.num_states * (n + 2)
        _uniform_kernel(nxt, mv.astype(np.int64), m.initial, m.accept, m.reject, n, xs, limit, verdicts, steps)
    else:
        if m.n > 64:
            raise ValueError("batch runs need n <= 64")
        nxt, mv = m.det_arrays()
        limit = m.num_states * m.n
        _det_kernel(nxt, mv.astype(np.int64), m.initial, m.accept, m.reject, _tape_shifts(m), xs, limit,
                    verdicts, steps)
    return verdicts, steps


def set_threads(jobs: int) -> int:
    """Set the kernel thread count; ``jobs <= 0`` means every available core."""
    top = numba.config.NUMBA_NUM_THREADS
    jobs = top if int(jobs) <= 0 else min(int(jobs), top)
    numba.set_num_threads(jobs)
    return jobs
