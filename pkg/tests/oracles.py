"""Deliberately naive reference implementations used to derive expected values.

Nothing here imports the package's evaluators; each function is written
straight from the definitions so that agreement means something.
"""

from fractions import Fraction
from itertools import product
from math import ceil, log2


def ref_saf(bits, t):
    n = len(bits)
    q = n // (2 * t)
    c = ceil(log2(2 * t))
    blocks = []
    for p in range(2 * t):
        blk = bits[p * q:(p + 1) * q]
        adr = sum(blk[j] * 2 ** j for j in range(c)) % (2 * t)
        val = sum(blk[c:]) % t
        blocks.append((adr, val))
    return _ref_chain(blocks, t)


def ref_usaf(bits, t):
    n = len(bits)
    q = n // (2 * t)
    c = ceil(log2(2 * t))
    blocks = []
    for p in range(2 * t):
        blk = bits[p * q:(p + 1) * q]
        payload = blk[1::2]  # odd 1-based positions are marks
        adr = sum(payload[j] * 2 ** (c - 1 - j) for j in range(c)) % (2 * t)
        val = sum(payload[c:]) % t
        blocks.append((adr, val))
    return _ref_chain(blocks, t)


def _ref_chain(blocks, t):
    def val(a):
        for adr, v in blocks:
            if adr == a:
                return v
        return None

    trace = []
    prev = 2
    for _ in range(2):
        v = val(prev)
        if v is None:
            return 0, trace
        s1 = v + t
        trace.append(s1)
        s2 = val(s1)
        if s2 is None:
            return 0, trace
        trace.append(s2)
        prev = s2
    return int(s2 > 0), trace


def ref_eq(bits):
    h = len(bits) // 2
    return int(any(bits[i] == bits[i + h] for i in range(h)))


def ref_subfunctions(fn, n, order, i):
    """Distinct restrictions as explicit tuples of values."""
    seen = set()
    for rho in product((0, 1), repeat=i):
        table = []
        for y in product((0, 1), repeat=n - i):
            x = [0] * n
            for k, v in enumerate(order[:i]):
                x[v] = rho[k]
            for k, v in enumerate(order[i:]):
                x[v] = y[k]
            table.append(fn(tuple(x)))
        seen.add(tuple(table))
    return len(seen)


def ref_classes(fn, n, r):
    """Myhill-Nerode classes of length-r prefixes by explicit suffix sets."""
    sigs = set()
    for u in product((0, 1), repeat=r):
        sigs.add(frozenset(y for y in product((0, 1), repeat=n - r) if fn(u + y)))
    return len(sigs)


def ref_absorb(P, start=0):
    """Acceptance probability by exact Gaussian elimination over fractions (tiny chains only).

    Solves x_i = sum_j P_ij x_j for transient i, with x = 0 at reject (m-2)
    and 1 at accept (m-1).  Transient states that cannot absorb are fixed at 0.
    """
    m = len(P)
    P = [[Fraction(p) for p in row] for row in P]
    k = m - 2
    # states that can reach an absorbing state
    good = {m - 2, m - 1}
    changed = True
    while changed:
        changed = False
        for i in range(k):
            if i not in good and any(P[i][j] and j in good for j in range(m)):
                good.add(i)
                changed = True
    idx = [i for i in range(k) if i in good]
    if start not in idx:
        return Fraction(0)
    A = [[(Fraction(int(a == b)) - P[a][b]) for b in idx] + [P[a][m - 1]] for a in idx]
    size = len(idx)
    for col in range(size):
        piv = next(r for r in range(col, size) if A[r][col] != 0)
        A[col], A[piv] = A[piv], A[col]
        for r in range(size):
            if r != col and A[r][col] != 0:
                f = A[r][col] / A[col][col]
                A[r] = [x - f * y for x, y in zip(A[r], A[col])]
    return A[idx.index(start)][size] / A[idx.index(start)][idx.index(start)]
