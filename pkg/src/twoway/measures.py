"""Subfunction counts, fixed-length Myhill-Nerode class counts and size bounds.

Variable orders are sequences of 0-based variable indices: ``order[k]`` is
the k-th variable in the order, so splitting at ``i`` puts
``order[:i]`` in X_A.  Truth tables are indexed by the input read as a
big-endian integer (x_1 is the most significant bit).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import mpmath
import numpy as np

from .bits import bit_columns
from .generators import make_rng

MAX_N = 22
MAX_SIDE = 16
MAX_N_EXHAUSTIVE = 10


class ResourceGuard(ValueError):
    pass


def identity_order(n: int) -> tuple:
    return tuple(range(n))


def interleaving_order(n: int) -> tuple:
    """(0, h, 1, h+1, ...) with h = floor(n/2); a leftover middle variable goes last."""
    h = n // 2
    out = []
    for i in range(h):
        out += [i, i + h]
    out += list(range(2 * h, n))
    return tuple(out)


def check_order(order: Sequence[int], n: int) -> tuple:
    order = tuple(int(v) for v in order)
    if sorted(order) != list(range(n)):
        raise ValueError(f"not an order of {n} variables: {order}")
    return order


@dataclass(frozen=True)
class SubfunctionPartition:
    order: tuple
    split: int

    def __post_init__(self):
        if not 1 <= self.split <= len(self.order) - 1:
            raise ValueError(f"split {self.split} outside [1, {len(self.order) - 1}]")


@dataclass
class SubfunctionProfile:
    order: tuple
    per_split: list  # N_i for i = 1..n-1

    @property
    def n_theta(self) -> int:
        return max(self.per_split) if self.per_split else 1


def _table(f) -> np.ndarray:
    if hasattr(f, "truth_table"):
        table = np.asarray(f.truth_table(), dtype=np.uint8)
    else:
        table = np.asarray(f, dtype=np.uint8)
    n = int(table.size).bit_length() - 1
    if table.size != 1 << n:
        raise ValueError("truth table length is not a power of two")
    return table


def _guard(n: int, i: int) -> None:
    if n > MAX_N or min(i, n - i) > MAX_SIDE:
        raise ResourceGuard(f"n={n}, split={i} is beyond exact counting (n <= {MAX_N}, "
                            f"min(i, n-i) <= {MAX_SIDE}); use sampled_subfunction_lower_bound")


def _distinct_rows(mat: np.ndarray) -> int:
    """Number of distinct rows of a 0/1 matrix, comparing full rows."""
    if mat.shape[1] == 0:
        return 1
    packed = np.packbits(mat, axis=1)
    packed = np.ascontiguousarray(packed)
    view = packed.view(np.dtype((np.void, packed.shape[1])))
    return int(np.unique(view).size)


def _arranged(table: np.ndarray, order: tuple) -> np.ndarray:
    n = len(order)
    return np.transpose(table.reshape((2,) * n), order).reshape(-1)


def count_subfunctions(f, part: SubfunctionPartition) -> int:
    """N_i^theta(f): distinct restrictions f|rho over all rho on the first ``split`` ordered variables."""
    table = _table(f)
    n = len(part.order)
    if table.size != 1 << n:
        raise ValueError("order length does not match the function arity")
    _guard(n, part.split)
    arranged = _arranged(table, check_order(part.order, n))
    return _distinct_rows(arranged.reshape(1 << part.split, 1 << (n - part.split)))


def subfunction_profile(f, order: Optional[Sequence[int]] = None) -> SubfunctionProfile:
    table = _table(f)
    n = table.size.bit_length() - 1
    order = identity_order(n) if order is None else check_order(order, n)
    for i in range(1, n):
        _guard(n, i)
    arranged = _arranged(table, order)
    counts = [_distinct_rows(arranged.reshape(1 << i, 1 << (n - i))) for i in range(1, n)]
    return SubfunctionProfile(order, counts)


def n_theta(f, order: Optional[Sequence[int]] = None) -> int:
    """N^theta(f) = max over splits; 1 when n = 1 (no split exists)."""
    return subfunction_profile(f, order).n_theta


def _subset_counts(table: np.ndarray, n: int) -> np.ndarray:
    """g[S] = number of distinct subfunctions when the variables in bitmask S are fixed."""
    g = np.ones(1 << n, dtype=np.int64)
    cube = table.reshape((2,) * n)
    for S in range(1, (1 << n) - 1):
        inside = [v for v in range(n) if S >> v & 1]
        outside = [v for v in range(n) if not S >> v & 1]
        mat = np.transpose(cube, inside + outside).reshape(1 << len(inside), -1)
        g[S] = _distinct_rows(mat)
    return g


def n_min_exhaustive(f):
    """Exact N(f) and a minimizing order.

    N_i^theta only depends on the set of the first i variables, so the best
    order is found by dynamic programming over subsets:
    F(S) = max(g(S), min_v F(S + v)).
    """
    table = _table(f)
    n = table.size.bit_length() - 1
    if n > MAX_N_EXHAUSTIVE:
        raise ResourceGuard(f"exhaustive order search supports n <= {MAX_N_EXHAUSTIVE}")
    if n == 1:
        return 1, (0,)
    full = (1 << n) - 1
    g = _subset_counts(table, n)
    best = np.zeros(1 << n, dtype=np.int64)
    choice = np.full(1 << n, -1, dtype=np.int64)
    masks = sorted(range(1, full), key=lambda S: -bin(S).count("1"))
    for S in masks:
        cand = None
        for v in range(n):
            if S >> v & 1:
                continue
            T = S | 1 << v
            val = 0 if T == full else best[T]
            if cand is None or val < cand:
                cand, choice[S] = val, v
        best[S] = max(int(g[S]), int(cand))
    start = min(range(n), key=lambda v: (best[1 << v], v))
    order, S = [start], 1 << start
    while S != full:
        v = int(choice[S])
        order.append(v)
        S |= 1 << v
    return int(best[1 << start]), tuple(order)


def n_min_bruteforce(f):
    """Reference N(f) by trying every order; only for small n."""
    table = _table(f)
    n = table.size.bit_length() - 1
    if n > 7:
        raise ResourceGuard("brute-force order search supports n <= 7")
    best = None
    for order in itertools.permutations(range(n)):
        val = n_theta(table, order)
        if best is None or val < best[0]:
            best = (val, order)
    return best


def n_min_heuristic(f, budget: int = 200, seed=0):
    """Upper bound on N(f) from random restarts plus adjacent-swap hill climbing.

    ``budget`` caps the number of orders evaluated.  Returns ``(bound, order)``.
    """
    table = _table(f)
    n = table.size.bit_length() - 1
    rng = make_rng(seed)
    cache = {}

    def cost(order):
        key = tuple(order)
        if key not in cache:
            cache[key] = n_theta(table, key)
        return cache[key]

    best = (cost(identity_order(n)), identity_order(n))
    evaluated = 1
    while evaluated < budget:
        cur = tuple(int(v) for v in rng.permutation(n))
        cur_cost = cost(cur)
        evaluated += 1
        improved = True
        while improved and evaluated < budget:
            improved = False
            for k in range(n - 1):
                nxt = list(cur)
                nxt[k], nxt[k + 1] = nxt[k + 1], nxt[k]
                nxt = tuple(nxt)
                c = cost(nxt)
                evaluated += 1
                if c < cur_cost:
                    cur, cur_cost, improved = nxt, c, True
                    break
                if evaluated >= budget:
                    break
        if cur_cost < best[0]:
            best = (cur_cost, cur)
    return best


def _sample_assignments(bits: int, count: int, rng) -> np.ndarray:
    """``count`` distinct assignments of ``bits`` variables, or all of them if count covers the space."""
    if bits < 63 and count >= 1 << bits:
        return np.arange(1 << bits, dtype=np.uint64)
    seen = set()
    out = []
    while len(out) < count:
        need = count - len(out)
        hi = rng.integers(0, 1 << 32, size=need, dtype=np.uint64)
        lo = rng.integers(0, 1 << 32, size=need, dtype=np.uint64)
        xs = (hi << np.uint64(32)) | lo
        if bits < 64:
            xs &= np.uint64((1 << bits) - 1)
        for x in xs.tolist():
            if x not in seen:
                seen.add(x)
                out.append(x)
    return np.array(out[:count], dtype=np.uint64)


def sampled_subfunction_lower_bound(f, part: SubfunctionPartition, num_prefixes: int, num_probes: int,
                                    seed=0) -> int:
    """Sound lower bound on N_i^theta(f) from a prefix x probe response matrix.

    Two prefixes whose responses differ on some probe have different
    subfunctions, so the number of distinct response rows never exceeds the
    true count.  ``f`` must offer ``batch`` over big-endian integers (n <= 64).
    """
    n = len(part.order)
    order = check_order(part.order, n)
    if n > 64:
        raise ValueError("sampling uses 64-bit inputs")
    i = part.split
    rng = make_rng(seed)
    prefixes = _sample_assignments(i, num_prefixes, rng)
    probes = _sample_assignments(n - i, num_probes, rng)
    pcols = bit_columns(prefixes, i)
    qcols = bit_columns(probes, n - i)
    shift = np.array([n - 1 - v for v in order], dtype=np.uint64)
    pre = (pcols.astype(np.uint64) << shift[:i]).sum(axis=1, dtype=np.uint64)
    post = (qcols.astype(np.uint64) << shift[i:]).sum(axis=1, dtype=np.uint64)
    xs = (pre[:, None] | post[None, :]).reshape(-1)
    if hasattr(f, "batch"):
        vals = np.asarray(f.batch(xs), dtype=np.uint8)
    else:
        vals = np.asarray(_table(f)[xs.astype(np.int64)], dtype=np.uint8)
    return _distinct_rows(vals.reshape(len(prefixes), len(probes)))


# ---------------------------------------------------------------------------
# fixed-length Myhill-Nerode classes


def _class_levels(table: np.ndarray):
    """Class labels of all prefixes of each length, refined backwards from membership."""
    n = table.size.bit_length() - 1
    cls = np.unique(table, return_inverse=True)[1].reshape(-1).astype(np.int64)
    levels = {n: cls}
    for r in range(n - 1, -1, -1):
        width = int(cls.max()) + 1
        pairs = cls[0::2] * width + cls[1::2]  # prefix u extends to u0 = 2u and u1 = 2u+1
        _, cls = np.unique(pairs, return_inverse=True)
        cls = cls.reshape(-1)
        levels[r] = cls
    return levels


def count_equivalence_classes(L, r: int) -> int:
    """R^r(L_n): classes of {0,1}^r under u ~ v iff uy in L <=> vy in L for all y."""
    table = _table(L)
    n = table.size.bit_length() - 1
    if not 0 <= r <= n:
        raise ValueError(f"r={r} outside [0, {n}]")
    _guard(n, min(max(r, 1), n - 1) if n > 1 else 0)
    return int(_class_levels(table)[r].max()) + 1


def r_max(L) -> int:
    table = _table(L)
    n = table.size.bit_length() - 1
    if n < 2:
        return 1
    for r in range(1, n):
        _guard(n, r)
    levels = _class_levels(table)
    return max(int(levels[r].max()) + 1 for r in range(1, n))


def check_identity_nr(f) -> bool:
    """N^id(f) == R_n(L) for the language whose characteristic function is f."""
    return n_theta(f) == r_max(f)


# ---------------------------------------------------------------------------
# size bounds


def _need_d(d) -> int:
    d = int(d)
    if d < 1:
        raise ValueError(f"d must be >= 1 (got {d})")
    return d


def det_size_bound(d: int) -> int:
    d = _need_d(d)
    return (d + 1) ** (d + 1)


def nondet_size_bound(d: int) -> int:
    d = _need_d(d)
    return 2 ** ((d + 1) ** 2)


def _mp_log2(x):
    return mpmath.log(mpmath.mpf(x), 2)


def _ceil_exact(value) -> int:
    """Ceiling of an mpmath value; integers within 1e-30 are treated as exact."""
    near = mpmath.nint(value)
    if abs(value - near) < mpmath.mpf("1e-30"):
        return int(near)
    return int(mpmath.ceil(value))


def _eps_mp(eps):
    # floats go through their shortest repr so 0.2 means exactly 1/5
    frac = Fraction(repr(eps)) if isinstance(eps, float) else Fraction(eps)
    return mpmath.mpf(frac.numerator) / frac.denominator


def prob_size_bound_base(d: int, T, eps) -> int:
    """The integer ceil(4d(8 + 3 log T) / (log(1 + 2 eps) * (1 + eps))), logs base 2."""
    d = _need_d(d)
    if not T >= 1:
        raise ValueError("T must be >= 1")
    if not 0 < eps <= 0.5:
        raise ValueError("eps must lie in (0, 1/2]")
    with mpmath.workdps(60):
        e = _eps_mp(eps)
        num = 4 * d * (8 + 3 * _mp_log2(T))
        den = mpmath.log(1 + 2 * e, 2) * (1 + e)
        return _ceil_exact(num / den)


def prob_size_bound(d: int, T, eps) -> int:
    d = _need_d(d)
    return prob_size_bound_base(d, T, eps) ** ((d + 1) ** 2)


def prob_size_bound_simplified(d: int, T) -> int:
    """(32 d log T)^((d+1)^2) for T >= 256 (eps = 1/5).

    The base is exact when log2 T is an integer; otherwise it is rounded up,
    which keeps the value an upper bound.
    """
    d = _need_d(d)
    if T < 256:
        raise ValueError("the simplified bound needs T >= 256")
    with mpmath.workdps(60):
        base = _ceil_exact(32 * d * _mp_log2(T))
    return base ** ((d + 1) ** 2)


def size_bound(model: str, d: int, T=None, eps=None) -> int:
    if model == "det":
        return det_size_bound(d)
    if model == "nondet":
        return nondet_size_bound(d)
    if model == "prob":
        if T is None or eps is None:
            raise ValueError("prob bounds need T and eps")
        return prob_size_bound(d, T, eps)
    raise ValueError(f"unknown model {model!r}")


def min_size_lower_bound(N: int, model: str, T=None, eps=None, d_max: int = 1 << 20) -> int:
    """Smallest d whose bound reaches N: machines of the model computing f with N(f) = N need >= d states."""
    if N < 1:
        raise ValueError("N must be >= 1")
    d = 1
    while size_bound(model, d, T, eps) < N:
        d += 1
        if d > d_max:
            raise ValueError("no d up to d_max reaches N")
    return d


# ---------------------------------------------------------------------------
# hierarchy and incomparability guards


def _ceil_11dlogd(d: int) -> int:
    if d < 1:
        return 0
    with mpmath.workdps(60):
        return _ceil_exact(11 * d * _mp_log2(d))


@dataclass
class HierarchyRow:
    theorem: str
    d: int
    n: int
    guard: str
    guard_value: str
    guard_holds: bool
    smaller: str
    larger: str
    note: str

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def _fmt(x) -> str:
    return format(float(x), ".12g")


def hierarchy_report(d_grid, n: int, T: int = 256) -> list:
    """Evaluate each hierarchy / incomparability guard at every d in the grid.

    Rows whose guard fails are flagged "guard unsatisfied"; nothing about the
    asymptotic separation itself is tested.
    """
    rows = []
    root6 = math.sqrt(n / 6)
    root12 = math.sqrt(n / 12)
    cube2 = (n / 2) ** (1 / 3)
    with mpmath.workdps(30):
        logT = float(_mp_log2(T))
    for d in d_grid:
        d = int(d)
        v = 13 * d + 43
        rows.append(HierarchyRow("hierarchy-det", d, n, "13d+43 < sqrt(n/6)", f"{v} < {_fmt(root6)}", v < root6,
                                 f"2DSIZE^theta({d})", f"2DSIZE^theta({v})", "witness 2-SAF_{d+3}"))
        v = 13 * d + 4
        ok = 121 < v < root6
        rows.append(HierarchyRow("hierarchy-non", d, n, "121 < 13d+4 < sqrt(n/6)", f"121 < {v} < {_fmt(root6)}", ok,
                                 f"2NSIZE^theta({math.isqrt(d)})", f"2NSIZE^theta({v})", "witness 2-SAF_d"))
        v = _ceil_11dlogd(d)
        ok = 1330 < v < root12
        rows.append(HierarchyRow("hierarchy-2dfa", d, n, "1330 < ceil(11 d log d) < sqrt(n/12)",
                                 f"1330 < {v} < {_fmt(root12)}", ok, f"2DFASIZE({d - 3})", f"2DFASIZE({v})",
                                 "witness 2-USAF_d"))
        rows.append(HierarchyRow("hierarchy-2nfa", d, n, "1330 < ceil(11 d log d) < sqrt(n/12)",
                                 f"1330 < {v} < {_fmt(root12)}", ok, f"2NFASIZE({math.isqrt(d)})", f"2NFASIZE({v})",
                                 "witness 2-USAF_d"))
        v = 13 * d + 4
        ok = 30 < v < root6
        small = math.floor(math.sqrt(d) / (32 * logT))
        rows.append(HierarchyRow("hierarchy-pro", d, n, "30 < 13d+4 < sqrt(n/6)", f"30 < {v} < {_fmt(root6)}", ok,
                                 f"2PSIZE^theta({small})", f"2PSIZE^theta({v})", f"T={T}, eps>=1/5"))
        # incomparability: the guards on d and on the smaller parameter d'
        v = 13 * d + 43
        rows.append(HierarchyRow("incomparable-det", d, n, "13d+43 < sqrt(n/6)", f"{v} < {_fmt(root6)}", v < root6,
                                 "2DSIZE^theta(d')", f"2DSIZE({d})", "for 94 <= 13d'+43 < d"))
        v = 13 * d + 4
        rows.append(HierarchyRow("incomparable-non", d, n, "121 < 13d+4 < sqrt(n/6)", f"121 < {v} < {_fmt(root6)}",
                                 121 < v < root6, "2NSIZE^theta(floor(sqrt d'))", f"2NSIZE({d})",
                                 "for 58 <= 13d'+4 < d"))
        rows.append(HierarchyRow("incomparable-pro", d, n, "30 < 13d+4 < cbrt(n/2)", f"30 < {v} < {_fmt(cube2)}",
                                 30 < v < cube2, "2PSIZE^theta(floor(sqrt d' / (32 log T)))", f"2PSIZE({d})",
                                 f"for 4 <= 13d'+4 < d, 256 <= T < 2^(2^d'), T={T}"))
        eq_d = math.isqrt(n // 2) - 2
        rows.append(HierarchyRow("eq-nonshuffled", d, n, "d <= floor(sqrt(n/2)) - 2", f"{d} <= {eq_d}", d <= eq_d,
                                 "EQ in 2DSIZE^theta(4)", f"EQ not in 2NSIZE({d})",
                                 "N^id(EQ) = 2^floor(n/2) > 2^((d+1)^2)"))
    for row in rows:
        if not row.guard_holds:
            row.note = f"guard unsatisfied; {row.note}"
    return rows
