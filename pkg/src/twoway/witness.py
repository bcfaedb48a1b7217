"""Reference evaluators for the witness functions 2-SAF_t, 2-USAF_t and EQ.

Every evaluator works pointwise on a bit tuple (``x_1`` first).  The oracle
classes add a vectorized ``batch`` path over big-endian integers; that path is
checked against the pointwise definitions in the test-suite and never shares
code with the machine builders.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .bits import BitsLike, as_bits, bit_columns, int_to_bits


class ParameterError(ValueError):
    pass


def clog2(x: int) -> int:
    """Ceiling of log2 for a positive integer."""
    if x < 1:
        raise ValueError("clog2 needs x >= 1")
    return (x - 1).bit_length()


# ---------------------------------------------------------------------------
# 2-SAF_t


@dataclass(frozen=True)
class SafParams:
    n: int
    t: int
    q: int
    c: int
    b: int

    @property
    def blocks(self) -> int:
        return 2 * self.t

    @property
    def used(self) -> int:
        """Number of leading variables that belong to some block."""
        return 2 * self.t * self.q

    def address_index(self, p: int, j: int) -> int:
        assert 0 <= j < self.c
        return p * self.q + j

    def value_index(self, p: int, j: int) -> int:
        assert 0 <= j < self.b
        return p * self.q + self.c + j


def saf_params(n: int, t: int) -> SafParams:
    if t < 2 or n < 1:
        raise ParameterError(f"need t >= 2 and n >= 1 (got n={n}, t={t})")
    c = clog2(2 * t)
    lhs = 2 * t * (2 * t + c)
    if not lhs < n:
        raise ParameterError(f"parameter inequality violated: 2t(2t+ceil(log 2t)) = {lhs} is not < n = {n}")
    q = n // (2 * t)
    b = q - c
    if b < t + 1:
        raise ParameterError(f"value bits per block b={b} < t+1={t + 1}")
    return SafParams(n=n, t=t, q=q, c=c, b=b)


@dataclass(frozen=True)
class BlockView:
    """Address, value and (USAF only) mark bits of one block, plus their variable indices."""

    p: int
    address: tuple
    value: tuple
    marks: tuple
    address_indices: tuple
    value_indices: tuple
    mark_indices: tuple


def saf_block(params: SafParams, X: BitsLike, p: int) -> BlockView:
    X = as_bits(X)
    ai = tuple(params.address_index(p, j) for j in range(params.c))
    vi = tuple(params.value_index(p, j) for j in range(params.b))
    return BlockView(p, tuple(X[i] for i in ai), tuple(X[i] for i in vi), (), ai, vi, ())


def _check_input(params, X) -> tuple:
    X = as_bits(X)
    if len(X) != params.n:
        raise ValueError(f"input length {len(X)} != n = {params.n}")
    return X


def saf_adr(params: SafParams, X: BitsLike, p: int) -> int:
    # little-endian: y_j has weight 2^j
    blk = saf_block(params, X, p)
    return sum(y << j for j, y in enumerate(blk.address)) % (2 * params.t)


def saf_ind(params: SafParams, X: BitsLike, a: int) -> int:
    X = as_bits(X)
    for p in range(params.blocks):
        if saf_adr(params, X, p) == a:
            return p
    return -1


def saf_val(params: SafParams, X: BitsLike, a: int) -> int:
    X = as_bits(X)
    p = saf_ind(params, X, a)
    if p < 0:
        return -1
    return sum(saf_block(params, X, p).value) % params.t


@dataclass(frozen=True)
class StepTrace:
    """Step_1(X,0), Step_2(X,0), Step_1(X,1), Step_2(X,1) and the output bit."""

    step1_0: int
    step2_0: int
    step1_1: int
    step2_1: int
    value: int


def _step_chain(t: int, val: Callable[[int], int]) -> StepTrace:
    # A failed lookup (-1) anywhere makes every later step -1 and the output 0.
    steps = []
    prev = 2  # Step_2(X, -1)
    for _ in range(2):
        v = val(prev) if prev >= 0 else -1
        s1 = v + t if v >= 0 else -1
        s2 = val(s1) if s1 >= 0 else -1
        steps += [s1, s2]
        prev = s2
    return StepTrace(steps[0], steps[1], steps[2], steps[3], 1 if steps[3] > 0 else 0)


def saf_trace(params: SafParams, X: BitsLike) -> StepTrace:
    X = _check_input(params, X)
    return _step_chain(params.t, lambda a: saf_val(params, X, a))


def saf_eval(params: SafParams, X: BitsLike) -> int:
    return saf_trace(params, X).value


# ---------------------------------------------------------------------------
# 2-USAF_t


@dataclass(frozen=True)
class UsafParams:
    n: int
    t: int
    q: int
    c: int
    b: int

    @property
    def blocks(self) -> int:
        return 2 * self.t

    @property
    def used(self) -> int:
        return 2 * self.t * self.q

    @property
    def pairs(self) -> int:
        return self.q // 2

    def mark_index(self, p: int, m: int) -> int:
        return p * self.q + 2 * m

    def address_index(self, p: int, j: int) -> int:
        assert 0 <= j < self.c
        return p * self.q + 2 * j + 1

    def value_index(self, p: int, j: int) -> int:
        assert 0 <= j < self.b
        return p * self.q + 2 * (self.c + j) + 1


def usaf_params(n: int, t: int) -> UsafParams:
    if t < 2 or n < 1:
        raise ParameterError(f"need t >= 2 and n >= 1 (got n={n}, t={t})")
    c = clog2(2 * t)
    lhs = 4 * t * (2 * t + c)
    if not lhs < n:
        raise ParameterError(f"parameter inequality violated: 4t(2t+ceil(log 2t)) = {lhs} is not < n = {n}")
    q = n // (2 * t)
    if q % 2:
        raise ParameterError(f"odd block width q={q}")
    return UsafParams(n=n, t=t, q=q, c=c, b=q // 2 - c)


def usaf_block(params: UsafParams, X: BitsLike, p: int) -> BlockView:
    X = as_bits(X)
    ai = tuple(params.address_index(p, j) for j in range(params.c))
    vi = tuple(params.value_index(p, j) for j in range(params.b))
    mi = tuple(params.mark_index(p, m) for m in range(params.pairs))
    return BlockView(p, tuple(X[i] for i in ai), tuple(X[i] for i in vi), tuple(X[i] for i in mi), ai, vi, mi)


def usaf_adr(params: UsafParams, X: BitsLike, p: int) -> int:
    # big-endian: y_0 has weight 2^(c-1)
    blk = usaf_block(params, X, p)
    c = params.c
    return sum(y << (c - 1 - j) for j, y in enumerate(blk.address)) % (2 * params.t)


def usaf_ind(params: UsafParams, X: BitsLike, a: int) -> int:
    X = as_bits(X)
    for p in range(params.blocks):
        if usaf_adr(params, X, p) == a:
            return p
    return -1


def usaf_val(params: UsafParams, X: BitsLike, a: int) -> int:
    X = as_bits(X)
    p = usaf_ind(params, X, a)
    if p < 0:
        return -1
    return sum(usaf_block(params, X, p).value) % params.t


def usaf_trace(params: UsafParams, X: BitsLike) -> StepTrace:
    X = _check_input(params, X)
    return _step_chain(params.t, lambda a: usaf_val(params, X, a))


def usaf_eval(params: UsafParams, X: BitsLike) -> int:
    return usaf_trace(params, X).value


def usaf_wellformed(params: UsafParams, X: BitsLike) -> bool:
    X = _check_input(params, X)
    for p in range(params.blocks):
        marks = usaf_block(params, X, p).marks
        if any(marks[m] != 0 for m in range(params.c)):
            return False
        if any(marks[m] != 1 for m in range(params.c, params.pairs)):
            return False
    return True


def usaf_to_saf(params: UsafParams, X: BitsLike) -> tuple:
    """Drop the mark bits and re-encode addresses little-endian.

    The result is an input for ``saf`` with the same ``t``, block width
    ``q/2`` and length ``t*q`` (no trailing variables).  It is only meaningful
    for well-formed inputs.
    """
    X = as_bits(X)
    out = []
    for p in range(params.blocks):
        blk = usaf_block(params, X, p)
        out.extend(reversed(blk.address))
        out.extend(blk.value)
    return tuple(out)


# ---------------------------------------------------------------------------
# EQ


def eq_eval(X: BitsLike) -> int:
    """1 iff some i < floor(n/2) has x_i == x_{i+floor(n/2)} (a disjunction)."""
    X = as_bits(X)
    n = len(X)
    if n < 2:
        raise ParameterError("EQ needs n >= 2")
    h = n // 2
    return int(any(X[i] == X[i + h] for i in range(h)))


# ---------------------------------------------------------------------------
# Oracles


class FunctionOracle:
    """A total Boolean function on {0,1}^n.

    ``batch`` maps a uint64 array of big-endian encoded inputs to a uint8
    array of values.  Subclasses override it with vectorized code.
    """

    name = "function"

    def __init__(self, n: int, fn: Optional[Callable[[tuple], int]] = None, name: Optional[str] = None):
        self.n = n
        self._fn = fn
        if name is not None:
            self.name = name

    def __call__(self, X: BitsLike) -> int:
        X = as_bits(X)
        if len(X) != self.n:
            raise ValueError(f"input length {len(X)} != n = {self.n}")
        return int(self._fn(X))

    def batch(self, xs) -> np.ndarray:
        xs = np.asarray(xs, dtype=np.uint64)
        return np.fromiter((self(int_to_bits(int(x), self.n)) for x in xs), dtype=np.uint8, count=len(xs))

    def truth_table(self) -> np.ndarray:
        """Values on all 2^n inputs, indexed by the big-endian integer."""
        if self.n > 26:
            raise ValueError(f"truth table of n={self.n} variables is too large")
        out = np.empty(1 << self.n, dtype=np.uint8)
        chunk = 1 << 20
        for lo in range(0, 1 << self.n, chunk):
            hi = min(lo + chunk, 1 << self.n)
            out[lo:hi] = self.batch(np.arange(lo, hi, dtype=np.uint64))
        return out


class TableOracle(FunctionOracle):
    name = "table"

    def __init__(self, table):
        table = np.asarray(table, dtype=np.uint8).ravel()
        n = int(table.size).bit_length() - 1
        if table.size != 1 << n or n < 1:
            raise ParameterError(f"truth table size {table.size} is not 2^n")
        if np.any(table > 1):
            raise ParameterError("truth table entries must be 0/1")
        super().__init__(n)
        self.table = table

    def __call__(self, X: BitsLike) -> int:
        X = as_bits(X)
        if len(X) != self.n:
            raise ValueError(f"input length {len(X)} != n = {self.n}")
        idx = 0
        for b in X:
            idx = (idx << 1) | b
        return int(self.table[idx])

    def batch(self, xs) -> np.ndarray:
        return self.table[np.asarray(xs, dtype=np.uint64).astype(np.int64)]

    def truth_table(self) -> np.ndarray:
        return self.table.copy()

    @classmethod
    def from_file(cls, path) -> "TableOracle":
        text = Path(path).read_text().strip()
        if any(ch not in "01" for ch in text):
            raise ParameterError(f"{path}: truth table must be one line of 0/1 characters")
        return cls(np.frombuffer(text.encode(), dtype=np.uint8) - ord("0"))


def _block_sums(cols: np.ndarray, index_lists, weights=None, modulus=None) -> np.ndarray:
    """Stack per-block weighted sums: result[:, p] = sum_j w_j * cols[:, idx[p][j]]."""
    out = np.zeros((cols.shape[0], len(index_lists)), dtype=np.int64)
    for p, idx in enumerate(index_lists):
        sub = cols[:, list(idx)].astype(np.int64)
        if weights is not None:
            sub = sub * np.asarray(weights, dtype=np.int64)[None, :]
        out[:, p] = sub.sum(axis=1)
    if modulus is not None:
        out %= modulus
    return out


def _vector_chain(t: int, adr: np.ndarray, val: np.ndarray) -> np.ndarray:
    """Vectorized Step chain given per-block addresses and values (rows = inputs)."""
    rows, blocks = adr.shape
    # value_of[:, a] = Val(X, a), -1 when no block carries address a
    value_of = np.full((rows, blocks), -1, dtype=np.int64)
    for p in range(blocks - 1, -1, -1):
        value_of[np.arange(rows), adr[:, p]] = val[:, p]
    r = np.arange(rows)
    cur = np.full(rows, 2, dtype=np.int64)
    for k in range(4):
        ok = cur >= 0
        looked = np.where(ok, value_of[r, np.where(ok, cur, 0)], -1)
        if k % 2 == 0:
            cur = np.where(looked >= 0, looked + t, -1)
        else:
            cur = looked
    return (cur > 0).astype(np.uint8)


class SafOracle(FunctionOracle):
    def __init__(self, n: int, t: int):
        self.params = saf_params(n, t)
        super().__init__(n, name=f"saf:t={t}")

    def __call__(self, X: BitsLike) -> int:
        return saf_eval(self.params, X)

    def batch(self, xs) -> np.ndarray:
        P = self.params
        cols = bit_columns(xs, P.n)
        adr = _block_sums(cols, [[P.address_index(p, j) for j in range(P.c)] for p in range(P.blocks)],
                          weights=[1 << j for j in range(P.c)], modulus=2 * P.t)
        val = _block_sums(cols, [[P.value_index(p, j) for j in range(P.b)] for p in range(P.blocks)], modulus=P.t)
        return _vector_chain(P.t, adr, val)


class UsafOracle(FunctionOracle):
    def __init__(self, n: int, t: int):
        self.params = usaf_params(n, t)
        super().__init__(n, name=f"usaf:t={t}")

    def __call__(self, X: BitsLike) -> int:
        return usaf_eval(self.params, X)

    def batch(self, xs) -> np.ndarray:
        P = self.params
        cols = bit_columns(xs, P.n)
        adr = _block_sums(cols, [[P.address_index(p, j) for j in range(P.c)] for p in range(P.blocks)],
                          weights=[1 << (P.c - 1 - j) for j in range(P.c)], modulus=2 * P.t)
        val = _block_sums(cols, [[P.value_index(p, j) for j in range(P.b)] for p in range(P.blocks)], modulus=P.t)
        return _vector_chain(P.t, adr, val)

    def wellformed_batch(self, xs) -> np.ndarray:
        P = self.params
        cols = bit_columns(xs, P.n)
        ok = np.ones(cols.shape[0], dtype=bool)
        for p in range(P.blocks):
            for m in range(P.pairs):
                want = 0 if m < P.c else 1
                ok &= cols[:, P.mark_index(p, m)] == want
        return ok


class EqOracle(FunctionOracle):
    def __init__(self, n: int):
        if n < 2:
            raise ParameterError("EQ needs n >= 2")
        super().__init__(n, name="eq")

    def __call__(self, X: BitsLike) -> int:
        X = as_bits(X)
        if len(X) != self.n:
            raise ValueError(f"input length {len(X)} != n = {self.n}")
        return eq_eval(X)

    def batch(self, xs) -> np.ndarray:
        cols = bit_columns(xs, self.n)
        h = self.n // 2
        return np.any(cols[:, :h] == cols[:, h:2 * h], axis=1).astype(np.uint8)


class ConstantOracle(FunctionOracle):
    def __init__(self, n: int, value: int = 0):
        super().__init__(n, name=f"const:{value}")
        self.value = int(value)

    def __call__(self, X: BitsLike) -> int:
        return self.value

    def batch(self, xs) -> np.ndarray:
        return np.full(len(np.asarray(xs)), self.value, dtype=np.uint8)


def parse_oracle(spec: str, n: Optional[int] = None) -> FunctionOracle:
    """Build an oracle from a CLI identifier: saf:t=T, usaf:t=T, eq, table:PATH."""
    if spec.startswith("table:"):
        oracle = TableOracle.from_file(spec[len("table:"):])
        if n is not None and oracle.n != n:
            raise ParameterError(f"truth table has n={oracle.n}, expected {n}")
        return oracle
    if n is None:
        raise ParameterError(f"oracle {spec!r} needs an input length n")
    if spec == "eq":
        return EqOracle(n)
    for prefix, cls in (("saf:", SafOracle), ("usaf:", UsafOracle)):
        if spec.startswith(prefix):
            key, _, val = spec[len(prefix):].partition("=")
            if key != "t" or not val.isdigit():
                raise ParameterError(f"bad oracle id {spec!r}")
            return cls(n, int(val))
    raise ParameterError(f"unknown oracle id {spec!r}")

