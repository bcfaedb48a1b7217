"""Bitstring helpers.

Inputs are handled in two forms: a tuple of 0/1 ints (variable ``x_1`` first)
and a big-endian integer where ``x_1`` is the most significant of ``n`` bits.
Batch code uses ``uint64`` arrays of the integer form, so ``n <= 64`` there.
"""

from __future__ import annotations

from typing import Iterable, Sequence, Union

import numpy as np

Bits = tuple
BitsLike = Union[str, Sequence[int]]


def as_bits(w: BitsLike) -> tuple:
    if isinstance(w, str):
        if any(ch not in "01" for ch in w):
            raise ValueError(f"not a bitstring: {w!r}")
        return tuple(int(ch) for ch in w)
    out = tuple(int(b) for b in w)
    if any(b not in (0, 1) for b in out):
        raise ValueError(f"not a bitstring: {w!r}")
    return out


def bits_to_str(w: Iterable[int]) -> str:
    return "".join(str(int(b)) for b in w)


def bits_to_int(w: BitsLike) -> int:
    x = 0
    for b in as_bits(w):
        x = (x << 1) | b
    return x


def int_to_bits(x: int, n: int) -> tuple:
    return tuple((x >> (n - 1 - k)) & 1 for k in range(n))


def bit_columns(xs: np.ndarray, n: int) -> np.ndarray:
    """Return an ``(len(xs), n)`` uint8 matrix whose column k is variable k."""
    xs = np.asarray(xs, dtype=np.uint64)
    shifts = np.arange(n - 1, -1, -1, dtype=np.uint64)
    return ((xs[:, None] >> shifts[None, :]) & np.uint64(1)).astype(np.uint8)


def columns_to_ints(cols: np.ndarray) -> np.ndarray:
    cols = np.asarray(cols, dtype=np.uint64)
    n = cols.shape[1]
    shifts = np.arange(n - 1, -1, -1, dtype=np.uint64)
    return (cols << shifts[None, :]).sum(axis=1, dtype=np.uint64)
