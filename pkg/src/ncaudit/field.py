"""Arithmetic over GF(2^8) plus small dense linear algebra.

Reduction polynomial is x^8 + x^4 + x^3 + x + 1 (0x11B).  Multiplication is
served from a 256x256 lookup table built once at import time from the
shift-and-reduce routine; addition is XOR.  All vector helpers operate on
numpy uint8 arrays so hot paths (proof generation, verification) stay fast.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

POLY = 0x11B
ORDER = 256


def mul_shift_reduce(a: int, b: int) -> int:
    """Shift-and-reduce product in GF(2^8); reference for the lookup table."""
    if not (0 <= a < ORDER and 0 <= b < ORDER):
        raise ValueError("operands must be single field symbols")
    acc = 0
    x, y = a, b
    while y:
        if y & 1:
            acc ^= x
        y >>= 1
        x <<= 1
        if x & 0x100:
            x ^= POLY
    return acc


def _build_mul_table() -> np.ndarray:
    table = np.zeros((ORDER, ORDER), dtype=np.uint8)
    for a in range(1, ORDER):
        row = table[a]
        for b in range(1, ORDER):
            row[b] = mul_shift_reduce(a, b)
    return table


MUL = _build_mul_table()

_INV = np.zeros(ORDER, dtype=np.uint8)
for _a in range(1, ORDER):
    _INV[_a] = int(np.argmax(MUL[_a] == 1))


class MultCounter:
    """Counts field multiplications performed by the vector helpers.

    Disabled by default; enable with the context manager for instrumented
    runs.  A table lookup counts as one multiplication per element.
    """

    __slots__ = ("enabled", "value")

    def __init__(self):
        self.enabled = False
        self.value = 0

    def reset(self):
        self.value = 0

    def __enter__(self):
        self.enabled = True
        self.value = 0
        return self

    def __exit__(self, *exc):
        self.enabled = False
        return False


counter = MultCounter()


def add(a: int, b: int) -> int:
    return a ^ b


def mul(a: int, b: int) -> int:
    if counter.enabled:
        counter.value += 1
    return int(MUL[a, b])


def inv(a: int) -> int:
    if a == 0:
        raise ZeroDivisionError("0 has no multiplicative inverse in GF(256)")
    return int(_INV[a])


def vec(values) -> np.ndarray:
    return np.asarray(values, dtype=np.uint8)


def zeros(n: int) -> np.ndarray:
    return np.zeros(n, dtype=np.uint8)


def vec_add(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    if u.shape != v.shape:
        raise ValueError("length mismatch")
    return u ^ v


def vec_scale(alpha: int, v: np.ndarray) -> np.ndarray:
    if counter.enabled:
        counter.value += int(v.size)
    return MUL[alpha][v]


def vec_mul(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    if u.shape != v.shape:
        raise ValueError("length mismatch")
    if counter.enabled:
        counter.value += int(u.size)
    return MUL[u, v]


def dot(u: np.ndarray, v: np.ndarray) -> int:
    if u.shape != v.shape:
        raise ValueError("length mismatch")
    if counter.enabled:
        counter.value += int(u.size)
    return int(np.bitwise_xor.reduce(MUL[u, v]))


def scale_rows(alphas: np.ndarray, rows: np.ndarray) -> np.ndarray:
    """Row i scaled by alphas[i]; counts len(alphas) * row width."""
    if alphas.shape[0] != rows.shape[0]:
        raise ValueError("length mismatch")
    if counter.enabled:
        counter.value += int(rows.size)
    return MUL[alphas[:, None], rows]


def combine_rows(alphas: np.ndarray, rows: np.ndarray) -> np.ndarray:
    """XOR-accumulated linear combination of the rows."""
    return np.bitwise_xor.reduce(scale_rows(alphas, rows), axis=0)


def matrix_rank(a: np.ndarray) -> int:
    return _eliminate(np.array(a, dtype=np.uint8, copy=True), None)[1]


@dataclass
class GaussResult:
    status: str  # "unique" | "rank_deficient" | "inconsistent"
    solution: Optional[np.ndarray]
    rank: int
    witness: Optional[np.ndarray] = None


def _eliminate(a: np.ndarray, b: Optional[np.ndarray]):
    """In-place reduced row echelon form of a (and b alongside).

    Returns (pivot columns, rank).  Pivot choice is the first nonzero row,
    so the result is deterministic for a given input ordering.
    """
    rows, cols = a.shape
    pivots = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.nonzero(a[r:, c])[0]
        if nz.size == 0:
            continue
        p = r + int(nz[0])
        if p != r:
            a[[r, p]] = a[[p, r]]
            if b is not None:
                b[[r, p]] = b[[p, r]]
        f = inv(int(a[r, c]))
        a[r] = MUL[f][a[r]]
        if b is not None:
            b[r] = MUL[f][b[r]]
        hits = np.nonzero(a[:, c])[0]
        for i in hits:
            if i == r:
                continue
            g = int(a[i, c])
            a[i] ^= MUL[g][a[r]]
            if b is not None:
                b[i] ^= MUL[g][b[r]]
        pivots.append(c)
        r += 1
    return pivots, r


def gaussian_solve(matrix, rhs) -> GaussResult:
    """Solve matrix @ X = rhs over GF(256).

    Full column rank plus a consistent system yields the unique solution.
    A rank-deficient system is reported with a nonzero null-space vector as
    witness; an inconsistent system is reported distinctly (witness is the
    offending reduced right-hand-side row).
    """
    a = np.array(matrix, dtype=np.uint8, copy=True)
    if a.ndim != 2:
        raise ValueError("matrix must be 2-D")
    b = np.array(rhs, dtype=np.uint8, copy=True)
    squeeze = b.ndim == 1
    if squeeze:
        b = b[:, None]
    if b.shape[0] != a.shape[0]:
        raise ValueError("row count mismatch between matrix and rhs")
    pivots, rank = _eliminate(a, b)
    cols = a.shape[1]
    # rows below the rank have an all-zero coefficient part after reduction
    for i in range(rank, a.shape[0]):
        if b[i].any():
            return GaussResult("inconsistent", None, rank, witness=b[i].copy())
    if rank < cols:
        free = next(c for c in range(cols) if c not in pivots)
        null = np.zeros(cols, dtype=np.uint8)
        null[free] = 1
        for r, c in enumerate(pivots):
            null[c] = a[r, free]
        return GaussResult("rank_deficient", None, rank, witness=null)
    x = np.zeros((cols, b.shape[1]), dtype=np.uint8)
    for r, c in enumerate(pivots):
        x[c] = b[r]
    return GaussResult("unique", x[:, 0] if squeeze else x, rank)


def solve_any(matrix, rhs) -> Optional[np.ndarray]:
    """A particular solution (free variables zero), or None if inconsistent."""
    a = np.array(matrix, dtype=np.uint8, copy=True)
    b = np.array(rhs, dtype=np.uint8, copy=True)
    squeeze = b.ndim == 1
    if squeeze:
        b = b[:, None]
    pivots, rank = _eliminate(a, b)
    for i in range(rank, a.shape[0]):
        if b[i].any():
            return None
    x = np.zeros((a.shape[1], b.shape[1]), dtype=np.uint8)
    for r, c in enumerate(pivots):
        x[c] = b[r]
    return x[:, 0] if squeeze else x
