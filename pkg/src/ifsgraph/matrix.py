"""Exact non-negative matrices and certified spectral radius enclosures."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import mpmath

from .digraph import tarjan_scc
from .errors import NonSquare


@dataclass(frozen=True)
class TransitionMatrix:
    """Dense matrix of exact rationals stored row-major as nested tuples."""

    rows: tuple

    def __post_init__(self):
        rows = tuple(tuple(Fraction(x) for x in row) for row in self.rows)
        object.__setattr__(self, "rows", rows)
        if rows and len({len(r) for r in rows}) != 1:
            raise ValueError("ragged matrix")

    @classmethod
    def identity(cls, n: int) -> "TransitionMatrix":
        return cls(tuple(tuple(Fraction(int(i == j)) for j in range(n)) for i in range(n)))

    @classmethod
    def zeros(cls, m: int, n: int) -> "TransitionMatrix":
        return cls(tuple(tuple(Fraction(0) for _ in range(n)) for _ in range(m)))

    @property
    def shape(self) -> tuple[int, int]:
        return (len(self.rows), len(self.rows[0]) if self.rows else 0)

    def __getitem__(self, ij):
        i, j = ij
        return self.rows[i][j]

    def __matmul__(self, other: "TransitionMatrix") -> "TransitionMatrix":
        m, k = self.shape
        k2, n = other.shape
        if k != k2:
            raise ValueError(f"shape mismatch {self.shape} @ {other.shape}")
        cols = list(zip(*other.rows))
        return TransitionMatrix(tuple(
            tuple(sum((a * b for a, b in zip(row, col) if a and b), Fraction(0)) for col in cols)
            for row in self.rows))

    def __pow__(self, n: int) -> "TransitionMatrix":
        result = TransitionMatrix.identity(self.shape[0])
        base = self
        while n:
            if n & 1:
                result = result @ base
            base = base @ base
            n >>= 1
        return result

    def norm1(self) -> Fraction:
        """Sum of all entries (entries are non-negative)."""
        return sum((x for row in self.rows for x in row), Fraction(0))

    def columns_positive(self) -> bool:
        return all(any(x > 0 for x in col) for col in zip(*self.rows))

    def is_nonnegative(self) -> bool:
        return all(x >= 0 for row in self.rows for x in row)

    def to_strings(self) -> list[list[str]]:
        return [[_fstr(x) for x in row] for row in self.rows]

    def __repr__(self):
        return "TransitionMatrix(" + repr(self.to_strings()) + ")"


def _fstr(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def _mpf_to_fraction(x) -> Fraction:
    man, exp = x.man_exp
    man = int(man)
    return Fraction(man) * (Fraction(2) ** exp) if exp >= 0 else Fraction(man, 1 << -exp)


def _block_bounds(block: list[list[Fraction]], tol: Fraction, max_dps: int) -> tuple[Fraction, Fraction]:
    """Collatz-Wielandt bounds for an irreducible non-negative block."""
    n = len(block)
    dps = 30
    best = None
    while True:
        ctx = mpmath.MPContext()
        ctx.dps = dps
        a = ctx.matrix([[ctx.mpf(x.numerator) / x.denominator for x in row] for row in block])
        vals, vecs = ctx.eig(a)
        k = max(range(n), key=lambda i: ctx.re(vals[i]))
        v = [abs(vecs[i, k]) for i in range(n)]
        vmax = max(v)
        # an exactly positive test vector keeps the bounds rigorous
        floor = vmax * ctx.mpf(2) ** (-(dps * 3))
        vq = [_mpf_to_fraction(max(x, floor) / vmax) for x in v]
        ratios = [sum((block[i][j] * vq[j] for j in range(n)), Fraction(0)) / vq[i] for i in range(n)]
        lo, hi = min(ratios), max(ratios)
        if best is None or hi - lo < best[1] - best[0]:
            best = (lo, hi)
        if best[1] - best[0] <= tol or dps >= max_dps:
            return best
        dps *= 2


def spectral_radius(m, tol: float | Fraction = Fraction(1, 10 ** 12), max_dps: int = 480) -> tuple[Fraction, Fraction]:
    """Enclosure ``(lo, hi)`` of the spectral radius of a non-negative matrix.

    The matrix is split into irreducible diagonal blocks (strongly
    connected components of its support graph); trivial 1x1 blocks are
    exact, and the Perron root of each larger block is bracketed by
    Collatz-Wielandt ratios ``(Bv)_i / v_i`` evaluated exactly at a
    positive rational vector taken from a high-precision eigenvector.
    Triangular inputs therefore come out exact.
    """
    rows = m.rows if isinstance(m, TransitionMatrix) else tuple(tuple(Fraction(x) for x in r) for r in m)
    n = len(rows)
    if any(len(r) != n for r in rows):
        raise NonSquare(f"matrix of shape {n}x{len(rows[0]) if rows else 0} is not square")
    if n == 0:
        raise NonSquare("empty matrix")
    tol = Fraction(tol)
    succ = [[j for j in range(n) if rows[i][j] > 0] for i in range(n)]
    lo = hi = Fraction(0)
    for comp in tarjan_scc(n, succ):
        if len(comp) == 1:
            d = rows[comp[0]][comp[0]]
            lo, hi = max(lo, d), max(hi, d)
            continue
        block = [[rows[i][j] for j in comp] for i in comp]
        blo, bhi = _block_bounds(block, tol, max_dps)
        lo, hi = max(lo, blo), max(hi, bhi)
    return lo, hi


def power_iteration_radius(m: Sequence[Sequence], iters: int = 5000) -> float:
    """Plain floating-point power iteration on ``M + I``; an independent check only."""
    import numpy as np

    a = np.array([[float(x) for x in row] for row in (m.rows if isinstance(m, TransitionMatrix) else m)])
    n = a.shape[0]
    b = a + np.eye(n)
    v = np.ones(n)
    lam = 1.0
    for _ in range(iters):
        w = b @ v
        lam = np.linalg.norm(w, 1) / np.linalg.norm(v, 1)
        v = w / np.linalg.norm(w, 1)
    return float(lam - 1.0)
