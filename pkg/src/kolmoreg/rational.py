"""Small exact linear-algebra kit over :class:`fractions.Fraction`.

Matrices are tuples of row tuples. Nothing here touches floating point.
"""

from __future__ import annotations

from fractions import Fraction
from numbers import Rational
from typing import Sequence

Matrix = tuple[tuple[Fraction, ...], ...]


def as_fraction(value) -> Fraction:
    """Coerce ints, Fractions, ``"p/q"`` strings and floats to a Fraction.

    Floats go through their shortest decimal repr, so ``1.1`` becomes 11/10
    rather than the binary expansion.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, (int, Rational)):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(repr(value))
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"cannot interpret {value!r} as a rational")


def format_fraction(q: Fraction) -> str:
    """Canonical ``"p/q"`` string (denominator always written)."""
    q = as_fraction(q)
    return f"{q.numerator}/{q.denominator}"


def to_matrix(rows: Sequence[Sequence]) -> Matrix:
    return tuple(tuple(as_fraction(v) for v in row) for row in rows)


def zeros(n_rows: int, n_cols: int) -> Matrix:
    return tuple((Fraction(0),) * n_cols for _ in range(n_rows))


def identity(n: int) -> Matrix:
    return tuple(
        tuple(Fraction(int(i == j)) for j in range(n)) for i in range(n)
    )


def shape(m: Matrix) -> tuple[int, int]:
    return len(m), (len(m[0]) if m else 0)


def matmul(a: Matrix, b: Matrix) -> Matrix:
    n, k = shape(a)
    k2, p = shape(b)
    if k != k2:
        raise ValueError(f"shape mismatch {n}x{k} @ {k2}x{p}")
    cols = list(zip(*b)) if b else [()] * p
    return tuple(
        tuple(sum((x * y for x, y in zip(row, col)), Fraction(0)) for col in cols)
        for row in a
    )


def transpose(m: Matrix) -> Matrix:
    return tuple(zip(*m)) if m else ()


def hstack(*blocks: Matrix) -> Matrix:
    n = len(blocks[0])
    return tuple(sum((tuple(b[i]) for b in blocks), ()) for i in range(n))


def echelon(m: Matrix) -> tuple[Matrix, list[int]]:
    """Row echelon form with partial pivoting by largest absolute value.

    Ties go to the first (topmost) candidate row. Returns the reduced matrix
    and the list of pivot columns.
    """
    rows = [list(r) for r in m]
    n_rows, n_cols = shape(m)
    pivots = []
    r = 0
    for c in range(n_cols):
        if r == n_rows:
            break
        best = max(range(r, n_rows), key=lambda i: (abs(rows[i][c]), -i))
        if rows[best][c] == 0:
            continue
        rows[r], rows[best] = rows[best], rows[r]
        p = rows[r][c]
        for i in range(r + 1, n_rows):
            f = rows[i][c] / p
            if f:
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
    return tuple(tuple(row) for row in rows), pivots


def rank(m: Matrix) -> int:
    if not m or not m[0]:
        return 0
    return len(echelon(m)[1])
