"""Exact integer and rational linear algebra on small matrices.

Matrices are plain nested tuples/lists of ``int`` or ``Fraction``. The sizes
involved are tiny (n <= 4, stacked systems of a few hundred rows), so clarity
wins over speed.
"""

from __future__ import annotations

import numbers
from fractions import Fraction
from itertools import combinations
from typing import Sequence

import sympy
from sympy.matrices.normalforms import smith_normal_decomp

Matrix = Sequence[Sequence]


def as_fraction(value) -> Fraction:
    """Parse ints, Fractions and ``"p/q"`` strings. Floats are rejected."""
    if isinstance(value, bool):
        raise TypeError("booleans are not matrix entries")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, numbers.Integral):
        return Fraction(int(value))
    if isinstance(value, str):
        return Fraction(value.strip())
    if isinstance(value, sympy.Rational):
        return Fraction(int(value.p), int(value.q))
    raise TypeError(f"expected an exact rational, got {type(value).__name__}: {value!r}")


def det(m: Matrix) -> Fraction:
    """Determinant by fraction-exact Gaussian elimination."""
    a = [[Fraction(x) for x in row] for row in m]
    n = len(a)
    if n == 0:
        return Fraction(1)
    sign = 1
    result = Fraction(1)
    for col in range(n):
        pivot = next((r for r in range(col, n) if a[r][col] != 0), None)
        if pivot is None:
            return Fraction(0)
        if pivot != col:
            a[col], a[pivot] = a[pivot], a[col]
            sign = -sign
        p = a[col][col]
        result *= p
        for r in range(col + 1, n):
            f = a[r][col] / p
            if f:
                for c in range(col, n):
                    a[r][c] -= f * a[col][c]
    return sign * result


def rank(m: Matrix) -> int:
    a = [[Fraction(x) for x in row] for row in m]
    if not a:
        return 0
    rows, cols = len(a), len(a[0])
    r = 0
    for col in range(cols):
        pivot = next((i for i in range(r, rows) if a[i][col] != 0), None)
        if pivot is None:
            continue
        a[r], a[pivot] = a[pivot], a[r]
        for i in range(rows):
            if i != r and a[i][col] != 0:
                f = a[i][col] / a[r][col]
                for c in range(col, cols):
                    a[i][c] -= f * a[r][c]
        r += 1
        if r == rows:
            break
    return r


def matmul(a: Matrix, b: Matrix) -> list[list]:
    return [[sum(x * y for x, y in zip(row, col)) for col in zip(*b)] for row in a]


def matvec(a: Matrix, v: Sequence) -> list:
    return [sum(x * y for x, y in zip(row, v)) for row in a]


def transpose(a: Matrix) -> list[list]:
    return [list(col) for col in zip(*a)]


def identity(n: int) -> list[list[int]]:
    return [[int(i == j) for j in range(n)] for i in range(n)]


def inverse(m: Matrix) -> list[list[Fraction]]:
    """Gauss-Jordan inverse over the rationals."""
    n = len(m)
    a = [[Fraction(x) for x in row] + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(m)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if a[r][col] != 0), None)
        if pivot is None:
            raise ZeroDivisionError("singular matrix")
        a[col], a[pivot] = a[pivot], a[col]
        p = a[col][col]
        a[col] = [x / p for x in a[col]]
        for r in range(n):
            if r != col and a[r][col] != 0:
                f = a[r][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
    return [row[n:] for row in a]


def elementary_symmetric_top(m: Matrix) -> Fraction:
    """Sum of the principal minors of size rank(m).

    For a diagonalizable matrix this is the product of its nonzero eigenvalues,
    which is what the normal-space determinant of ``I - A`` needs.
    """
    r = rank(m)
    n = len(m)
    if r == 0:
        return Fraction(1)
    total = Fraction(0)
    for idx in combinations(range(n), r):
        total += det([[m[i][j] for j in idx] for i in idx])
    return total


def smith_decomposition(m: Matrix) -> tuple[list[list[int]], list[list[int]], list[list[int]]]:
    """Return ``(D, U, V)`` with ``D = U @ m @ V`` diagonal and ``U, V`` unimodular.

    Nonzero diagonal entries of ``D`` come first and are made positive by
    flipping signs of rows of ``U``.
    """
    M = sympy.Matrix(m)
    D, U, V = smith_normal_decomp(M)
    D = [[int(x) for x in D.row(i)] for i in range(D.rows)]
    U = [[int(x) for x in U.row(i)] for i in range(U.rows)]
    V = [[int(x) for x in V.row(i)] for i in range(V.rows)]
    rows, cols = len(D), len(D[0]) if D else 0
    nonzero = [i for i in range(min(rows, cols)) if D[i][i] != 0]
    # sympy orders nonzero invariant factors first; guard the assumption.
    if nonzero != list(range(len(nonzero))):
        raise ArithmeticError("unexpected Smith normal form ordering")
    for i in nonzero:
        if D[i][i] < 0:
            D[i][i] = -D[i][i]
            U[i] = [-x for x in U[i]]
    return D, U, V


def integer_kernel_basis(m: Matrix, ncols: int | None = None) -> list[list[int]]:
    """A Z-basis of ``ker(m) ∩ Z^n`` (returned as a list of column vectors)."""
    if not m:
        n = ncols or 0
        return [[int(i == j) for i in range(n)] for j in range(n)]
    D, _, V = smith_decomposition(m)
    n = len(m[0])
    r = sum(1 for i in range(min(len(D), n)) if D[i][i] != 0)
    return [[V[i][j] for i in range(n)] for j in range(r, n)]
