from fractions import Fraction
from itertools import combinations
from math import gcd

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from orbispec import intlinalg as il

small_int = st.integers(min_value=-6, max_value=6)


def int_matrix(rows, cols):
    return st.lists(st.lists(small_int, min_size=cols, max_size=cols), min_size=rows, max_size=rows)


def test_as_fraction_parses_strings_and_rejects_floats():
    assert il.as_fraction("3/4") == Fraction(3, 4)
    assert il.as_fraction(2) == 2
    with pytest.raises((TypeError, ValueError)):
        il.as_fraction(0.5)


def test_inverse_and_det_are_exact():
    m = [[2, 1], [1, 1]]
    assert il.det(m) == 1
    assert il.matmul(m, il.inverse(m)) == il.identity(2)
    assert il.det([[1, Fraction(1, 2)], [Fraction(1, 2), 1]]) == Fraction(3, 4)


@given(int_matrix(3, 3))
def test_smith_form_is_diagonal_with_divisibility(m):
    D, U, V = il.smith_decomposition(m)
    assert np.array_equal(np.array(il.matmul(il.matmul(U, m), V)), np.array(D))
    assert abs(il.det(U)) == 1 and abs(il.det(V)) == 1
    diag = [D[i][i] for i in range(3)]
    assert all(D[i][j] == 0 for i in range(3) for j in range(3) if i != j)
    nonzero = [d for d in diag if d]
    assert all(d > 0 for d in nonzero)
    assert all(b % a == 0 for a, b in zip(nonzero, nonzero[1:]))
    assert len(nonzero) == il.rank(m)


@given(int_matrix(2, 3))
def test_kernel_basis_spans_integer_kernel(m):
    basis = il.integer_kernel_basis(m, 3)
    assert len(basis) == 3 - il.rank(m)
    for v in basis:
        assert il.matvec(m, v) == [0, 0]
    if basis:
        # a Z-basis of a saturated sublattice has maximal minors with gcd 1
        k = len(basis)
        minors = [il.det([[basis[c][r] for c in range(k)] for r in rows]) for rows in combinations(range(3), k)]
        g = 0
        for x in minors:
            g = gcd(g, int(x))
        assert g == 1


def test_elementary_symmetric_top_is_sum_of_principal_minors():
    m = [[2, 0, 0], [0, 3, 0], [0, 0, 0]]
    assert il.elementary_symmetric_top(m) == 6
