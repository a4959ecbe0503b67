from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from liestruct import exact
from liestruct.errors import Inconsistent, ScalarMixing, SingularMatrix

small = st.fractions(min_value=-4, max_value=4, max_denominator=5)


def square(n):
    return st.lists(small, min_size=n * n, max_size=n * n).map(lambda xs: exact.exact_array(xs, (n, n)))


def test_to_fraction_accepts_exact_inputs():
    assert exact.to_fraction(3) == 3
    assert exact.to_fraction("-2/6") == Fraction(-1, 3)
    assert exact.to_fraction(np.int64(5)) == 5


@pytest.mark.parametrize("bad", [0.5, np.float64(1.0), True])
def test_to_fraction_refuses_floats_and_bools(bad):
    with pytest.raises(ScalarMixing):
        exact.to_fraction(bad)


def test_fraction_str():
    assert exact.fraction_str(Fraction(4, 2)) == "2"
    assert exact.fraction_str(Fraction(-3, 9)) == "-1/3"


def test_is_zero_rejects_float_arrays():
    with pytest.raises(ScalarMixing):
        exact.is_zero(np.zeros(3))


def test_same_kind_detects_mixing():
    with pytest.raises(ScalarMixing):
        exact.same_kind(exact.identity(2), np.eye(2))


def test_to_float_overflow():
    big = exact.exact_array([[Fraction(10) ** 400]])
    with pytest.raises(OverflowError):
        exact.to_float(big)


def test_rref_and_rank_small():
    m = exact.exact_array([[1, 2, 3], [2, 4, 6], [1, 0, 1]])
    r, piv = exact.rref(m)
    assert piv == [0, 1]
    assert exact.rank(m) == 2


def test_nullspace_vectors_are_annihilated():
    m = exact.exact_array([[1, 2, 3], [2, 4, 6]])
    ker = exact.nullspace(m)
    assert len(ker) == 2
    for v in ker:
        assert exact.is_zero(m.dot(v))


def test_solve_affine_inconsistent():
    a = exact.exact_array([[1, 1], [1, 1]])
    with pytest.raises(Inconsistent):
        exact.solve_affine(a, [1, 2])


def test_inverse_singular():
    with pytest.raises(SingularMatrix):
        exact.inverse(exact.exact_array([[1, 2], [2, 4]]))


@settings(max_examples=60, deadline=None)
@given(square(3))
def test_det_agrees_with_float_oracle(m):
    assert float(exact.det(m)) == pytest.approx(np.linalg.det(exact.to_float(m)), abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(square(3), square(3))
def test_det_is_multiplicative(a, b):
    assert exact.det(a.dot(b)) == exact.det(a) * exact.det(b)


@settings(max_examples=60, deadline=None)
@given(square(4))
def test_rank_nullity(m):
    assert exact.rank(m) + len(exact.nullspace(m)) == 4


@settings(max_examples=60, deadline=None)
@given(square(3))
def test_inverse_round_trip(m):
    if exact.det(m) == 0:
        return
    assert np.all(m.dot(exact.inverse(m)) == exact.identity(3))


@settings(max_examples=40, deadline=None)
@given(square(3), st.lists(small, min_size=3, max_size=3))
def test_solve_affine_solutions_satisfy_system(a, x):
    b = list(a.dot(exact.exact_array(x)))
    part, kernel = exact.solve_affine(a, b)
    assert list(a.dot(part)) == b
    for h in kernel:
        assert exact.is_zero(a.dot(h))
