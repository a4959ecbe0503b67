"""Exact rational linear algebra on numpy object arrays of ``Fraction``.

Tensors are uniformly exact (dtype ``object`` holding ``Fraction``) or
uniformly floating (``float64``).  Conversion from exact to float goes through
:func:`to_float`; the reverse direction only through
:func:`liestruct.solver.rationalize`.
"""

from __future__ import annotations

from fractions import Fraction
from numbers import Rational
from typing import Iterable, Sequence

import numpy as np

from .errors import Inconsistent, ScalarMixing, SingularMatrix

ZERO = Fraction(0)
ONE = Fraction(1)


def to_fraction(x) -> Fraction:
    """Coerce an int, ``Fraction`` or ``"p/q"`` string to a reduced ``Fraction``.

    Floats are refused: they must be rationalized explicitly.
    """
    if isinstance(x, bool):
        raise ScalarMixing(f"refusing boolean scalar {x!r}")
    if isinstance(x, Fraction):
        return x
    if isinstance(x, Rational):
        return Fraction(int(x.numerator), int(x.denominator))
    if isinstance(x, str):
        return Fraction(x.strip())
    if isinstance(x, (float, np.floating)):
        raise ScalarMixing(f"float {x!r} cannot enter exact arithmetic; rationalize it first")
    if isinstance(x, np.integer):
        return Fraction(int(x))
    raise TypeError(f"cannot interpret {x!r} as an exact rational")


def fraction_str(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def exact_array(data, shape: Sequence[int] | None = None) -> np.ndarray:
    """Build an object array of Fractions from nested sequences."""
    arr = np.array(data, dtype=object)
    if shape is not None:
        arr = arr.reshape(shape)
    out = np.empty(arr.shape, dtype=object)
    for idx, v in np.ndenumerate(arr):
        out[idx] = to_fraction(v)
    return out


def zeros(shape) -> np.ndarray:
    out = np.empty(shape, dtype=object)
    out.fill(ZERO)
    return out


def identity(n: int) -> np.ndarray:
    out = zeros((n, n))
    for i in range(n):
        out[i, i] = ONE
    return out


def is_exact(a: np.ndarray) -> bool:
    return np.asarray(a).dtype == object


def is_zero(a: np.ndarray) -> bool:
    """True iff every entry is exactly zero (exact arrays only)."""
    a = np.asarray(a)
    if a.dtype != object:
        raise ScalarMixing("is_zero is reserved for exact arrays; use a tolerance for floats")
    return all(v == 0 for v in a.flat)


def to_float(a: np.ndarray) -> np.ndarray:
    """Explicit exact -> float64 conversion; refuses overflow to infinity."""
    a = np.asarray(a)
    if a.dtype != object:
        return a.astype(float)
    out = np.array([float(v) for v in a.flat], dtype=float).reshape(a.shape)
    if not np.all(np.isfinite(out)):
        raise OverflowError("exact value does not fit in a double")
    return out


def same_kind(*arrays: np.ndarray) -> bool:
    """Raise unless all arrays are exact or all are float."""
    kinds = {np.asarray(a).dtype == object for a in arrays}
    if len(kinds) > 1:
        raise ScalarMixing("mixing exact and floating tensors; convert explicitly")
    return kinds.pop() if kinds else True


def rref(m: np.ndarray) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form over Q; returns (R, pivot columns)."""
    a = exact_array(m)
    rows, cols = a.shape
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        if r >= rows:
            break
        p = next((i for i in range(r, rows) if a[i, c] != 0), None)
        if p is None:
            continue
        if p != r:
            a[[r, p]] = a[[p, r]]
        inv = ONE / a[r, c]
        a[r] = [v * inv for v in a[r]]
        for i in range(rows):
            if i != r and a[i, c] != 0:
                factor = a[i, c]
                a[i] = [x - factor * y for x, y in zip(a[i], a[r])]
        pivots.append(c)
        r += 1
    return a, pivots


def rank(m: np.ndarray) -> int:
    return len(rref(m)[1])


def nullspace(m: np.ndarray) -> list[np.ndarray]:
    """Basis of the right kernel of ``m`` (one exact vector per free column)."""
    m = exact_array(m)
    cols = m.shape[1]
    r, pivots = rref(m)
    free = [c for c in range(cols) if c not in pivots]
    basis = []
    for fc in free:
        v = zeros(cols)
        v[fc] = ONE
        for i, pc in enumerate(pivots):
            v[pc] = -r[i, fc]
        basis.append(v)
    return basis


def solve_affine(a: np.ndarray, b: Iterable) -> tuple[np.ndarray, list[np.ndarray]]:
    """Solve ``a x = b`` exactly.

    Returns a particular solution (free variables set to zero) and a basis of
    the homogeneous solutions.  Raises ``Inconsistent`` when no solution exists.
    """
    a = exact_array(a)
    b = exact_array(list(b))
    rows, cols = a.shape
    aug = zeros((rows, cols + 1))
    aug[:, :cols] = a
    aug[:, cols] = b
    r, pivots = rref(aug)
    if cols in pivots:
        raise Inconsistent("linear system has no solution")
    x = zeros(cols)
    for i, pc in enumerate(pivots):
        x[pc] = r[i, cols]
    return x, nullspace(a)


def det(m: np.ndarray) -> Fraction:
    """Determinant by fraction-free (Bareiss) elimination."""
    a = exact_array(m)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("determinant of a non-square matrix")
    if n == 0:
        return ONE
    # scale to an integer matrix, then Bareiss keeps every intermediate integral
    lcm = 1
    for v in a.flat:
        lcm = lcm * v.denominator // np.gcd(lcm, v.denominator)
    ints = [[int(v * lcm) for v in row] for row in a]
    sign = 1
    prev = 1
    for k in range(n - 1):
        if ints[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if ints[i][k] != 0), None)
            if swap is None:
                return ZERO
            ints[k], ints[swap] = ints[swap], ints[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                ints[i][j] = (ints[i][j] * ints[k][k] - ints[i][k] * ints[k][j]) // prev
        prev = ints[k][k]
    return Fraction(sign * ints[n - 1][n - 1], lcm**n)


def inverse(m: np.ndarray) -> np.ndarray:
    """Exact inverse by Gauss-Jordan elimination; ``SingularMatrix`` if none."""
    a = exact_array(m)
    n = a.shape[0]
    aug = zeros((n, 2 * n))
    aug[:, :n] = a
    aug[:, n:] = identity(n)
    r, pivots = rref(aug)
    if pivots[:n] != list(range(n)):
        raise SingularMatrix("matrix is not invertible")
    return r[:, n:]


def random_fraction(rng, lo: int = -3, hi: int = 3, max_den: int = 5) -> Fraction:
    """A small random rational in [lo, hi] drawn from a numpy Generator."""
    den = int(rng.integers(1, max_den + 1))
    num = int(rng.integers(lo * den, hi * den + 1))
    return Fraction(num, den)
