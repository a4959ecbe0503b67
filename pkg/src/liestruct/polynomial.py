"""Sparse multivariate polynomials with rational coefficients.

Small and deliberately plain: systems assembled by the solver are at most a
few hundred terms, so a dict of monomials is fast enough and keeps every
coefficient exact.  Polynomials mix freely with ints and Fractions, which lets
the tensor formulas in :mod:`liestruct.complex` run unchanged on object
arrays of polynomials.
"""

from __future__ import annotations

from fractions import Fraction
from numbers import Rational
from typing import Iterable, Mapping

import numpy as np

Monomial = tuple  # sorted tuple of (variable name, exponent) pairs


def _mul_monomials(a: Monomial, b: Monomial) -> Monomial:
    if not a:
        return b
    if not b:
        return a
    exps = dict(a)
    for v, e in b:
        exps[v] = exps.get(v, 0) + e
    return tuple(sorted(exps.items()))


class Polynomial:
    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[Monomial, Fraction] | None = None):
        self.terms: dict[Monomial, Fraction] = {}
        if terms:
            for m, c in terms.items():
                if c != 0:
                    self.terms[m] = Fraction(c)

    @classmethod
    def var(cls, name: str) -> "Polynomial":
        return cls({((name, 1),): Fraction(1)})

    @classmethod
    def const(cls, c) -> "Polynomial":
        return cls({(): Fraction(c)})

    @staticmethod
    def lift(x) -> "Polynomial":
        if isinstance(x, Polynomial):
            return x
        if isinstance(x, (Rational, int)):
            return Polynomial.const(Fraction(x))
        return NotImplemented

    # arithmetic ---------------------------------------------------------
    def __add__(self, other):
        other = Polynomial.lift(other)
        if other is NotImplemented:
            return other
        out = dict(self.terms)
        for m, c in other.terms.items():
            s = out.get(m, 0) + c
            if s == 0:
                out.pop(m, None)
            else:
                out[m] = s
        p = Polynomial()
        p.terms = out
        return p

    __radd__ = __add__

    def __neg__(self):
        p = Polynomial()
        p.terms = {m: -c for m, c in self.terms.items()}
        return p

    def __sub__(self, other):
        other = Polynomial.lift(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return Polynomial.lift(other) - self

    def __mul__(self, other):
        if isinstance(other, (Rational, int)) and not isinstance(other, Polynomial):
            if other == 0:
                return Polynomial()
            p = Polynomial()
            p.terms = {m: c * other for m, c in self.terms.items()}
            return p
        other = Polynomial.lift(other)
        if other is NotImplemented:
            return other
        out: dict[Monomial, Fraction] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = _mul_monomials(m1, m2)
                out[m] = out.get(m, 0) + c1 * c2
        return Polynomial(out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Polynomial):
            if not other.is_constant():
                raise ZeroDivisionError("division by a non-constant polynomial")
            other = other.constant()
        other = Fraction(other)
        if other == 0:
            raise ZeroDivisionError("division by zero")
        return self * (1 / other)

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise ValueError("only non-negative integer powers")
        out = Polynomial.const(1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __eq__(self, other):
        other = Polynomial.lift(other)
        if other is NotImplemented:
            return False
        return self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __bool__(self):
        return bool(self.terms)

    # inspection -----------------------------------------------------------
    def is_constant(self) -> bool:
        return all(m == () for m in self.terms)

    def constant(self) -> Fraction:
        return self.terms.get((), Fraction(0))

    def degree(self) -> int:
        return max((sum(e for _, e in m) for m in self.terms), default=0)

    def variables(self) -> set[str]:
        return {v for m in self.terms for v, _ in m}

    def substitute(self, values: Mapping[str, object]) -> "Polynomial":
        """Replace variables by Fractions or Polynomials."""
        out = Polynomial()
        for m, c in self.terms.items():
            term = Polynomial.const(c)
            rest = []
            for v, e in m:
                if v in values:
                    term = term * (Polynomial.lift(values[v]) ** e)
                else:
                    rest.append((v, e))
            if rest:
                term = term * Polynomial({tuple(rest): Fraction(1)})
            out = out + term
        return out

    def evaluate(self, values: Mapping[str, Fraction]) -> Fraction:
        """Exact evaluation; every variable must be bound."""
        total = Fraction(0)
        for m, c in self.terms.items():
            t = c
            for v, e in m:
                t *= values[v] ** e
            total += t
        return total

    def derivative(self, name: str) -> "Polynomial":
        out: dict[Monomial, Fraction] = {}
        for m, c in self.terms.items():
            exps = dict(m)
            e = exps.get(name, 0)
            if e == 0:
                continue
            if e == 1:
                del exps[name]
            else:
                exps[name] = e - 1
            key = tuple(sorted(exps.items()))
            out[key] = out.get(key, 0) + c * e
        return Polynomial(out)

    def __repr__(self):
        if not self.terms:
            return "0"
        parts = []
        for m, c in sorted(self.terms.items()):
            mono = "*".join(v if e == 1 else f"{v}**{e}" for v, e in m)
            if not mono:
                parts.append(str(c))
            elif c == 1:
                parts.append(mono)
            else:
                parts.append(f"{c}*{mono}")
        return " + ".join(parts)


def as_polynomial(x) -> Polynomial:
    p = Polynomial.lift(x)
    if p is NotImplemented:
        raise TypeError(f"cannot lift {x!r} to a polynomial")
    return p


def symbol_matrix(prefix: str, rows: int, cols: int) -> tuple[np.ndarray, list[str]]:
    """Object matrix of fresh variables ``prefix{i}_{j}`` plus their names in row order."""
    names = [f"{prefix}{i}_{j}" for i in range(rows) for j in range(cols)]
    m = np.empty((rows, cols), dtype=object)
    for k, name in enumerate(names):
        m[k // cols, k % cols] = Polynomial.var(name)
    return m, names


def collect(entries: Iterable) -> list[Polynomial]:
    """Flatten an iterable of scalars/polynomials into a list of Polynomials."""
    return [as_polynomial(e) for e in entries]
