"""Safe evaluation of the small arithmetic expressions stored in the data files.

Catalog entries such as ``"-a1*a5/b"`` or range predicates such as
``"-1 <= a < b < 1 and a*b != 0"`` are parsed with :mod:`ast` and evaluated
over Fractions (or Polynomials, for free automorphism parameters).  Anything
beyond arithmetic, comparisons, boolean connectives and ``abs`` is rejected.
"""

from __future__ import annotations

import ast
import operator
from fractions import Fraction
from functools import lru_cache
from typing import Mapping

_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}
_CMPOPS = {
    ast.Lt: operator.lt,
    ast.LtE: operator.le,
    ast.Gt: operator.gt,
    ast.GtE: operator.ge,
    ast.Eq: operator.eq,
    ast.NotEq: operator.ne,
}


@lru_cache(maxsize=4096)
def _parse(source: str) -> ast.Expression:
    return ast.parse(source.strip(), mode="eval")


def _eval(node, env):
    if isinstance(node, ast.Expression):
        return _eval(node.body, env)
    if isinstance(node, ast.Constant):
        if isinstance(node.value, bool) or not isinstance(node.value, int):
            raise ValueError(f"only integer literals are allowed, got {node.value!r}")
        return Fraction(node.value)
    if isinstance(node, ast.Name):
        try:
            return env[node.id]
        except KeyError:
            raise NameError(node.id) from None
    if isinstance(node, ast.UnaryOp):
        v = _eval(node.operand, env)
        if isinstance(node.op, ast.USub):
            return -v
        if isinstance(node.op, ast.UAdd):
            return v
        if isinstance(node.op, ast.Not):
            return not v
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        left, right = _eval(node.left, env), _eval(node.right, env)
        if isinstance(node.op, ast.Pow):
            if not isinstance(right, Fraction) or right.denominator != 1 or right < 0:
                raise ValueError("exponents must be non-negative integers")
            right = int(right)
        return _BINOPS[type(node.op)](left, right)
    if isinstance(node, ast.Compare):
        left = _eval(node.left, env)
        for op, comp in zip(node.ops, node.comparators):
            right = _eval(comp, env)
            if not _CMPOPS[type(op)](left, right):
                return False
            left = right
        return True
    if isinstance(node, ast.BoolOp):
        values = (_eval(v, env) for v in node.values)
        return all(values) if isinstance(node.op, ast.And) else any(values)
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id == "abs":
        (arg,) = node.args
        return abs(_eval(arg, env))
    raise ValueError(f"unsupported expression element: {ast.dump(node)}")


def evaluate(source: str, env: Mapping[str, object] | None = None):
    """Evaluate ``source`` with names resolved from ``env``."""
    return _eval(_parse(source), dict(env or {}))


def names_in(source: str) -> set[str]:
    return {n.id for n in ast.walk(_parse(source)) if isinstance(n, ast.Name) and n.id != "abs"}
