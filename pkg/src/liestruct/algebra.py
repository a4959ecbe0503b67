"""Lie algebras, the four-dimensional catalog, and automorphism families.

Conventions used throughout the package:

* ``f[a, b, c]`` is the structure constant in ``[X_a, X_b] = f[a, b, c] X_c``.
* Matrices act on basis rows: ``X'_a = A[a, b] X_b`` and ``J X_a = J[a, b] X_b``.
  Under this convention ``A`` is an automorphism iff
  ``A[a,d] A[b,e] f[d,e,s] == f[a,b,g] A[g,s]``.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from importlib import resources
from typing import Mapping, Sequence

import numpy as np

from . import exact
from .errors import (
    ConstraintViolation,
    DimensionMismatch,
    MissingBinding,
    ParameterOutOfRange,
    SingularBinding,
    UnknownAlgebra,
)
from .expr import evaluate, names_in
from .polynomial import Polynomial

CATALOG_ENV = "LIESTRUCT_CATALOG"


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class LieAlgebra:
    name: str
    f: np.ndarray
    params: Mapping[str, Fraction] = field(default_factory=dict)
    label: str = ""

    def __post_init__(self):
        f = np.asarray(self.f)
        if f.ndim != 3 or len(set(f.shape)) != 1:
            raise DimensionMismatch(f"structure constants must be n x n x n, got {f.shape}")
        object.__setattr__(self, "f", _frozen(f))
        object.__setattr__(self, "params", dict(self.params))

    @property
    def dim(self) -> int:
        return self.f.shape[0]

    def is_antisymmetric(self) -> bool:
        diff = self.f + self.f.transpose(1, 0, 2)
        return exact.is_zero(diff) if exact.is_exact(diff) else bool(np.all(diff == 0))

    def is_abelian(self) -> bool:
        return all(v == 0 for v in self.f.flat)

    def bindings_str(self) -> dict[str, str]:
        return {k: exact.fraction_str(v) for k, v in self.params.items()}


@dataclass(frozen=True)
class AdjointReps:
    """``Y[g][b, a] = -f[b, a, g]`` and ``chi[b][a, g] = -f[b, a, g]``."""

    Y: np.ndarray
    chi: np.ndarray


def structure_constants(dim: int, entries: Sequence, env: Mapping | None = None) -> np.ndarray:
    """Build an exact antisymmetric tensor from 1-based ``(a, b, c, value)`` entries."""
    f = exact.zeros((dim, dim, dim))
    for a, b, c, value in entries:
        v = evaluate(value, env) if isinstance(value, str) else exact.to_fraction(value)
        i, j, k = a - 1, b - 1, c - 1
        if i == j:
            if v != 0:
                raise ValueError(f"[X{a},X{a}] must vanish")
            continue
        if f[i, j, k] != 0 and f[i, j, k] != v:
            raise ValueError(f"conflicting entries for f_({a}{b})^{c}")
        f[i, j, k] = v
        f[j, i, k] = -v
    return f


def lie_algebra(name: str, dim: int, entries: Sequence, label: str = "") -> LieAlgebra:
    """An algebra outside the catalog, from 1-based structure-constant entries."""
    return LieAlgebra(name=name, f=structure_constants(dim, entries), label=label or name)


def _nonzero(f: np.ndarray) -> list[tuple[int, int, int, object]]:
    return [(a, b, c, f[a, b, c]) for a, b, c in zip(*np.nonzero(f != 0))]


def _zeros_like(shape: tuple, *arrays: np.ndarray) -> np.ndarray:
    if any(np.asarray(x).dtype == object for x in arrays):
        return exact.zeros(shape)
    return np.zeros(shape)


def jacobi_residual(L: LieAlgebra) -> np.ndarray:
    """Cyclic sum ``f_ab^d f_dg^e + f_bg^d f_da^e + f_ga^d f_db^e``; zero iff Lie."""
    f = L.f
    n = f.shape[0]
    # structure constants are sparse; contract over nonzero entries only
    by_first: dict[int, list] = {}
    for d, g, e, w in _nonzero(f):
        by_first.setdefault(d, []).append((g, e, w))
    t = _zeros_like((n, n, n, n), f)
    for a, b, d, v in _nonzero(f):
        for g, e, w in by_first.get(d, ()):
            t[a, b, g, e] += v * w
    return t + t.transpose(1, 2, 0, 3) + t.transpose(2, 0, 1, 3)


def adjoint_reps(L: LieAlgebra) -> AdjointReps:
    chi = -L.f
    return AdjointReps(Y=_frozen(-L.f.transpose(2, 0, 1)), chi=_frozen(chi))


def isomorphism_residual(f_source: np.ndarray, f_target: np.ndarray, C: np.ndarray) -> np.ndarray:
    """Residual of ``[X'_a, X'_b] = f_source[a,b,g] X'_g`` for ``X'_a = C[a,b] X_b``.

    ``X`` carries the brackets ``f_target``.  Zero iff ``C`` maps the source
    bracket onto the target one.
    """
    C = np.asarray(C)
    n = C.shape[0]
    out = _zeros_like((n, n, n), C, f_source, f_target)
    for d, e, s, v in _nonzero(f_target):
        out[:, :, s] += v * np.multiply.outer(C[:, d], C[:, e])
    for a, b, g, v in _nonzero(f_source):
        out[a, b, :] -= v * C[g, :]
    return out


def is_automorphism(L: LieAlgebra, A: np.ndarray) -> tuple[bool, np.ndarray]:
    A = np.asarray(A)
    if A.shape != (L.dim, L.dim):
        raise DimensionMismatch(f"expected a {L.dim}x{L.dim} matrix, got {A.shape}")
    residual = isomorphism_residual(L.f, L.f, A)
    if exact.is_exact(residual):
        return exact.is_zero(residual), residual
    return bool(np.all(residual == 0)), residual


# ---------------------------------------------------------------------------
# catalog


def _catalog_text() -> str:
    path = os.environ.get(CATALOG_ENV)
    if path:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    return resources.files("liestruct.data").joinpath("catalog.json").read_text(encoding="utf-8")


@lru_cache(maxsize=4)
def _load_catalog(text: str) -> dict:
    doc = json.loads(text)
    if doc.get("format") != "liestruct-catalog":
        raise ValueError("not a liestruct catalog document")
    return doc


def catalog_document() -> dict:
    return _load_catalog(_catalog_text())


def catalog_checksum() -> str:
    """sha256 of the canonical serialization of the loaded catalog."""
    canonical = json.dumps(catalog_document(), sort_keys=True, ensure_ascii=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def _norm_key(name: str) -> str:
    key = name.strip().replace(" ", "").replace("⊕", "+").replace("\\oplus", "+")
    key = key.replace("$", "").replace("{", "").replace("}", "")
    return key.lower()


@lru_cache(maxsize=4)
def _alias_table(text: str) -> dict[str, dict]:
    table = {}
    for row in _load_catalog(text)["rows"]:
        for key in (row["name"], row["label"]):
            table[_norm_key(key)] = row
    return table


def catalog_row(name: str) -> dict:
    try:
        return _alias_table(_catalog_text())[_norm_key(name)]
    except KeyError:
        raise UnknownAlgebra(name) from None


def catalog_names() -> list[str]:
    return [row["name"] for row in catalog_document()["rows"]]


def _bind(row: dict, bindings: Mapping | None, use_defaults: bool) -> dict[str, Fraction]:
    bindings = dict(bindings or {})
    declared = [p["name"] for p in row["params"]]
    out = {}
    for p in declared:
        if p in bindings:
            out[p] = exact.to_fraction(bindings[p])
        elif use_defaults and p in row.get("default_bindings", {}):
            out[p] = exact.to_fraction(row["default_bindings"][p])
        else:
            raise MissingBinding(f"{row['name']} needs a value for parameter {p!r}")
    extra = set(bindings) - set(declared)
    if extra:
        raise ParameterOutOfRange(f"{row['name']} has no parameters {sorted(extra)}")
    for p in row["params"]:
        if not evaluate(p["range"], out):
            raise ParameterOutOfRange(f"{row['name']}: {p['name']} = {out[p['name']]} violates {p['range']}")
    return out


def catalog_get(name: str, bindings: Mapping | None = None, *, use_defaults: bool = False) -> LieAlgebra:
    """Catalog algebra ``name`` with its parameters bound to rationals."""
    row = catalog_row(name)
    env = _bind(row, bindings, use_defaults)
    f = structure_constants(row["dim"], row["f"], env)
    return LieAlgebra(name=row["name"], f=f, params=env, label=row["label"])


def random_bindings(name: str, rng: np.random.Generator, max_tries: int = 1000) -> dict[str, Fraction]:
    """Random small rationals satisfying the row's range predicates."""
    row = catalog_row(name)
    if not row["params"]:
        return {}
    for _ in range(max_tries):
        trial = {p["name"]: exact.random_fraction(rng, -2, 2, 6) for p in row["params"]}
        if all(evaluate(p["range"], trial) for p in row["params"]):
            return trial
    raise RuntimeError(f"could not sample admissible bindings for {name}")


# ---------------------------------------------------------------------------
# automorphism families


def circle_point(t: Fraction) -> tuple[Fraction, Fraction]:
    """Rational point on c^2 + s^2 = 1 by the tan-half-angle map."""
    t = exact.to_fraction(t)
    d = 1 + t * t
    return (1 - t * t) / d, 2 * t / d


def hyperbola_point(t: Fraction) -> tuple[Fraction, Fraction]:
    """Rational point on c^2 - s^2 = 1; ``t`` must avoid +-1."""
    t = exact.to_fraction(t)
    d = 1 - t * t
    if d == 0:
        raise SingularBinding("hyperbola parameter t = +-1 has no point")
    return (1 + t * t) / d, 2 * t / d


def _factor_matrix(factor: dict, dim: int, c, s) -> np.ndarray:
    """One Rotation/Boost block embedded in the identity."""
    m = np.empty((dim, dim), dtype=object)
    for i in range(dim):
        for j in range(dim):
            m[i, j] = Fraction(int(i == j))
    i, j = factor["plane"][0] - 1, factor["plane"][1] - 1
    m[i, i] = c
    m[j, j] = c
    if factor["type"] == "rotation":
        sign = factor.get("sign", 1)
        m[i, j] = sign * s
        m[j, i] = -sign * s
    else:
        m[i, j] = s
        m[j, i] = s
    return m


@dataclass(frozen=True)
class AutomorphismFamily:
    algebra: LieAlgebra
    params: tuple[str, ...]
    entries: tuple[tuple[str, ...], ...]
    factors: tuple[dict, ...] = ()
    identity: Mapping = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.algebra.dim

    @property
    def angle_params(self) -> tuple[str, ...]:
        return tuple(fac["param"] for fac in self.factors)

    @property
    def all_params(self) -> tuple[str, ...]:
        return self.angle_params + self.params

    def _scalar_matrix(self, env: Mapping) -> np.ndarray:
        scope = dict(self.algebra.params)
        scope.update(env)
        m = np.empty((self.dim, self.dim), dtype=object)
        for i, row in enumerate(self.entries):
            for j, src in enumerate(row):
                m[i, j] = evaluate(src, scope)
        return m

    def symbolic(self) -> np.ndarray:
        """Entries as Polynomials in the scalar parameters (plain families only)."""
        if self.factors:
            raise ValueError("factored families have no polynomial form in their angle coordinates")
        return self._scalar_matrix({p: Polynomial.var(p) for p in self.params})

    def search_form(self) -> tuple[list[str], np.ndarray]:
        """Unknown names and a polynomial matrix proportional to the family member.

        Plain families return their entries.  Rotation/boost factors are
        written in tan-half-angle parameters ``t_<param>`` with the common
        denominator cleared, so the matrix is a nonzero multiple of the
        automorphism; homogeneous equations such as ``A J1 = J2 A`` are
        unaffected by the scale.
        """
        if not self.factors:
            return list(self.params), self.symbolic()
        names = []
        m = None
        for fac in self.factors:
            t = Polynomial.var(f"t_{fac['param']}")
            names.append(f"t_{fac['param']}")
            if fac["type"] == "rotation":
                scale, c, s = 1 + t * t, 1 - t * t, 2 * t
            else:
                scale, c, s = 1 - t * t, 1 + t * t, 2 * t
            block = _factor_matrix(fac, self.dim, c, s)
            for i in range(self.dim):
                if i + 1 not in fac["plane"]:
                    block[i, i] = scale
            m = block if m is None else m.dot(block)
        names.extend(self.params)
        tail = self._scalar_matrix({p: Polynomial.var(p) for p in self.params})
        return names, m.dot(tail)

    def search_nonsingular_factor(self) -> Polynomial:
        """Polynomial in the search unknowns that vanishes iff the search matrix is singular.

        Rotation blocks are never singular over the reals and a boost block
        only at ``t = +-1``, so a factored family needs just those scales
        and the determinant of its trailing matrix.
        """
        tail = self._scalar_matrix({p: Polynomial.var(p) for p in self.params})
        out = _poly_det(tail)
        for fac in self.factors:
            if fac["type"] == "boost":
                t = Polynomial.var(f"t_{fac['param']}")
                out = out * (1 - t * t)
        return out

    def decode_search(self, values: Mapping[str, Fraction]) -> dict:
        """Convert a search-form solution into a binding for :func:`automorphism_eval`."""
        out: dict = {}
        for fac in self.factors:
            t = values[f"t_{fac['param']}"]
            out[fac["param"]] = circle_point(t) if fac["type"] == "rotation" else hyperbola_point(t)
        for p in self.params:
            out[p] = values[p]
        return out

    def random_binding(self, rng: np.random.Generator, max_tries: int = 200) -> dict:
        """A random admissible binding (nonsingular, rational angle points)."""
        for _ in range(max_tries):
            b: dict = {}
            for fac in self.factors:
                if fac["type"] == "rotation":
                    b[fac["param"]] = circle_point(exact.random_fraction(rng, -2, 2, 5))
                else:
                    t = exact.random_fraction(rng, -1, 1, 7)
                    if abs(t) == 1:
                        continue
                    b[fac["param"]] = hyperbola_point(t)
            if len(b) != len(self.factors):
                continue
            for p in self.params:
                b[p] = exact.random_fraction(rng, -3, 3, 4)
            try:
                automorphism_eval(self, b)
            except SingularBinding:
                continue
            return b
        raise RuntimeError("no admissible automorphism binding found")

    def identity_binding(self) -> dict:
        out = {}
        for k, v in self.identity.items():
            out[k] = tuple(exact.to_fraction(x) for x in v) if isinstance(v, (list, tuple)) else exact.to_fraction(v)
        return out


def _poly_det(M: np.ndarray) -> Polynomial:
    """Determinant by cofactor expansion (fine for 4x4 polynomial matrices)."""
    n = M.shape[0]
    if n == 1:
        return Polynomial.lift(M[0, 0])
    total = Polynomial()
    for j in range(n):
        if M[0, j] == 0:
            continue
        minor = np.delete(np.delete(M, 0, axis=0), j, axis=1)
        term = Polynomial.lift(M[0, j]) * _poly_det(minor)
        total = total + term if j % 2 == 0 else total - term
    return total


def automorphism_family(L: LieAlgebra) -> AutomorphismFamily:
    """The catalog's automorphism family for a catalog algebra."""
    row = catalog_row(L.name)
    aut = row["automorphism"]
    return AutomorphismFamily(
        algebra=L,
        params=tuple(aut["params"]),
        entries=tuple(tuple(r) for r in aut["matrix"]),
        factors=tuple(aut.get("factors", ())),
        identity=aut.get("identity", {}),
    )


def _angle_pair(name: str, value, kind: str) -> tuple[Fraction, Fraction]:
    try:
        c, s = value
    except (TypeError, ValueError):
        raise ConstraintViolation(f"{name} needs a (c, s) coordinate pair") from None
    c, s = exact.to_fraction(c), exact.to_fraction(s)
    on_curve = c * c + s * s == 1 if kind == "rotation" else c * c - s * s == 1
    if not on_curve:
        curve = "c^2+s^2=1" if kind == "rotation" else "c^2-s^2=1"
        raise ConstraintViolation(f"{name} = ({c}, {s}) is off the curve {curve}")
    return c, s


def automorphism_eval(F: AutomorphismFamily, bindings: Mapping) -> np.ndarray:
    """Exact member of the family; ``SingularBinding`` if it is not invertible."""
    missing = [p for p in F.all_params if p not in bindings]
    if missing:
        raise MissingBinding(f"automorphism family of {F.algebra.name} needs {missing}")
    m = None
    for fac in F.factors:
        c, s = _angle_pair(fac["param"], bindings[fac["param"]], fac["type"])
        block = _factor_matrix(fac, F.dim, c, s)
        m = block if m is None else m.dot(block)
    env = {p: exact.to_fraction(bindings[p]) for p in F.params}
    try:
        tail = F._scalar_matrix(env)
    except ZeroDivisionError:
        raise SingularBinding("an automorphism entry has a vanishing denominator") from None
    m = tail if m is None else m.dot(tail)
    if exact.det(m) == 0:
        raise SingularBinding(f"binding {dict(bindings)} gives a singular matrix")
    return m


def family_parameters(F: AutomorphismFamily) -> set[str]:
    used = set()
    for row in F.entries:
        for src in row:
            used |= names_in(src)
    return used - set(F.algebra.params)
