"""Invariant metrics, torsion stacks and biHermitian triples at the algebra level.

A torsion stack ``H`` has shape ``(n, n, n)``; ``H[a]`` is the antisymmetric
matrix with entries ``H[a][b, c]``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from importlib import resources
from typing import Mapping, Sequence

import numpy as np

from . import exact
from .algebra import LieAlgebra, _poly_det, adjoint_reps, catalog_get, isomorphism_residual, jacobi_residual
from .complex import almost_complex_residual, integrability_residual_matrix, matrix_to_json
from .errors import IncompatibleInputs, NotApplicable, SingularMatrix, SingularMetric
from .expr import evaluate
from .polynomial import Polynomial, as_polynomial, symbol_matrix
from .solver import PolySystem, SolveConfig, solve_multistart


# ---------------------------------------------------------------------------
# metrics


def _linear_system(exprs: Sequence, names: Sequence[str]) -> tuple[np.ndarray, list[Fraction]]:
    """Coefficient matrix and right-hand side of affine polynomials."""
    polys = [as_polynomial(e) for e in exprs]
    polys = [p for p in polys if p]
    a = exact.zeros((max(len(polys), 1), len(names)))
    b = [Fraction(0)] * max(len(polys), 1)
    for i, p in enumerate(polys):
        if p.degree() > 1:
            raise ValueError("expected affine equations")
        for j, v in enumerate(names):
            a[i, j] = p.terms.get(((v, 1),), Fraction(0))
        b[i] = -p.constant()
    return a, b


def _symmetric_unknown(n: int) -> tuple[np.ndarray, list[str]]:
    names = [f"g{i}_{j}" for i in range(n) for j in range(i, n)]
    g = np.empty((n, n), dtype=object)
    for i in range(n):
        for j in range(i, n):
            g[i, j] = g[j, i] = Polynomial.var(f"g{i}_{j}")
    return g, names


def ad_invariance_residual(L: LieAlgebra, g: np.ndarray) -> np.ndarray:
    """Stack of ``chi_a g + (chi_a g)^t``; zero iff ``g`` is ad-invariant."""
    chi = adjoint_reps(L).chi
    return np.array([chi[a].dot(g) + chi[a].dot(g).T for a in range(L.dim)], dtype=object)


def invariant_metric_space(L: LieAlgebra) -> list[np.ndarray]:
    """Basis of the symmetric ``g`` with every ``chi_a g`` antisymmetric."""
    g, names = _symmetric_unknown(L.dim)
    a, _ = _linear_system(ad_invariance_residual(L, g).flat, names)
    basis = []
    for v in exact.nullspace(a):
        m = exact.zeros((L.dim, L.dim))
        for name, val in zip(names, v):
            i, j = (int(x) for x in name[1:].split("_"))
            m[i, j] = m[j, i] = val
        basis.append(m)
    return basis


def nondegenerate_member(basis: Sequence[np.ndarray], rng: np.random.Generator, tries: int = 8) -> np.ndarray | None:
    """A random rational combination with nonzero determinant, or None."""
    if not basis:
        return None
    for _ in range(tries):
        g = sum(b * exact.random_fraction(rng, -3, 3, 3) for b in basis)
        if exact.det(g) != 0:
            return g
    return None


def metric_signature(g: np.ndarray) -> tuple[int, int, int]:
    """(positive, negative, zero) eigenvalue counts."""
    vals = np.linalg.eigvalsh(exact.to_float(g))
    scale = max(1.0, float(np.abs(vals).max(initial=0.0)))
    tol = 1e-9 * scale
    return int(np.sum(vals > tol)), int(np.sum(vals < -tol)), int(np.sum(np.abs(vals) <= tol))


def hermitian_residual(J: np.ndarray, g: np.ndarray) -> np.ndarray:
    """``J g J^t - g``."""
    J, g = np.asarray(J), np.asarray(g)
    return J.dot(g).dot(J.T) - g


# ---------------------------------------------------------------------------
# torsion


def _mixed(H: np.ndarray, J: np.ndarray, a: int) -> np.ndarray:
    """``sum_b H_b J[a, b]``."""
    return sum(H[b] * J[a, b] for b in range(J.shape[0]))


def torsion_compatibility_residual(J: np.ndarray, H: np.ndarray) -> np.ndarray:
    """Stack of ``H_a - (J HJ_a + J H_a J^t + HJ_a J^t)`` with ``HJ_a = sum_b H_b J[a,b]``."""
    J = np.asarray(J)
    out = []
    for a in range(J.shape[0]):
        m = _mixed(H, J, a)
        out.append(H[a] - (J.dot(m) + J.dot(H[a]).dot(J.T) + m.dot(J.T)))
    return np.array(out, dtype=object)


def torsion_symmetry_residual(L: LieAlgebra, J: np.ndarray, g: np.ndarray, H: np.ndarray) -> np.ndarray:
    """Stack of the antisymmetric parts of ``J (H_a - chi_a g)``; zero iff all symmetric."""
    chi = adjoint_reps(L).chi
    out = []
    for a in range(L.dim):
        m = np.asarray(J).dot(H[a] - chi[a].dot(g))
        out.append(m - m.T)
    return np.array(out, dtype=object)


def _antisymmetric_stack(n: int, prefix: str = "h") -> tuple[np.ndarray, list[str]]:
    names = []
    H = np.empty((n, n, n), dtype=object)
    for a in range(n):
        for i in range(n):
            H[a, i, i] = Polynomial()
            for j in range(i + 1, n):
                name = f"{prefix}{a}_{i}_{j}"
                names.append(name)
                H[a, i, j] = Polynomial.var(name)
                H[a, j, i] = -Polynomial.var(name)
    return H, names


@dataclass
class TorsionSpace:
    particular: np.ndarray
    basis: list[np.ndarray]

    @property
    def dimension(self) -> int:
        return len(self.basis)

    def member(self, coeffs: Sequence) -> np.ndarray:
        H = self.particular.copy()
        for c, b in zip(coeffs, self.basis):
            H = H + b * exact.to_fraction(c)
        return H


def torsion_solution_space(L: LieAlgebra, J: np.ndarray, g: np.ndarray) -> TorsionSpace:
    """All slice-antisymmetric ``H`` satisfying both torsion conditions, as an affine family."""
    J, g = exact.exact_array(J), exact.exact_array(g)
    if not exact.is_zero(hermitian_residual(J, g)):
        raise IncompatibleInputs("J is not Hermitian with respect to g")
    H, names = _antisymmetric_stack(L.dim)
    eqs = list(torsion_compatibility_residual(J, H).flat) + list(torsion_symmetry_residual(L, J, g, H).flat)
    a, b = _linear_system(eqs, names)
    part, kernel = exact.solve_affine(a, b)

    def unpack(vec):
        out = exact.zeros((L.dim, L.dim, L.dim))
        for name, val in zip(names, vec):
            k, i, j = (int(x) for x in name[1:].split("_"))
            out[k, i, j] = val
            out[k, j, i] = -val
        return out

    return TorsionSpace(particular=unpack(part), basis=[unpack(v) for v in kernel])


def is_three_form(H: np.ndarray) -> bool:
    """True iff ``H[a][b, c]`` is totally antisymmetric."""
    H = np.asarray(H)
    return bool(np.all(H == -H.transpose(1, 0, 2))) and bool(np.all(H == -H.transpose(0, 2, 1)))


# ---------------------------------------------------------------------------
# full check


CONDITIONS = (
    "almost_complex",
    "integrability",
    "hermitian",
    "torsion_compatibility",
    "torsion_symmetry",
    "ad_invariance",
)


@dataclass
class BiHermitianReport:
    residuals: dict
    metric_symmetric: bool
    metric_nondegenerate: bool

    @property
    def flags(self) -> dict[str, bool]:
        return {k: exact.is_zero(v) for k, v in self.residuals.items()}

    @property
    def passed(self) -> bool:
        return not self.failures()

    def failures(self) -> list[str]:
        out = [k for k, ok in self.flags.items() if not ok]
        if not self.metric_symmetric:
            out.append("metric_symmetric")
        if not self.metric_nondegenerate:
            out.append("metric_nondegenerate")
        return out


def bihermitian_check(L: LieAlgebra, J: np.ndarray, g: np.ndarray, H: np.ndarray) -> BiHermitianReport:
    """Evaluate the six defining conditions exactly."""
    J, g, H = exact.exact_array(J), exact.exact_array(g), exact.exact_array(H)
    residuals = {
        "almost_complex": almost_complex_residual(J),
        "integrability": integrability_residual_matrix(L, J),
        "hermitian": hermitian_residual(J, g),
        "torsion_compatibility": torsion_compatibility_residual(J, H),
        "torsion_symmetry": torsion_symmetry_residual(L, J, g, H),
        "ad_invariance": ad_invariance_residual(L, g),
    }
    return BiHermitianReport(
        residuals=residuals,
        metric_symmetric=bool(np.all(g == g.T)),
        metric_nondegenerate=exact.det(g) != 0,
    )


# ---------------------------------------------------------------------------
# induced bracket and Manin search


def h_bracket(L: LieAlgebra, g: np.ndarray, H: np.ndarray) -> tuple[np.ndarray, bool]:
    """``ft[b, c, a] = sum_d H[d][b, c] ginv[d, a]`` plus whether it satisfies Jacobi."""
    g, H = exact.exact_array(g), exact.exact_array(H)
    try:
        ginv = exact.inverse(g)
    except SingularMatrix:
        raise SingularMetric("metric is degenerate") from None
    ft = np.einsum("dbc,da->bca", H, ginv)
    jac = jacobi_residual(LieAlgebra(name="induced", f=ft))
    return ft, exact.is_zero(jac)


def derived_dimension(f: np.ndarray) -> int:
    """Dimension of the span of all brackets ``[X_a, X_b]``."""
    n = f.shape[0]
    return exact.rank(f.reshape(n * n, n))


def manin_residual(L: LieAlgebra, g: np.ndarray, H: np.ndarray, C: np.ndarray) -> np.ndarray:
    """Residual of ``C_m^k C_n^l f_kl^a = ft_mn^b C_b^a``."""
    ft, _ = h_bracket(L, g, H)
    return isomorphism_residual(ft, L.f, exact.exact_array(C))


@dataclass
class ManinCertificate:
    C: np.ndarray
    verified: bool = True

    def to_json(self) -> dict:
        return {"C": matrix_to_json(self.C), "verified": self.verified}

    @classmethod
    def from_json(cls, doc: Mapping) -> "ManinCertificate":
        return cls(C=exact.exact_array(doc["C"]), verified=bool(doc.get("verified", False)))


@dataclass
class ManinNotFound:
    reason: str
    stats: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"found": False, "reason": self.reason, "stats": dict(self.stats)}


MANIN_BUDGET = SolveConfig(starts=2000, refine_limit=8, max_certified=1, search_bound=0.0)


def manin_check(L: LieAlgebra, g: np.ndarray, H: np.ndarray, budget: SolveConfig | None = None):
    """Search for an invertible ``C`` carrying the induced bracket onto the algebra's."""
    budget = budget or MANIN_BUDGET
    ft, is_lie = h_bracket(L, g, H)
    if not is_lie:
        raise NotApplicable("the induced bracket violates the Jacobi identity")
    if derived_dimension(ft) != derived_dimension(L.f):
        raise NotApplicable("derived algebras differ in dimension; no isomorphism exists")
    n = L.dim
    if all(v == 0 for v in L.f.flat):
        # both brackets vanish: the identity already works
        return ManinCertificate(C=exact.identity(n))
    C, names = symbol_matrix("C", n, n)
    eqs = [p for p in (as_polynomial(x) for x in isomorphism_residual(ft, L.f, C).flat) if p]
    w = Polynomial.var("w_inv")
    system = PolySystem(names + ["w_inv"], eqs + [_poly_det(C) * w - 1], {"kind": "manin", "algebra": L.name})
    report = solve_multistart(system, budget)
    for sol in report.certified:
        Cm = exact.exact_array(list(sol[: n * n])).reshape(n, n)
        if exact.det(Cm) != 0 and exact.is_zero(isomorphism_residual(ft, L.f, Cm)):
            return ManinCertificate(C=Cm)
    return ManinNotFound(
        "no certified isomorphism within budget",
        {
            "starts": report.starts,
            "converged": report.converged,
            "min_residual": report.min_residual,
            "seed": report.seed,
        },
    )


# ---------------------------------------------------------------------------
# listed biHermitian structures


@dataclass(frozen=True)
class Table2Entry:
    block: str
    algebra: str
    J: tuple
    g: tuple
    H: tuple
    free: tuple[str, ...]
    metric_params: tuple[str, ...]
    constraints: tuple[str, ...]

    @property
    def params(self) -> tuple[str, ...]:
        return self.metric_params + self.free

    def bind(self, values: Mapping) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Exact ``(J, g, H)``; unbound free torsion parameters default to zero."""
        env = {p: Fraction(0) for p in self.free}
        env.update({k: exact.to_fraction(v) for k, v in values.items()})
        missing = [p for p in self.metric_params if p not in env]
        if missing:
            raise KeyError(f"{self.block} needs metric parameters {missing}")
        if not all(evaluate(c, env) for c in self.constraints):
            raise ValueError(f"{self.block}: {values} violates {self.constraints}")

        def build(rows):
            return exact.exact_array([[evaluate(x, env) for x in r] for r in rows])

        J = build(self.J)
        g = build(self.g)
        H = exact.exact_array([[[evaluate(x, env) for x in r] for r in s] for s in self.H])
        return J, g, H

    def random_binding(self, rng: np.random.Generator, metric: Mapping | None = None) -> dict:
        out = {p: exact.random_fraction(rng, -3, 3, 4) for p in self.free}
        for p in self.metric_params:
            if metric and p in metric:
                out[p] = exact.to_fraction(metric[p])
            else:
                v = Fraction(0)
                while v == 0:
                    v = exact.random_fraction(rng, -3, 3, 4)
                out[p] = v
        return out

    def algebra_obj(self) -> LieAlgebra:
        return catalog_get(self.algebra)


def _table2_doc() -> dict:
    return json.loads(resources.files("liestruct.data").joinpath("table2.json").read_text(encoding="utf-8"))


@lru_cache(maxsize=1)
def table2_catalog() -> tuple[Table2Entry, ...]:
    out = []
    for b in _table2_doc()["blocks"]:
        out.append(
            Table2Entry(
                block=b["block"],
                algebra=b["algebra"],
                J=tuple(tuple(r) for r in b["J"]),
                g=tuple(tuple(r) for r in b["g"]),
                H=tuple(tuple(tuple(r) for r in s) for s in b["H"]),
                free=tuple(b["free"]),
                metric_params=tuple(b["metric_params"]),
                constraints=tuple(b["constraints"]),
            )
        )
    return tuple(out)


def table2_entry(block: str) -> Table2Entry:
    for e in table2_catalog():
        if e.block == block:
            return e
    raise KeyError(block)


def table2_special_values() -> list[dict]:
    return list(_table2_doc().get("special_values", []))


def bihermitian_to_json(algebra: str, J, g, H, params: Mapping | None = None) -> dict:
    return {
        "algebra": algebra,
        "J": matrix_to_json(J),
        "g": matrix_to_json(g),
        "H": [matrix_to_json(h) for h in H],
        "params": {k: exact.fraction_str(exact.to_fraction(v)) for k, v in sorted((params or {}).items())},
    }


def bihermitian_from_json(doc: Mapping) -> tuple[str, np.ndarray, np.ndarray, np.ndarray, dict]:
    return (
        doc["algebra"],
        exact.exact_array(doc["J"]),
        exact.exact_array(doc["g"]),
        exact.exact_array(doc["H"]),
        {k: Fraction(v) for k, v in doc.get("params", {}).items()},
    )
