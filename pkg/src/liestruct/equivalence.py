"""Equivalence of structures under an algebra's automorphism family.

``J2`` is equivalent to ``J1`` when ``J2 = A J1 A^-1`` for an automorphism
``A``; metrics and torsion stacks move along as ``A g A^t`` and
``A (sum_b A[a,b] H_b) A^t``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from . import exact
from .algebra import AutomorphismFamily, LieAlgebra, _poly_det, automorphism_eval, is_automorphism
from .complex import matrix_to_json
from .errors import DimensionMismatch, Inconsistent, SingularBinding, SingularMatrix
from .polynomial import Polynomial, as_polynomial
from .solver import PolySystem, SolveConfig, solve_multistart

DEFAULT_BUDGET = SolveConfig(starts=128, refine_limit=4, max_certified=1, search_bound=0.0)


def _inverse(A: np.ndarray) -> np.ndarray:
    A = np.asarray(A)
    if exact.is_exact(A):
        return exact.inverse(A)
    try:
        return np.linalg.inv(A)
    except np.linalg.LinAlgError:
        raise SingularMatrix("matrix is not invertible") from None


def conjugate(J: np.ndarray, A: np.ndarray) -> np.ndarray:
    """``A J A^-1``."""
    J, A = np.asarray(J), np.asarray(A)
    exact.same_kind(J, A)
    return A.dot(J).dot(_inverse(A))


def transform_torsion(H: np.ndarray, A: np.ndarray) -> np.ndarray:
    H, A = np.asarray(H), np.asarray(A)
    mixed = np.einsum("ab,bij->aij", A, H)
    return np.einsum("ij,ajk,lk->ail", A, mixed, A)


def transform_bihermitian(S: tuple, A: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Move ``(J, g, H)`` along the basis change ``A``."""
    J, g, H = (np.asarray(x) for x in S)
    A = np.asarray(A)
    n = A.shape[0]
    if J.shape != (n, n) or g.shape != (n, n) or H.shape != (n, n, n):
        raise DimensionMismatch("structure and transformation dimensions differ")
    exact.same_kind(J, g, H, A)
    return conjugate(J, A), A.dot(g).dot(A.T), transform_torsion(H, A)


@dataclass
class EquivalenceCertificate:
    A: np.ndarray
    bindings: dict
    is_automorphism: bool = True
    transports: bool = True

    @property
    def verified(self) -> bool:
        return self.is_automorphism and self.transports

    def to_json(self) -> dict:
        return {"A": matrix_to_json(self.A), "bindings": bindings_to_json(self.bindings), "verified": self.verified}

    @classmethod
    def from_json(cls, doc: Mapping) -> "EquivalenceCertificate":
        verified = bool(doc.get("verified", False))
        return cls(
            A=exact.exact_array(doc["A"]),
            bindings=bindings_from_json(doc.get("bindings", {})),
            is_automorphism=verified,
            transports=verified,
        )

    def __eq__(self, other):
        if not isinstance(other, EquivalenceCertificate):
            return NotImplemented
        return self.to_json() == other.to_json()


@dataclass
class NotFound:
    """No certificate within the budget; this is not a proof of inequivalence."""

    reason: str
    stats: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"found": False, "reason": self.reason, "stats": dict(self.stats)}


def bindings_to_json(b: Mapping) -> dict:
    out = {}
    for k, v in sorted(b.items()):
        if isinstance(v, (tuple, list)):
            out[k] = [exact.fraction_str(exact.to_fraction(x)) for x in v]
        else:
            out[k] = exact.fraction_str(exact.to_fraction(v))
    return out


def bindings_from_json(doc: Mapping) -> dict:
    out = {}
    for k, v in doc.items():
        out[k] = tuple(Fraction(x) for x in v) if isinstance(v, list) else Fraction(v)
    return out


def _certificate(L: LieAlgebra, F: AutomorphismFamily, binding: Mapping, J1, J2) -> EquivalenceCertificate | None:
    try:
        A = automorphism_eval(F, binding)
    except (SingularBinding, ZeroDivisionError):
        return None
    ok, _ = is_automorphism(L, A)
    if not ok:
        return None
    transported = conjugate(J1, A)
    if not bool(np.all(transported == J2)):
        return None
    return EquivalenceCertificate(A=A, bindings=dict(binding))


def _equations(F: AutomorphismFamily, J1, J2) -> tuple[list[str], list[Polynomial], np.ndarray]:
    names, M = F.search_form()
    eqs = [as_polynomial(p) for p in (M.dot(J1) - np.asarray(J2).dot(M)).flat]
    return names, [p for p in eqs if p], M


def _linear_route(L, F, J1, J2, names, eqs, rng, tries: int):
    """Exact solve when the equations are linear in the family parameters."""
    a = exact.zeros((len(eqs), len(names)))
    b = []
    for i, p in enumerate(eqs):
        for j, v in enumerate(names):
            a[i, j] = p.terms.get(((v, 1),), Fraction(0))
        b.append(-p.constant())
    try:
        part, kernel = exact.solve_affine(a, b) if eqs else (exact.zeros(len(names)), exact.nullspace(exact.zeros((1, len(names)))))
    except Inconsistent:
        return NotFound("the linear equivalence equations have no solution in this family", {"route": "exact-linear"})
    if not kernel:
        cert = _certificate(L, F, F.decode_search(dict(zip(names, part))), J1, J2)
        return cert or NotFound("the only solution of the linear equivalence equations is singular", {"route": "exact-linear", "kernel_dim": 0})
    for _ in range(tries):
        x = part.copy()
        for h in kernel:
            x = x + h * exact.random_fraction(rng, -3, 3, 4)
        cert = _certificate(L, F, F.decode_search(dict(zip(names, x))), J1, J2)
        if cert is not None:
            return cert
    return NotFound(
        "every sampled member of the solution space was singular",
        {"route": "exact-linear", "kernel_dim": len(kernel), "samples": tries},
    )


def find_equivalence(
    L: LieAlgebra,
    F: AutomorphismFamily,
    J1: np.ndarray,
    J2: np.ndarray,
    budget: SolveConfig | None = None,
):
    """Search the family for ``A`` with ``A J1 = J2 A``; certificate or NotFound."""
    budget = budget or DEFAULT_BUDGET
    J1, J2 = exact.exact_array(J1), exact.exact_array(J2)
    if F.identity and bool(np.all(J1 == J2)):
        cert = _certificate(L, F, F.identity_binding(), J1, J2)
        if cert is not None:
            return cert
    names, eqs, M = _equations(F, J1, J2)
    rng = np.random.default_rng(budget.seed)
    if not F.factors and all(p.degree() <= 1 for p in eqs):
        return _linear_route(L, F, J1, J2, names, eqs, rng, tries=32)

    # invertibility enters the search through det(M) w = 1
    det = F.search_nonsingular_factor()
    w = Polynomial.var("w_inv")
    system = PolySystem(names + ["w_inv"], eqs + [det * w - 1], {"kind": "equivalence", "algebra": L.name})
    report = solve_multistart(system, budget)
    for sol in report.certified:
        values = dict(zip(system.names, sol))
        try:
            binding = F.decode_search(values)
        except SingularBinding:
            continue
        cert = _certificate(L, F, binding, J1, J2)
        if cert is not None:
            return cert
    return NotFound(
        "no certified automorphism within budget",
        {
            "route": "multistart",
            "starts": report.starts,
            "converged": report.converged,
            "certified": len(report.certified),
            "min_residual": report.min_residual,
            "seed": report.seed,
        },
    )


def dedup_classes(
    L: LieAlgebra,
    F: AutomorphismFamily,
    Js: Sequence[np.ndarray],
    budget: SolveConfig | None = None,
) -> list[list[int]]:
    """Greedy partition of ``Js`` (by index) into proven-equivalence classes.

    A structure joins the first class whose representative it is certified
    equivalent to.  Classes may merge under a larger budget, never split.
    """
    classes: list[list[int]] = []
    for i, J in enumerate(Js):
        for cls in classes:
            if isinstance(find_equivalence(L, F, Js[cls[0]], J, budget), EquivalenceCertificate):
                cls.append(i)
                break
        else:
            classes.append([i])
    return classes
