"""Almost-complex and integrable complex structures on a Lie algebra.

``J`` acts on basis rows: ``J X_a = J[a, b] X_b``.  For a coefficient row
vector ``v`` the image of ``v . X`` is ``(v @ J) . X``.
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
from .algebra import LieAlgebra, adjoint_reps, catalog_get
from .errors import DimensionMismatch, Inconsistent, ScalarMixing, UnderDetermined
from .expr import evaluate


@dataclass(frozen=True)
class ComplexStructure:
    J: np.ndarray
    algebra: str = ""
    bindings: Mapping[str, Fraction] = field(default_factory=dict)

    def __post_init__(self):
        J = np.array(self.J, copy=True)
        J.setflags(write=False)
        object.__setattr__(self, "J", J)
        object.__setattr__(self, "bindings", dict(self.bindings))

    def to_json(self) -> dict:
        return {
            "algebra": self.algebra,
            "bindings": {k: exact.fraction_str(v) for k, v in sorted(self.bindings.items())},
            "J": matrix_to_json(self.J),
        }

    @classmethod
    def from_json(cls, doc: Mapping) -> "ComplexStructure":
        return cls(
            J=exact.exact_array(doc["J"]),
            algebra=doc.get("algebra", ""),
            bindings={k: exact.to_fraction(v) for k, v in doc.get("bindings", {}).items()},
        )

    def __eq__(self, other):
        if not isinstance(other, ComplexStructure):
            return NotImplemented
        return (
            self.algebra == other.algebra
            and self.bindings == other.bindings
            and self.J.shape == other.J.shape
            and bool(np.all(self.J == other.J))
        )

    __hash__ = None


def matrix_to_json(m: np.ndarray) -> list:
    m = np.asarray(m)
    if m.dtype != object:
        return m.tolist()
    return [matrix_to_json(row) if np.ndim(row) else exact.fraction_str(row) for row in m]


def _check_dims(L: LieAlgebra, J: np.ndarray) -> np.ndarray:
    J = np.asarray(J)
    if J.shape != (L.dim, L.dim):
        raise DimensionMismatch(f"J has shape {J.shape}, algebra has dimension {L.dim}")
    return J


def _structure_tensor(L: LieAlgebra, J: np.ndarray) -> np.ndarray:
    """The algebra's tensor in the same scalar kind as J (exact -> float is explicit)."""
    return L.f if exact.is_exact(J) else exact.to_float(L.f)


def complete_J(dim: int, assignments: Sequence[tuple[int, Sequence]]) -> np.ndarray:
    """Extend ``J`` given on a few generators to the whole space.

    ``assignments`` holds ``(k, w)`` pairs meaning ``J e_k = w`` with 0-based
    ``k``.  The images are forced by ``J w = -e_k``; the union of generators
    and images must span the space.
    """
    inputs, outputs = [], []
    for k, w in assignments:
        w = [exact.to_fraction(x) for x in w]
        if len(w) != dim or not 0 <= k < dim:
            raise DimensionMismatch(f"assignment J e_{k + 1} = {w} does not fit dimension {dim}")
        e = [Fraction(int(i == k)) for i in range(dim)]
        inputs += [e, w]
        outputs += [w, [-x for x in e]]
    V = exact.exact_array(inputs).reshape(len(inputs), dim)
    W = exact.exact_array(outputs).reshape(len(outputs), dim)
    J = exact.zeros((dim, dim))
    for c in range(dim):
        x, kernel = exact.solve_affine(V, W[:, c])
        if kernel:
            raise UnderDetermined("generators and their images do not span the space")
        J[:, c] = x
    if not exact.is_zero(almost_complex_residual(J)):
        raise Inconsistent("forced images contradict J^2 = -1")
    return J


def almost_complex_residual(J: np.ndarray) -> np.ndarray:
    """``J J + I``; zero iff ``J`` is almost complex."""
    J = np.asarray(J)
    n = J.shape[0]
    eye = exact.identity(n) if exact.is_exact(J) else np.eye(n)
    return J.dot(J) + eye


def nijenhuis_components(L: LieAlgebra, J: np.ndarray) -> np.ndarray:
    """``N[a,b,g]``, the components of ``N(X_a, X_b)`` along ``X_g``."""
    J = _check_dims(L, J)
    f = _structure_tensor(L, J)
    return (
        f
        + np.einsum("ad,dbe,eg->abg", J, f, J)
        + np.einsum("bd,ade,eg->abg", J, f, J)
        - np.einsum("ad,be,deg->abg", J, J, f)
    )


def integrability_residual_matrix(L: LieAlgebra, J: np.ndarray) -> np.ndarray:
    """Stack of matrices ``R[a] = Y^a + J Y^b J[b,a] + J[b,a] Y^b J^t - J Y^a J^t``.

    Built from the ``Y`` representation as plain matrix products.
    Entrywise ``R[a][b, g] == -N[b, g, a]``.
    """
    J = _check_dims(L, J)
    Y = adjoint_reps(L).Y
    if not exact.is_exact(J):
        Y = exact.to_float(Y)
    JT = J.T
    out = []
    for a in range(L.dim):
        weighted = sum(Y[b] * J[b, a] for b in range(L.dim))
        out.append(Y[a] + J.dot(weighted) + weighted.dot(JT) - J.dot(Y[a]).dot(JT))
    return np.array(out, dtype=J.dtype)


def integrability_residual_chi(L: LieAlgebra, J: np.ndarray) -> np.ndarray:
    """Stack ``S[a] = chi_a + J chi_a J + J[a,b] chi_b J - J[a,b] J chi_b``."""
    J = _check_dims(L, J)
    chi = adjoint_reps(L).chi
    if not exact.is_exact(J):
        chi = exact.to_float(chi)
    out = []
    for a in range(L.dim):
        weighted = sum(chi[b] * J[a, b] for b in range(L.dim))
        out.append(chi[a] + J.dot(chi[a]).dot(J) + weighted.dot(J) - J.dot(weighted))
    return np.array(out, dtype=J.dtype)


def is_complex_structure(L: LieAlgebra, J: np.ndarray) -> bool:
    J = _check_dims(L, J)
    if not exact.is_exact(J):
        raise ScalarMixing("is_complex_structure needs an exact J; rationalize float candidates first")
    return exact.is_zero(almost_complex_residual(J)) and exact.is_zero(nijenhuis_components(L, J))


# ---------------------------------------------------------------------------
# listed complex structures


@dataclass(frozen=True)
class Table1Entry:
    algebra: str
    label: str
    constraints: tuple[str, ...]
    result_params: tuple[str, ...]
    structures: tuple[tuple[tuple[int, tuple[str, ...]], ...], ...]
    samples: tuple[Mapping[str, str], ...]

    def admissible(self, bindings: Mapping[str, Fraction]) -> bool:
        return all(evaluate(c, bindings) for c in self.constraints)

    def split(self, bindings: Mapping) -> tuple[dict, dict]:
        """Separate algebra parameters from result parameters such as ``p``."""
        b = {k: exact.to_fraction(v) for k, v in bindings.items()}
        result = {k: b.pop(k) for k in self.result_params if k in b}
        return b, result

    def complete(self, bindings: Mapping) -> list[ComplexStructure]:
        """Every listed structure, completed at ``bindings``."""
        alg_b, res_b = self.split(bindings)
        env = {**alg_b, **res_b}
        if not self.admissible(env):
            raise ValueError(f"{self.algebra}: bindings {env} violate {self.constraints}")
        out = []
        for struct in self.structures:
            assignments = [(k - 1, [evaluate(x, env) for x in image]) for k, image in struct]
            J = complete_J(4, assignments)
            out.append(ComplexStructure(J=J, algebra=self.algebra, bindings=env))
        return out

    def algebra_at(self, bindings: Mapping) -> LieAlgebra:
        return catalog_get(self.algebra, self.split(bindings)[0])

    def sample_bindings(self) -> list[dict[str, Fraction]]:
        return [{k: exact.to_fraction(v) for k, v in s.items()} for s in self.samples]


def _table1_doc() -> dict:
    text = resources.files("liestruct.data").joinpath("table1.json").read_text(encoding="utf-8")
    return json.loads(text)


@lru_cache(maxsize=1)
def table1_catalog() -> tuple[Table1Entry, ...]:
    rows = []
    for r in _table1_doc()["rows"]:
        rows.append(
            Table1Entry(
                algebra=r["algebra"],
                label=r["label"],
                constraints=tuple(r["constraints"]),
                result_params=tuple(r["result_params"]),
                structures=tuple(
                    tuple((k, tuple(img)) for k, img in s["assignments"]) for s in r["structures"]
                ),
                samples=tuple(r["samples"]),
            )
        )
    return tuple(rows)


def table1_omissions() -> list[dict]:
    """Catalog algebras known to admit structures but absent from the listed rows."""
    return list(_table1_doc().get("omitted", []))


def table1_entry(name: str) -> Table1Entry:
    from .algebra import catalog_row

    canonical = catalog_row(name)["name"]
    for e in table1_catalog():
        if e.algebra == canonical:
            return e
    raise KeyError(f"{name} has no listed complex structures")
