import json
import zlib
from fractions import Fraction

import numpy as np
import pytest

from liestruct import exact
from liestruct.algebra import (
    adjoint_reps,
    automorphism_eval,
    automorphism_family,
    catalog_checksum,
    catalog_document,
    catalog_get,
    catalog_names,
    catalog_row,
    circle_point,
    hyperbola_point,
    is_automorphism,
    jacobi_residual,
    lie_algebra,
    random_bindings,
    structure_constants,
)
from liestruct.errors import (
    ConstraintViolation,
    DimensionMismatch,
    MissingBinding,
    ParameterOutOfRange,
    SingularBinding,
    UnknownAlgebra,
)
from oracles import is_homomorphism, jacobi_violations

NAMES = catalog_names()


def test_thirty_rows_with_unique_names():
    assert len(NAMES) == 30
    assert len(set(NAMES)) == 30


@pytest.mark.parametrize("alias", ["IX+R", "IX⊕R", "ix + r", "IX\\oplus R"])
def test_alias_lookup(alias):
    assert catalog_row(alias)["name"] == "IX+R"


def test_label_lookup():
    assert catalog_row("A_{4,8}")["name"] == "A4.8"


def test_unknown_algebra():
    with pytest.raises(UnknownAlgebra):
        catalog_get("A5.1")


def test_binding_errors():
    with pytest.raises(MissingBinding):
        catalog_get("VIIa+R")
    with pytest.raises(ParameterOutOfRange):
        catalog_get("VIIa+R", {"a": 0})
    with pytest.raises(ParameterOutOfRange):
        catalog_get("IX+R", {"q": 1})
    assert catalog_get("VIIa+R", use_defaults=True).params


def test_structure_constants_antisymmetric_completion():
    f = structure_constants(3, [[1, 2, 3, "2"]])
    assert f[0, 1, 2] == 2 and f[1, 0, 2] == -2


def test_jacobi_zero_for_so3_plus_r():
    assert exact.is_zero(jacobi_residual(catalog_get("IX+R")))
    assert exact.is_zero(jacobi_residual(catalog_get("4A1")))


def test_jacobi_detects_a_non_lie_bracket():
    L = lie_algebra("bad", 3, [[1, 2, 2, "1"], [2, 3, 1, "1"]])
    assert jacobi_violations(L.f) > 0
    assert not exact.is_zero(jacobi_residual(L))


def test_cyclic_three_dim_bracket_is_lie():
    # [e_i, e_j] proportional to the third basis vector always satisfies Jacobi
    L = lie_algebra("sl2", 3, [[1, 2, 3, "1"], [1, 3, 2, "1"], [2, 3, 1, "1"]])
    assert jacobi_violations(L.f) == 0
    assert exact.is_zero(jacobi_residual(L))


@pytest.mark.parametrize("name", NAMES)
def test_every_row_is_a_lie_algebra(name):
    rng = np.random.default_rng(zlib.crc32(name.encode()))
    L = catalog_get(name, random_bindings(name, rng))
    assert L.is_antisymmetric()
    assert exact.is_zero(jacobi_residual(L))
    assert jacobi_violations(L.f) == 0


def test_adjoint_reps_a48():
    R = adjoint_reps(catalog_get("A4.8"))
    assert [R.chi[3][i, i] for i in range(4)] == [0, 1, -1, 0]
    Y1 = R.Y[0]
    assert Y1[1, 2] == -1 and Y1[2, 1] == 1
    assert sum(1 for v in Y1.flat if v != 0) == 2


@pytest.mark.parametrize("name", NAMES)
def test_adjoint_two_views_agree(name):
    L = catalog_get(name, use_defaults=True)
    R = adjoint_reps(L)
    n = L.dim
    for g in range(n):
        for b in range(n):
            for a in range(n):
                assert R.Y[g][b, a] == R.chi[b][a, g]


def test_two_a2_identity_and_generic_member():
    L = catalog_get("2A2")
    F = automorphism_family(L)
    assert np.all(automorphism_eval(F, {"a1": 0, "a2": 1, "a3": 0, "a4": 1}) == exact.identity(4))
    A = automorphism_eval(F, {"a1": 2, "a2": 3, "a3": 0, "a4": 5})
    assert is_automorphism(L, A)[0]
    assert is_homomorphism(L.f, L.f, A)


def test_column_convention_would_fail_for_two_a2():
    L = catalog_get("2A2")
    A = automorphism_eval(automorphism_family(L), {"a1": 2, "a2": 3, "a3": 0, "a4": 5})
    assert not is_automorphism(L, A.T)[0]


def test_a48_identity_binding():
    F = automorphism_family(catalog_get("A4.8"))
    A = automorphism_eval(F, {"a1": 1, "a2": 1, "a3": 0, "a4": 0, "a5": 0})
    assert np.all(A == exact.identity(4))


def test_rotation_factor_block():
    F = automorphism_family(catalog_get("IX+R"))
    one = (1, 0)
    A = automorphism_eval(F, {"a1": (Fraction(3, 5), Fraction(4, 5)), "a2": one, "a3": one, "a4": 1})
    assert A[:2, :2].tolist() == [[Fraction(3, 5), Fraction(4, 5)], [Fraction(-4, 5), Fraction(3, 5)]]
    assert A[3, 3] == 1 and A[2, 2] == 1


def test_off_circle_point_rejected():
    F = automorphism_family(catalog_get("IX+R"))
    with pytest.raises(ConstraintViolation):
        automorphism_eval(F, {"a1": (1, 1), "a2": (1, 0), "a3": (1, 0), "a4": 1})


def test_singular_binding():
    F = automorphism_family(catalog_get("2A2"))
    with pytest.raises(SingularBinding):
        automorphism_eval(F, {"a1": 0, "a2": 0, "a3": 0, "a4": 1})
    with pytest.raises(MissingBinding):
        automorphism_eval(F, {"a1": 0})


def test_curve_points():
    for t in [Fraction(1, 2), Fraction(-3), Fraction(2, 7)]:
        c, s = circle_point(t)
        assert c * c + s * s == 1
        c, s = hyperbola_point(t)
        assert c * c - s * s == 1
    with pytest.raises(SingularBinding):
        hyperbola_point(1)


@pytest.mark.parametrize("name", NAMES)
def test_families_are_automorphisms(name):
    rng = np.random.default_rng(len(name))
    L = catalog_get(name, random_bindings(name, rng))
    F = automorphism_family(L)
    assert np.all(automorphism_eval(F, F.identity_binding()) == exact.identity(4))
    for _ in range(3):
        A = automorphism_eval(F, F.random_binding(rng))
        ok, res = is_automorphism(L, A)
        assert ok and exact.is_zero(res)
        assert is_homomorphism(L.f, L.f, A)


def test_swap_is_not_an_automorphism_of_a48():
    L = catalog_get("A4.8")
    P = exact.identity(4)[[3, 1, 2, 0]]
    assert not is_automorphism(L, P)[0]


def test_is_automorphism_dimension_check():
    with pytest.raises(DimensionMismatch):
        is_automorphism(catalog_get("A4.8"), exact.identity(3))


def test_catalog_env_override(tmp_path, monkeypatch):
    doc = catalog_document()
    path = tmp_path / "cat.json"
    path.write_text(json.dumps(doc, indent=1))
    before = catalog_checksum()
    monkeypatch.setenv("LIESTRUCT_CATALOG", str(path))
    assert catalog_checksum() == before
    trimmed = dict(doc, rows=[r for r in doc["rows"] if r["name"] != "A4.12"])
    path.write_text(json.dumps(trimmed))
    with pytest.raises(UnknownAlgebra):
        catalog_get("A4.12")
