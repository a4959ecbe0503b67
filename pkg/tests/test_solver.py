import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from liestruct import exact
from liestruct.algebra import automorphism_eval, automorphism_family, catalog_get, isomorphism_residual
from liestruct.bihermitian import h_bracket, table2_entry
from liestruct.complex import complete_J, is_complex_structure, table1_entry
from liestruct.equivalence import _equations, conjugate
from liestruct.polynomial import Polynomial, as_polynomial, symbol_matrix
from liestruct.solver import (
    PolySystem,
    SolveConfig,
    SolveReport,
    build_complex_structure_system,
    certify,
    cluster,
    levenberg_marquardt,
    rationalize,
    refine,
    solutions_as_matrices,
    solve_multistart,
    vector_to_matrix,
)

x, y = Polynomial.var("x"), Polynomial.var("y")


def flat(J):
    return [J[i, j] for i in range(J.shape[0]) for j in range(J.shape[1])]


def manin_like_system():
    e = table2_entry("A4.8/2")
    J, g, H = e.bind({"c12": -1, "c15": -1})
    L = e.algebra_obj()
    ft, _ = h_bracket(L, g, H)
    C, names = symbol_matrix("C", 4, 4)
    return PolySystem(names, [as_polynomial(p) for p in isomorphism_residual(ft, L.f, C).flat])


def equivalence_system():
    entry = table1_entry("IX+R")
    L = entry.algebra_at({})
    J1 = entry.complete({"p": 1})[0].J
    names, eqs, _ = _equations(automorphism_family(L), J1, J1)
    return PolySystem(names, eqs)


SYSTEMS = {
    "complex": lambda: build_complex_structure_system(catalog_get("A4.8")),
    "equivalence": equivalence_system,
    "manin": manin_like_system,
}


@pytest.mark.parametrize(
    "value,expected",
    [(0.5, Fraction(1, 2)), (0.3333333333, Fraction(1, 3)), (-2.0, Fraction(-2)), (0.7071067811, None), (math.nan, None)],
)
def test_rationalize_examples(value, expected):
    assert rationalize(value, 100) == expected


def test_rationalize_guard_alone_is_too_weak():
    # 70/99 passes the 1/(2q^2) guard for sqrt(2)/2; the absolute tolerance rejects it
    q = Fraction(70, 99)
    assert abs(0.7071067811 - float(q)) <= 1 / (2 * 99**2)
    assert rationalize(0.7071067811, 100, abs_tol=1.0) == q


@settings(max_examples=100, deadline=None)
@given(st.integers(-500, 500), st.integers(1, 300))
def test_rationalize_recovers_small_fractions(p, q):
    assert rationalize(p / q, 1000) == Fraction(p, q)


def test_certify_examples():
    S = build_complex_structure_system(catalog_get("III+R"))
    J = complete_J(4, [(0, [0, -1, 0, 0]), (2, [1, 0, 0, -1])])
    assert certify(S, flat(J))
    assert not certify(S, [0] * 16)
    S8 = build_complex_structure_system(catalog_get("A4.8"))
    J4 = complete_J(4, [(0, [-1, 0, -2, 0]), (1, [-1, -1, -2, -2])])
    assert certify(S8, flat(J4))
    with pytest.raises(ValueError):
        certify(S, [0] * 3)


def test_system_shape():
    S = build_complex_structure_system(catalog_get("IX+R"))
    assert (S.n, S.m) == (16, 80)
    assert S.degree() == 2


def test_abelian_system_is_just_j_squared():
    S = build_complex_structure_system(catalog_get("4A1"))
    nonzero = [p for p in S.polys if p]
    assert len(nonzero) == 16
    assert all(p.degree() == 2 for p in nonzero)


def test_undeclared_unknown_rejected():
    with pytest.raises(ValueError):
        PolySystem(["x"], [x * y])


def test_config_validation():
    with pytest.raises(ValueError):
        SolveConfig(starts=0)
    with pytest.raises(ValueError):
        SolveConfig(tol=0)


def test_cluster_examples():
    v = np.array([1.0, 2.0, 3.0])
    assert len(cluster([v, v + 1e-9], 1e-6)) == 1
    assert len(cluster([v, v + 1], 1e-6)) == 2
    assert cluster([], 1e-6) == []


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 6), st.integers(1, 5), st.integers(0, 2**32 - 1))
def test_cluster_count_is_permutation_invariant(k, copies, seed):
    rng = np.random.default_rng(seed)
    tol = 1e-3
    centers = np.arange(k)[:, None] * 10 * tol + rng.normal(size=(1, 3))
    pts = [c + rng.uniform(-tol / 4, tol / 4, size=3) for c in centers for _ in range(copies)]
    reps = cluster(pts, tol)
    assert len(reps) == k
    order = rng.permutation(len(pts))
    assert len(cluster([pts[i] for i in order], tol)) == k
    for p in pts:
        assert min(np.max(np.abs(p - r)) for r in reps) < tol


@pytest.mark.parametrize("kind", sorted(SYSTEMS))
def test_jacobian_matches_finite_differences(kind):
    S = SYSTEMS[kind]()
    rng = np.random.default_rng(1)
    h = 1e-6
    for _ in range(50):
        p = rng.uniform(-2, 2, size=S.n)
        jac = S.jacobian(p)
        fd = np.empty_like(jac)
        for j in range(S.n):
            step = np.zeros(S.n)
            step[j] = h
            fd[:, j] = (S.residual(p + step) - S.residual(p - step)) / (2 * h)
        assert np.max(np.abs(jac - fd)) <= 1e-6 * max(1.0, np.max(np.abs(jac)))


@pytest.mark.parametrize("kind", sorted(SYSTEMS))
def test_exact_and_float_evaluators_agree(kind):
    S = SYSTEMS[kind]()
    rng = np.random.default_rng(2)
    for _ in range(20):
        q = [exact.random_fraction(rng, -2, 2, 5) for _ in range(S.n)]
        ex = exact.to_float(np.array(S.exact_residual(q), dtype=object))
        fl = S.residual(np.array([float(v) for v in q]))
        assert np.max(np.abs(ex - fl)) <= 1e-12 * max(1.0, np.max(np.abs(ex)))


def test_batched_evaluation_matches_single():
    S = build_complex_structure_system(catalog_get("A4.12"))
    X = np.random.default_rng(3).normal(size=(5, 16))
    assert np.allclose(S.residual(X)[2], S.residual(X[2]))
    assert np.allclose(S.jacobian(X)[4], S.jacobian(X[4]))


def test_lm_solves_a_circle():
    S = PolySystem(["x", "y"], [x * x + y * y - 25, x - y - 1])
    X, res = levenberg_marquardt(S, np.array([[3.5, 2.5], [-3.5, -4.5]]), SolveConfig())
    assert np.all(res < 1e-12)
    assert np.allclose(sorted(X[:, 0]), [-3, 4])


def test_refine_pins_a_curve_to_a_rational_point():
    # x^2 + y^2 = 2 has rational points; a float point near (1, 1) refines to one
    S = PolySystem(["x", "y"], [x * x + y * y - 2])
    sol = refine(S, np.array([1.0 + 3e-4, math.sqrt(2 - (1 + 3e-4) ** 2)]), SolveConfig())
    assert sol is not None and certify(S, sol)


def test_abelian_multistart_certifies():
    S = build_complex_structure_system(catalog_get("4A1"))
    rep = solve_multistart(S, starts=64, seed=3)
    assert rep.certified
    for J in solutions_as_matrices(rep, 4):
        assert exact.is_zero(J.dot(J) + exact.identity(4))


def test_multistart_report_invariants_and_determinism():
    S = build_complex_structure_system(catalog_get("III+R"))
    cfg = SolveConfig(starts=64, seed=7)
    a, b = solve_multistart(S, cfg), solve_multistart(S, cfg)
    assert a.to_json() == b.to_json()
    assert a.certified
    L = catalog_get("III+R")
    for J in solutions_as_matrices(a, 4):
        assert is_complex_structure(L, J)
    assert all(a.min_residual <= c.residual for c in a.clusters)
    doc = json.loads(json.dumps(a.to_json()))
    assert SolveReport.from_json(doc).to_json() == a.to_json()


def test_overrides_reach_config():
    S = PolySystem(["x"], [x * x - 4])
    rep = solve_multistart(S, starts=8, seed=1)
    assert rep.config["starts"] == 8
    assert sorted(rep.certified) == [(Fraction(-2),), (Fraction(2),)]


def test_empty_result_is_reported_not_raised():
    S = PolySystem(["x"], [x * x + 1])
    rep = solve_multistart(S, starts=16)
    assert rep.certified == []
    assert rep.min_residual >= 1 - 1e-9


def test_conjugation_closure_of_certified_solutions():
    L = catalog_get("A4.12")
    S = build_complex_structure_system(L)
    rep = solve_multistart(S, starts=32, seed=5, max_certified=1)
    F = automorphism_family(L)
    rng = np.random.default_rng(0)
    for J in solutions_as_matrices(rep, 4):
        for _ in range(3):
            A = automorphism_eval(F, F.random_binding(rng))
            assert certify(S, flat(conjugate(J, A)))


def test_vector_to_matrix():
    m = vector_to_matrix([1, 2, 3, 4], 2, 2)
    assert m.tolist() == [[1, 2], [3, 4]]
