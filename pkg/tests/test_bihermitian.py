import json
from fractions import Fraction

import numpy as np
import pytest

from liestruct import exact
from liestruct.algebra import adjoint_reps, catalog_get, catalog_names, random_bindings
from liestruct.bihermitian import (
    CONDITIONS,
    ManinCertificate,
    ManinNotFound,
    bihermitian_check,
    bihermitian_from_json,
    bihermitian_to_json,
    derived_dimension,
    h_bracket,
    hermitian_residual,
    invariant_metric_space,
    is_three_form,
    manin_check,
    manin_residual,
    metric_signature,
    nondegenerate_member,
    table2_catalog,
    table2_entry,
    table2_special_values,
    torsion_compatibility_residual,
    torsion_solution_space,
    torsion_symmetry_residual,
)
from liestruct.complex import complete_J
from liestruct.errors import IncompatibleInputs, NotApplicable, SingularMetric
from liestruct.solver import SolveConfig
from oracles import ad_invariant, is_homomorphism, jacobi_violations

STD = complete_J(4, [(0, [0, 1, 0, 0]), (2, [0, 0, 0, 1])])


def diag(*xs):
    m = exact.zeros((len(xs), len(xs)))
    for i, v in enumerate(xs):
        m[i, i] = Fraction(v)
    return m


def in_span(basis, g):
    a = exact.exact_array([list(b.flat) for b in basis]).T
    try:
        exact.solve_affine(a, list(g.flat))
    except Exception:
        return False
    return True


def test_metric_space_so3_plus_r():
    basis = invariant_metric_space(catalog_get("IX+R"))
    assert len(basis) == 2
    assert in_span(basis, diag(1, 1, 1, 0)) and in_span(basis, diag(0, 0, 0, 1))
    assert in_span(basis, diag(3, 3, 3, 3))


def test_metric_space_a48_contains_antidiagonal():
    g = exact.exact_array([[0, 0, 0, 1], [0, 0, -1, 0], [0, -1, 0, 0], [1, 0, 0, 0]])
    assert in_span(invariant_metric_space(catalog_get("A4.8")), g)


def test_metric_space_abelian():
    assert len(invariant_metric_space(catalog_get("4A1"))) == 10


@pytest.mark.parametrize("name", catalog_names())
def test_metric_basis_is_ad_invariant(name):
    L = catalog_get(name, random_bindings(name, np.random.default_rng(0)))
    chi = adjoint_reps(L).chi
    for b in invariant_metric_space(L):
        assert np.all(b == b.T)
        assert ad_invariant(L.f, b)
        for a in range(4):
            m = chi[a].dot(b)
            assert exact.is_zero(m + m.T)


def test_nondegenerate_member_and_signature():
    rng = np.random.default_rng(1)
    g = nondegenerate_member(invariant_metric_space(catalog_get("A4.8")), rng)
    assert g is not None and exact.det(g) != 0
    assert metric_signature(g) == (2, 2, 0)
    assert nondegenerate_member([], rng) is None
    assert metric_signature(diag(1, 0, -2, 3)) == (2, 1, 1)


def test_hermitian_residual_examples():
    J, g, _ = table2_entry("A4.8/1").bind({})
    assert exact.is_zero(hermitian_residual(J, g))
    assert exact.is_zero(hermitian_residual(STD, exact.identity(4)))
    assert not exact.is_zero(hermitian_residual(STD, diag(1, 2, 1, 1)))


def test_torsion_space_rejects_non_hermitian_pairs():
    with pytest.raises(IncompatibleInputs):
        torsion_solution_space(catalog_get("4A1"), STD, diag(1, 2, 1, 1))


def test_torsion_space_abelian_contains_zero():
    T = torsion_solution_space(catalog_get("4A1"), STD, exact.identity(4))
    assert exact.is_zero(T.particular)


@pytest.mark.parametrize("block", [e.block for e in table2_catalog()])
def test_listed_torsion_families_lie_in_the_solution_space(block):
    e = table2_entry(block)
    L = e.algebra_obj()
    metric = {p: 1 for p in e.metric_params}
    J, g, H0 = e.bind(metric)
    T = torsion_solution_space(L, J, g)
    span = [h.flatten() for h in T.basis]
    rng = np.random.default_rng(2)
    for _ in range(3):
        _, _, H = e.bind(e.random_binding(rng, metric))
        diff = exact.exact_array(H - T.particular).flatten()
        assert in_span([s.reshape(-1, 1) for s in span], diff.reshape(-1, 1))
    for _ in range(20):
        Hm = T.member([exact.random_fraction(rng) for _ in T.basis])
        assert exact.is_zero(torsion_compatibility_residual(J, Hm))
        assert exact.is_zero(torsion_symmetry_residual(L, J, g, Hm))
        assert np.all(Hm == -Hm.transpose(0, 2, 1))


def test_so3_listed_member_with_free_parameters_zero():
    e = table2_entry("IX+R")
    J, g, H = e.bind({"beta": 1})
    assert bihermitian_check(e.algebra_obj(), J, g, H).passed
    assert H[0][0, 3] == -1 and H[0][3, 0] == 1


def test_bihermitian_check_examples():
    e = table2_entry("A4.8/1")
    L = e.algebra_obj()
    assert bihermitian_check(L, *e.bind({"b1": Fraction(1, 2), "b2": -1})).passed
    v = table2_entry("VIII+R")
    assert bihermitian_check(v.algebra_obj(), *v.bind({"alpha": 1, "d3": 1, "d6": -1})).passed
    J, g, H = e.bind({})
    rep = bihermitian_check(L, J, exact.identity(4), H)
    assert "ad_invariance" in rep.failures()
    assert set(rep.flags) == set(CONDITIONS)


def test_degenerate_metric_fails_the_check():
    e = table2_entry("A4.8/1")
    J, _, _ = e.bind({})
    rep = bihermitian_check(e.algebra_obj(), J, exact.zeros((4, 4)), exact.zeros((4, 4, 4)))
    assert "metric_nondegenerate" in rep.failures()


@pytest.mark.parametrize("block", [e.block for e in table2_catalog()])
def test_kahler_form_is_antisymmetric(block):
    e = table2_entry(block)
    rng = np.random.default_rng(5)
    J, g, H = e.bind(e.random_binding(rng))
    Jg = J.dot(g)
    assert exact.is_zero(Jg + Jg.T)


def test_table2_contents():
    assert {e.algebra for e in table2_catalog()} == {"A4.8", "VIII+R", "IX+R"}
    _, g, _ = table2_entry("VIII+R").bind({"alpha": 2})
    assert np.all(g == diag(-2, -2, 2, 2))
    J2, _, _ = table2_entry("A4.8/2").bind({})
    assert J2.tolist() == [[0, 0, -1, 0], [0, 0, 0, -1], [1, 0, 0, 0], [0, 1, 0, 0]]
    assert len(table2_entry("A4.8/1").free) == 15
    assert len(table2_entry("A4.8/2").free) == 16


def test_table2_metric_constraint():
    with pytest.raises(ValueError):
        table2_entry("VIII+R").bind({"alpha": 0})


def test_is_three_form():
    H = exact.zeros((3, 3, 3))
    for (a, b, c), s in {(0, 1, 2): 1, (1, 2, 0): 1, (2, 0, 1): 1, (1, 0, 2): -1, (0, 2, 1): -1, (2, 1, 0): -1}.items():
        H[a, b, c] = Fraction(s)
    assert is_three_form(H)
    H[0, 1, 2] = 2
    assert not is_three_form(H)


def test_h_bracket_examples():
    e = table2_entry("A4.8/2")
    L = e.algebra_obj()
    _, g, H = e.bind({"c12": -1, "c15": -1})
    ft, ok = h_bracket(L, g, H)
    assert ok and jacobi_violations(ft) == 0
    ft0, ok0 = h_bracket(L, g, exact.zeros((4, 4, 4)))
    assert ok0 and exact.is_zero(ft0)
    _, g, H = e.bind({"c1": 1})
    ft1, ok1 = h_bracket(L, g, H)
    assert ok1 == (jacobi_violations(ft1) == 0)
    assert ok1 is False
    with pytest.raises(SingularMetric):
        h_bracket(L, exact.zeros((4, 4)), H)


def test_derived_dimension():
    assert derived_dimension(catalog_get("4A1").f) == 0
    assert derived_dimension(catalog_get("IX+R").f) == 3
    assert derived_dimension(catalog_get("A4.8").f) == 3


def test_manin_abelian_identity():
    L = catalog_get("4A1")
    cert = manin_check(L, exact.identity(4), exact.zeros((4, 4, 4)))
    assert isinstance(cert, ManinCertificate)
    assert np.all(cert.C == exact.identity(4))


def test_manin_not_applicable_for_zero_torsion_on_nonabelian():
    e = table2_entry("A4.8/1")
    _, g, _ = e.bind({})
    with pytest.raises(NotApplicable):
        manin_check(e.algebra_obj(), g, exact.zeros((4, 4, 4)))
    _, g, H = table2_entry("A4.8/2").bind({"c1": 1})
    with pytest.raises(NotApplicable):
        manin_check(e.algebra_obj(), g, H)


def test_manin_so21_double():
    values = next(s["values"] for s in table2_special_values() if s["block"] == "VIII+R")
    e = table2_entry("VIII+R")
    L = e.algebra_obj()
    _, g, H = e.bind(values)
    cert = manin_check(L, g, H, SolveConfig(starts=2000, seed=7, refine_limit=8, max_certified=1, search_bound=0.0))
    assert isinstance(cert, ManinCertificate), cert
    assert exact.is_zero(manin_residual(L, g, H, cert.C))
    ft, _ = h_bracket(L, g, H)
    assert is_homomorphism(ft, L.f, cert.C)
    assert exact.det(cert.C) != 0
    assert ManinCertificate.from_json(json.loads(json.dumps(cert.to_json()))).to_json() == cert.to_json()


def test_manin_not_found_json():
    nf = ManinNotFound("budget", {"starts": 3})
    assert nf.to_json() == {"found": False, "reason": "budget", "stats": {"starts": 3}}


def test_bihermitian_json_round_trip():
    e = table2_entry("IX+R")
    params = e.random_binding(np.random.default_rng(9))
    J, g, H = e.bind(params)
    doc = json.loads(json.dumps(bihermitian_to_json("IX+R", J, g, H, params)))
    name, J2, g2, H2, p2 = bihermitian_from_json(doc)
    assert name == "IX+R" and p2 == params
    assert np.all(J2 == J) and np.all(g2 == g) and np.all(H2 == H)
