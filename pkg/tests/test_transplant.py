import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from isodrums.gluing import build_glued_space
from isodrums.mesh import refine_uniform
from isodrums.spectra import compare, nonsym_eigs, sym_eigs
from isodrums.transplant import (
    NAMED,
    TransplantError,
    TransplantMatrix,
    bhat,
    bhat_polynomials,
    induced_map,
    intertwine_residual,
    named_matrix,
    order_properties,
    polar_unitary,
    subspace_residual,
    unitary_bhat,
)


@pytest.fixture(scope="module")
def spaces(mesh2, layouts):
    return {bc: tuple(build_glued_space(lay, mesh2, bc) for lay in layouts) for bc in ("neumann", "dirichlet")}


def test_named_entries():
    B, BD = named_matrix("B"), named_matrix("BD")
    assert B.entries[0].tolist() == [0, 1, 1, 1, 0, 0, 0]
    assert BD.entries[1, 2] == -1
    assert all(np.count_nonzero(row) == 3 for row in B.entries)
    assert all(np.count_nonzero(row) == 3 for row in BD.entries)
    assert np.array_equal(np.abs(BD.entries), B.entries)
    assert np.array_equal(named_matrix("ONES").entries, np.ones((7, 7), dtype=int))
    assert B.exact and BD.exact
    with pytest.raises(TransplantError):
        named_matrix("C")


def test_fano_incidence():
    B = named_matrix("B").entries
    np.testing.assert_array_equal(B.T @ B, 2 * np.eye(7, dtype=int) + np.ones((7, 7), dtype=int))


def test_bhat_special_cases():
    B = named_matrix("B").entries
    assert np.array_equal(bhat(0, 1).as_fractions(), B)
    assert np.all(bhat(1, 1).as_fractions() == 1)
    assert np.array_equal(bhat(1, 0).as_fractions(), 1 - B)


fr = st.fractions(max_denominator=50).filter(lambda x: abs(x) < 100)


@given(fr, fr, fr, fr)
def test_bhat_linear(a, g, a2, g2):
    lhs = bhat(a, g).as_fractions() + bhat(a2, g2).as_fractions()
    assert np.all(lhs == bhat(a + a2, g + g2).as_fractions())


@pytest.mark.parametrize("branch", ["plus", "minus"])
def test_unitary_bhat(branch):
    mat, a, g = unitary_bhat(branch)
    assert a > 0
    assert all(abs(p) <= 1e-14 for p in bhat_polynomials(a, g))
    P = mat.as_float()
    assert np.abs(P.T @ P - np.eye(7)).max() <= 1e-12


def test_unitary_bhat_plus_value():
    _, a, g = unitary_bhat("plus")
    assert a == pytest.approx(1 / np.sqrt(22 - 12 * np.sqrt(2)), abs=1e-15)
    assert a == pytest.approx(0.4459029, abs=1e-7)
    assert g == pytest.approx(a * (-2 + np.sqrt(2)), abs=1e-15)


def test_matrix_json_roundtrip(tmp_path):
    m = bhat(Fraction(1, 3), Fraction(-2, 5))
    p = tmp_path / "m.json"
    p.write_text(json.dumps(m.to_json()))
    back = TransplantMatrix.load(p)
    assert np.all(back.as_fractions() == m.as_fractions())


def test_subspace_residuals(spaces):
    (n1, n2), (d1, d2) = spaces["neumann"], spaces["dirichlet"]
    B, BD = named_matrix("B"), named_matrix("BD")
    assert subspace_residual(B, n1, n2) == 0
    assert subspace_residual(B.T, n2, n1) == 0
    assert subspace_residual(named_matrix("ONES"), n1, n2) == 0
    assert subspace_residual(BD, d1, d2) == 0
    assert subspace_residual(BD.T, d2, d1) == 0
    assert subspace_residual(named_matrix("IDENTITY"), n1, n2) > 0.1
    assert subspace_residual(B, d1, d2) > 0
    assert isinstance(subspace_residual(B, n1, n2), Fraction)


def test_mesh_mismatch(tri, layouts, spaces):
    other = build_glued_space(layouts[1], refine_uniform(tri, 1), "neumann")
    with pytest.raises(TransplantError):
        subspace_residual(named_matrix("B"), spaces["neumann"][0], other)


def test_induced_map(spaces):
    n1, n2 = spaces["neumann"]
    one = np.ones(n1.free_dim)
    F = induced_map(named_matrix("B"), n1, n2).matrix
    assert F.shape == (n2.free_dim, n1.free_dim)
    np.testing.assert_array_equal(F @ one, 3 * one)
    assert np.linalg.svd(F, compute_uv=False).min() > 1e-8
    G = induced_map(named_matrix("ONES"), n1, n2).matrix
    np.testing.assert_array_equal(G @ one, 7 * one)
    # defining relation R2 F = (P (x) I) R1
    R1, R2 = n1.prolongation().toarray(), n2.prolongation().toarray()
    PI = np.kron(named_matrix("B").as_float(), np.eye(n1.mesh.n_vertices))
    np.testing.assert_array_equal(R2 @ F, PI @ R1)
    with pytest.raises(TransplantError):
        induced_map(named_matrix("IDENTITY"), n1, n2)


@pytest.mark.parametrize(
    "bc,name,coeff",
    [("neumann", "B", "I"), ("neumann", "B", "skew"), ("dirichlet", "BD", "I"), ("dirichlet", "BD", "skew")],
)
def test_intertwining_and_similarity(problems, bc, name, coeff):
    p1, p2 = problems(bc, 2, coeff=coeff)
    rk, rm = intertwine_residual(named_matrix(name), p1, p2)
    assert rk <= 1e-13 and rm <= 1e-13
    solve = sym_eigs if coeff == "I" else nonsym_eigs
    assert compare(solve(p1, 20), solve(p2, 20), tol=1e-6).passed


def test_robin_intertwining_fails(problems):
    p1, p2 = problems("robin", 2, 1.0)
    rk, rm = intertwine_residual(named_matrix("B"), p1, p2)
    assert rk > 1e-3
    assert rm <= 1e-13


def test_bhat_members_intertwine(problems):
    p1, p2 = problems("neumann", 2)
    for a, g in [(Fraction(1, 2), Fraction(-3, 7)), unitary_bhat()[1:]]:
        assert intertwine_residual(bhat(a, g), p1, p2)[0] <= 1e-13


def test_polar_trivial_cases():
    U, absP = polar_unitary(named_matrix("IDENTITY"))
    np.testing.assert_allclose(U.as_float(), np.eye(7), atol=1e-14)
    D = np.eye(7)
    D[0, 0] = 2
    U, absP = polar_unitary(TransplantMatrix(D))
    np.testing.assert_allclose(absP.as_float(), D, atol=1e-14)
    np.testing.assert_allclose(U.as_float(), np.eye(7), atol=1e-14)
    Q, _ = unitary_bhat()[0], None
    U, absP = polar_unitary(Q)
    np.testing.assert_allclose(U.as_float(), Q.as_float(), atol=1e-12)
    np.testing.assert_allclose(absP.as_float(), np.eye(7), atol=1e-12)
    with pytest.raises(TransplantError):
        polar_unitary(named_matrix("ONES"))


def test_polar_of_b():
    U, absP = polar_unitary(named_matrix("B"))
    u, ap = U.as_float(), absP.as_float()
    assert np.abs(u.T @ u - np.eye(7)).max() <= 1e-12
    assert np.abs(u @ ap - named_matrix("B").as_float()).max() <= 1e-12
    # U lies in the bhat family: constant off the support of B and on it
    B = named_matrix("B").entries.astype(bool)
    assert np.ptp(u[B]) < 1e-12 and np.ptp(u[~B]) < 1e-12
    _, a, g = unitary_bhat("minus")
    np.testing.assert_allclose(u, bhat(-a, -g).as_float(), atol=1e-9)


def test_order_properties():
    r = order_properties(named_matrix("B"))
    assert r["entrywise_nonnegative"] and not r["inverse_entrywise_nonnegative"]
    assert r["max_nonzeros_per_row"] == 3 and not r["disjointness_preserving"]
    assert r["is_normal"] and not r["is_orthogonal"]
    assert "-1/6" in sum(r["inverse"], []) and "1/3" in sum(r["inverse"], [])
    r = order_properties(named_matrix("IDENTITY"))
    assert r["entrywise_nonnegative"] and r["inverse_entrywise_nonnegative"]
    assert r["is_normal"] and r["is_orthogonal"] and r["max_nonzeros_per_row"] == 1
    assert r["disjointness_preserving"]
    r = order_properties(named_matrix("ONES"))
    assert not r["invertible"] and r["inverse_entrywise_nonnegative"] is None


@pytest.mark.parametrize("name", NAMED)
def test_order_properties_disjointness_criterion(name):
    r = order_properties(named_matrix(name))
    assert r["disjointness_preserving"] == (r["max_nonzeros_per_row"] <= 1)
