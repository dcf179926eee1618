import numpy as np
import pytest
import scipy.io
import scipy.linalg as la

from isodrums.assembly import FormSpec, assemble_block
from isodrums.geometry import DOMAIN_IDS, EDGE_LABELS, NCOPIES, CoefficientField, builtin_layout
from isodrums.gluing import (
    GluingError,
    assemble_glued,
    build_glued_space,
    embedded_crosscheck,
    write_matrix_market,
)
from isodrums.mesh import refine_uniform
from isodrums.spectra import sym_eigs

FREE_NEUMANN = [9, 24, 75, 261, 969]
FREE_DIRICHLET = [0, 6, 39, 189, 825]


def _euler_vertex_count(layout):
    """V = 2 - F + E on the 7-triangle complex (F counts the outer face)."""
    interior = sum(len(v) for v in layout.glue_pairs.values())
    boundary = sum(len(v) for v in layout.boundary_slots.values())
    return 2 - (NCOPIES + 1) + interior + boundary


def _closure_classes(layout, mesh):
    """Slot classes by repeated merging of label sets until nothing changes."""
    n = mesh.n_vertices
    cls = [{s} for s in range(NCOPIES * n)]
    links = []
    for lab in EDGE_LABELS:
        for k, l in layout.glue_pairs[lab]:
            for p in mesh.edge_traces[lab]:
                links.append(((k - 1) * n + int(p), (l - 1) * n + int(p)))
    changed = True
    while changed:
        changed = False
        for a, b in links:
            if cls[a] is not cls[b]:
                merged = cls[a] | cls[b]
                for s in merged:
                    cls[s] = merged
                changed = True
    return {frozenset(c) for c in cls}


def _on_boundary_slot(layout, mesh, slot):
    n = mesh.n_vertices
    k, p = divmod(slot, n)
    return any(p in mesh.edge_traces[lab] for lab in layout.boundary_edges_of(k + 1))


@pytest.mark.parametrize("dom", DOMAIN_IDS)
def test_r0_euler_count(tri, dom):
    lay = builtin_layout(dom)
    sp_ = build_glued_space(lay, refine_uniform(tri, 0), "neumann")
    assert sp_.free_dim == _euler_vertex_count(lay) == 9


@pytest.mark.parametrize("dom", DOMAIN_IDS)
@pytest.mark.parametrize("r", [0, 1, 2])
def test_partition_matches_closure_oracle(tri, dom, r):
    lay = builtin_layout(dom)
    mesh = refine_uniform(tri, r)
    space = build_glued_space(lay, mesh, "dirichlet")
    oracle = _closure_classes(lay, mesh)
    assert {frozenset(c) for c in space.dof_classes} == oracle
    masked = sum(any(_on_boundary_slot(lay, mesh, s) for s in c) for c in oracle)
    assert space.free_dim == len(oracle) - masked
    assert all(c[0] == rep for c, rep in zip(space.dof_classes, space.representatives))


def test_r0_dirichlet_empty(tri, layouts):
    assert build_glued_space(layouts[0], refine_uniform(tri, 0), "dirichlet").free_dim == 0


@pytest.mark.parametrize("r", range(5))
def test_free_dims_equal(tri, layouts, r):
    mesh = refine_uniform(tri, r)
    for bc, table in (("neumann", FREE_NEUMANN), ("dirichlet", FREE_DIRICHLET)):
        dims = [build_glued_space(lay, mesh, bc).free_dim for lay in layouts]
        assert dims == [table[r]] * 2


def test_idempotent(mesh2, layouts):
    a = build_glued_space(layouts[0], mesh2, "dirichlet")
    b = build_glued_space(layouts[0], mesh2, "dirichlet")
    assert a.same_partition(b)
    assert not a.same_partition(build_glued_space(layouts[1], mesh2, "dirichlet"))


def test_neumann_constant_in_kernel(problems):
    for pair in problems("neumann", 2):
        K, M = pair.dense()
        assert np.abs(K @ np.ones(pair.free_dim)).max() < 1e-12
        assert (pair.K - pair.K.conj().T).count_nonzero() == 0
        la.cholesky(M)


def test_neumann_kernel_dimension_one(problems):
    for pair in problems("neumann", 2):
        lam = sym_eigs(pair, 2).values
        assert abs(lam[0]) < 1e-10 and lam[1] > 1e-8


def test_robin_beta_zero_is_neumann(tri, layouts):
    mesh = refine_uniform(tri, 2)
    block = assemble_block(mesh)
    sp_ = build_glued_space(layouts[0], mesh, "robin")
    K0 = assemble_glued(sp_, block, FormSpec("robin", 0.0)).K
    KN = assemble_glued(build_glued_space(layouts[0], mesh, "neumann"), block, FormSpec()).K
    assert (K0 != KN).nnz == 0


def test_robin_boundary_term(tri, layouts):
    """beta-term equals beta times the total boundary length on constants."""
    mesh = refine_uniform(tri, 2)
    block = assemble_block(mesh)
    lay = layouts[0]
    space = build_glued_space(lay, mesh, "robin")
    pair = assemble_glued(space, block, FormSpec("robin", 2.0))
    one = np.ones(space.free_dim)
    perimeter = sum(len(lay.boundary_slots[lab]) * L for lab, L in tri.side_lengths().items())
    assert np.real(one @ pair.K @ one) == pytest.approx(2.0 * perimeter, rel=1e-12)


def test_robin_monotone_in_beta(problems):
    prev = None
    for beta in (0.0, 0.5, 1.0):
        vals = np.concatenate([sym_eigs(p, 20).values for p in problems("robin", 2, beta)])
        if prev is not None:
            assert np.all(vals >= prev - 1e-10)
        prev = vals
    assert np.all(prev > 0)


def test_dirichlet_r1_positive(problems):
    for pair in problems("dirichlet", 1):
        assert pair.free_dim > 0
        assert sym_eigs(pair, 1).values[0] > 0


def test_level_mismatch(tri, layouts):
    space = build_glued_space(layouts[0], refine_uniform(tri, 1), "neumann")
    with pytest.raises(GluingError):
        assemble_glued(space, assemble_block(refine_uniform(tri, 2)), FormSpec())
    with pytest.raises(GluingError):
        assemble_glued(space, assemble_block(refine_uniform(tri, 1)), FormSpec("dirichlet"))


def test_prolongation_structure(mesh2, layouts):
    space = build_glued_space(layouts[1], mesh2, "dirichlet")
    R = space.prolongation()
    assert R.shape == (NCOPIES * mesh2.n_vertices, space.free_dim)
    assert np.all(R.sum(axis=1).A1 <= 1)
    assert np.all(R.sum(axis=0).A1 >= 1)


def test_matrix_market_export(tmp_path, problems):
    pair = problems("neumann", 1)[0]
    write_matrix_market(tmp_path / "K.mtx", pair.K)
    back = scipy.io.mmread(str(tmp_path / "K.mtx"))
    np.testing.assert_allclose(back.toarray(), pair.K.toarray().real)


@pytest.mark.parametrize("bc", ["neumann", "dirichlet", "robin"])
@pytest.mark.parametrize("coeff", ["I", "skew"])
@pytest.mark.parametrize("dom", DOMAIN_IDS)
def test_embedded_crosscheck(tri, bc, coeff, dom):
    coef = CoefficientField.identity() if coeff == "I" else CoefficientField(np.array([[2.0, 1.0], [0.0, 1.5]]))
    out = embedded_crosscheck(builtin_layout(dom), tri, 2, FormSpec(bc, 1.0, coef), m=15)
    assert out["count"] == 15
    assert out["max_abs_diff"] <= 1e-9


def test_embedded_crosscheck_r0(tri, layouts):
    out = embedded_crosscheck(layouts[0], tri, 0, FormSpec(), m=20)
    assert out["free_dim"] == 9 and out["count"] == 9
    assert out["max_abs_diff"] <= 1e-9


def test_dirichlet_monotone_in_refinement(problems):
    for p2, p3 in zip(problems("dirichlet", 2), problems("dirichlet", 3)):
        a, b = sym_eigs(p2, 15).values, sym_eigs(p3, 15).values
        assert np.all(b <= a + 1e-10)
