import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from isodrums.geometry import EDGE_LABELS, ReferenceTriangle
from isodrums.mesh import MAX_LEVEL, MeshError, edge_dofs, refine_uniform


@pytest.mark.parametrize("r,nv,ne,ntr", [(0, 3, 1, 2), (2, 15, 16, 5), (3, 45, 64, 9)])
def test_counts(tri, r, nv, ne, ntr):
    m = refine_uniform(tri, r)
    assert (m.n_vertices, m.n_elements) == (nv, ne)
    assert all(len(edge_dofs(m, lab)) == ntr for lab in EDGE_LABELS)


@settings(max_examples=8, deadline=None)
@given(st.integers(0, 5))
def test_count_formulas(r):
    m = refine_uniform(ReferenceTriangle(), r)
    n = 2**r
    assert m.n_vertices == (n + 1) * (n + 2) // 2
    assert m.n_elements == 4**r
    assert np.all(m.signed_areas() > 0)
    assert m.signed_areas().sum() == pytest.approx(ReferenceTriangle().area, abs=1e-13)
    for lab in EDGE_LABELS:
        assert len(m.edge_traces[lab]) == n + 1
    for a, b in [("G1", "G2"), ("G1", "G3"), ("G2", "G3")]:
        assert len(set(m.edge_traces[a]) & set(m.edge_traces[b])) == 1


def test_level_guard(tri):
    with pytest.raises(MeshError):
        refine_uniform(tri, MAX_LEVEL + 1)
    with pytest.raises(MeshError):
        refine_uniform(tri, -1)


def test_r0_traces_are_corners(tri):
    m = refine_uniform(tri, 0)
    for lab in EDGE_LABELS:
        i, j = tri.edge_labels[lab]
        np.testing.assert_allclose(m.vertices[edge_dofs(m, lab)], tri.points[[i, j]])


def test_r1_middle_is_midpoint(tri):
    m = refine_uniform(tri, 1)
    for lab in EDGE_LABELS:
        a, b = tri.edge_endpoints(lab)
        np.testing.assert_allclose(m.vertices[edge_dofs(m, lab)[1]], (np.asarray(a) + np.asarray(b)) / 2)


def test_r2_dyadic_parameters(tri):
    m = refine_uniform(tri, 2)
    for lab in EDGE_LABELS:
        i, j = tri.edge_labels[lab]
        assert i < j
        # exact parameter from integer barycentrics, measured from corner i
        params = [Fraction(int(m.bary[v, j]), 4) for v in edge_dofs(m, lab)]
        assert params == [Fraction(k, 4) for k in range(5)]
        a, b = tri.points[i], tri.points[j]
        for v, t in zip(edge_dofs(m, lab), params):
            np.testing.assert_allclose(m.vertices[v], a + float(t) * (b - a), atol=1e-15)


def test_boundary_vertex_membership(tri):
    m = refine_uniform(tri, 3)
    corners = set(np.flatnonzero((m.bary == 8).any(axis=1)).tolist())
    assert len(corners) == 3
    counts = {}
    for lab in EDGE_LABELS:
        for v in m.edge_traces[lab]:
            counts[int(v)] = counts.get(int(v), 0) + 1
    for v, c in counts.items():
        assert c == (2 if v in corners else 1)
    # and these are exactly the vertices with a zero barycentric coordinate
    assert set(counts) == set(np.flatnonzero((m.bary == 0).any(axis=1)).tolist())


def test_mesh_json(tri):
    m = refine_uniform(tri, 1)
    d = json.loads(m.to_json())
    assert set(d) == {"vertices", "elements", "edges"}
    assert set(d["edges"]) == set(EDGE_LABELS)
    assert len(d["vertices"]) == 6 and len(d["elements"]) == 4


def test_clockwise_triangle_still_ccw():
    tri = ReferenceTriangle.from_coords([0, 0, 0.3, 0.8, 1, 0])
    m = refine_uniform(tri, 2)
    assert np.all(m.signed_areas() > 0)
