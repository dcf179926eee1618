"""Discrete glued spaces inside seven copies of the triangle mesh.

A function on the glued domain is a 7-tuple of nodal vectors, one per copy.
Slot ``(k, p)`` (copy k, vertex p) is stored at flat index ``k * N + p`` with
k 0-based. Gluing identifies slots on matching sides, Dirichlet conditions
pin whole classes to zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.spatial import cKDTree

from .assembly import AssembledBlock, FormSpec, assemble_block, local_stiffness
from .geometry import (
    EDGE_LABELS,
    NCOPIES,
    DomainLayout,
    check_embedding,
    planar_placements,
    transform_coefficient,
)
from .mesh import TriangleMesh, edge_dofs, refine_uniform


class GluingError(ValueError):
    pass


class _UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, x):
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            # smallest slot stays the representative
            if rb < ra:
                ra, rb = rb, ra
            self.parent[rb] = ra


@dataclass(frozen=True)
class GluedSpace:
    layout: DomainLayout
    mesh: TriangleMesh
    bc: str
    slot_class: np.ndarray  # class id of each of the 7N slots
    representatives: np.ndarray  # smallest slot of each class, ascending
    masked: np.ndarray  # bool per class
    free_index: np.ndarray  # per class: position among free classes, or -1

    @property
    def mesh_level(self) -> int:
        return self.mesh.level

    @property
    def n_slots(self) -> int:
        return len(self.slot_class)

    @property
    def n_classes(self) -> int:
        return len(self.representatives)

    @property
    def free_dim(self) -> int:
        return int(np.count_nonzero(~self.masked))

    @property
    def dof_classes(self) -> list:
        """Classes as sorted lists of slots."""
        out = [[] for _ in range(self.n_classes)]
        for s, c in enumerate(self.slot_class):
            out[c].append(s)
        return out

    @property
    def slot_free(self) -> np.ndarray:
        """Free coordinate of each slot, -1 for masked slots."""
        return self.free_index[self.slot_class]

    @property
    def free_representatives(self) -> np.ndarray:
        return self.representatives[~self.masked]

    def prolongation(self) -> sp.csr_matrix:
        """0/1 matrix R (7N x free_dim) expanding free coordinates to slots."""
        col = self.slot_free
        rows = np.flatnonzero(col >= 0)
        data = np.ones(len(rows))
        return sp.csr_matrix((data, (rows, col[rows])), shape=(self.n_slots, self.free_dim))

    def same_partition(self, other: GluedSpace) -> bool:
        return (
            np.array_equal(self.slot_class, other.slot_class)
            and np.array_equal(self.masked, other.masked)
        )


def build_glued_space(layout: DomainLayout, mesh: TriangleMesh, bc: str) -> GluedSpace:
    """Union-find over the 7N slots; Robin shares the Neumann space."""
    if bc not in ("neumann", "dirichlet", "robin"):
        raise GluingError(f"unknown boundary condition {bc!r}")
    n = mesh.n_vertices
    uf = _UnionFind(NCOPIES * n)
    for lab in EDGE_LABELS:
        dofs = edge_dofs(mesh, lab)
        for k, l in layout.glue_pairs[lab]:
            for p in dofs:
                uf.union((k - 1) * n + int(p), (l - 1) * n + int(p))
    roots = np.array([uf.find(s) for s in range(NCOPIES * n)])
    reps, slot_class = np.unique(roots, return_inverse=True)
    masked = np.zeros(len(reps), dtype=bool)
    if bc == "dirichlet":
        for lab in EDGE_LABELS:
            dofs = edge_dofs(mesh, lab)
            for k in layout.boundary_slots[lab]:
                masked[slot_class[(k - 1) * n + dofs]] = True
    free_index = np.full(len(reps), -1, dtype=np.int64)
    free_index[~masked] = np.arange(np.count_nonzero(~masked))
    for arr in (slot_class, reps, masked, free_index):
        arr.setflags(write=False)
    return GluedSpace(layout, mesh, bc, slot_class, reps, masked, free_index)


@dataclass(frozen=True)
class GluedOperatorPair:
    """Stiffness K and mass M of the glued form on the free coordinates."""

    K: sp.csr_matrix
    M: sp.csr_matrix
    formspec: FormSpec
    space: GluedSpace

    @property
    def free_dim(self) -> int:
        return self.K.shape[0]

    def dense(self):
        return self.K.toarray(), self.M.toarray()


def assemble_glued(space: GluedSpace, block: AssembledBlock, formspec: FormSpec) -> GluedOperatorPair:
    if block.level != space.mesh_level:
        raise GluingError(f"block level {block.level} != space level {space.mesh_level}")
    expected = "neumann" if formspec.bc == "robin" else formspec.bc
    actual = "neumann" if space.bc == "robin" else space.bc
    if expected != actual:
        raise GluingError(f"space built for {space.bc!r}, form is {formspec.bc!r}")
    R = space.prolongation()
    eye = sp.identity(NCOPIES, format="csr")
    K_big = sp.kron(eye, block.stiffness, format="csr").astype(complex)
    if formspec.bc == "robin" and formspec.beta != 0.0:
        K_big = K_big + formspec.beta * robin_boundary_matrix(space.layout, block)
    M_big = sp.kron(eye, block.mass, format="csr")
    K = (R.T @ K_big @ R).tocsr()
    M = (R.T @ M_big @ R).tocsr()
    if formspec.coefficient.is_hermitian:
        K = (0.5 * (K + K.conj().T)).tocsr()
    M = (0.5 * (M + M.T)).tocsr()
    return GluedOperatorPair(K, M, formspec, space)


def robin_boundary_matrix(layout: DomainLayout, block: AssembledBlock) -> sp.csr_matrix:
    """Sum over boundary slots (k, side) of the side mass on copy k (7N x 7N)."""
    total = None
    for lab in EDGE_LABELS:
        sel = np.zeros(NCOPIES)
        sel[[k - 1 for k in layout.boundary_slots[lab]]] = 1.0
        term = sp.kron(sp.diags(sel), block.edge_mass[lab], format="csr")
        total = term if total is None else total + term
    return total.tocsr()


def glued_problem(layout, tri, level, formspec) -> GluedOperatorPair:
    """Convenience: mesh, block, space and pencil in one call."""
    mesh = refine_uniform(tri, level)
    space = build_glued_space(layout, mesh, formspec.bc)
    block = assemble_block(mesh, formspec.coefficient)
    return assemble_glued(space, block, formspec)


def write_matrix_market(path, A) -> None:
    """Coordinate Matrix Market text file (complex if A has nonzero imaginary part)."""
    from scipy.io import mmwrite

    A = sp.coo_matrix(A)
    if np.iscomplexobj(A.data) and not np.any(A.data.imag):
        A = sp.coo_matrix((A.data.real, (A.row, A.col)), shape=A.shape)
    mmwrite(str(path), A)


# -- planar cross-check ------------------------------------------------------


@dataclass(frozen=True)
class PlanarProblem:
    """Pencil assembled directly on the placed seven-triangle union mesh."""

    K: sp.csr_matrix
    M: sp.csr_matrix
    points: np.ndarray
    boundary: np.ndarray  # bool per merged vertex


def _merge_points(pts, tol):
    tree = cKDTree(pts)
    pairs = tree.query_pairs(tol, output_type="ndarray")
    uf = _UnionFind(len(pts))
    for a, b in pairs:
        uf.union(int(a), int(b))
    roots = np.array([uf.find(i) for i in range(len(pts))])
    reps, labels = np.unique(roots, return_inverse=True)
    for c in range(len(reps)):
        members = pts[labels == c]
        if len(members) > 1 and np.max(np.ptp(members, axis=0)) > tol:
            raise GluingError("geometric vertex merge is ambiguous (chained near-coincident points)")
    merged = pts[reps]
    close = cKDTree(merged).query_pairs(1e3 * tol)
    if close:
        raise GluingError("geometric vertex merge is ambiguous: distinct vertices within tolerance")
    return labels, merged


def assemble_planar(layout, tri, level, formspec, merge_tol=1e-9) -> PlanarProblem:
    """Assemble on the planar union of the placed copies with coefficient
    ``D C D^{-1}`` on copy k; coincident vertices are merged geometrically and
    boundary vertices found from sides that belong to a single element."""
    placements = planar_placements(layout, tri)
    overlaps = check_embedding(placements, tri)
    if overlaps:
        raise GluingError(f"planar embedding overlaps: {overlaps}")
    mesh = refine_uniform(tri, level)
    n = mesh.n_vertices
    placed = [mesh.transformed(iso) for iso in placements]
    pts = np.concatenate([m.vertices for m in placed])
    labels, merged = _merge_points(pts, merge_tol)
    nm = len(merged)

    rows, cols, kv, mv = [], [], [], []
    elems_all = []
    mref = (np.ones((3, 3)) + np.eye(3)) / 12.0
    for k, (iso, m) in enumerate(zip(placements, placed)):
        coef = transform_coefficient(formspec.coefficient, iso)
        local = local_stiffness(m, coef)
        area = np.abs(m.signed_areas())
        el = labels[k * n + m.elements]
        elems_all.append(el)
        rows.append(np.repeat(el, 3, axis=1).ravel())
        cols.append(np.tile(el, (1, 3)).ravel())
        kv.append(local.ravel())
        mv.append((area[:, None, None] * mref).ravel())
    rows, cols = np.concatenate(rows), np.concatenate(cols)
    K = sp.coo_matrix((np.concatenate(kv), (rows, cols)), shape=(nm, nm)).tocsr()
    M = sp.coo_matrix((np.concatenate(mv), (rows, cols)), shape=(nm, nm)).tocsr()

    elems = np.concatenate(elems_all)
    edges = np.sort(np.concatenate([elems[:, [0, 1]], elems[:, [1, 2]], elems[:, [2, 0]]]), axis=1)
    uniq, counts = np.unique(edges, axis=0, return_counts=True)
    if np.any(counts > 2):
        raise GluingError("non-manifold planar mesh")
    bnd_edges = uniq[counts == 1]
    boundary = np.zeros(nm, dtype=bool)
    boundary[bnd_edges.ravel()] = True

    if formspec.bc == "robin" and formspec.beta != 0.0:
        p = merged[bnd_edges]
        h = np.hypot(*(p[:, 1] - p[:, 0]).T)
        a, b = bnd_edges[:, 0], bnd_edges[:, 1]
        R = sp.coo_matrix(
            (np.concatenate([h / 3, h / 6, h / 6, h / 3]),
             (np.concatenate([a, a, b, b]), np.concatenate([a, b, a, b]))),
            shape=(nm, nm),
        )
        K = (K + formspec.beta * R).tocsr()
    if formspec.bc == "dirichlet":
        keep = np.flatnonzero(~boundary)
        K = K[keep][:, keep]
        M = M[keep][:, keep]
    if formspec.coefficient.is_hermitian:
        K = 0.5 * (K + K.conj().T)
    M = 0.5 * (M + M.T)
    return PlanarProblem(K.tocsr(), M.tocsr(), merged, boundary)


def embedded_crosscheck(layout, tri, level, formspec, m=15) -> dict:
    """Compare glued-block and planar-assembled spectra (first ``m`` values)."""
    from .spectra import nonsym_eigs, sym_eigs

    glued = glued_problem(layout, tri, level, formspec)
    planar = assemble_planar(layout, tri, level, formspec)
    if glued.free_dim != planar.K.shape[0]:
        raise GluingError(
            f"dimension mismatch: glued {glued.free_dim} vs planar {planar.K.shape[0]}"
        )
    m = min(m, glued.free_dim)
    solve = sym_eigs if formspec.coefficient.is_hermitian else nonsym_eigs
    s1 = solve(glued, m)
    s2 = solve((planar.K, planar.M), m)
    diff = np.abs(np.asarray(s1.values) - np.asarray(s2.values))
    return {
        "domain": layout.domain_id,
        "bc": formspec.bc,
        "level": level,
        "free_dim": glued.free_dim,
        "count": m,
        "glued": s1.values,
        "planar": s2.values,
        "max_abs_diff": float(diff.max()) if m else 0.0,
    }
