"""P1 assembly of the stiffness, mass and side-mass matrices on one copy.

All element integrals are exact: P1 gradients are constant per element.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .geometry import EDGE_LABELS, CoefficientField, NonEllipticError, hermitian_part_min_eigs
from .mesh import TriangleMesh, edge_dofs

BOUNDARY_CONDITIONS = ("neumann", "dirichlet", "robin")


@dataclass(frozen=True)
class FormSpec:
    """Which form to assemble: boundary condition, Robin coefficient and the
    coefficient matrix of the principal part."""

    bc: str = "neumann"
    beta: float = 0.0
    coefficient: CoefficientField = field(default_factory=CoefficientField.identity)

    def __post_init__(self):
        if self.bc not in BOUNDARY_CONDITIONS:
            raise ValueError(f"unknown boundary condition {self.bc!r}")
        if self.bc != "robin":
            object.__setattr__(self, "beta", 0.0)
        object.__setattr__(self, "beta", float(self.beta))


@dataclass(frozen=True)
class AssembledBlock:
    """Matrices of one triangle copy, shared by all seven copies."""

    stiffness: sp.csr_matrix
    mass: sp.csr_matrix
    edge_mass: dict
    level: int


def check_ellipticity(coef) -> float:
    """Ellipticity constant of a coefficient field (smallest eigenvalue of the
    Hermitian part over all elements). Raises NonEllipticError if it is not
    positive."""
    if isinstance(coef, CoefficientField):
        return coef.ellipticity_constant
    arr = np.asarray(coef, dtype=complex)
    mus = hermitian_part_min_eigs(arr.reshape(-1, 2, 2))
    bad = int(np.argmin(mus))
    if mus[bad] <= 0.0:
        raise NonEllipticError(
            f"coefficient is not elliptic at element {bad}: eigenvalue {mus[bad]:.6g}",
            element=bad,
        )
    return float(mus.min())


def _gradients(mesh: TriangleMesh):
    """Barycentric gradients (n_el, 3, 2) and element areas."""
    p = mesh.vertices[mesh.elements]
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    # rows of the inverse Jacobian give grads of the 2nd and 3rd hat functions
    g1 = np.stack([d2[:, 1], -d2[:, 0]], axis=1) / det[:, None]
    g2 = np.stack([-d1[:, 1], d1[:, 0]], axis=1) / det[:, None]
    grads = np.stack([-g1 - g2, g1, g2], axis=1)
    return grads, 0.5 * np.abs(det)


def _scatter(mesh: TriangleMesh, local: np.ndarray) -> sp.csr_matrix:
    n = mesh.n_vertices
    rows = np.repeat(mesh.elements, 3, axis=1).ravel()
    cols = np.tile(mesh.elements, (1, 3)).ravel()
    # coo -> csr sums duplicates in a fixed order, so assembly is reproducible
    return sp.coo_matrix((local.ravel(), (rows, cols)), shape=(n, n)).tocsr()


def local_stiffness(mesh: TriangleMesh, coef: CoefficientField) -> np.ndarray:
    """Element matrices ``K_e[p, q] = area * sum_ij c_ij d_i phi_q d_j phi_p``."""
    grads, area = _gradients(mesh)
    c = coef.per_element(mesh.n_elements)
    return area[:, None, None] * np.einsum("eqi,eij,epj->epq", grads, c, grads)


def assemble_stiffness(mesh: TriangleMesh, coef: CoefficientField | None = None) -> sp.csr_matrix:
    """Complex stiffness matrix of ``sum_ij int c_ij (d_i u) conj(d_j v)``."""
    coef = CoefficientField.identity() if coef is None else coef
    K = _scatter(mesh, local_stiffness(mesh, coef).astype(complex))
    if coef.is_hermitian:
        K = 0.5 * (K + K.conj().T)
    return K.tocsr()


def assemble_mass(mesh: TriangleMesh) -> sp.csr_matrix:
    _, area = _gradients(mesh)
    ref = (np.ones((3, 3)) + np.eye(3)) / 12.0
    return _scatter(mesh, area[:, None, None] * ref)


def assemble_edge_mass(mesh: TriangleMesh, label: str) -> sp.csr_matrix:
    """1D P1 mass matrix of side ``label``, embedded in the vertex numbering."""
    idx = edge_dofs(mesh, label)
    pts = mesh.vertices[idx]
    h = np.hypot(*(pts[1:] - pts[:-1]).T)
    a, b = idx[:-1], idx[1:]
    rows = np.concatenate([a, a, b, b])
    cols = np.concatenate([a, b, a, b])
    vals = np.concatenate([h / 3, h / 6, h / 6, h / 3])
    n = mesh.n_vertices
    return sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()


def assemble_block(mesh: TriangleMesh, coef: CoefficientField | None = None) -> AssembledBlock:
    return AssembledBlock(
        stiffness=assemble_stiffness(mesh, coef),
        mass=assemble_mass(mesh),
        edge_mass={lab: assemble_edge_mass(mesh, lab) for lab in EDGE_LABELS},
        level=mesh.level,
    )
