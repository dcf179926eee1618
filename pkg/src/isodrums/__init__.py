"""Discrete reconstruction of the isospectral warped-propeller drums.

Builds the two seven-triangle glued domains, assembles elliptic forms under
Neumann, Dirichlet and Robin conditions, checks transplantation exactly and
compares spectra.
"""

from .admissible import admissible_space, build_constraints, contains_invertible, solve_space, trace_patterns
from .assembly import (
    FormSpec,
    assemble_block,
    assemble_edge_mass,
    assemble_mass,
    assemble_stiffness,
    check_ellipticity,
)
from .geometry import (
    CoefficientField,
    DomainLayout,
    Isometry,
    ReferenceTriangle,
    builtin_layout,
    check_embedding,
    planar_placements,
    transform_coefficient,
)
from .gluing import assemble_glued, build_glued_space, embedded_crosscheck, glued_problem
from .mesh import TriangleMesh, edge_dofs, refine_uniform
from .spectra import Spectrum, compare, nonsym_eigs, sym_eigs
from .transplant import (
    TransplantMatrix,
    bhat,
    induced_map,
    intertwine_residual,
    named_matrix,
    order_properties,
    polar_unitary,
    subspace_residual,
    unitary_bhat,
)

__version__ = "0.1.0"

__all__ = [
    "admissible_space",
    "build_constraints",
    "contains_invertible",
    "solve_space",
    "trace_patterns",
    "FormSpec",
    "assemble_block",
    "assemble_edge_mass",
    "assemble_mass",
    "assemble_stiffness",
    "check_ellipticity",
    "CoefficientField",
    "DomainLayout",
    "Isometry",
    "ReferenceTriangle",
    "builtin_layout",
    "check_embedding",
    "planar_placements",
    "transform_coefficient",
    "assemble_glued",
    "build_glued_space",
    "embedded_crosscheck",
    "glued_problem",
    "TriangleMesh",
    "edge_dofs",
    "refine_uniform",
    "Spectrum",
    "compare",
    "nonsym_eigs",
    "sym_eigs",
    "TransplantMatrix",
    "bhat",
    "induced_map",
    "intertwine_residual",
    "named_matrix",
    "order_properties",
    "polar_unitary",
    "subspace_residual",
    "unitary_bhat",
]
