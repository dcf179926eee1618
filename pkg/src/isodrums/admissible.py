"""Exact spaces of 7x7 matrices compatible with a boundary-condition pattern.

The 49 unknowns p_kl are ordered row-major. Conditions are generated from
the trace patterns on each side: a 7-tuple of traces on side G is admissible
for a domain iff it lies in the pattern subspace W_G of Q^7.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import rational
from .geometry import EDGE_LABELS, NCOPIES, DomainLayout, builtin_layout

SYSTEMS = ("neumann", "dirichlet", "robin", "joint")
FORMAT_VERSION = 1
POLY_MAX_DIM = 4


def _unit(k):
    e = [Fraction(0)] * NCOPIES
    e[k - 1] = Fraction(1)
    return e


@dataclass(frozen=True)
class PatternSubspace:
    label: str
    basis: list
    complement_basis: list

    @property
    def dim(self) -> int:
        return len(self.basis)


def trace_patterns(layout: DomainLayout, bc: str) -> dict:
    """Pattern subspace of every side for ``bc`` in {neumann, dirichlet}.

    Neumann (and Robin): traces of glued copies agree. Dirichlet: in addition,
    traces of copies whose side is on the boundary vanish.
    """
    if bc == "robin":
        bc = "neumann"
    if bc not in ("neumann", "dirichlet"):
        raise ValueError(f"no trace pattern for boundary condition {bc!r}")
    out = {}
    for lab in EDGE_LABELS:
        basis, comp = [], []
        for k, l in layout.glue_pairs[lab]:
            ek, el = _unit(k), _unit(l)
            basis.append([a + b for a, b in zip(ek, el)])
            comp.append([a - b for a, b in zip(ek, el)])
        for k in sorted(layout.boundary_slots[lab]):
            (comp if bc == "dirichlet" else basis).append(_unit(k))
        out[lab] = PatternSubspace(lab, basis, comp)
    return out


@dataclass(frozen=True)
class ConstraintSystem:
    """Homogeneous linear equations on the 49 entries of P."""

    kind: str
    equations: list
    provenance: list

    def as_array(self) -> np.ndarray:
        return np.array(self.equations, dtype=object).reshape(-1, NCOPIES * NCOPIES)

    def evaluate(self, P) -> list:
        """Values of every equation at the matrix P (exact)."""
        x = rational.to_fraction_array(P).ravel()
        return [sum(c * v for c, v in zip(eq, x) if c) for eq in self.equations]

    def satisfied_by(self, P) -> bool:
        return all(v == 0 for v in self.evaluate(P))


def _outer(d, t):
    return [a * b for a in d for b in t]


def _inclusion_equations(p_src, p_dst, transpose, tag):
    """P W_src in W_dst (or P^T W_dst in W_src when ``transpose``)."""
    eqs, prov = [], []
    for lab in EDGE_LABELS:
        if not transpose:
            pairs = itertools.product(p_dst[lab].complement_basis, p_src[lab].basis)
            how = f"P maps {tag} source pattern into target"
            for d, t in pairs:
                eqs.append(_outer(d, t))
                prov.append((lab, how))
        else:
            pairs = itertools.product(p_dst[lab].basis, p_src[lab].complement_basis)
            how = f"P^T maps {tag} target pattern into source"
            for s, d in pairs:
                eqs.append(_outer(s, d))
                prov.append((lab, how))
    return eqs, prov


def _pattern_equations(layout1, layout2, bc):
    p1 = trace_patterns(layout1, bc)
    p2 = trace_patterns(layout2, bc)
    e1, v1 = _inclusion_equations(p1, p2, False, bc)
    e2, v2 = _inclusion_equations(p1, p2, True, bc)
    return e1 + e2, v1 + v2


def _boundary_equations(layout1, layout2, beta):
    """Robin boundary identity: for every side G,
    beta sum_kl s_k t_l p_kl (chi2_k - chi1_l) = 0 for s in W2_G, t in W1_G."""
    p1 = trace_patterns(layout1, "neumann")
    p2 = trace_patterns(layout2, "neumann")
    eqs, prov = [], []
    for lab in EDGE_LABELS:
        chi1 = [Fraction(int(k in layout1.boundary_slots[lab])) for k in range(1, NCOPIES + 1)]
        chi2 = [Fraction(int(k in layout2.boundary_slots[lab])) for k in range(1, NCOPIES + 1)]
        weight = [beta * (c2 - c1) for c2 in chi2 for c1 in chi1]
        for s, t in itertools.product(p2[lab].basis, p1[lab].basis):
            eqs.append([w * c for w, c in zip(weight, _outer(s, t))])
            prov.append((lab, "robin boundary term"))
    return eqs, prov


def build_constraints(
    kind: str,
    layout1: DomainLayout | None = None,
    layout2: DomainLayout | None = None,
    beta=1,
) -> ConstraintSystem:
    """Equations for P to transplant ``layout1`` onto ``layout2``.

    ``neumann``/``dirichlet``: P maps the source glued space into the target
    one and P^T maps it back. ``robin``: the Neumann equations plus the
    boundary-term identity scaled by the rational ``beta`` (zero rows are
    dropped, so beta = 0 gives the Neumann system). ``joint``: Neumann and
    Dirichlet together.
    """
    if kind not in SYSTEMS:
        raise ValueError(f"unknown constraint system {kind!r}; expected one of {SYSTEMS}")
    layout1 = layout1 or builtin_layout("omega1")
    layout2 = layout2 or builtin_layout("omega2")
    if kind in ("neumann", "dirichlet"):
        eqs, prov = _pattern_equations(layout1, layout2, kind)
        prov = [(kind, lab, how) for lab, how in prov]
    elif kind == "robin":
        e1, v1 = _pattern_equations(layout1, layout2, "neumann")
        e2, v2 = _boundary_equations(layout1, layout2, Fraction(beta))
        eqs = e1 + e2
        prov = [("neumann", lab, how) for lab, how in v1] + [("robin", lab, how) for lab, how in v2]
    else:
        e1, v1 = _pattern_equations(layout1, layout2, "neumann")
        e2, v2 = _pattern_equations(layout1, layout2, "dirichlet")
        eqs = e1 + e2
        prov = [("neumann", lab, how) for lab, how in v1] + [("dirichlet", lab, how) for lab, how in v2]
    keep = [i for i, e in enumerate(eqs) if any(e)]
    return ConstraintSystem(kind, [eqs[i] for i in keep], [prov[i] for i in keep])


@dataclass(frozen=True)
class SolutionSpace:
    kind: str
    basis: list  # 7x7 Fraction object arrays
    invertibility: dict = field(default=None, compare=False)

    @property
    def dimension(self) -> int:
        return len(self.basis)

    def contains(self, P) -> bool:
        """Exact membership of P in the span of the basis."""
        vec = rational.to_fraction_array(P).ravel()
        if not any(vec):
            return True
        if not self.basis:
            return False
        B = np.array([b.ravel() for b in self.basis], dtype=object)
        return rational.rank(np.vstack([B, vec[None, :]])) == rational.rank(B)

    def combination(self, coeffs) -> np.ndarray:
        out = rational.to_fraction_array(np.zeros((NCOPIES, NCOPIES), dtype=int))
        for c, b in zip(coeffs, self.basis):
            out = out + Fraction(c) * b
        return out

    def to_dict(self) -> dict:
        inv = self.invertibility or contains_invertible(self)
        return {
            "format_version": FORMAT_VERSION,
            "system": self.kind,
            "dimension": self.dimension,
            "basis": [rational.fraction_strings(b) for b in self.basis],
            "invertible": inv,
        }


def solve_space(system: ConstraintSystem) -> SolutionSpace:
    """Exact nullspace of the system as 7x7 matrices (reduced-echelon basis)."""
    n = NCOPIES * NCOPIES
    arr = system.as_array() if system.equations else np.zeros((0, n), dtype=object)
    vecs = rational.nullspace(arr, ncols=n)
    basis = [np.array(v, dtype=object).reshape(NCOPIES, NCOPIES) for v in vecs]
    return SolutionSpace(system.kind, basis)


def admissible_space(kind: str, layout1=None, layout2=None, beta=1) -> SolutionSpace:
    space = solve_space(build_constraints(kind, layout1, layout2, beta))
    return SolutionSpace(space.kind, space.basis, contains_invertible(space))


def _sample_points(dim, limit):
    """Deterministic integer points: unit vectors first, then the all-ones
    vector, then points on the moment curve (1, t, t^2, ...)."""
    for i in range(dim):
        yield [1 if j == i else 0 for j in range(dim)]
    yield [1] * dim
    for t in range(2, limit):
        yield [t**j for j in range(dim)]


def contains_invertible(space: SolutionSpace, samples: int = 64) -> dict:
    """Decide whether the span contains an invertible matrix.

    Returns ``{"answer": "yes"|"no"|"inconclusive", "certificate": str,
    "witness": ...}``. A "no" is only returned with a proof: a row or column
    that vanishes for every member, or (dimension <= 4) a determinant
    polynomial that is identically zero.
    """
    basis = space.basis
    for k in range(NCOPIES):
        if all(not any(b[k, :]) for b in basis):
            return {"answer": "no", "certificate": f"row {k + 1} vanishes in every member (zero row)", "zero_row": k + 1}
    for k in range(NCOPIES):
        if all(not any(b[:, k]) for b in basis):
            return {"answer": "no", "certificate": f"column {k + 1} vanishes in every member (zero column)", "zero_column": k + 1}

    def witness(coeffs):
        M = space.combination(coeffs)
        d = rational.det(M)
        if d != 0:
            return {
                "answer": "yes",
                "certificate": f"det = {d} at coefficients {list(map(str, coeffs))}",
                "witness": rational.fraction_strings(M),
                "coefficients": [str(c) for c in coeffs],
            }
        return None

    dim = space.dimension
    if dim <= POLY_MAX_DIM:
        # det(sum c_i b_i) has degree <= 7 in each c_i, so it vanishes
        # identically iff it vanishes on the grid {0..7}^dim
        grid = sorted(itertools.product(range(NCOPIES + 1), repeat=dim), key=lambda p: (sum(p), p))
        for pt in grid:
            found = witness(list(pt))
            if found:
                return found
        return {
            "answer": "no",
            "certificate": f"determinant polynomial vanishes on the grid {{0..7}}^{dim}, hence identically",
        }
    for pt in itertools.islice(_sample_points(dim, samples), samples):
        found = witness(pt)
        if found:
            return found
    return {"answer": "inconclusive", "certificate": f"no nonsingular member among {samples} sample points"}
