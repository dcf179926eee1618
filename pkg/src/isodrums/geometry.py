"""Reference triangle, planar isometries, coefficient fields and the two
seven-copy gluing layouts."""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations

import numpy as np

EDGE_LABELS = ("G1", "G2", "G3")
DOMAIN_IDS = ("omega1", "omega2")
NCOPIES = 7

# Side G_i is opposite vertex i (0-based vertex pairs below).
_EDGE_VERTICES = {"G1": (1, 2), "G2": (0, 2), "G3": (0, 1)}


class GeometryError(ValueError):
    pass


def _check_label(label):
    if label not in EDGE_LABELS:
        raise GeometryError(f"unknown edge label {label!r}; expected one of {EDGE_LABELS}")


@dataclass(frozen=True)
class ReferenceTriangle:
    """A scalene triangle with labelled sides.

    ``edge_labels`` maps each side label to the (0-based) pair of vertices it
    joins, listed lower index first; this fixes the parametrisation of every
    side from its lower-numbered endpoint.
    """

    vertices: tuple = ((0.0, 0.0), (1.0, 0.0), (0.3, 0.8))
    edge_labels: dict = field(default_factory=lambda: dict(_EDGE_VERTICES))

    def __post_init__(self):
        verts = tuple(tuple(float(c) for c in v) for v in self.vertices)
        if len(verts) != 3 or any(len(v) != 2 for v in verts):
            raise GeometryError("a triangle needs three 2D vertices")
        object.__setattr__(self, "vertices", verts)
        pairs = {lab: tuple(sorted(p)) for lab, p in self.edge_labels.items()}
        if set(pairs) != set(EDGE_LABELS):
            raise GeometryError("edge labels must be exactly G1, G2, G3")
        if sorted(pairs.values()) != [(0, 1), (0, 2), (1, 2)]:
            raise GeometryError("edge labels must cover the three sides once each")
        object.__setattr__(self, "edge_labels", pairs)
        if self.doubled_area == 0.0:
            raise GeometryError("triangle vertices are collinear")
        lengths = self.side_lengths()
        vals = sorted(lengths.values())
        if vals[1] - vals[0] <= 1e-12 * vals[2] or vals[2] - vals[1] <= 1e-12 * vals[2]:
            raise GeometryError(f"triangle is not scalene: side lengths {lengths}")

    @classmethod
    def from_coords(cls, coords):
        """Build from six numbers x1 y1 x2 y2 x3 y3."""
        c = [float(x) for x in coords]
        if len(c) != 6:
            raise GeometryError("expected six coordinates")
        return cls(vertices=((c[0], c[1]), (c[2], c[3]), (c[4], c[5])))

    @property
    def points(self) -> np.ndarray:
        return np.array(self.vertices, dtype=float)

    @property
    def doubled_area(self) -> float:
        """Signed doubled area (positive for counterclockwise vertices)."""
        (x0, y0), (x1, y1), (x2, y2) = self.vertices
        return (x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0)

    @property
    def area(self) -> float:
        return abs(self.doubled_area) / 2.0

    def edge_endpoints(self, label):
        _check_label(label)
        i, j = self.edge_labels[label]
        return self.points[i], self.points[j]

    def side_lengths(self) -> dict:
        out = {}
        for lab, (i, j) in self.edge_labels.items():
            a, b = np.asarray(self.vertices[i]), np.asarray(self.vertices[j])
            out[lab] = float(np.hypot(*(b - a)))
        return out


@dataclass(frozen=True)
class Isometry:
    """Planar isometry ``x -> linear @ x + shift``."""

    linear: np.ndarray
    shift: np.ndarray

    def __post_init__(self):
        lin = np.array(self.linear, dtype=float).reshape(2, 2)
        sh = np.array(self.shift, dtype=float).reshape(2)
        if not np.allclose(lin.T @ lin, np.eye(2), rtol=0.0, atol=1e-12):
            raise GeometryError("linear part of an isometry must be orthogonal")
        lin.setflags(write=False)
        sh.setflags(write=False)
        object.__setattr__(self, "linear", lin)
        object.__setattr__(self, "shift", sh)

    @classmethod
    def identity(cls):
        return cls(np.eye(2), np.zeros(2))

    @classmethod
    def reflection(cls, a, b):
        """Reflection across the line through points ``a`` and ``b``."""
        a = np.asarray(a, dtype=float)
        d = np.asarray(b, dtype=float) - a
        d = d / np.hypot(*d)
        lin = 2.0 * np.outer(d, d) - np.eye(2)
        return cls(lin, a - lin @ a)

    @property
    def orientation(self) -> int:
        return 1 if np.linalg.det(self.linear) > 0 else -1

    def __call__(self, pts):
        pts = np.asarray(pts, dtype=float)
        return pts @ self.linear.T + self.shift

    def compose(self, inner: Isometry) -> Isometry:
        """Return ``self o inner``."""
        return Isometry(self.linear @ inner.linear, self.linear @ inner.shift + self.shift)

    def inverse(self) -> Isometry:
        lin = self.linear.T
        return Isometry(lin, -lin @ self.shift)


@dataclass(frozen=True)
class DomainLayout:
    """Combinatorial description of a seven-copy glued domain.

    Copy indices are 1-based. ``glue_pairs[label]`` lists the pairs of copies
    whose ``label`` sides are identified; ``boundary_slots[label]`` lists the
    copies whose ``label`` side lies on the outer boundary.
    """

    domain_id: str
    glue_pairs: dict
    boundary_slots: dict

    def __post_init__(self):
        gp = {lab: tuple(tuple(sorted(p)) for p in self.glue_pairs[lab]) for lab in EDGE_LABELS}
        bs = {lab: frozenset(self.boundary_slots[lab]) for lab in EDGE_LABELS}
        for lab in EDGE_LABELS:
            used = [k for pair in gp[lab] for k in pair]
            if len(gp[lab]) != 2:
                raise GeometryError(f"{lab}: expected exactly 2 glue pairs")
            if len(set(used)) != len(used):
                raise GeometryError(f"{lab}: a copy is glued twice")
            if set(used) & bs[lab] or set(used) | bs[lab] != set(range(1, NCOPIES + 1)):
                raise GeometryError(f"{lab}: glue pairs and boundary slots must partition 1..7")
        object.__setattr__(self, "glue_pairs", gp)
        object.__setattr__(self, "boundary_slots", bs)

    def boundary_edges_of(self, copy: int) -> frozenset:
        """Labels of the sides of ``copy`` lying on the outer boundary."""
        return frozenset(lab for lab in EDGE_LABELS if copy in self.boundary_slots[lab])

    def to_dict(self) -> dict:
        return {
            "domain_id": self.domain_id,
            "glue_pairs": {lab: [list(p) for p in self.glue_pairs[lab]] for lab in EDGE_LABELS},
            "boundary_slots": {lab: sorted(self.boundary_slots[lab]) for lab in EDGE_LABELS},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, data) -> DomainLayout:
        return cls(
            domain_id=data.get("domain_id", "custom"),
            glue_pairs={lab: [tuple(p) for p in data["glue_pairs"][lab]] for lab in EDGE_LABELS},
            boundary_slots={lab: set(data["boundary_slots"][lab]) for lab in EDGE_LABELS},
        )


_BUILTIN_GLUE = {
    "omega1": {"G1": [(1, 2), (4, 7)], "G2": [(1, 3), (2, 5)], "G3": [(1, 4), (3, 6)]},
    "omega2": {"G1": [(1, 2), (3, 6)], "G2": [(1, 3), (4, 7)], "G3": [(1, 4), (2, 5)]},
}


def builtin_layout(domain_id: str) -> DomainLayout:
    """The gluing table of one of the two warped propellers."""
    try:
        glue = _BUILTIN_GLUE[domain_id]
    except KeyError:
        raise GeometryError(f"unknown domain {domain_id!r}; expected one of {DOMAIN_IDS}") from None
    slots = {}
    for lab, pairs in glue.items():
        used = {k for p in pairs for k in p}
        slots[lab] = set(range(1, NCOPIES + 1)) - used
    return DomainLayout(domain_id, glue, slots)


@dataclass(frozen=True)
class CoefficientField:
    """Complex 2x2 coefficient matrix, constant or one per mesh element.

    ``entries`` has shape (2, 2) or (n_elements, 2, 2). Construction fails if
    the field is not uniformly elliptic.
    """

    entries: np.ndarray
    ellipticity_constant: float = field(init=False)

    def __post_init__(self):
        arr = np.array(self.entries, dtype=complex)
        if arr.shape[-2:] != (2, 2) or arr.ndim not in (2, 3):
            raise GeometryError(f"coefficient must have shape (2,2) or (n,2,2), got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise GeometryError("coefficient entries must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)
        mus = hermitian_part_min_eigs(arr.reshape(-1, 2, 2))
        bad = int(np.argmin(mus))
        if mus[bad] <= 0.0:
            where = "" if arr.ndim == 2 else f" at element {bad}"
            raise NonEllipticError(
                f"coefficient is not elliptic{where}: Hermitian part has eigenvalue {mus[bad]:.6g}",
                element=None if arr.ndim == 2 else bad,
            )
        object.__setattr__(self, "ellipticity_constant", float(mus.min()))

    @classmethod
    def identity(cls):
        return cls(np.eye(2))

    @property
    def is_constant(self) -> bool:
        return self.entries.ndim == 2

    @property
    def is_hermitian(self) -> bool:
        e = self.entries
        return bool(np.array_equal(e, np.conj(np.swapaxes(e, -1, -2))))

    def per_element(self, n_elements: int) -> np.ndarray:
        """Entries broadcast to shape (n_elements, 2, 2)."""
        if self.is_constant:
            return np.broadcast_to(self.entries, (n_elements, 2, 2))
        if self.entries.shape[0] != n_elements:
            raise GeometryError(
                f"coefficient has {self.entries.shape[0]} elements, mesh has {n_elements}"
            )
        return self.entries

    def to_dict(self) -> dict:
        def enc(m):
            return [[[float(z.real), float(z.imag)] for z in row] for row in m]

        if self.is_constant:
            return {"constant": enc(self.entries)}
        return {"per_element": [enc(m) for m in self.entries]}

    @classmethod
    def from_dict(cls, data) -> CoefficientField:
        def dec(m):
            return [[complex(*z) if isinstance(z, (list, tuple)) else complex(z) for z in row] for row in m]

        if "constant" in data:
            return cls(np.array(dec(data["constant"])))
        if "per_element" in data:
            return cls(np.array([dec(m) for m in data["per_element"]]))
        raise GeometryError("coefficient JSON needs a 'constant' or 'per_element' key")

    @classmethod
    def load(cls, path) -> CoefficientField:
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


class NonEllipticError(GeometryError):
    def __init__(self, msg, element=None):
        super().__init__(msg)
        self.element = element


def hermitian_part_min_eigs(mats: np.ndarray) -> np.ndarray:
    """Smallest eigenvalue of (C + C*)/2 for each matrix in a stack."""
    herm = 0.5 * (mats + np.conj(np.swapaxes(mats, -1, -2)))
    return np.linalg.eigvalsh(herm)[..., 0]


def transform_coefficient(coef: CoefficientField, iso: Isometry) -> CoefficientField:
    """Coefficient seen on the image domain: ``D C D^{-1}`` with D the
    derivative of the isometry. Per-element fields keep their element order,
    since placed meshes reuse the reference element numbering."""
    d = iso.linear
    return CoefficientField(d @ coef.entries @ np.linalg.inv(d))


def planar_placements(layout: DomainLayout, tri: ReferenceTriangle) -> list:
    """Place the seven copies in the plane by successive reflections.

    Copy 1 is the reference triangle itself. Whenever a copy is glued along
    side ``label`` to an already placed copy, it is the mirror image of that
    copy across the placed side, so the shared side is traced identically by
    both copies.
    """
    adjacency = {k: [] for k in range(1, NCOPIES + 1)}
    for lab in EDGE_LABELS:
        for k, l in layout.glue_pairs[lab]:
            adjacency[k].append((l, lab))
            adjacency[l].append((k, lab))
    placed = {1: Isometry.identity()}
    queue = deque([1])
    while queue:
        k = queue.popleft()
        for l, lab in sorted(adjacency[k]):
            if l in placed:
                continue
            a, b = tri.edge_endpoints(lab)
            mirror = Isometry.reflection(placed[k](a), placed[k](b))
            placed[l] = mirror.compose(placed[k])
            queue.append(l)
    if len(placed) != NCOPIES:
        raise GeometryError("layout is not connected")
    return [placed[k] for k in range(1, NCOPIES + 1)]


def _orient(a, b, c):
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def _exact(p):
    return tuple(Fraction(float(x)) for x in p)


def interiors_intersect(t1, t2, tol=1e-12) -> bool:
    """Whether two closed triangles have intersecting interiors.

    Separating-axis test on the six edge lines, evaluated in exact rational
    arithmetic on the float coordinates. Orientation values within
    ``tol * scale**2`` of zero are treated as collinear, so triangles that
    share a side up to rounding do not count as overlapping.
    """
    t1 = [_exact(p) for p in t1]
    t2 = [_exact(p) for p in t2]
    pts = t1 + t2
    scale = max(max(abs(c) for c in p) for p in pts) or Fraction(1)
    slack = Fraction(tol) * scale * scale
    for a_tri, b_tri in ((t1, t2), (t2, t1)):
        sign = 1 if _orient(*a_tri) > 0 else -1
        for i in range(3):
            p, q = a_tri[i], a_tri[(i + 1) % 3]
            if all(sign * _orient(p, q, r) <= slack for r in b_tri):
                return False
    return True


def check_embedding(placements, tri: ReferenceTriangle) -> list:
    """Pairs (k, l) of 1-based copies whose placed interiors overlap."""
    corners = [iso(tri.points) for iso in placements]
    report = []
    for i, j in combinations(range(len(corners)), 2):
        if interiors_intersect(corners[i], corners[j]):
            report.append((i + 1, j + 1))
    return report
