"""Uniform (red) refinement of the reference triangle and ordered side traces."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .geometry import EDGE_LABELS, Isometry, ReferenceTriangle, _check_label

MAX_LEVEL = 7


class MeshError(ValueError):
    pass


@dataclass(frozen=True)
class TriangleMesh:
    """P1 mesh of one triangle copy.

    Vertices carry integer barycentric coordinates ``bary`` (summing to
    ``2**level``), so every vertex is an exact dyadic point of the triangle.
    ``edge_traces[label]`` lists the vertices on that side ordered from its
    lower-numbered corner.
    """

    level: int
    vertices: np.ndarray
    elements: np.ndarray
    edge_traces: dict
    bary: np.ndarray

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_elements(self) -> int:
        return len(self.elements)

    def signed_areas(self) -> np.ndarray:
        p = self.vertices[self.elements]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def transformed(self, iso: Isometry) -> TriangleMesh:
        """Same mesh pushed through an isometry (element numbering kept,
        orientation of reflected elements restored to counterclockwise)."""
        elems = self.elements if iso.orientation > 0 else self.elements[:, [0, 2, 1]]
        return TriangleMesh(self.level, iso(self.vertices), elems, self.edge_traces, self.bary)

    def to_dict(self) -> dict:
        return {
            "vertices": self.vertices.tolist(),
            "elements": self.elements.tolist(),
            "edges": {lab: list(map(int, self.edge_traces[lab])) for lab in EDGE_LABELS},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def refine_uniform(tri: ReferenceTriangle, level: int, max_level: int = MAX_LEVEL) -> TriangleMesh:
    """Level-``level`` red refinement of ``tri`` (4**level congruent elements)."""
    if level < 0:
        raise MeshError("refinement level must be nonnegative")
    if level > max_level:
        raise MeshError(f"refinement level {level} exceeds the maximum {max_level}")
    n = 2**level
    index = {}
    bary = []
    # rows of constant third barycentric coordinate, from the G3 side upwards
    for c in range(n + 1):
        for b in range(n - c + 1):
            index[(n - b - c, b, c)] = len(bary)
            bary.append((n - b - c, b, c))
    bary = np.array(bary, dtype=np.int64)
    corners = tri.points
    verts = (bary @ corners) / n

    elems = []
    for c in range(n):
        for b in range(n - c):
            a = n - b - c
            elems.append((index[(a, b, c)], index[(a - 1, b + 1, c)], index[(a - 1, b, c + 1)]))
            if b + c + 1 < n:
                elems.append((index[(a - 1, b + 1, c)], index[(a - 2, b + 1, c + 1)], index[(a - 1, b, c + 1)]))
    elems = np.array(elems, dtype=np.int64)
    if tri.doubled_area < 0:
        elems = elems[:, [0, 2, 1]]

    traces = {}
    for lab in EDGE_LABELS:
        i, j = tri.edge_labels[lab]
        off = 3 - i - j
        on_side = [v for v in range(len(bary)) if bary[v, off] == 0]
        # parameter along the side measured from corner i
        on_side.sort(key=lambda v: bary[v, j])
        traces[lab] = np.array(on_side, dtype=np.int64)
    for arr in (verts, elems, bary, *traces.values()):
        arr.setflags(write=False)
    return TriangleMesh(level, verts, elems, traces, bary)


def edge_dofs(mesh: TriangleMesh, label: str) -> np.ndarray:
    """Vertex indices along side ``label``, lower-numbered corner first."""
    _check_label(label)
    return mesh.edge_traces[label]
