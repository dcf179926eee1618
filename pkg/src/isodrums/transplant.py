"""7x7 transplantation matrices and their action on glued spaces.

A matrix P acts on 7-tuples of functions on the triangle by
``(Phi u)_k = sum_l p_kl u_l``; on nodal vectors this is ``P (x) I_N``.
Exact (integer or rational) matrices are checked in exact arithmetic.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import scipy.linalg as la

from . import rational
from .gluing import GluedOperatorPair, GluedSpace
from .geometry import NCOPIES


class TransplantError(ValueError):
    pass


@dataclass(frozen=True)
class TransplantMatrix:
    """Entries are an int64 array (integer matrices), an object array of
    Fractions (other rationals) or a float array."""

    entries: np.ndarray
    name: str = "custom"

    def __post_init__(self):
        arr = np.asarray(self.entries)
        if arr.shape != (NCOPIES, NCOPIES):
            raise TransplantError(f"transplant matrix must be 7x7, got {arr.shape}")
        if arr.dtype == object:
            arr = rational.to_fraction_array(arr)
            if rational.is_integral(arr):
                arr = np.array([[int(v) for v in row] for row in arr], dtype=np.int64)
        elif np.issubdtype(arr.dtype, np.integer):
            arr = arr.astype(np.int64)
        else:
            arr = arr.astype(float)
            if not np.all(np.isfinite(arr)):
                raise TransplantError("transplant matrix entries must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)

    @property
    def exact(self) -> bool:
        return self.entries.dtype != float

    @property
    def T(self) -> TransplantMatrix:
        return TransplantMatrix(self.entries.T.copy(), f"{self.name}^T")

    def as_float(self) -> np.ndarray:
        return self.entries.astype(float)

    def as_fractions(self) -> np.ndarray:
        if not self.exact:
            raise TransplantError("matrix has floating-point entries")
        return rational.to_fraction_array(self.entries)

    def to_json(self) -> list:
        if self.exact:
            return rational.fraction_strings(self.entries)
        return self.entries.tolist()

    @classmethod
    def from_json(cls, data, name="custom") -> TransplantMatrix:
        if all(isinstance(v, (int, str)) for row in data for v in row):
            return cls(np.array([[Fraction(v) for v in row] for row in data], dtype=object), name)
        return cls(np.array(data, dtype=float), name)

    @classmethod
    def load(cls, path) -> TransplantMatrix:
        with open(path) as fh:
            return cls.from_json(json.load(fh), name=str(path))


_B = [
    [0, 1, 1, 1, 0, 0, 0],
    [1, 0, 1, 0, 0, 0, 1],
    [1, 0, 0, 1, 1, 0, 0],
    [1, 1, 0, 0, 0, 1, 0],
    [0, 0, 0, 1, 0, 1, 1],
    [0, 1, 0, 0, 1, 0, 1],
    [0, 0, 1, 0, 1, 1, 0],
]
_BD = [
    [0, 1, 1, 1, 0, 0, 0],
    [1, 0, -1, 0, 0, 0, 1],
    [1, 0, 0, -1, 1, 0, 0],
    [1, -1, 0, 0, 0, 1, 0],
    [0, 0, 0, 1, 0, -1, -1],
    [0, 1, 0, 0, -1, 0, -1],
    [0, 0, 1, 0, -1, -1, 0],
]
NAMED = ("B", "BD", "ONES", "IDENTITY")


def named_matrix(name: str) -> TransplantMatrix:
    tables = {
        "B": _B,
        "BD": _BD,
        "ONES": np.ones((NCOPIES, NCOPIES), dtype=np.int64),
        "IDENTITY": np.eye(NCOPIES, dtype=np.int64),
    }
    if name not in tables:
        raise TransplantError(f"unknown matrix {name!r}; expected one of {NAMED}")
    return TransplantMatrix(np.array(tables[name], dtype=np.int64), name)


def bhat(alpha, gamma) -> TransplantMatrix:
    """``alpha (ONES - B) + gamma B``; exact when both weights are rational."""
    b = np.array(_B, dtype=np.int64)
    if all(isinstance(x, (int, Fraction)) for x in (alpha, gamma)):
        a, g = Fraction(alpha), Fraction(gamma)
        ent = np.array([[a * (1 - v) + g * v for v in row] for row in b], dtype=object)
    else:
        ent = float(alpha) * (1 - b) + float(gamma) * b
    return TransplantMatrix(ent, f"BHAT({alpha},{gamma})")


def unitary_bhat(branch: str = "plus"):
    """Orthogonal member of the ``bhat`` family with positive ``alpha``.

    Solves ``4a^2 + 3g^2 = 1`` and ``2a^2 + 4ag + g^2 = 0``; the second
    equation gives ``g = a(-2 + s*sqrt 2)`` with ``s = +1`` (``branch="plus"``)
    or ``s = -1`` (``branch="minus"``).
    """
    s = {"plus": 1.0, "minus": -1.0}.get(branch)
    if s is None:
        raise TransplantError("branch must be 'plus' or 'minus'")
    ratio = -2.0 + s * np.sqrt(2.0)
    alpha = 1.0 / np.sqrt(4.0 + 3.0 * ratio**2)
    gamma = alpha * ratio
    mat = bhat(alpha, gamma)
    P = mat.as_float()
    err = np.abs(P.T @ P - np.eye(NCOPIES)).max()
    if err > 1e-12:
        raise TransplantError(f"unitary bhat check failed ({err:.3g})")
    return mat, alpha, gamma


def bhat_polynomials(alpha, gamma):
    """Residuals of the two orthogonality equations for ``bhat``."""
    return 4 * alpha**2 + 3 * gamma**2 - 1, 2 * alpha**2 + 4 * alpha * gamma + gamma**2


# -- action on glued spaces ----------------------------------------------------


def _check_compatible(src: GluedSpace, dst: GluedSpace):
    if src.mesh_level != dst.mesh_level or src.mesh.n_vertices != dst.mesh.n_vertices:
        raise TransplantError("source and target spaces use different meshes")
    if (src.bc == "dirichlet") != (dst.bc == "dirichlet"):
        raise TransplantError("source and target spaces use different boundary conditions")


def _apply_blockwise(P: TransplantMatrix, src: GluedSpace):
    """Y = (P (x) I_N) R_src, computed copy by copy (7N x free_dim)."""
    n = src.mesh.n_vertices
    f = src.free_dim
    exact = P.exact
    ent = P.entries
    dtype = object if ent.dtype == object else (np.int64 if exact else float)
    blocks = []
    col = src.slot_free.reshape(NCOPIES, n)
    for l in range(NCOPIES):
        Rl = np.zeros((n, f), dtype=np.int64)
        rows = np.flatnonzero(col[l] >= 0)
        Rl[rows, col[l][rows]] = 1
        blocks.append(Rl.astype(dtype) if dtype is not np.int64 else Rl)
    Y = []
    for k in range(NCOPIES):
        acc = np.zeros((n, f), dtype=dtype)
        if dtype is object:
            acc[:] = Fraction(0)
        for l in range(NCOPIES):
            if ent[k, l] != 0:
                acc = acc + ent[k, l] * blocks[l]
        Y.append(acc)
    return np.concatenate(Y, axis=0)


def _violations(Y, dst: GluedSpace):
    """Per slot, how far Y's row is from satisfying the target constraints."""
    rep_of_slot = dst.representatives[dst.slot_class]
    masked_slot = dst.masked[dst.slot_class]
    dev = Y - Y[rep_of_slot]
    dev[masked_slot] = Y[masked_slot]
    return dev


def subspace_residual(P: TransplantMatrix, src: GluedSpace, dst: GluedSpace):
    """How far ``P (x) I`` is from mapping ``src`` into ``dst``.

    Maximum constraint violation over the images of the basis vectors of
    ``src``, divided by ``max |p_kl|``. Returned as a Fraction for exact
    matrices, a float otherwise; 0 means the inclusion holds.
    """
    _check_compatible(src, dst)
    if src.free_dim == 0:
        return Fraction(0) if P.exact else 0.0
    dev = _violations(_apply_blockwise(P, src), dst)
    worst = np.abs(dev).max()
    scale = np.abs(P.entries).max()
    if P.exact:
        return Fraction(worst) / Fraction(scale) if scale else Fraction(0)
    return float(worst / scale) if scale else 0.0


@dataclass(frozen=True)
class InducedMap:
    matrix: np.ndarray  # free_dim(dst) x free_dim(src)
    source: GluedSpace
    target: GluedSpace
    residual: float


def induced_map(P: TransplantMatrix, src: GluedSpace, dst: GluedSpace, tol: float = 1e-12) -> InducedMap:
    """Matrix of ``P (x) I`` in free coordinates: ``R_dst @ F = (P (x) I) @ R_src``."""
    _check_compatible(src, dst)
    Y = _apply_blockwise(P, src)
    res = subspace_residual(P, src, dst)
    if float(res) > tol:
        raise TransplantError(f"{P.name} does not map the source space into the target (residual {float(res):.3g})")
    F = Y[dst.free_representatives].astype(float)
    if np.linalg.matrix_rank(P.as_float()) == NCOPIES and src.free_dim != dst.free_dim:
        raise TransplantError("invertible P between spaces of different dimension")
    return InducedMap(F, src, dst, float(res))


def intertwine_residual(
    P: TransplantMatrix, pair1: GluedOperatorPair, pair2: GluedOperatorPair
) -> tuple:
    """Relative residuals of ``F^T K2 = K1 G`` and ``F^T M2 = M1 G``.

    ``F`` is induced by P (space 1 -> 2) and ``G`` by P^T (space 2 -> 1); the
    identity is the matrix form of ``a2(Phi u, v) = a1(u, Phi* v)``.
    """
    F = induced_map(P, pair1.space, pair2.space).matrix
    G = induced_map(P.T, pair2.space, pair1.space).matrix
    K1, M1 = pair1.dense()
    K2, M2 = pair2.dense()
    rho_k = la.norm(F.T @ K2 - K1 @ G) / la.norm(K1)
    rho_m = la.norm(F.T @ M2 - M1 @ G) / la.norm(M1)
    return float(rho_k), float(rho_m)


def polar_unitary(P: TransplantMatrix):
    """``P = U |P|`` with ``|P| = (P^T P)^{1/2}`` from a symmetric eigensolve."""
    A = P.as_float()
    w, V = la.eigh(A.T @ A)
    if w.min() <= 1e-14 * max(w.max(), 1.0):
        raise TransplantError("polar decomposition needs an invertible matrix")
    absP = (V * np.sqrt(w)) @ V.T
    absP = 0.5 * (absP + absP.T)
    U = A @ ((V / np.sqrt(w)) @ V.T)
    return TransplantMatrix(U, f"U({P.name})"), TransplantMatrix(absP, f"|{P.name}|")


def order_properties(P: TransplantMatrix) -> dict:
    """Positivity, disjointness and normality facts about P (exact when P is)."""
    if P.exact:
        A = P.as_fractions()
        prod_tp = rational.matmul(A.T, A)
        prod_pt = rational.matmul(A, A.T)
        eye = rational.to_fraction_array(np.eye(NCOPIES, dtype=int))
        try:
            inv = rational.inverse(A)
        except ZeroDivisionError:
            inv = None
        normal = bool(np.all(prod_tp == prod_pt))
        orth = bool(np.all(prod_tp == eye))
    else:
        A = P.as_float()
        prod_tp, prod_pt = A.T @ A, A @ A.T
        normal = bool(np.allclose(prod_tp, prod_pt, rtol=0, atol=1e-12))
        orth = bool(np.allclose(prod_tp, np.eye(NCOPIES), rtol=0, atol=1e-12))
        try:
            inv = la.inv(A)
        except la.LinAlgError:
            inv = None
    return {
        "entrywise_nonnegative": bool(np.all(A >= 0)),
        "inverse_entrywise_nonnegative": None if inv is None else bool(np.all(inv >= 0)),
        "invertible": inv is not None,
        "max_nonzeros_per_row": int(max(np.count_nonzero(row != 0) for row in A)),
        "is_normal": normal,
        "is_orthogonal": orth,
        "disjointness_preserving": int(max(np.count_nonzero(row != 0) for row in A)) <= 1,
        "inverse": None if inv is None else (rational.fraction_strings(inv) if P.exact else inv.tolist()),
    }
