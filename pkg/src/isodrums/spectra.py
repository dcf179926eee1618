"""Dense generalized eigenvalue solves for glued pencils (K, M).

Both paths factor M = L L^T and solve the standard problem for
L^{-1} K L^{-H}; the Hermitian path uses a symmetric solver, the general
path a nonsymmetric one.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp

DEFAULT_SOLVER_TOL = 1e-10


class SpectrumError(ValueError):
    pass


@dataclass(frozen=True)
class Spectrum:
    values: np.ndarray
    residuals: np.ndarray
    count: int
    vectors: np.ndarray | None = None

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.values)


def _dense_pencil(pair):
    if hasattr(pair, "K"):
        K, M = pair.K, pair.M
    else:
        K, M = pair
    K = K.toarray() if sp.issparse(K) else np.asarray(K)
    M = M.toarray() if sp.issparse(M) else np.asarray(M)
    if K.shape != M.shape or K.shape[0] != K.shape[1]:
        raise SpectrumError(f"incompatible pencil shapes {K.shape}, {M.shape}")
    return K, M


def _cholesky(M):
    if np.iscomplexobj(M):
        if np.any(M.imag):
            raise SpectrumError("mass matrix must be real")
        M = M.real
    try:
        return la.cholesky(M, lower=True)
    except la.LinAlgError:
        raise SpectrumError("mass matrix is not symmetric positive definite") from None


def complex_order(lam, rtol: float = 1e-9) -> np.ndarray:
    """Indices sorting ``lam`` by (Re, Im), where real parts closer than
    ``rtol`` times the spectral scale count as equal (conjugate pairs)."""
    lam = np.asarray(lam)
    if len(lam) == 0:
        return np.arange(0)
    scale = max(np.abs(lam).max(), 1.0)
    by_re = np.argsort(lam.real, kind="stable")
    group = np.zeros(len(lam), dtype=np.int64)
    re = lam.real[by_re]
    group[1:] = np.cumsum(np.diff(re) > rtol * scale)
    keys = np.empty(len(lam), dtype=np.int64)
    keys[by_re] = group
    return np.lexsort((lam.imag, keys))


def _check_count(m, n):
    if n == 0:
        raise SpectrumError("empty pencil (free dimension 0)")
    if m < 1 or m > n:
        raise SpectrumError(f"requested {m} eigenvalues of a pencil of size {n}")


def backward_residuals(K, M, lam, X) -> np.ndarray:
    """||K x - lam M x|| / ((||K|| + |lam| ||M||) ||x||) per column."""
    nk = la.norm(K, 2)
    nm = la.norm(M, 2)
    R = K @ X - (M @ X) * lam
    return la.norm(R, axis=0) / ((nk + np.abs(lam) * nm) * la.norm(X, axis=0))


def sym_eigs(pair, m: int, tol: float = DEFAULT_SOLVER_TOL) -> Spectrum:
    """Smallest ``m`` eigenvalues of a Hermitian-definite pencil, ascending."""
    K, M = _dense_pencil(pair)
    _check_count(m, K.shape[0])
    if not np.allclose(K, K.conj().T, rtol=0.0, atol=1e-12 * max(1.0, np.abs(K).max())):
        raise SpectrumError("stiffness matrix is not Hermitian; use nonsym_eigs")
    if np.iscomplexobj(K) and not np.any(K.imag):
        K = K.real
    L = _cholesky(M)
    A = la.solve_triangular(L, la.solve_triangular(L, K, lower=True).conj().T, lower=True)
    A = 0.5 * (A + A.conj().T)
    lam, Y = la.eigh(A, subset_by_index=(0, m - 1))
    X = la.solve_triangular(L, Y, lower=True, trans="C")
    res = backward_residuals(K, M, lam, X)
    if np.any(res > tol):
        raise SpectrumError(f"eigenpair residual {res.max():.3g} exceeds {tol:g}")
    return Spectrum(lam, res, m, X)


def nonsym_eigs(pair, m: int, tol: float = DEFAULT_SOLVER_TOL) -> Spectrum:
    """First ``m`` eigenvalues of M^{-1} K sorted by (Re, Im)."""
    K, M = _dense_pencil(pair)
    _check_count(m, K.shape[0])
    K = K.astype(complex)
    L = _cholesky(M)
    A = la.solve_triangular(L, la.solve_triangular(L, K, lower=True).conj().T, lower=True)
    A = A.conj().T
    lam, Y = la.eig(A)
    order = complex_order(lam)[:m]
    lam, Y = lam[order], Y[:, order]
    X = la.solve_triangular(L, Y, lower=True, trans="C")
    res = backward_residuals(K, M, lam, X)
    if np.any(res > tol):
        raise SpectrumError(f"eigenpair residual {res.max():.3g} exceeds {tol:g}")
    return Spectrum(lam, res, m, X)


@dataclass(frozen=True)
class ComparisonReport:
    abs_diff: np.ndarray
    rel_diff: np.ndarray
    tol: float | None
    first: np.ndarray
    second: np.ndarray

    @property
    def max_abs_diff(self) -> float:
        return float(self.abs_diff.max()) if len(self.abs_diff) else 0.0

    @property
    def max_rel_diff(self) -> float:
        return float(self.rel_diff.max()) if len(self.rel_diff) else 0.0

    @property
    def passed(self) -> bool | None:
        return None if self.tol is None else self.max_rel_diff <= self.tol

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "lambda_1_re", "lambda_1_im", "lambda_2_re", "lambda_2_im", "abs_diff", "rel_diff"])
        for i, (a, b) in enumerate(zip(self.first, self.second)):
            a, b = complex(a), complex(b)
            w.writerow([i, repr(a.real), repr(a.imag), repr(b.real), repr(b.imag),
                        repr(float(self.abs_diff[i])), repr(float(self.rel_diff[i]))])
        return buf.getvalue()


def compare(s1: Spectrum, s2: Spectrum, tol: float | None = None, zero_floor: float = 1e-6) -> ComparisonReport:
    """Per-index differences of two sorted spectra.

    Relative differences divide by the larger modulus of the pair, floored at
    ``zero_floor`` times the largest modulus of either spectrum: eigenvalues
    that vanish up to round-off (the Neumann ground state) are compared by
    their absolute error at the spectral scale.
    """
    a = np.asarray(s1.values if isinstance(s1, Spectrum) else s1)
    b = np.asarray(s2.values if isinstance(s2, Spectrum) else s2)
    if a.shape != b.shape:
        raise SpectrumError(f"spectrum counts differ: {a.shape[0]} vs {b.shape[0]}")
    diff = np.abs(a - b)
    scale = max(np.abs(a).max(initial=0.0), np.abs(b).max(initial=0.0), 1.0)
    denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), zero_floor * scale)
    return ComparisonReport(diff, diff / denom, tol, a, b)
