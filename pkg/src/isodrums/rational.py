"""Exact linear algebra over the rationals.

Matrices are numpy object arrays of ``Fraction``. Elimination is done
fraction-free on integer rows (each row scaled by the lcm of its
denominators, reduced by its content after every update).
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd, lcm

import numpy as np


def to_fraction_array(a) -> np.ndarray:
    """Copy of ``a`` as an object array of Fractions (floats converted exactly)."""
    arr = np.asarray(a, dtype=object)
    out = np.empty(arr.shape, dtype=object)
    for idx, v in np.ndenumerate(arr):
        out[idx] = v if isinstance(v, Fraction) else Fraction(v)
    return out


def is_integral(a) -> bool:
    return all(Fraction(v).denominator == 1 for v in np.asarray(a, dtype=object).ravel())


def _primitive(row):
    g = 0
    for v in row:
        g = gcd(g, v)
        if g == 1:
            return row
    return [v // g for v in row] if g > 1 else row


def _integer_rows(rows):
    out = []
    for row in rows:
        fr = [Fraction(v) for v in row]
        m = lcm(1, *(f.denominator for f in fr))
        out.append(_primitive([int(f * m) for f in fr]))
    return out


def rref(a):
    """Fraction-free reduced row echelon form.

    Returns ``(rows, pivots)`` where ``rows`` are the nonzero integer rows (in
    pivot order, each primitive, with positive pivot entry and zeros in every
    other pivot column) and ``pivots`` their pivot columns.
    """
    rows = [r for r in _integer_rows(np.asarray(a, dtype=object).tolist()) if any(r)]
    if not rows:
        return [], []
    ncols = len(rows[0])
    pivots = []
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(rows)) if rows[i][c] != 0), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        p = rows[r]
        if p[c] < 0:
            p = rows[r] = [-v for v in p]
        for i in range(len(rows)):
            if i != r and rows[i][c] != 0:
                f = rows[i][c]
                rows[i] = _primitive([p[c] * x - f * y for x, y in zip(rows[i], p)])
        pivots.append(c)
        r += 1
        if r == len(rows):
            break
    return rows[:r], pivots


def rank(a) -> int:
    return len(rref(a)[1])


def nullspace(a, ncols: int | None = None) -> list:
    """Basis of ``{x : a x = 0}`` as Fraction vectors, one per free column in
    increasing column order, with a 1 in that column."""
    arr = np.asarray(a, dtype=object)
    n = arr.shape[1] if arr.ndim == 2 and arr.size else ncols
    if n is None:
        raise ValueError("cannot infer the number of unknowns of an empty system")
    rows, pivots = rref(arr) if arr.size else ([], [])
    free = [c for c in range(n) if c not in set(pivots)]
    basis = []
    for f in free:
        x = [Fraction(0)] * n
        x[f] = Fraction(1)
        for row, pc in zip(rows, pivots):
            if row[f]:
                x[pc] = Fraction(-row[f], row[pc])
        basis.append(x)
    return basis


def det(a) -> Fraction:
    """Exact determinant (Bareiss on the integer-scaled matrix)."""
    arr = to_fraction_array(a)
    n = arr.shape[0]
    if n == 0:
        return Fraction(1)
    scales = [lcm(1, *(f.denominator for f in row)) for row in arr]
    m = [[int(f * s) for f in row] for row, s in zip(arr, scales)]
    sign, prev = 1, 1
    for k in range(n - 1):
        if m[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if m[i][k] != 0), None)
            if swap is None:
                return Fraction(0)
            m[k], m[swap] = m[swap], m[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) // prev
        prev = m[k][k]
    total = 1
    for s in scales:
        total *= s
    return Fraction(sign * m[n - 1][n - 1], total)


def inverse(a) -> np.ndarray:
    """Exact inverse; raises ZeroDivisionError if singular."""
    arr = to_fraction_array(a)
    n = arr.shape[0]
    aug = np.concatenate([arr, to_fraction_array(np.eye(n, dtype=int))], axis=1)
    rows, pivots = rref(aug)
    if pivots[:n] != list(range(n)) or len(pivots) < n:
        raise ZeroDivisionError("matrix is singular")
    out = np.empty((n, n), dtype=object)
    for i in range(n):
        d = rows[i][i]
        for j in range(n):
            out[i, j] = Fraction(rows[i][n + j], d)
    return out


def matmul(a, b) -> np.ndarray:
    return np.dot(to_fraction_array(a), to_fraction_array(b))


def fraction_strings(a) -> list:
    """Nested lists of rational strings such as ``"-1/3"``."""
    return [[str(Fraction(v)) for v in row] for row in np.asarray(a, dtype=object)]
