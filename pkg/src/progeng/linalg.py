"""Dense Gaussian elimination over GF(2**w) on numpy arrays."""

from __future__ import annotations

import numpy as np

from .gf import FieldContext


class SingularMatrixError(ArithmeticError):
    pass


def _pivot_row(col: np.ndarray, start: int) -> int:
    nz = np.flatnonzero(col[start:])
    return -1 if nz.size == 0 else start + int(nz[0])


def row_echelon(fc: FieldContext, matrix) -> tuple[np.ndarray, list[int]]:
    """Row echelon form with unit pivots; pivot = first nonzero in column order."""
    R = np.array(matrix, dtype=fc.dtype, copy=True)
    if R.ndim != 2:
        raise ValueError("expected a 2-D matrix")
    rows, cols = R.shape
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        p = _pivot_row(R[:, c], r)
        if p < 0:
            continue
        if p != r:
            R[[r, p]] = R[[p, r]]
        R[r, c:] = fc.scale(fc.inv(int(R[r, c])), R[r, c:])
        below = r + 1 + np.flatnonzero(R[r + 1:, c])
        if below.size:
            f = R[below, c]
            R[below, c:] ^= fc.mul_array(f[:, None], R[r, c:][None, :])
        pivots.append(c)
        r += 1
    return R, pivots


def rank_gf(fc: FieldContext, matrix) -> int:
    m = np.asarray(matrix)
    if m.size == 0:
        return 0
    return len(row_echelon(fc, m)[1])


def inverse(fc: FieldContext, matrix) -> np.ndarray:
    """Gauss-Jordan inverse; raises SingularMatrixError."""
    A = np.asarray(matrix, dtype=fc.dtype)
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValueError("inverse needs a square matrix")
    aug = np.concatenate([A, np.eye(n, dtype=fc.dtype)], axis=1)
    for c in range(n):
        p = _pivot_row(aug[:, c], c)
        if p < 0:
            raise SingularMatrixError(f"matrix is singular (column {c})")
        if p != c:
            aug[[c, p]] = aug[[p, c]]
        aug[c] = fc.scale(fc.inv(int(aug[c, c])), aug[c])
        others = np.flatnonzero(aug[:, c])
        others = others[others != c]
        if others.size:
            f = aug[others, c]
            aug[others] ^= fc.mul_array(f[:, None], aug[c][None, :])
    return aug[:, n:]


def matmul(fc: FieldContext, A, B) -> np.ndarray:
    """Matrix product over the field (small operands; loops over the inner dim)."""
    A = np.asarray(A, dtype=fc.dtype)
    B = np.asarray(B, dtype=fc.dtype)
    out = np.zeros((A.shape[0], B.shape[1]), dtype=fc.dtype)
    for t in range(A.shape[1]):
        out ^= fc.mul_array(A[:, t][:, None], B[t][None, :])
    return out
