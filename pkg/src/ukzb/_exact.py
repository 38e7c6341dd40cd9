"""Exact rational row reduction.

python-flint does the heavy lifting when it is importable; the pure
Fraction elimination below is the fallback and doubles as a test oracle.
"""
from fractions import Fraction

import numpy as np

try:
    import flint
except ImportError:  # pragma: no cover - exercised only without flint
    flint = None

HAVE_FLINT = flint is not None


def _pivots(rows):
    piv = []
    for row in rows:
        for j, v in enumerate(row):
            if v != 0:
                piv.append(j)
                break
    return piv


def rref_fraction(rows, ncols):
    """Gauss-Jordan over Fractions. Returns (basis rows, pivot columns)."""
    mat = [[Fraction(v) for v in row] for row in rows]
    basis = []
    pivots = []
    r = 0
    for c in range(ncols):
        p = None
        for i in range(r, len(mat)):
            if mat[i][c] != 0:
                p = i
                break
        if p is None:
            continue
        mat[r], mat[p] = mat[p], mat[r]
        inv = 1 / mat[r][c]
        mat[r] = [v * inv for v in mat[r]]
        for i in range(len(mat)):
            if i != r and mat[i][c] != 0:
                f = mat[i][c]
                mat[i] = [a - f * b for a, b in zip(mat[i], mat[r])]
        pivots.append(c)
        r += 1
        if r == len(mat):
            break
    basis = mat[:r]
    return basis, pivots


def rref(rows, ncols, use_flint=True):
    """Row-reduce an integer or rational spanning set.

    Returns (R, pivots) with R an object array of Fractions, one row per
    pivot, in reduced echelon form.
    """
    rows = [list(r) for r in rows]
    if not rows or ncols == 0:
        return np.zeros((0, ncols), dtype=object), []
    if use_flint and HAVE_FLINT:
        if all(isinstance(v, (int, np.integer)) for r in rows for v in r):
            m = flint.fmpz_mat([[int(v) for v in r] for r in rows])
            red, den, rank = m.rref()
            ent = red.tolist()[:rank]
            den = int(den)
            out = np.empty((rank, ncols), dtype=object)
            for i in range(rank):
                for j in range(ncols):
                    out[i, j] = Fraction(int(ent[i][j]), den)
        else:
            m = flint.fmpq_mat([[_fq(v) for v in r] for r in rows])
            red, rank = m.rref()
            ent = red.tolist()[:rank]
            out = np.empty((rank, ncols), dtype=object)
            for i in range(rank):
                for j in range(ncols):
                    e = ent[i][j]
                    out[i, j] = Fraction(int(e.p), int(e.q))
        return out, _pivots(out)
    basis, piv = rref_fraction(rows, ncols)
    out = np.empty((len(basis), ncols), dtype=object)
    for i, row in enumerate(basis):
        out[i, :] = row
    return out, piv


def int_solve_unitriangular(T, W):
    """Solve T c = W exactly for lower unitriangular integer T.

    Integer data stays exact in float64 below 2**53; the result is rounded
    and verified by an integer back-multiplication.
    """
    from scipy.linalg import solve_triangular
    W = np.asarray(W, dtype=np.int64)
    c = solve_triangular(T.astype(float), W.astype(float), lower=True,
                         unit_diagonal=True, check_finite=False)
    if np.abs(c).max(initial=0.0) > 2.0 ** 50:
        raise OverflowError("Lyndon coordinates exceed the exact float range")
    c = np.rint(c).astype(np.int64)
    if not np.array_equal(T.astype(float) @ c.astype(float), W.astype(float)):
        raise ArithmeticError("non-integral Lyndon coordinates")
    return c


def to_fraction_array(a):
    out = np.empty(a.shape, dtype=object)
    flat = out.reshape(-1)
    for i, v in enumerate(np.asarray(a).reshape(-1)):
        flat[i] = Fraction(v)
    return out


def frac_to_complex(a):
    return np.array([complex(float(v)) for v in np.asarray(a).reshape(-1)],
                    dtype=complex).reshape(np.shape(a))


def qmatmul(A, B):
    """Exact product of Fraction/int matrices (object or integer arrays)."""
    A = np.asarray(A)
    B = np.asarray(B)
    if A.shape[0] == 0 or B.shape[1] == 0 or A.shape[1] == 0:
        return np.full((A.shape[0], B.shape[1]), Fraction(0), dtype=object)
    if HAVE_FLINT:
        fa = _to_fmpq(A)
        fb = _to_fmpq(B)
        prod = (fa * fb).tolist()
        out = np.empty((A.shape[0], B.shape[1]), dtype=object)
        for i, row in enumerate(prod):
            for j, e in enumerate(row):
                out[i, j] = Fraction(int(e.p), int(e.q))
        return out
    return to_fraction_array(A).dot(to_fraction_array(B))


def _to_fmpq(A):
    if A.dtype != object:
        return flint.fmpq_mat(flint.fmpz_mat(A.astype(np.int64).tolist()))
    rows = []
    for row in A.tolist():
        rows.append([_fq(v) for v in row])
    return flint.fmpq_mat(rows)


def _fq(v):
    v = Fraction(v) if not isinstance(v, (int, np.integer)) else Fraction(int(v))
    return flint.fmpq(int(v.numerator), int(v.denominator))
