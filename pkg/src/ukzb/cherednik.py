"""Rational Cherednik algebra H_n(k) and its modules.

H_n(k) is generated by x_i, y_i (i = 1..n) and S_n with sum x = sum y = 0,
[x_i, x_j] = [y_i, y_j] = 0 and [x_i, y_j] = 1/n - k s_ij for i != j.

Every module here is graded by polynomial degree and stored degree by
degree: a GradedModule keeps, for each degree d, exact rational matrices of
x_i (d -> d+1), y_i (d -> d-1) and s_ij (d -> d).  The standard module
M(pi) = C[x]/(sum x) (x) pi carries Dunkl operators

    y_i (f (x) v) = d_i f (x) v - k sum_{j != i} (f - s_ij f)/(x_i - x_j) (x) s_ij v,

with d_i the derivative along e_i - (1/n) sum e_j.  L(pi) is the quotient by
the largest graded submodule missing degree 0, V_N the invariant part of
C[sl_N] (x) (C^N)^{(x)n}.
"""
import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations, permutations

import numpy as np
import sympy

from . import lie_core as lc
from . import special_fn as sf
from . import realizations as rz
from .realizations import RelationReport, RelationFailure

try:
    import flint
except ImportError:  # pragma: no cover
    flint = None


class ModuleBudgetError(ValueError):
    """A requested construction exceeds its size budget."""


class EmptyModule(ValueError):
    """The invariant space is zero (V_N vanishes unless N divides n)."""


def _q(v):
    if isinstance(v, flint.fmpq):
        return v
    v = Fraction(v) if not isinstance(v, (int, np.integer)) else Fraction(int(v))
    return flint.fmpq(int(v.numerator), int(v.denominator))


def _frac(e):
    return Fraction(int(e.p), int(e.q))


def _mat(rows, ncols=None):
    nr = len(rows)
    nc = ncols if ncols is not None else (len(rows[0]) if rows else 0)
    M = flint.fmpq_mat(nr, nc)
    for r, row in enumerate(rows):
        for c, v in enumerate(row):
            if v != 0:
                M[r, c] = _q(v)
    return M


def _from_dict(entries, nr, nc):
    M = flint.fmpq_mat(nr, nc)
    for (r, c), v in entries.items():
        if v != 0:
            M[r, c] = _q(v)
    return M


def _is_zero(M):
    return all(M[r, c] == 0 for r in range(M.nrows()) for c in range(M.ncols()))


def _eye(n):
    M = flint.fmpq_mat(n, n)
    for i in range(n):
        M[i, i] = 1
    return M


def _rank_basis(M):
    """(R, pivots): nonzero rows of rref(M)."""
    if M.nrows() == 0 or M.ncols() == 0:
        return flint.fmpq_mat(0, M.ncols()), []
    R, rank = M.rref()
    out = flint.fmpq_mat(rank, M.ncols())
    piv = []
    for r in range(rank):
        for c in range(M.ncols()):
            out[r, c] = R[r, c]
        piv.append(next(c for c in range(M.ncols()) if R[r, c] != 0))
    return out, piv


def _vstack(blocks, ncols):
    nr = sum(B.nrows() for B in blocks)
    out = flint.fmpq_mat(nr, ncols)
    r0 = 0
    for B in blocks:
        for r in range(B.nrows()):
            for c in range(ncols):
                if B[r, c] != 0:
                    out[r0 + r, c] = B[r, c]
        r0 += B.nrows()
    return out


def _hstack(blocks, nrows):
    return _vstack([B.transpose() for B in blocks], nrows).transpose()


def _columns(M, cols):
    out = flint.fmpq_mat(M.nrows(), len(cols))
    for k, c in enumerate(cols):
        for r in range(M.nrows()):
            out[r, k] = M[r, c]
    return out


def _rows(M, rows):
    out = flint.fmpq_mat(len(rows), M.ncols())
    for k, r in enumerate(rows):
        for c in range(M.ncols()):
            out[k, c] = M[r, c]
    return out


def _to_numpy(M):
    return np.array([[float(_frac(M[r, c])) for c in range(M.ncols())]
                     for r in range(M.nrows())], dtype=float).reshape(M.nrows(), M.ncols())


# ------------------------------------------------------------ symmetric group

def partitions(n, max_parts=None, max_part=None):
    """Partitions of n in decreasing lexicographic order."""
    max_part = n if max_part is None else max_part
    if n == 0:
        yield ()
        return
    if max_parts == 0:
        return
    for first in range(min(n, max_part), 0, -1):
        for rest in partitions(n - first, None if max_parts is None else max_parts - 1, first):
            yield (first,) + rest


def standard_tableaux(shape):
    """Standard Young tableaux of the given shape as tuples of rows."""
    n = sum(shape)
    out = []

    def grow(rows, k):
        if k > n:
            out.append(tuple(tuple(r) for r in rows))
            return
        for i, length in enumerate(shape):
            if len(rows[i]) < length and (i == 0 or len(rows[i - 1]) > len(rows[i])):
                rows[i].append(k)
                grow(rows, k + 1)
                rows[i].pop()

    grow([[] for _ in shape], 1)
    return out


def _position(T, k):
    for r, row in enumerate(T):
        if k in row:
            return r, row.index(k)
    raise KeyError(k)


def _swap(T, a, b):
    return tuple(tuple(b if v == a else a if v == b else v for v in row) for row in T)


class SymmetricGroupRep:
    """Irreducible S_n-module pi(shape) in Young's seminormal form (rational)."""

    def __init__(self, shape):
        self.shape = tuple(int(p) for p in shape if p)
        self.n = sum(self.shape)
        self.tableaux = standard_tableaux(self.shape)
        self.index = {T: i for i, T in enumerate(self.tableaux)}
        self.dim = len(self.tableaux)
        self._adj = [self._adjacent(i) for i in range(1, self.n)]
        self._cache = {}

    def _adjacent(self, i):
        """Matrix of s_i = (i, i+1); column of v_T holds s_i v_T."""
        d = self.dim
        M = np.full((d, d), Fraction(0), dtype=object)
        for T, c in self.index.items():
            r1, c1 = _position(T, i)
            r2, c2 = _position(T, i + 1)
            if r1 == r2:
                M[c, c] = Fraction(1)
                continue
            if c1 == c2:
                M[c, c] = Fraction(-1)
                continue
            ax = Fraction((c2 - r2) - (c1 - r1))
            M[c, c] = 1 / ax
            other = self.index[_swap(T, i, i + 1)]
            # i+1 strictly below i in T: v_T -> v_T/ax + v_T'
            M[other, c] = Fraction(1) if r2 > r1 else 1 - 1 / ax ** 2
        return M

    def adjacent(self, i):
        return self._adj[i - 1]

    def transposition(self, i, j):
        """s_ij as s_i s_{i+1} .. s_{j-1} .. s_{i+1} s_i (1-based, i < j)."""
        i, j = min(i, j), max(i, j)
        key = (i, j)
        if key not in self._cache:
            M = self.adjacent(j - 1)
            for a in range(j - 2, i - 1, -1):
                S = self.adjacent(a)
                M = S.dot(M).dot(S)
            self._cache[key] = M
        return self._cache[key]

    def matrix(self, word):
        """Product of transpositions [(i, j), ...] left to right."""
        M = np.identity(self.dim, dtype=object) * Fraction(1)
        for i, j in word:
            M = M.dot(self.transposition(i, j))
        return M

    def character(self, word):
        return sum(self.matrix(word)[i, i] for i in range(self.dim))

    def coxeter_residual(self):
        """Number of failed Coxeter relations (0 for a genuine representation)."""
        bad = 0
        one = np.identity(self.dim, dtype=object) * Fraction(1)
        for i in range(1, self.n):
            S = self.adjacent(i)
            bad += int(not np.array_equal(S.dot(S), one))
            if i + 1 < self.n:
                T = self.adjacent(i + 1)
                bad += int(not np.array_equal(S.dot(T).dot(S), T.dot(S).dot(T)))
            for j in range(i + 2, self.n):
                T = self.adjacent(j)
                bad += int(not np.array_equal(S.dot(T), T.dot(S)))
        return bad

    def invariant_form(self):
        """Symmetric positive form with s^T G s = G (diagonal in this basis)."""
        d = self.dim
        rows = []
        idx = [(a, b) for a in range(d) for b in range(a, d)]
        pos = {p: k for k, p in enumerate(idx)}

        def var(a, b):
            return pos[(min(a, b), max(a, b))]

        for i in range(1, self.n):
            S = self.adjacent(i)
            for r in range(d):
                for c in range(r, d):
                    # (S^T G S - G)[r, c]
                    row = [Fraction(0)] * len(idx)
                    for a in range(d):
                        for b in range(d):
                            v = S[a, r] * S[b, c]
                            if v:
                                row[var(a, b)] += v
                    row[var(r, c)] -= 1
                    rows.append(row)
        num, _ = _mat(rows, len(idx)).numer_denom()
        X, nullity = num.nullspace()
        if nullity != 1:
            raise ArithmeticError("invariant form is not unique")
        G = np.full((d, d), Fraction(0), dtype=object)
        for k, (a, b) in enumerate(idx):
            G[a, b] = G[b, a] = Fraction(int(X[k, 0]))
        if G[0, 0] < 0:
            G = -G
        return G


def cycle_type_word(cycle_type):
    """A permutation of the given cycle type as a list of transpositions."""
    word = []
    start = 1
    for m in cycle_type:
        for a in range(start, start + m - 1):
            word.append((a, a + 1))
        start += m
    return word


def class_size(cycle_type):
    n = sum(cycle_type)
    z = 1
    for m in set(cycle_type):
        c = cycle_type.count(m)
        z *= m ** c * math.factorial(c)
    return math.factorial(n) // z


def conjugacy_classes(n):
    return [tuple(p) for p in partitions(n)]


@lru_cache(maxsize=None)
def sn_rep(shape):
    return SymmetricGroupRep(tuple(shape))


def sn_character(shape, cycle_type):
    return sn_rep(tuple(shape)).character(cycle_type_word(cycle_type))


def trivial_shape(n):
    return (n,)


def sign_shape(n):
    return (1,) * n


def rectangular_shape(n, N):
    """Delta(n, N): the S_n-type of ((C^N)^{(x)n})^{sl_N}, N rows of n/N."""
    if n % N:
        raise EmptyModule("N does not divide n")
    return (n // N,) * N


# ------------------------------------------------------------ graded operators

class GradedOp:
    """Blocks {source degree d: matrix to degree d + shift}.

    A block is present only where the operator is defined inside the
    truncation; sums keep common degrees, products compose where both are
    defined."""

    def __init__(self, shift, blocks):
        self.shift = shift
        self.blocks = blocks

    def degrees(self):
        return sorted(self.blocks)

    def __add__(self, o):
        if self.shift != o.shift:
            raise ValueError("graded shifts differ")
        keys = set(self.blocks) & set(o.blocks)
        return GradedOp(self.shift, {d: self.blocks[d] + o.blocks[d] for d in keys})

    def __sub__(self, o):
        return self + o * -1

    def __neg__(self):
        return self * -1

    def __mul__(self, o):
        if isinstance(o, GradedOp):
            out = {}
            for d, B in o.blocks.items():
                A = self.blocks.get(d + o.shift)
                if A is not None:
                    out[d] = A * B
            return GradedOp(self.shift + o.shift, out)
        c = _q(o)
        return GradedOp(self.shift, {d: B * c for d, B in self.blocks.items()})

    __rmul__ = __mul__

    def bracket(self, o):
        return self * o - o * self

    def is_zero(self):
        return all(_is_zero(B) for B in self.blocks.values())

    def vanishes(self, min_degrees=1):
        """Zero on every degree where defined, and defined somewhere."""
        live = sum(1 for B in self.blocks.values() if B.ncols())
        return live >= min_degrees and self.is_zero()

    def block(self, d):
        return self.blocks[d]


class GradedModule:
    """Finite truncation of a graded H_n(k)-module.

    dims[d] is the dimension of degree d for d = 0..cut.  When finite is
    True the module is zero above cut, so raising operators from the top
    degree are the zero map."""

    def __init__(self, n, k, dims, x, y, s, finite=False, name=""):
        self.n, self.k = n, Fraction(k)
        self.dims = list(dims)
        self.cut = len(self.dims) - 1
        self.finite = finite
        self.name = name
        self._x = {i: self._pad(op) for i, op in x.items()}
        self._y = {i: self._pad(op) for i, op in y.items()}
        self._s = {key: self._pad(op) for key, op in s.items()}
        self._cache = {}

    _PAD = 8

    def dim_at(self, d):
        return self.dims[d] if 0 <= d <= self.cut else 0

    def _pad(self, op):
        """Add blocks from the zero spaces below degree 0 (and above the top
        of a finite module) so that products through them are zero maps."""
        blocks = dict(op.blocks)
        rng = list(range(-self._PAD, 0))
        if self.finite:
            rng += list(range(self.cut + 1, self.cut + 1 + self._PAD))
        for d in rng:
            t = d + op.shift
            if d not in blocks:
                blocks[d] = _zero_block(self.dim_at(t), 0)
        return GradedOp(op.shift, blocks)

    # basic operators --------------------------------------------------------
    def x(self, i):
        return self._x[i]

    def y(self, i):
        return self._y[i]

    def s(self, i, j):
        return self._s[(min(i, j), max(i, j))]

    def identity(self):
        return self._pad(GradedOp(0, {d: _eye(m) for d, m in enumerate(self.dims)}))

    def scalar(self, c):
        return self.identity() * c

    def word(self, transpositions):
        op = self.identity()
        for i, j in transpositions:
            op = op * self.s(i, j)
        return op

    def h(self):
        """h = 1/2 sum (x_i y_i + y_i x_i)."""
        if "h" not in self._cache:
            acc = None
            for i in range(1, self.n + 1):
                t = self.x(i) * self.y(i) + self.y(i) * self.x(i)
                acc = t if acc is None else acc + t
            self._cache["h"] = acc * Fraction(1, 2)
        return self._cache["h"]

    def e(self):
        """e = 1/2 sum y_i^2."""
        return _sum_ops([self.y(i) * self.y(i) for i in range(1, self.n + 1)]) * Fraction(1, 2)

    def f(self):
        """f = 1/2 sum x_i^2."""
        return _sum_ops([self.x(i) * self.x(i) for i in range(1, self.n + 1)]) * Fraction(1, 2)

    def lowest_eigenvalue(self):
        """c_0: h acts on degree 0 by this scalar (checked)."""
        H = self.h().blocks[0]
        m = self.dims[0]
        c0 = H[0, 0]
        if not _is_zero(H - _eye(m) * c0):
            raise RelationFailure("h is not scalar on degree 0")
        return _frac(c0)

    def dim(self):
        return sum(self.dims)

    def dense(self, op):
        """Numeric matrix of a graded operator on a finite module."""
        if not self.finite:
            raise ValueError("dense form needs a finite module")
        off = np.cumsum([0] + self.dims)
        N = off[-1]
        M = np.zeros((N, N))
        for d, B in op.blocks.items():
            t = d + op.shift
            if 0 <= t <= self.cut and B.nrows() and B.ncols():
                M[off[t]:off[t + 1], off[d]:off[d + 1]] = _to_numpy(B)
        return M


def _sum_ops(ops):
    acc = ops[0]
    for o in ops[1:]:
        acc = acc + o
    return acc


def _zero_block(nr, nc):
    return flint.fmpq_mat(nr, nc)


# ------------------------------------------------------------ polynomials

class _Poly:
    """Sparse polynomials in x_1..x_n (full exponent tuples) with the
    reduction x_n -> -(x_1 + ... + x_{n-1}) to C[x]/(sum x)."""

    def __init__(self, n):
        self.n = n
        self._pow = {0: {(0,) * (n - 1): Fraction(1)}}

    def _neg_sum_power(self, e):
        if e not in self._pow:
            prev = self._neg_sum_power(e - 1)
            out = {}
            for m, c in prev.items():
                for l in range(self.n - 1):
                    m2 = m[:l] + (m[l] + 1,) + m[l + 1:]
                    out[m2] = out.get(m2, 0) - c
            self._pow[e] = out
        return self._pow[e]

    def reduce(self, p):
        out = {}
        for m, c in p.items():
            if c == 0:
                continue
            head = m[:-1]
            for m2, c2 in self._neg_sum_power(m[-1]).items():
                key = tuple(a + b for a, b in zip(head, m2))
                out[key] = out.get(key, 0) + c * c2
        return {m: c for m, c in out.items() if c != 0}

    def lift(self, m):
        return tuple(m) + (0,)

    def mult(self, m, i):
        """x_i times the full monomial m (0-based i)."""
        return {m[:i] + (m[i] + 1,) + m[i + 1:]: Fraction(1)}

    def swap(self, m, i, j):
        m = list(m)
        m[i], m[j] = m[j], m[i]
        return tuple(m)

    def deriv(self, m, i):
        if m[i] == 0:
            return {}
        return {m[:i] + (m[i] - 1,) + m[i + 1:]: Fraction(m[i])}

    def divided_difference(self, m, i, j):
        """(m - s_ij m)/(x_i - x_j) for a monomial m."""
        a, b = m[i], m[j]
        if a == b:
            return {}
        sign = 1
        if a < b:
            i, j, a, b = j, i, b, a
            sign = -1
        out = {}
        for t in range(a - b):
            e = list(m)
            e[i] = b + t
            e[j] = b + (a - b - 1 - t)
            out[tuple(e)] = Fraction(sign)
        return out


def _add_into(acc, p, c=1):
    for m, v in p.items():
        acc[m] = acc.get(m, 0) + c * v


def _monomials(nvars, d):
    if nvars == 0:
        if d == 0:
            yield ()
        return
    yield from rz._exponents(nvars, d)


# ------------------------------------------------------------ Dunkl module

DUNKL_SIGNS = (1, -1)
"""(sign of the derivative, sign of the reflection term) in the Dunkl
operators; found by find_sign_convention and frozen."""


def dunkl_module(n, k, cut, shape=None, signs=DUNKL_SIGNS, check=True):
    """Standard module M(pi) = C[x]/(sum x) (x) pi truncated at degree cut."""
    if cut < 1:
        raise ValueError("cut must be at least 1")
    if n < 2:
        raise ValueError("n must be at least 2")
    k = Fraction(k)
    shape = tuple(shape) if shape is not None else trivial_shape(n)
    rep = sn_rep(shape)
    r = rep.dim
    P = _Poly(n)
    monos = [list(_monomials(n - 1, d)) for d in range(cut + 1)]
    index = [{m: a for a, m in enumerate(ms)} for ms in monos]
    dims = [len(ms) * r for ms in monos]
    eps_d, eps_k = signs

    def block(d, t, image):
        """image(m) -> list of (reduced poly, pi matrix or None)."""
        E = {}
        for a, m in enumerate(monos[d]):
            for poly, W in image(P.lift(m)):
                for m2, c in P.reduce(poly).items():
                    b = index[t][m2]
                    for v in range(r):
                        if W is None:
                            E[(b * r + v, a * r + v)] = E.get((b * r + v, a * r + v), 0) + c
                        else:
                            for u in range(r):
                                w = W[u, v]
                                if w:
                                    key = (b * r + u, a * r + v)
                                    E[key] = E.get(key, 0) + c * w
        return _from_dict(E, dims[t], dims[d])

    x, y, s = {}, {}, {}
    for i in range(1, n + 1):
        xb = {}
        for d in range(cut):
            xb[d] = block(d, d + 1, lambda m, i=i: [(P.mult(m, i - 1), None)])
        x[i] = GradedOp(1, xb)
    for i, j in combinations(range(1, n + 1), 2):
        W = rep.transposition(i, j)
        s[(i, j)] = GradedOp(0, {d: block(d, d, lambda m, i=i, j=j, W=W: [({P.swap(m, i - 1, j - 1): Fraction(1)}, W)])
                                 for d in range(cut + 1)})
    for i in range(1, n + 1):
        def image(m, i=i):
            out = []
            der = {}
            _add_into(der, P.deriv(m, i - 1))
            for j in range(1, n + 1):
                _add_into(der, P.deriv(m, j - 1), Fraction(-1, n))
            out.append(({mm: eps_d * c for mm, c in der.items()}, None))
            for j in range(1, n + 1):
                if j != i:
                    dd = P.divided_difference(m, i - 1, j - 1)
                    out.append(({mm: eps_k * k * c for mm, c in dd.items()},
                                rep.transposition(i, j)))
            return out
        yb = {0: _zero_block(0, dims[0])}
        for d in range(1, cut + 1):
            yb[d] = block(d, d - 1, image)
        y[i] = GradedOp(-1, yb)
    mod = GradedModule(n, k, dims, x, y, s, name="M(%s) n=%d k=%s" % (shape, n, k))
    mod.shape = shape
    mod.rep = rep
    mod.monomials = monos
    if check:
        rep_ = check_cherednik_relations(mod)
        if not rep_.ok:
            raise RelationFailure("Dunkl module fails %s" % rep_.failures())
    return mod


def find_sign_convention(n=3, k=Fraction(2, 7), cut=2):
    """Sign choices (derivative, reflection term) for which the presentation holds."""
    found = []
    for signs in ((1, -1), (1, 1), (-1, -1), (-1, 1)):
        mod = dunkl_module(n, k, cut, signs=signs, check=False)
        if check_cherednik_relations(mod).ok:
            found.append(signs)
    return found


def check_cherednik_relations(mod):
    """All defining relations of H_n(k), exactly, on every degree where defined."""
    n, k = mod.n, mod.k
    res = RelationReport("H_%d(%s) on %s" % (n, k, mod.name))
    I = mod.identity()
    res.results["sum x = 0"] = _sum_ops([mod.x(i) for i in range(1, n + 1)]).vanishes()
    res.results["sum y = 0"] = _sum_ops([mod.y(i) for i in range(1, n + 1)]).vanishes()
    for i, j in combinations(range(1, n + 1), 2):
        res.results["[x%d,x%d] = 0" % (i, j)] = mod.x(i).bracket(mod.x(j)).vanishes()
        res.results["[y%d,y%d] = 0" % (i, j)] = mod.y(i).bracket(mod.y(j)).vanishes()
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            if i != j:
                rhs = I * Fraction(1, n) - mod.s(i, j) * k
                res.results["[x%d,y%d] = 1/n - k s" % (i, j)] = (
                    mod.x(i).bracket(mod.y(j)) - rhs).vanishes()
    for i, j in combinations(range(1, n + 1), 2):
        S = mod.s(i, j)
        res.results["s%d%d^2 = 1" % (i, j)] = (S * S - I).vanishes()
        for l in range(1, n + 1):
            l2 = j if l == i else i if l == j else l
            res.results["s%d%d x%d s = x%d" % (i, j, l, l2)] = (S * mod.x(l) * S - mod.x(l2)).vanishes()
            res.results["s%d%d y%d s = y%d" % (i, j, l, l2)] = (S * mod.y(l) * S - mod.y(l2)).vanishes()
    return res


def h_spectrum_report(mod):
    """h acts on degree d by d + c_0 (exact); returns (ok, c_0)."""
    c0 = mod.lowest_eigenvalue()
    H = mod.h()
    ok = all(_is_zero(B - _eye(mod.dims[d]) * _q(c0 + d)) for d, B in H.blocks.items() if 0 <= d <= mod.cut)
    return ok, c0


# ------------------------------------------------------------ lowest weight quotient

def lowest_weight_module(shape, n, k, cut, base=None):
    """L(pi) = M(pi)/J, J_d = {v : y_i v in J_{d-1} for all i}, J_0 = 0.

    J is the largest graded submodule avoiding degree 0, which is the
    radical of the contravariant form.  If two consecutive degrees of the
    quotient vanish the result is marked finite."""
    M = base or dunkl_module(n, k, cut, shape=shape)
    Q = {0: _eye(M.dims[0])}
    piv = {0: list(range(M.dims[0]))}
    dims = [M.dims[0]]
    zero_run = 0
    top = M.cut
    for d in range(1, M.cut + 1):
        prev = Q[d - 1]
        if prev.nrows() == 0:
            R, p = flint.fmpq_mat(0, M.dims[d]), []
        else:
            stacked = _vstack([prev * M.y(i).blocks[d] for i in range(1, n + 1)], M.dims[d])
            R, p = _rank_basis(stacked)
        Q[d], piv[d] = R, p
        dims.append(R.nrows())
        zero_run = zero_run + 1 if R.nrows() == 0 else 0
        if zero_run == 2:
            top = d
            break
    finite = zero_run == 2
    dims = dims[:top + 1]

    def section(d):
        S = flint.fmpq_mat(M.dims[d], len(piv[d]))
        for c, p in enumerate(piv[d]):
            S[p, c] = 1
        return S

    sec = {d: section(d) for d in range(top + 1)}

    def induce(op):
        out = {}
        for d in range(top + 1):
            t = d + op.shift
            if t < 0:
                out[d] = _zero_block(0, dims[d])
            elif t > top:
                if finite:
                    out[d] = _zero_block(0, dims[d])
            elif d in op.blocks:
                out[d] = Q[t] * op.blocks[d] * sec[d]
        return GradedOp(op.shift, out)

    x = {i: induce(M.x(i)) for i in range(1, n + 1)}
    y = {i: induce(M.y(i)) for i in range(1, n + 1)}
    s = {key: induce(op) for key, op in M._s.items()}
    L = GradedModule(n, k, dims, x, y, s, finite=finite,
                     name="L(%s) n=%d k=%s" % (M.shape, n, Fraction(k)))
    L.shape = M.shape
    L.rep = M.rep
    L.base = M
    L.quotient = Q
    return L


def contravariant_gram(mod, d0_form=None):
    """Gram matrices of the form with B(x_i u, v) = B(u, y_i v), per degree.

    Degree d is spanned by x_i applied to degree d - 1; the Gram matrix on
    that spanning set is pushed to a basis and checked for consistency.
    Returns {d: Gram} up to the last degree where x from d - 1 is defined."""
    n = mod.n
    if d0_form is None:
        d0_form = getattr(mod, "degree0_form", None)
    if d0_form is None:
        d0_form = _mat(mod.rep.invariant_form().tolist())
    G = {0: d0_form}
    for d in range(1, mod.cut + 1):
        if any(d - 1 not in mod.x(i).blocks for i in range(1, n + 1)):
            break
        C = _hstack([mod.x(i).blocks[d - 1] for i in range(1, n + 1)], mod.dims[d])
        m = mod.dims[d - 1]
        # B(x_i u_k, x_j u_l) = B(u_k, y_i x_j u_l)
        span = flint.fmpq_mat(n * m, n * m)
        for i in range(1, n + 1):
            for j in range(1, n + 1):
                blk = G[d - 1] * (mod.y(i).blocks[d] * mod.x(j).blocks[d - 1])
                for a in range(m):
                    for b in range(m):
                        span[(i - 1) * m + a, (j - 1) * m + b] = blk[a, b]
        if mod.dims[d] == 0:
            G[d] = flint.fmpq_mat(0, 0)
            continue
        cols = _rank_basis(C)[1]
        Csub = _columns(C, cols)
        if Csub.nrows() != Csub.ncols():
            raise ArithmeticError("degree %d is not generated from degree %d" % (d, d - 1))
        Ci = Csub.inv()
        Gd = Ci.transpose() * _rows(_columns(span, cols), cols) * Ci
        if not _is_zero(C.transpose() * Gd * C - span):
            raise RelationFailure("contravariant form is inconsistent in degree %d" % d)
        G[d] = Gd
    return G


def leading_minors_positive(G):
    n = G.nrows()
    for k in range(1, n + 1):
        sub = flint.fmpq_mat(k, k)
        for a in range(k):
            for b in range(k):
                sub[a, b] = G[a, b]
        if not sub.det() > 0:
            return False
    return True


def radical_matches_quotient(L):
    """Radical of the contravariant Gram on M(pi) equals the removed subspace."""
    M = L.base
    G = contravariant_gram(M)
    ok = True
    for d in range(len(L.dims)):
        if d not in G:
            break
        rank = _rank_basis(G[d])[0].nrows() if G[d].nrows() else 0
        ok &= rank == L.dims[d]
        # the removed subspace is the kernel of Q_d; it must lie in the radical
        Q = L.quotient[d]
        num, _ = Q.numer_denom() if Q.nrows() else (None, None)
        if Q.nrows():
            X, nul = num.nullspace()
            K = _columns(flint.fmpq_mat(X), list(range(nul)))
        else:
            K = _eye(M.dims[d])
        ok &= _is_zero(G[d] * K) if K.ncols() else True
    return ok


# ------------------------------------------------------------ characters

@dataclass
class GradedCharacter:
    """sum_d coeffs[d] q^(shift + d) for one S_n class, degrees 0..cut."""
    shift: Fraction
    coeffs: list
    cycle_type: tuple = ()

    def expr(self, q=None):
        q = q or sympy.Symbol("q")
        return sum(sympy.Rational(c.numerator, c.denominator) * q ** (sympy.Rational(self.shift) + d)
                   for d, c in enumerate(map(Fraction, self.coeffs)))

    def __eq__(self, o):
        m = min(len(self.coeffs), len(o.coeffs))
        return self.shift == o.shift and [Fraction(c) for c in self.coeffs[:m]] == [Fraction(c) for c in o.coeffs[:m]]


def graded_trace(mod, op, d):
    B = op.blocks[d]
    return sum((_frac(B[i, i]) for i in range(B.nrows())), Fraction(0))


def graded_character(mod, cycle_type=None, cut=None):
    """Tr(w q^h) truncated at degree cut, w of the given cycle type."""
    n = mod.n
    cycle_type = tuple(cycle_type) if cycle_type else (1,) * n
    W = mod.word(cycle_type_word(cycle_type))
    c0 = mod.lowest_eigenvalue()
    top = mod.cut if cut is None else min(cut, mod.cut)
    return GradedCharacter(c0, [graded_trace(mod, W, d) for d in range(top + 1)], cycle_type)


def multiplicity_series(mod, shape, cut=None):
    """Per degree, the multiplicity of pi(shape) in the module."""
    n = mod.n
    top = mod.cut if cut is None else min(cut, mod.cut)
    out = [Fraction(0)] * (top + 1)
    for ct in conjugacy_classes(n):
        ch = graded_character(mod, ct, top)
        chi = sn_character(shape, ct)
        for d in range(top + 1):
            out[d] += class_size(ct) * chi * ch.coeffs[d]
    return [v / math.factorial(n) for v in out]


def lc_character(N, n, cycle_type, q=None):
    """(q - q^-1)/(q^N - q^-N) det(q^-N - q^N g)/det(q^-1 - q g) on C^n."""
    q = q or sympy.Symbol("q")
    expr = (q - 1 / q) / (q ** N - q ** -N)
    for m in cycle_type:
        expr *= (q ** (-N * m) - q ** (N * m)) / (q ** (-m) - q ** m)
    return sympy.cancel(expr)


def tensor_trace_formula(N, cycle_type, q=None):
    """det(q^-N - q^N g)/det(q^-1 - q g), claimed trace of g q^h on (C^N)^{(x)n}."""
    q = q or sympy.Symbol("q")
    expr = sympy.Integer(1)
    for m in cycle_type:
        expr *= (q ** (-N * m) - q ** (N * m)) / (q ** (-m) - q ** m)
    return sympy.cancel(expr)


def tensor_trace_bruteforce(N, cycle_type, q=None):
    """Tr(g q^h) on (C^N)^{(x)n} with h = diag(N-1, N-3, ..., 1-N), by summing
    over basis tensors fixed by g."""
    q = q or sympy.Symbol("q")
    wts = [N - 1 - 2 * p for p in range(N)]
    expr = sympy.Integer(1)
    for m in cycle_type:
        # a basis tensor is fixed by an m-cycle iff it is constant on it
        expr *= sum(q ** (m * w) for w in wts)
    return sympy.expand(expr)


def lc_check(L, N):
    """Exact comparison of the graded S_n-character of L(C) with (lc)."""
    q = sympy.Symbol("q")
    out = {}
    for ct in conjugacy_classes(L.n):
        ch = graded_character(L, ct)
        lhs = sum(sympy.Rational(c.numerator, c.denominator) * q ** (2 * (sympy.Rational(ch.shift) + d))
                  for d, c in enumerate(ch.coeffs))
        out[ct] = sympy.simplify(lhs - lc_character(N, L.n, ct, q)) == 0
    return out


# ------------------------------------------------------------ sl_N modules V(mu)

class IrreducibleGL:
    """V(mu) inside (C^N)^{(x)m}, m = |mu|, as the image of a Young symmetrizer."""

    def __init__(self, mu, N, budget=200):
        mu = tuple(p for p in mu if p)
        if len(mu) > N:
            raise ValueError("more than N parts")
        self.mu, self.N = mu, N
        m = sum(mu)
        self.m = m
        self.tdim = N ** m
        self.basis_tensors = list(np.ndindex(*([N] * m))) if m else [()]
        self.tindex = {t: a for a, t in enumerate(self.basis_tensors)}
        c = self._symmetrizer()
        B, _ = _rank_basis(c.transpose())
        self.B = B.transpose()  # columns span V(mu)
        self.dim = self.B.ncols()
        if self.dim > budget:
            raise ModuleBudgetError("dim V(mu) = %d exceeds budget %d" % (self.dim, budget))

    def _perm_matrix(self, perm):
        """Permutation of tensor factors: factor a moves to slot perm[a]."""
        E = {}
        for a, t in enumerate(self.basis_tensors):
            u = [0] * self.m
            for s, v in enumerate(t):
                u[perm[s]] = v
            E[(self.tindex[tuple(u)], a)] = 1
        return _from_dict(E, self.tdim, self.tdim)

    def _symmetrizer(self):
        T = standard_tableaux(self.mu)[0]
        rows = [[v - 1 for v in r] for r in T]
        cols = [[r[c] for r in rows if c < len(r)] for c in range(len(rows[0]))]
        dim = self.tdim

        def group_sum(blocks, signed):
            acc = flint.fmpq_mat(dim, dim)
            for choice in _product_perms(blocks):
                perm = list(range(self.m))
                sgn = 1
                for blk, p in zip(blocks, choice):
                    for a, b in zip(blk, p):
                        perm[a] = b
                    sgn *= _perm_sign([blk.index(b) for b in p])
                acc += self._perm_matrix(perm) * (sgn if signed else 1)
            return acc

        row_sym = group_sum(rows, False)
        col_anti = group_sum(cols, True)
        return col_anti * row_sym

    def weight(self, t):
        return tuple(sum(1 for v in t if v == p) for p in range(self.N))

    def zero_weight_basis(self):
        """Columns spanning V(mu)[0] (sl_N weight zero)."""
        if self.m % self.N:
            return flint.fmpq_mat(self.tdim, 0)
        w0 = (self.m // self.N,) * self.N
        keep = [a for a, t in enumerate(self.basis_tensors) if self.weight(t) == w0]
        # V(mu) is a sum of weight spaces: project the basis onto weight w0
        P = flint.fmpq_mat(self.tdim, self.dim)
        for r in keep:
            for c in range(self.dim):
                P[r, c] = self.B[r, c]
        R, _ = _rank_basis(P.transpose())
        return R.transpose()

    def gl_action(self, p, r):
        """E_pr acting on the tensor space."""
        E = {}
        for a, t in enumerate(self.basis_tensors):
            for s, v in enumerate(t):
                if v == r:
                    u = list(t)
                    u[s] = p
                    key = (self.tindex[tuple(u)], a)
                    E[key] = E.get(key, 0) + 1
        return _from_dict(E, self.tdim, self.tdim)

    def principal_nilpotent(self):
        e = flint.fmpq_mat(self.tdim, self.tdim)
        for p in range(self.N - 1):
            e += self.gl_action(p, p + 1)
        return e

    def restrict(self, A):
        """Matrix of a gl_N operator in the basis B of V(mu)."""
        img = A * self.B
        _, rows = _rank_basis(self.B.transpose())
        Bs = _rows(self.B, rows)
        C = Bs.inv() * _rows(img, rows)
        if not _is_zero(self.B * C - img):
            raise RelationFailure("operator does not preserve V(mu)")
        return C

    def q_rho_character(self):
        """chi_{V(mu)}(q^{2 rho}) by weight multiplicities."""
        q = sympy.Symbol("q")
        wts = {}
        for w, cols in self._weight_dims().items():
            wts[w] = cols
        return sympy.expand(sum(mult * q ** sum(c * (self.N - 1 - 2 * p) for p, c in enumerate(w))
                                for w, mult in wts.items()))

    def _weight_dims(self):
        out = {}
        groups = {}
        for a, t in enumerate(self.basis_tensors):
            groups.setdefault(self.weight(t), []).append(a)
        for w, rows in groups.items():
            sub = _rows(self.B, rows)
            r = _rank_basis(sub)[0].nrows()
            if r:
                out[w] = r
        return out


def _product_perms(blocks):
    if not blocks:
        yield ()
        return
    for p in permutations(blocks[0]):
        for rest in _product_perms(blocks[1:]):
            yield (p,) + rest


def _perm_sign(p):
    sgn = 1
    p = list(p)
    for i in range(len(p)):
        while p[i] != i:
            j = p[i]
            p[i], p[j] = p[j], p[i]
            sgn = -sgn
    return sgn


def gen_exponents(mu, N, budget=200):
    """P_mu(q) = sum_j dim(F^j/F^{j-1}) q^j, F^j = ker e^{j+1} on V(mu)[0]."""
    V = IrreducibleGL(mu, N, budget)
    Z = V.zero_weight_basis()
    q = sympy.Symbol("q")
    if Z.ncols() == 0:
        return sympy.Integer(0)
    e = V.principal_nilpotent()
    prev = 0
    poly = sympy.Integer(0)
    power = e
    j = 0
    while prev < Z.ncols():
        img = power * Z
        rank = _rank_basis(img)[0].nrows()
        kernel = Z.ncols() - rank
        poly += (kernel - prev) * q ** j
        prev = kernel
        power = e * power
        j += 1
        if j > 4 * V.m * N + 4:
            raise ArithmeticError("principal nilpotent is not nilpotent on V(mu)[0]")
    return sympy.expand(poly)


def weyl_dimension(mu, N):
    mu = list(mu) + [0] * (N - len(mu))
    out = Fraction(1)
    for p in range(N):
        for r in range(p + 1, N):
            out *= Fraction(mu[p] - mu[r] + r - p, r - p)
    return out


def phi_product(mu, N, q=None, as_printed=False):
    """prod_{p<r} [mu_p - mu_r + r - p]_q, q-integers [m] = (q^m - q^-m)/(q - q^-1).

    as_printed=True uses mu_r - mu_p + r - p, which gives a negative
    dimension for dominant mu; kept for the comparison in the tests."""
    q = q or sympy.Symbol("q")
    mu = list(mu) + [0] * (N - len(mu))
    expr = sympy.Integer(1)
    for p in range(N):
        for r in range(p + 1, N):
            a = (mu[r] - mu[p] if as_printed else mu[p] - mu[r]) + r - p
            expr *= (q ** a - q ** -a) / (q ** (r - p) - q ** (p - r))
    return sympy.cancel(expr)


class CoefficientModule(rz.PolynomialModule):
    """S(sl_N)_{<= cut} (x) W for a given representation W, invariants only."""

    def __init__(self, N, cut, rep_mats):
        super().__init__(N, 1, cut)
        self._rep = rep_mats
        self.vdim = rep_mats[0].shape[0]
        self.dim = len(self.monos) * self.vdim

    def _v_diag(self, a):
        return self._rep[a]


def gl_module_rep(V):
    """Matrices (Fractions) of the basis e_a of sl_N acting on V(mu)."""
    g = rz.SimpleLieData(V.N)
    mats = []
    for a in range(g.dim):
        A = flint.fmpq_mat(V.tdim, V.tdim)
        for p in range(V.N):
            for r in range(V.N):
                c = g.basis[a][p, r]
                if c:
                    A += V.gl_action(p, r) * _q(c)
        C = V.restrict(A)
        mats.append(np.array([[_frac(C[i, j]) for j in range(C.ncols())] for i in range(C.nrows())],
                             dtype=object))
    return mats


def kostant_check(mu, N, cut):
    """Hilbert series of (C[g] (x) V(mu))^g against P_mu(q)/prod_{i=2..N}(1 - q^i)."""
    V = IrreducibleGL(mu, N)
    M = CoefficientModule(N, cut, gl_module_rep(V))
    dims = M.invariant_dims()
    q = sympy.Symbol("q")
    series = sympy.series(gen_exponents(mu, N) / sympy.prod([1 - q ** i for i in range(2, N + 1)]),
                          q, 0, cut + 1).removeO()
    expected = [series.coeff(q, d) for d in range(cut + 1)]
    return [dims[d] for d in range(cut + 1)], [int(v) for v in expected]


# ------------------------------------------------------------ V_N

def _restrict_op(op, B_src, B_tgt):
    img = op.M * B_src
    if B_tgt.ncols() == 0:
        if not _is_zero(img):
            raise RelationFailure("operator leaves the invariant subspace")
        return flint.fmpq_mat(0, B_src.ncols())
    _, rows = _rank_basis(B_tgt.transpose())
    C = _rows(B_tgt, rows).inv() * _rows(img, rows)
    if not _is_zero(B_tgt * C - img):
        raise RelationFailure("operator leaves the invariant subspace")
    return C


def build_VN(n, N, cut):
    """V_N = (C[sl_N]_{<= cut} (x) (C^N)^{(x)n})^{sl_N} as an H_n(N/n)-module.

    X_i = multiplication by A in factor i (the x-bar image), Y_i = (N/n)
    sum_a (e^a)_i d/d e_a (minus N/n times the y-bar image)."""
    M = rz.PolynomialModule(N, n, cut)
    inv = M.invariants()
    dims = [inv[d].ncols() for d in range(cut + 1)]
    if sum(dims) == 0:
        raise EmptyModule("V_N is zero for N=%d, n=%d" % (N, n))
    k = Fraction(N, n)

    def graded(op, shift):
        out = {}
        for d in range(cut + 1):
            t = d + shift
            if t < 0:
                out[d] = _zero_block(0, dims[d])
            elif t <= cut and (shift <= 0 or d + op.up <= cut):
                out[d] = _restrict_op(op, inv[d], inv[t])
        return GradedOp(shift, out)

    x = {i: graded(M.x_bar(i), 1) for i in range(1, n + 1)}
    y = {i: graded(M.y_bar(i) * (-k), -1) for i in range(1, n + 1)}
    s = {}
    for i, j in combinations(range(1, n + 1), 2):
        P = _factor_swap(N, n, i, j)
        s[(i, j)] = graded(M._to_op([(M._identity_poly(), P)], 0), 0)
    V = GradedModule(n, k, dims, x, y, s, name="V_%d n=%d" % (N, n))
    V.poly = M
    V.N = N
    V.graded = graded
    V.inv = inv
    # the standard dot product on (C^N)^{(x)n} restricted to degree 0
    V.degree0_form = inv[0].transpose() * inv[0]
    return V


def _factor_swap(N, n, i, j):
    dim = N ** n
    P = np.full((dim, dim), Fraction(0), dtype=object)
    for a, t in enumerate(np.ndindex(*([N] * n))):
        u = list(t)
        u[i - 1], u[j - 1] = u[j - 1], u[i - 1]
        P[np.ravel_multi_index(u, [N] * n), a] = Fraction(1)
    return P


def _trace_power_op(M, p):
    """Multiplication by tr(A^p), A = sum_a p_a e^a."""
    g = M.g
    acc = {}
    for tup in np.ndindex(*([g.dim] * p)):
        W = g.dual[tup[0]]
        for a in tup[1:]:
            W = W.dot(g.dual[a])
        c = sum(W[i, i] for i in range(g.N))
        if c == 0:
            continue
        P = M._identity_poly()
        for a in tup:
            P = M._compose(M._poly_mult(a), P)
        for key, v in P.items():
            acc[key] = acc.get(key, 0) + c * v
    return M._to_op([(acc, None)], p)


def eulh_report(V):
    """h = H, e = (N/n) E, f = (n/N) F on V_N, with H the Euler field plus
    dim g/2, E = Delta_g/2, F = tr(A^2)/2; and sum X_i^p = (n/N) tr A^p."""
    M, N, n = V.poly, V.N, V.n
    res = RelationReport("eulh on %s" % V.name)
    H = V.graded(M.d(), 0)
    E = V.graded(M.Delta0() * -1, -2)
    F = V.graded(M.X(), 2)
    res.results["h = H"] = (V.h() - H).vanishes()
    res.results["e = (N/n) E"] = (V.e() - E * Fraction(N, n)).vanishes()
    res.results["f = (n/N) F"] = (V.f() - F * Fraction(n, N)).vanishes()
    for p in (1, 2, 3):
        if p > V.cut:
            break
        lhs = _sum_ops([_power(V.x(i), p) for i in range(1, n + 1)])
        rhs = V.graded(_trace_power_op(M, p), p) * Fraction(n, N)
        res.results["sum X^%d = (n/N) tr A^%d" % (p, p)] = (lhs - rhs).vanishes()
    return res


def _power(op, p):
    out = op
    for _ in range(p - 1):
        out = out * op
    return out


def chara_formula(N, n, cycle_type, cut):
    """q^{(N^2-1)/2} sum_mu chi_mu(w) P_mu(q) / prod_{i=2..N}(1 - q^i), as
    (shift, coefficients of q^(shift + d), d = 0..cut)."""
    q = sympy.Symbol("q")
    total = sympy.Integer(0)
    for mu in partitions(n, max_parts=N):
        P = gen_exponents(mu, N)
        if P == 0:
            continue
        total += sn_character(mu, cycle_type) * P
    series = sympy.series(total / sympy.prod([1 - q ** i for i in range(2, N + 1)]),
                          q, 0, cut + 1).removeO()
    coeffs = [Fraction(str(series.coeff(q, d))) for d in range(cut + 1)]
    return GradedCharacter(Fraction(N * N - 1, 2), coeffs, tuple(cycle_type))


# ------------------------------------------------------------ deco

def deco_check(N, n, mu_tilde, L=None):
    """Tr(q^{2h}) on Hom_{S_n}(pi(mu~), L(C)) against (q - q^-1)/(q^N - q^-N) phi_mu(q).

    Returns (exact match, lhs, rhs, dims (K, dim V(mu)/N))."""
    if math.gcd(N, n) != 1:
        raise ValueError("needs gcd(N, n) = 1")
    mu_tilde = tuple(mu_tilde)
    if sum(mu_tilde) != n or len(mu_tilde) > N:
        raise ValueError("mu~ must be a partition of n with at most N parts")
    q = sympy.Symbol("q")
    if L is None:
        L = lowest_weight_module(trivial_shape(n), n, Fraction(N, n), 2 * n)
    if not L.finite:
        raise ValueError("L(C) did not stabilize; raise the cut")
    mult = multiplicity_series(L, mu_tilde)
    c0 = L.lowest_eigenvalue()
    lhs = sum(sympy.Rational(m.numerator, m.denominator) * q ** (2 * (sympy.Rational(c0) + d))
              for d, m in enumerate(mult))
    phi = IrreducibleGL(mu_tilde, N).q_rho_character()
    rhs = sympy.cancel((q - 1 / q) / (q ** N - q ** -N) * phi)
    ok = sympy.simplify(lhs - rhs) == 0
    ok_product = sympy.simplify(phi - phi_product(mu_tilde, N)) == 0
    dimK = sum(mult)
    return ok and ok_product, lhs, rhs, (dimK, weyl_dimension(mu_tilde, N) / N)


def deco_sl2_example(n, j, L=None):
    """Tr on K for V_{2j-1}: (q^{2j} - q^{-2j})/(q^2 - q^-2); mu~ has parts
    differing by 2j - 1."""
    a = (n + 2 * j - 1) // 2
    mu = (a, n - a)
    q = sympy.Symbol("q")
    ok, lhs, rhs, dims = deco_check(2, n, mu, L)
    target = (q ** (2 * j) - q ** (-2 * j)) / (q ** 2 - q ** -2)
    return ok and sympy.simplify(lhs - target) == 0, lhs


# ------------------------------------------------------------ xi_{a,b}

class XiRealization:
    """xi_{a,b}: tbar_{1,n} x| d -> H_n(k), evaluated on a graded module."""

    def __init__(self, mod, a, b):
        a, b = Fraction(a), Fraction(b)
        if a == 0 or b == 0:
            raise ValueError("xi_{a,b} on d needs a, b != 0")
        self.mod, self.a, self.b = mod, a, b
        self.n = mod.n
        self._word_cache = {}

    def x(self, i):
        return self.mod.x(i) * self.a

    def y(self, i):
        return self.mod.y(i) * self.b

    def t(self, i, j):
        m = self.mod
        return (m.identity() * Fraction(1, self.n) - m.s(i, j) * m.k) * (self.a * self.b)

    def d(self):
        return self.mod.h()

    def X(self):
        return self.mod.f() * (-self.a / self.b)

    def Delta0(self):
        return self.mod.e() * (self.b / self.a)

    def delta(self, m, literal=False):
        """c sum_{i<j} (x_i - x_j)^{2m} with c = -k^2 a^{2m+1} b.

        [y_i, sum_{j<l} (x_j - x_l)^{2m}] = 2m sum_j (x_i - x_j)^{2m-1} while
        xi(delta~(ybar_i)) = 2m k^2 a^{2m+1} b^2 sum_j (x_i - x_j)^{2m-1}, so
        this c is the one compatible with the action of delta on tbar.
        literal=True uses c = -a^{2m-1}/(2b), off by the factor 2 k^2 (ab)^2."""
        n = self.n
        acc = None
        for i, j in combinations(range(1, n + 1), 2):
            diff = self.mod.x(i) - self.mod.x(j)
            term = _power(diff, 2 * m)
            acc = term if acc is None else acc + term
        if literal:
            return acc * (-Fraction(1, 2) * self.a ** (2 * m - 1) / self.b)
        return acc * (-self.mod.k ** 2 * self.a ** (2 * m + 1) * self.b)

    def letter(self, name):
        i = int(name[1:])
        return self.x(i) if name[0] == "x" else self.y(i)

    def wordpoly(self, p, letters):
        out = None
        for w, c in p.items():
            op = self._word(w, letters)
            term = op * c
            out = term if out is None else out + term
        return out

    def _word(self, w, letters):
        key = (w, tuple(letters))
        if key not in self._word_cache:
            if len(w) == 1:
                op = self.letter(letters[w[0]])
            else:
                op = self._word(w[:-1], letters) * self.letter(letters[w[-1]])
            self._word_cache[key] = op
        return self._word_cache[key]

    def lie(self, e):
        """Image of an exact tbar_{1,n} element."""
        alg = e.alg
        p = {}
        for d in range(1, alg.D + 1):
            part = e.part(d)
            if not any(v != 0 for v in part):
                continue
            W = alg.word_expansion(d)
            vec = W.astype(object).dot(part)
            for idx, v in enumerate(vec):
                if v != 0:
                    p[rz._decode(idx, alg.r, d)] = v
        if not p:
            return self.mod.scalar(0)
        return self.wordpoly(p, alg.pres.letters)


def xi_ab(mod, a, b):
    """The morphism xi_{a,b} on a graded H_n(k)-module."""
    return XiRealization(mod, a, b)


def check_xi(mod, a, b, mmax=1, literal_delta=False):
    """t-bar relators and the d-relations under xi_{a,b}, exactly."""
    xi = XiRealization(mod, a, b)
    n = mod.n
    res = RelationReport("xi_{%s,%s} on %s" % (a, b, mod.name))
    xs = [xi.x(i) for i in range(1, n + 1)]
    ys = [xi.y(i) for i in range(1, n + 1)]
    res.results["sum x = 0"] = _sum_ops(xs).vanishes()
    res.results["sum y = 0"] = _sum_ops(ys).vanishes()
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            if i != j:
                res.results["[x%d,y%d] = t%d%d" % (i, j, i, j)] = (
                    xi.x(i).bracket(xi.y(j)) - xi.t(i, j)).vanishes()
    pres = lc.tbar1n_presentation(n)
    for k, rel in enumerate(pres.relators):
        res.results["relator %d" % k] = xi.wordpoly(rel, pres.letters).vanishes()
    D0, X, d = xi.Delta0(), xi.X(), xi.d()
    res.results["[d,X] = 2X"] = (d.bracket(X) - X * 2).vanishes()
    res.results["[d,Delta0] = -2 Delta0"] = (d.bracket(D0) + D0 * 2).vanishes()
    res.results["[X,Delta0] = d"] = (X.bracket(D0) - d).vanishes()
    for i in range(1, n + 1):
        x, y = xi.x(i), xi.y(i)
        res.results["[d,x%d] = x" % i] = (d.bracket(x) - x).vanishes()
        res.results["[d,y%d] = -y" % i] = (d.bracket(y) + y).vanishes()
        res.results["[X,x%d] = 0" % i] = X.bracket(x).vanishes()
        res.results["[X,y%d] = x" % i] = (X.bracket(y) - x).vanishes()
        res.results["[Delta0,x%d] = y" % i] = (D0.bracket(x) - y).vanishes()
        res.results["[Delta0,y%d] = 0" % i] = D0.bracket(y).vanishes()
    for i, j in combinations(range(1, n + 1), 2):
        t = xi.t(i, j)
        res.results["[d,t%d%d] = 0" % (i, j)] = d.bracket(t).vanishes()
        res.results["[X,t%d%d] = 0" % (i, j)] = X.bracket(t).vanishes()
        res.results["[Delta0,t%d%d] = 0" % (i, j)] = D0.bracket(t).vanishes()
    for m in range(1, mmax + 1):
        dl = xi.delta(m, literal_delta)
        res.results["[delta%d,X] = 0" % (2 * m)] = dl.bracket(X).vanishes()
        res.results["[d,delta%d] = %d delta" % (2 * m, 2 * m)] = (d.bracket(dl) - dl * (2 * m)).vanishes()
        acc = dl
        for _ in range(2 * m + 1):
            acc = D0.bracket(acc)
        res.results["ad(Delta0)^%d delta%d = 0" % (2 * m + 1, 2 * m)] = acc.vanishes()
        alg = rz._tbar(n, 2 * m + 3)
        img, _ = lc.derivation_images(alg, n, "delta", m)
        for i in range(1, n + 1):
            res.results["[delta%d,x%d] = 0" % (2 * m, i)] = dl.bracket(xi.x(i)).vanishes()
            res.results["[delta%d,y%d] = xi(delta~(y))" % (2 * m, i)] = (
                dl.bracket(xi.y(i)) - xi.lie(img["y%d" % i])).vanishes()
    return res


class DenseXi:
    """Numeric matrices of xi_{a,b} on a finite module (letters, t_12, d, X, Delta0, delta)."""

    def __init__(self, L, a, b, mmax=None):
        if not L.finite:
            raise ValueError("dense realization needs a finite module")
        xi = XiRealization(L, a, b)
        self.module, self.a, self.b, self.n = L, Fraction(a), Fraction(b), L.n
        self.dim = L.dim()
        D = L.dense
        self.letters = {}
        for i in range(1, self.n + 1):
            self.letters["x%d" % i] = D(xi.x(i))
            self.letters["y%d" % i] = D(xi.y(i))
        self.t = {(i, j): D(xi.t(i, j)) for i, j in combinations(range(1, self.n + 1), 2)}
        self.d, self.X, self.Delta0 = D(xi.d()), D(xi.X()), D(xi.Delta0())
        top = max(i for i, v in enumerate(L.dims) if v)
        mmax = top // 2 if mmax is None else mmax
        self.deltas = {m: D(xi.delta(m)) for m in range(1, mmax + 1)}

    def delta(self, m):
        """xi(delta_2m); zero once 2m exceeds the top degree."""
        if m in self.deltas:
            return self.deltas[m]
        return np.zeros((self.dim, self.dim))


def xi_realization(n=2, r=5, a=Fraction(1, 100), b=Fraction(1, 100)):
    """DenseXi on the finite module L(C) of H_n(r/n)."""
    k = Fraction(r, n)
    L = lowest_weight_module(trivial_shape(n), n, k, 2 * r + 2)
    return DenseXi(L, a, b)


# ------------------------------------------------------------ DAHA Hecke relation

@dataclass
class HeckeReport:
    residual: float
    residual_literal: float
    eigenvalues: list
    expected: list
    eig_error: float
    limit_residual: float
    info: dict = field(default_factory=dict)

    @property
    def ok(self):
        return self.residual < 1e-5 and self.eig_error < 1e-5


def _kzb_field(L, a, b, tau, order):
    """z -> K(z) = -b Y_2 + k(z, ad(a X_2))(t_12) as a dense matrix on L."""
    X2 = L.dense(L.x(2)) * float(a)
    Y2 = L.dense(L.y(2)) * float(b)
    S = L.dense(L.s(1, 2))
    n = L.n
    t = (np.eye(S.shape[0]) / n - float(L.k) * S) * float(a * b)
    adp = [t]
    for _ in range(order):
        adp.append(X2 @ adp[-1] - adp[-1] @ X2)
    mp = sf._mp(tau)

    def K(z):
        J = sf.KZBJets(z, mp, order)
        c = J.k.c
        out = -Y2.astype(complex)
        for m in range(min(len(c), len(adp))):
            out = out + c[m] * adp[m]
        return out

    return K, S, t


def half_monodromy(L, a, b, tau=1j, z0=0.15, order=None, rtol=1e-12):
    """T = s_12 . (transport of dF/dz = K(z) F along z0 e^{i pi s}, s in [0,1])."""
    from scipy.integrate import solve_ivp
    nil = 2 * len(L.dims)
    order = order or nil + 1
    K, S, t = _kzb_field(L, a, b, tau, order)
    m = S.shape[0]

    def rhs(s, v):
        z = z0 * cmath.exp(1j * math.pi * s)
        dz = 1j * math.pi * z
        F = v.reshape(m, m)
        return (dz * (K(z) @ F)).reshape(-1)

    sol = solve_ivp(rhs, (0.0, 1.0), np.eye(m, dtype=complex).reshape(-1), method="DOP853",
                    rtol=rtol, atol=rtol * 1e-2)
    if not sol.success:
        raise FloatingPointError(sol.message)
    Tr = sol.y[:, -1].reshape(m, m)
    return S @ Tr, S, t


def daha_hecke_check(n=2, r=3, a=Fraction(2, 5), b=Fraction(2, 5), tau=1j, z0=0.15, L=None):
    """Hecke quadratic (T - q^-1 t)(T + q^-1 t^-1) on the sigma_1 monodromy of L(C).

    The half-turn monodromy behaves like s e^{i pi t_12}, so the relation holds
    with q = e^{-pi i ab/n}, t = e^{-pi i k ab}; the literal parameters
    e^{-2 pi i ab/n}, e^{-2 pi i k ab} are evaluated alongside."""
    k = Fraction(r, n)
    L = L or lowest_weight_module(trivial_shape(n), n, k, 2 * r + 2)
    if not L.finite:
        raise ValueError("L(C) is not finite dimensional at this cut")
    T, S, _ = half_monodromy(L, a, b, tau, z0)
    ab = float(a * b)
    kk = float(k)

    def quad(qv, tv):
        I = np.eye(T.shape[0])
        R = (T - tv / qv * I) @ (T + I / (qv * tv))
        return float(np.abs(R).max() / max(1.0, np.abs(T).max() ** 2))

    q_h, t_h = cmath.exp(-1j * math.pi * ab / n), cmath.exp(-1j * math.pi * kk * ab)
    q_l, t_l = cmath.exp(-2j * math.pi * ab / n), cmath.exp(-2j * math.pi * kk * ab)
    ev = sorted(np.linalg.eigvals(T), key=lambda z: (round(z.real, 8), z.imag))
    exp_vals = [t_h / q_h, -1 / (q_h * t_h)]
    err = max(min(abs(e - x) for x in exp_vals) for e in ev)
    eps = Fraction(1, 10 ** 8)
    T0, S0, _ = half_monodromy(L, eps, eps, tau, z0)
    lim = float(np.abs(T0 @ S0 - np.eye(T0.shape[0])).max())
    return HeckeReport(quad(q_h, t_h), quad(q_l, t_l), list(ev), exp_vals, err, lim,
                       {"dim": L.dim(), "a": float(a), "b": float(b)})


# ------------------------------------------------------------ suite

def cherednik_suite(quick=False):
    """All exact Cherednik checks as {name: bool}."""
    out = {}
    out["sign search returns the frozen convention"] = find_sign_convention() == [DUNKL_SIGNS]
    for n, cut in ((2, 6), (3, 5), (4, 4 if quick else 6)):
        M = dunkl_module(n, Fraction(1, 3), cut, check=False)
        out["H_%d relations, cut %d" % (n, cut)] = check_cherednik_relations(M).ok
    return out
