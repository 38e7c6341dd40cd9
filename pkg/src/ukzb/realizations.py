"""Realizations of tbar_{1,n} x| d for g = sl_N and the reduction to the Cartan.

Exact work uses a rational basis e_a of sl_N (E_ij, i != j, and the simple
coroots) together with its trace-dual basis e^a; t_g = sum_a e_a (x) e^a does
not depend on that choice, so formulas written with an orthonormal basis
translate term by term.  Polynomials on g are in the variables
p_a = x_{e_a}, the linear function <e_a, ->, and d/dp_b is the derivative
along e^b.
"""
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations, product

import numpy as np

from . import lie_core as lc
from . import special_fn as sf

try:
    import flint
except ImportError:  # pragma: no cover
    flint = None


class TruncationError(ValueError):
    """The requested operator leaves the polynomial truncation."""


class SingularWeight(ValueError):
    """lambda lies on a root hyperplane (P(lambda) = 0)."""


class RelationFailure(AssertionError):
    """A realization does not satisfy one of its source relations."""


# ------------------------------------------------------------ Lie data

def _fmat(N):
    return np.full((N, N), Fraction(0), dtype=object)


def _unit_mat(N, i, j):
    m = _fmat(N)
    m[i, j] = Fraction(1)
    return m


def _tr(a, b):
    return sum(a[i, k] * b[k, i] for i in range(a.shape[0]) for k in range(a.shape[0]))


def _mm(a, b):
    return np.dot(a, b)


def _br(a, b):
    return _mm(a, b) - _mm(b, a)


class SimpleLieData:
    """sl_N with the trace pairing.

    basis: E_ij (i != j) in lexicographic order, then H_k = E_kk - E_{k+1,k+1}.
    dual: trace-dual basis.  roots: positive root triples (e, f, h) with
    <e, f> = 1, indexed by (i, j), i < j.
    """

    def __init__(self, N):
        if N < 2:
            raise ValueError("N >= 2")
        self.N = N
        self.basis = []
        self.labels = []
        self.nil = []
        for i in range(N):
            for j in range(N):
                if i != j:
                    self.nil.append(len(self.basis))
                    self.basis.append(_unit_mat(N, i, j))
                    self.labels.append("E%d%d" % (i + 1, j + 1))
        self.cartan = []
        for k in range(N - 1):
            self.cartan.append(len(self.basis))
            self.basis.append(_unit_mat(N, k, k) - _unit_mat(N, k + 1, k + 1))
            self.labels.append("H%d" % (k + 1))
        self.dim = len(self.basis)
        G = np.array([[_tr(a, b) for b in self.basis] for a in self.basis], dtype=object)
        self.gram = G
        Gi = _fraction_inverse(G)
        self.gram_inv = Gi
        self.dual = [sum((Gi[a, b] * self.basis[b] for b in range(self.dim)), _fmat(N))
                     for a in range(self.dim)]
        self.roots = [(i, j) for i in range(N) for j in range(i + 1, N)]
        self.basis_f = [np.array(b, dtype=float) for b in self.basis]
        self.dual_f = [np.array(b, dtype=float) for b in self.dual]
        hc = [self.basis_f[k] for k in self.cartan]
        Gh = np.array([[np.trace(a @ b) for b in hc] for a in hc])
        w, U = np.linalg.eigh(Gh)
        T = U / np.sqrt(w)
        self.h_orth = [sum(T[a, nu] * hc[a] for a in range(len(hc))) for nu in range(len(hc))]

    def coords(self, u):
        """Coefficients of u in the basis e_a: <u, e^a>."""
        return [_tr(u, d) for d in self.dual]

    def triple(self, root, numeric=True):
        i, j = root
        e = np.zeros((self.N, self.N))
        f = np.zeros((self.N, self.N))
        e[i, j] = 1
        f[j, i] = 1
        return e, f, e @ f - f @ e

    def casimir(self, numeric=False):
        """t_g as an N^2 x N^2 matrix on C^N (x) C^N."""
        if numeric:
            return sum(np.kron(a, b) for a, b in zip(self.basis_f, self.dual_f))
        return sum((_okron(a, b) for a, b in zip(self.basis, self.dual)),
                   np.full((self.N ** 2, self.N ** 2), Fraction(0), dtype=object))

    def casimir_split(self):
        """(t_h, t_n) as numeric N^2 x N^2 matrices."""
        th = sum(np.kron(self.basis_f[a], self.dual_f[a]) for a in self.cartan)
        tn = sum(np.kron(self.basis_f[a], self.dual_f[a]) for a in self.nil)
        return th, tn

    def lam_vee(self, c):
        """lambda^vee = sum_nu c_nu H_nu (c real or complex)."""
        return sum(c[k] * self.basis_f[a] for k, a in enumerate(self.cartan))

    def root_values(self, c):
        L = np.diag(self.lam_vee(c))
        return {(i, j): L[i] - L[j] for (i, j) in self.roots}

    def P(self, c):
        """det((ad lambda^vee)|_n) = prod over all roots of alpha(lambda^vee)."""
        return np.linalg.det(self.ad_nil(c))

    def ad_nil(self, c):
        lv = self.lam_vee(c)
        n = len(self.nil)
        M = np.zeros((n, n), dtype=complex)
        for col, a in enumerate(self.nil):
            img = lv @ self.basis_f[a] - self.basis_f[a] @ lv
            for row, b in enumerate(self.nil):
                M[row, col] = np.trace(img @ self.dual_f[b])
        return M


def _okron(a, b):
    n1, n2 = a.shape[0], b.shape[0]
    out = np.full((n1 * n2, n1 * n2), Fraction(0), dtype=object)
    for i in range(n1):
        for j in range(n1):
            if a[i, j] != 0:
                out[i * n2:(i + 1) * n2, j * n2:(j + 1) * n2] = a[i, j] * b
    return out


def _fraction_inverse(G):
    n = G.shape[0]
    aug = [[Fraction(G[i, j]) for j in range(n)] + [Fraction(int(i == j)) for j in range(n)]
           for i in range(n)]
    R, piv = lc_rref(aug, 2 * n)
    if piv[:n] != list(range(n)):
        raise ValueError("singular pairing")
    return np.array([[R[i][n + j] for j in range(n)] for i in range(n)], dtype=object)


def lc_rref(rows, ncols):
    from ._exact import rref
    R, piv = rref(rows, ncols)
    return [list(r) for r in R], piv


def factor_op(N, n, i, M):
    """M acting on tensor factor i (1-based) of (C^N)^{(x)n}."""
    exact = M.dtype == object
    one = Fraction(1) if exact else 1.0
    out = None
    for k in range(1, n + 1):
        f = M if k == i else (np.array([[one if a == b else 0 * one for b in range(N)]
                                       for a in range(N)], dtype=object if exact else float))
        out = f if out is None else (_okron(out, f) if exact else np.kron(out, f))
    return out


# --------------------------------------------------- exact operator algebra

def _q(v):
    v = Fraction(int(v)) if isinstance(v, (int, np.integer)) else Fraction(v)
    return flint.fmpq(int(v.numerator), int(v.denominator))


class Op:
    """Exact operator on the truncated module plus a bound on how far any
    intermediate product raises the polynomial degree."""

    __slots__ = ("M", "up")

    def __init__(self, M, up):
        self.M = M
        self.up = up

    def __add__(self, o):
        return Op(self.M + o.M, max(self.up, o.up))

    def __sub__(self, o):
        return Op(self.M - o.M, max(self.up, o.up))

    def __neg__(self):
        return Op(-self.M, self.up)

    def __mul__(self, o):
        if isinstance(o, Op):
            return Op(self.M * o.M, self.up + o.up)
        return Op(self.M * _q(o), self.up)

    __rmul__ = __mul__

    def bracket(self, o):
        return self * o - o * self


class PolynomialModule:
    """S(g)_{<= cut} (x) (C^N)^{(x)n} with its g-invariant subspace."""

    def __init__(self, N, n, cut):
        if flint is None:  # pragma: no cover
            raise ImportError("python-flint is required for exact realizations")
        self.g = SimpleLieData(N)
        self.N, self.n, self.cut = N, n, cut
        m = self.g.dim
        self.monos = [e for d in range(cut + 1) for e in _exponents(m, d)]
        self.mindex = {e: k for k, e in enumerate(self.monos)}
        self.vdim = N ** n
        self.dim = len(self.monos) * self.vdim
        self._ops = {}
        self._invariants = None

    # sparse building blocks -------------------------------------------------
    def _poly_mult(self, a):
        out = {}
        for k, e in enumerate(self.monos):
            if sum(e) < self.cut:
                e2 = e[:a] + (e[a] + 1,) + e[a + 1:]
                out[(self.mindex[e2], k)] = Fraction(1)
        return out

    def _poly_dpart(self, a):
        out = {}
        for k, e in enumerate(self.monos):
            if e[a]:
                e2 = e[:a] + (e[a] - 1,) + e[a + 1:]
                out[(self.mindex[e2], k)] = Fraction(e[a])
        return out

    def _to_op(self, terms, up):
        """terms: list of (poly sparse dict, V matrix or None)."""
        acc = {}
        V = self.vdim
        for P, W in terms:
            if W is None:
                for (r, c), v in P.items():
                    for s in range(V):
                        key = (r * V + s, c * V + s)
                        acc[key] = acc.get(key, 0) + v
                continue
            nz = [(s, t, W[s, t]) for s in range(V) for t in range(V) if W[s, t] != 0]
            for (r, c), v in P.items():
                for s, t, w in nz:
                    key = (r * V + s, c * V + t)
                    acc[key] = acc.get(key, 0) + v * w
        M = flint.fmpq_mat(self.dim, self.dim)
        for (r, c), v in acc.items():
            if v != 0:
                M[r, c] = _q(v)
        return Op(M, up)

    def _compose(self, P, Q):
        out = {}
        for (r, k), v in P.items():
            for (k2, c), w in Q.items():
                if k == k2:
                    out[(r, c)] = out.get((r, c), 0) + v * w
        return out

    def _identity_poly(self):
        return {(k, k): Fraction(1) for k in range(len(self.monos))}

    def vop(self, i, M):
        return factor_op(self.N, self.n, i, M)

    # generators ---------------------------------------------------------------
    def x_bar(self, i):
        key = ("x", i)
        if key not in self._ops:
            terms = [(self._poly_mult(a), self.vop(i, self.g.dual[a])) for a in range(self.g.dim)]
            self._ops[key] = self._to_op(terms, 1)
        return self._ops[key]

    def d_along(self, u):
        """Sparse derivative along u = sum_a u_a e_a: sum_{a,c} u_a <e_a, e_c> d/dp_c."""
        out = {}
        g = self.g
        for c in range(g.dim):
            coef = sum(u[a] * g.gram[a, c] for a in range(g.dim))
            if coef != 0:
                for key, v in self._poly_dpart(c).items():
                    out[key] = out.get(key, 0) + coef * v
        return out

    def _unit(self, a):
        u = [Fraction(0)] * self.g.dim
        u[a] = Fraction(1)
        return u

    def y_bar(self, i):
        key = ("y", i)
        if key not in self._ops:
            terms = []
            for a in range(self.g.dim):
                P = {k: -v for k, v in self.d_along(self._unit(a)).items()}
                terms.append((P, self.vop(i, self.g.dual[a])))
            self._ops[key] = self._to_op(terms, 0)
        return self._ops[key]

    def t_bar(self, i, j):
        key = ("t", min(i, j), max(i, j))
        if key not in self._ops:
            W = None
            for a in range(self.g.dim):
                term = np.dot(self.vop(i, self.g.basis[a]), self.vop(j, self.g.dual[a]))
                W = term if W is None else W + term
            self._ops[key] = self._to_op([(self._identity_poly(), W)], 0)
        return self._ops[key]

    def Delta0(self):
        if "Delta0" not in self._ops:
            acc = {}
            for a in range(self.g.dim):
                P = self._compose(self.d_along(self._unit(a)), self._poly_dpart(a))
                for k, v in P.items():
                    acc[k] = acc.get(k, 0) - Fraction(1, 2) * v
            self._ops["Delta0"] = self._to_op([(acc, None)], 0)
        return self._ops["Delta0"]

    def X(self):
        if "X" not in self._ops:
            acc = {}
            g = self.g
            for a in range(g.dim):
                for c in range(g.dim):
                    if g.gram_inv[a, c] == 0:
                        continue
                    P = self._compose(self._poly_mult(a), self._poly_mult(c))
                    for k, v in P.items():
                        acc[k] = acc.get(k, 0) + Fraction(1, 2) * g.gram_inv[a, c] * v
            self._ops["X"] = self._to_op([(acc, None)], 2)
        return self._ops["X"]

    def d(self):
        if "d" not in self._ops:
            acc = {}
            for a in range(self.g.dim):
                xa, da = self._poly_mult(a), self._poly_dpart(a)
                for P in (self._compose(xa, da), self._compose(da, xa)):
                    for k, v in P.items():
                        acc[k] = acc.get(k, 0) + Fraction(1, 2) * v
            self._ops["d"] = self._to_op([(acc, None)], 1)
        return self._ops["d"]

    def delta(self, m):
        """1/2 sum x_{a1}..x_{a2m} (x) sum_i (ad e^{a1} .. ad e^{a2m}(e_a) e^a)^{(i)}."""
        key = ("delta", m)
        if key in self._ops:
            return self._ops[key]
        g = self.g
        if 2 * m > self.cut:
            raise TruncationError("delta_%d raises the degree past the cutoff" % (2 * m))
        grouped = {}
        for tup in product(range(g.dim), repeat=2 * m):
            W = _fmat(self.N)
            for a in range(g.dim):
                u = g.basis[a]
                for b in reversed(tup):
                    u = _br(g.dual[b], u)
                W = W + _mm(u, g.dual[a])
            if all(v == 0 for v in W.reshape(-1)):
                continue
            e = [0] * g.dim
            for b in tup:
                e[b] += 1
            e = tuple(e)
            grouped[e] = W if e not in grouped else grouped[e] + W
        terms = []
        for e, W in grouped.items():
            P = self._identity_poly()
            for a, k in enumerate(e):
                for _ in range(k):
                    P = self._compose(self._poly_mult(a), P)
            full = sum((self.vop(i, W) for i in range(1, self.n + 1)),
                       np.full((self.vdim, self.vdim), Fraction(0), dtype=object))
            terms.append((P, full * Fraction(1, 2)))
        self._ops[key] = self._to_op(terms, 2 * m)
        return self._ops[key]

    def Y_diag(self, a):
        """Diagonal action of e_a: coadjoint vector field plus sum_i e_a^{(i)}."""
        key = ("Y", a)
        if key not in self._ops:
            g = self.g
            acc = {}
            for b in range(g.dim):
                br = _br(g.basis[a], g.basis[b])
                cc = g.coords(br)  # [e_a, e_b] = sum_c cc[c] e_c
                for c in range(g.dim):
                    # x_{[e_a,e_b]} = sum_c <[e_a,e_b], e^c> p_c, then d/dp_b
                    coef = cc[c]
                    if coef == 0:
                        continue
                    P = self._compose(self._poly_mult(c), self._poly_dpart(b))
                    for k, v in P.items():
                        acc[k] = acc.get(k, 0) + coef * v
            self._ops[key] = self._to_op([(acc, None), (self._identity_poly(), self._v_diag(a))], 0)
        return self._ops[key]

    def _v_diag(self, a):
        """Action of e_a on the coefficient space (C^N)^{(x)n}."""
        return sum((self.vop(i, self.g.basis[a]) for i in range(1, self.n + 1)),
                   np.full((self.vdim, self.vdim), Fraction(0), dtype=object))

    # invariants ---------------------------------------------------------------
    def invariants(self):
        """{degree: fmpq_mat whose columns span the g-invariants of that degree}."""
        if self._invariants is not None:
            return self._invariants
        out = {}
        Ys = [self.Y_diag(a).M for a in range(self.g.dim)]
        V = self.vdim
        for d in range(self.cut + 1):
            cols = [k * V + s for k, e in enumerate(self.monos) if sum(e) == d for s in range(V)]
            S = _selector(self.dim, cols)
            blocks = [(S.transpose() * Y * S) for Y in Ys]
            stacked = flint.fmpq_mat(len(cols) * len(blocks), len(cols))
            for bi, B in enumerate(blocks):
                for r in range(len(cols)):
                    for c in range(len(cols)):
                        stacked[bi * len(cols) + r, c] = B[r, c]
            num, _ = stacked.numer_denom()
            X, nullity = num.nullspace()
            K = flint.fmpq_mat(len(cols), nullity)
            for r in range(len(cols)):
                for c in range(nullity):
                    K[r, c] = X[r, c]
            out[d] = S * K
        self._invariants = out
        return out

    def invariant_dims(self):
        return {d: B.ncols() for d, B in self.invariants().items()}

    def test_vectors(self, up):
        """Invariant vectors whose image under an operator with raise bound up
        stays inside the truncation."""
        top = self.cut - up
        if top < 0:
            raise TruncationError("cutoff %d too small for raise %d" % (self.cut, up))
        inv = self.invariants()
        mats = [inv[d] for d in range(top + 1) if inv[d].ncols()]
        if not mats:
            raise TruncationError("no invariants below degree %d" % top)
        ncol = sum(B.ncols() for B in mats)
        out = flint.fmpq_mat(self.dim, ncol)
        c0 = 0
        for B in mats:
            for r in range(self.dim):
                for c in range(B.ncols()):
                    if B[r, c] != 0:
                        out[r, c0 + c] = B[r, c]
            c0 += B.ncols()
        return out

    def vanishes(self, op):
        """op is zero on every admissible invariant vector."""
        T = self.test_vectors(op.up)
        R = op.M * T
        return all(R[r, c] == 0 for r in range(R.nrows()) for c in range(R.ncols()))

    def preserves_invariants(self, op):
        T = self.test_vectors(op.up)
        img = op.M * T
        return all(self._is_zero(self.Y_diag(a).M * img) for a in range(self.g.dim))

    @staticmethod
    def _is_zero(M):
        return all(M[r, c] == 0 for r in range(M.nrows()) for c in range(M.ncols()))

    # tbar elements --------------------------------------------------------------
    def letter_op(self, name):
        kind, i = name[0], int(name[1:])
        return self.x_bar(i) if kind == "x" else self.y_bar(i)

    def rho_wordpoly(self, p, letters):
        out = None
        cache = {}
        for w, c in p.items():
            op = self._word(w, letters, cache)
            term = op * c
            out = term if out is None else out + term
        return out

    def _word(self, w, letters, cache):
        if w in cache:
            return cache[w]
        if len(w) == 1:
            op = self.letter_op(letters[w[0]])
        else:
            op = self._word(w[:-1], letters, cache) * self.letter_op(letters[w[-1]])
        cache[w] = op
        return op

    def rho_lie(self, e):
        """Image of an exact element of tbar_{1,n} (TruncatedLieAlgebra) as an Op."""
        alg = e.alg
        if alg.pres.r != 2 * (self.n - 1):
            raise ValueError("element does not live in tbar_{1,%d}" % self.n)
        p = {}
        for d in range(1, alg.D + 1):
            part = e.part(d)
            if not any(v != 0 for v in part):
                continue
            W = alg.word_expansion(d)
            vec = W.astype(object).dot(part)
            for idx, v in enumerate(vec):
                if v != 0:
                    p[_decode(idx, alg.r, d)] = v
        if not p:
            return Op(flint.fmpq_mat(self.dim, self.dim), 0)
        return self.rho_wordpoly(p, alg.pres.letters)


def _decode(idx, r, d):
    w = []
    for _ in range(d):
        w.append(idx % r)
        idx //= r
    return tuple(reversed(w))


def _selector(n, cols):
    S = flint.fmpq_mat(n, len(cols))
    for k, c in enumerate(cols):
        S[c, k] = 1
    return S


def _exponents(m, d):
    if m == 1:
        yield (d,)
        return
    for k in range(d, -1, -1):
        for rest in _exponents(m - 1, d - k):
            yield (k,) + rest


# --------------------------------------------------------- relation suites

@dataclass
class RelationReport:
    name: str
    results: dict = field(default_factory=dict)

    @property
    def ok(self):
        return all(self.results.values())

    def failures(self):
        return [k for k, v in self.results.items() if not v]


@lru_cache(maxsize=None)
def _tbar(n, D):
    return lc.TruncatedLieAlgebra(lc.tbar1n_presentation(n), D)


def rho_g(n, N, elem, cut):
    """Image of elem (an exact tbar_{1,n} element) on the truncated module."""
    mod = PolynomialModule(N, n, cut)
    return mod, mod.rho_lie(elem)


def rho_d(n, N, gen, cut, m=None):
    """Image of a d generator (Delta0, X, d or delta with index m) on the truncated module."""
    mod = PolynomialModule(N, n, cut)
    if gen == "delta":
        if m is None or m < 1:
            raise ValueError("delta needs an index m >= 1")
        return mod, mod.delta(m)
    if gen not in ("Delta0", "X", "d"):
        raise ValueError("unknown d generator %r" % (gen,))
    return mod, getattr(mod, gen)()


def check_rho_g(N=2, n=2, cut=3, module=None):
    """Presentation relations of tbar_{1,n} under rho_g, on invariants."""
    M = module or PolynomialModule(N, n, cut)
    res = RelationReport("rho_g N=%d n=%d cut=%d" % (N, n, M.cut))
    x = {i: M.x_bar(i) for i in range(1, n + 1)}
    y = {i: M.y_bar(i) for i in range(1, n + 1)}
    sx = x[1]
    sy = y[1]
    for i in range(2, n + 1):
        sx = sx + x[i]
        sy = sy + y[i]
    res.results["sum x = 0"] = M.vanishes(sx)
    res.results["sum y = 0"] = M.vanishes(sy)
    for i, j in combinations(range(1, n + 1), 2):
        res.results["[x%d,x%d] = 0" % (i, j)] = M.vanishes(x[i].bracket(x[j]))
        res.results["[y%d,y%d] = 0" % (i, j)] = M.vanishes(y[i].bracket(y[j]))
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            if i != j:
                res.results["[x%d,y%d] = t%d%d" % (i, j, i, j)] = M.vanishes(
                    x[i].bracket(y[j]) - M.t_bar(i, j))
    for i in range(1, n + 1):
        for j, k in combinations([a for a in range(1, n + 1) if a != i], 2):
            t = M.t_bar(j, k)
            res.results["[x%d,t%d%d] = 0" % (i, j, k)] = M.vanishes(x[i].bracket(t))
            res.results["[y%d,t%d%d] = 0" % (i, j, k)] = M.vanishes(y[i].bracket(t))
    pres = lc.tbar1n_presentation(n)
    for k, rel in enumerate(pres.relators):
        res.results["relator %d" % k] = M.vanishes(M.rho_wordpoly(rel, pres.letters))
    for i in range(1, n + 1):
        res.results["x%d preserves invariants" % i] = M.preserves_invariants(x[i])
        res.results["y%d preserves invariants" % i] = M.preserves_invariants(y[i])
    return res


def check_rho_d(N=2, n=2, cut=5, mmax=1, module=None):
    """Relations of d and of the semidirect product under rho_d, on invariants."""
    M = module or PolynomialModule(N, n, cut)
    res = RelationReport("rho_d N=%d n=%d cut=%d" % (N, n, M.cut))
    D0, X, d = M.Delta0(), M.X(), M.d()
    res.results["[d,X] = 2X"] = M.vanishes(d.bracket(X) - X * 2)
    res.results["[d,Delta0] = -2 Delta0"] = M.vanishes(d.bracket(D0) + D0 * 2)
    res.results["[X,Delta0] = d"] = M.vanishes(X.bracket(D0) - d)
    for m in range(1, mmax + 1):
        dl = M.delta(m)
        res.results["[delta%d,X] = 0" % (2 * m)] = M.vanishes(dl.bracket(X))
        res.results["[d,delta%d] = %d delta" % (2 * m, 2 * m)] = M.vanishes(d.bracket(dl) - dl * (2 * m))
        acc = dl
        for _ in range(2 * m + 1):
            acc = D0.bracket(acc)
        res.results["ad(Delta0)^%d delta%d = 0" % (2 * m + 1, 2 * m)] = M.vanishes(acc)
    # mixed relations: [rho(xi), rho(a)] = rho(xi~(a))
    for i in range(1, n + 1):
        x, y = M.x_bar(i), M.y_bar(i)
        res.results["[d,x%d] = x" % i] = M.vanishes(d.bracket(x) - x)
        res.results["[d,y%d] = -y" % i] = M.vanishes(d.bracket(y) + y)
        res.results["[X,x%d] = 0" % i] = M.vanishes(X.bracket(x))
        res.results["[X,y%d] = x" % i] = M.vanishes(X.bracket(y) - x)
        res.results["[Delta0,x%d] = y" % i] = M.vanishes(D0.bracket(x) - y)
        res.results["[Delta0,y%d] = 0" % i] = M.vanishes(D0.bracket(y))
    for m in range(1, mmax + 1):
        dl = M.delta(m)
        alg = _tbar(n, 2 * m + 3)
        img, _ = lc.derivation_images(alg, n, "delta", m)
        for i in range(1, n + 1):
            res.results["[delta%d,x%d] = 0" % (2 * m, i)] = M.vanishes(dl.bracket(M.x_bar(i)))
            rhs = M.rho_lie(img["y%d" % i])
            res.results["[delta%d,y%d] = rho(delta~(y))" % (2 * m, i)] = M.vanishes(
                dl.bracket(M.y_bar(i)) - rhs)
        res.results["delta%d preserves invariants" % (2 * m)] = M.preserves_invariants(dl)
    return res


# ----------------------------------------------------- dynamical r-matrix

@dataclass
class DynamicalRMatrix:
    """r(lambda) = sum coef a (x) b on n (x) n, psi likewise, at one lambda."""
    N: int
    lam: tuple
    r_terms: list
    psi_terms: list

    def tensor(self, which="r"):
        terms = self.r_terms if which == "r" else self.psi_terms
        return sum(c * np.kron(a, b) for c, a, b in terms)

    def antisymmetry_residual(self):
        T = self.tensor()
        N = self.N
        flip = T.reshape(N, N, N, N).transpose(1, 0, 3, 2).reshape(N * N, N * N)
        return float(np.abs(T + flip).max())


def dynamical_r(lam, N, data=None):
    """r and psi from the definition: (id (x) (ad lambda^vee)|_n^{-k})(t_n)."""
    g = data or SimpleLieData(N)
    A = g.ad_nil(lam)
    if abs(np.linalg.det(A)) < 1e-13:
        raise SingularWeight("lambda is on a root hyperplane")
    Ai = np.linalg.inv(A)
    Ai2 = Ai @ Ai
    r_terms, psi_terms = [], []
    for col, a in enumerate(g.nil):
        # t_n = sum_a e_a (x) e^a; invert ad on the second factor
        da = np.array([np.trace(g.dual_f[a] @ g.dual_f[b]) for b in g.nil])
        coeffs = np.zeros(len(g.nil), dtype=complex)
        # express e^a in the basis e_b of n: e^a = sum_b <e^a, e^b> e_b
        coeffs[:] = da
        for Minv, out in ((Ai, r_terms), (Ai2, psi_terms)):
            img = Minv @ coeffs
            second = sum(img[k] * g.basis_f[b] for k, b in enumerate(g.nil))
            out.append((1.0, g.basis_f[a].astype(complex), second))
    return DynamicalRMatrix(N, tuple(lam), r_terms, psi_terms)


def r_root_form(lam, N, data=None):
    """sum_{alpha > 0} -(e (x) f - f (x) e)/alpha(lambda^vee)."""
    g = data or SimpleLieData(N)
    vals = g.root_values(lam)
    T = 0
    for root in g.roots:
        e, f, _ = g.triple(root)
        T = T - (np.kron(e, f) - np.kron(f, e)) / vals[root]
    return T


def _r_root_terms(g, lam):
    vals = g.root_values(lam)
    out = []
    for root in g.roots:
        e, f, _ = g.triple(root)
        out.append((-1.0 / vals[root], e, f, root))
        out.append((1.0 / vals[root], f, e, root))
    return out


def _t3(a, b, c):
    return np.einsum("ij,kl,mn->ikmjln", a, b, c)


def cdybe_residual(lam, N, data=None):
    """|CYB(r) - Alt(dr)| relative to |CYB(r)|, dr from d(1/alpha) = -alpha/alpha^2."""
    g = data or SimpleLieData(N)
    terms = _r_root_terms(g, lam)
    vals = g.root_values(lam)
    cyb = 0
    for l1, a1, b1, _ in terms:
        for l2, a2, b2, _ in terms:
            cyb = cyb + l1 * l2 * (_t3(a1 @ a2 - a2 @ a1, b1, b2)
                                   + _t3(a1, b1 @ a2 - a2 @ b1, b2)
                                   + _t3(a1, a2, b1 @ b2 - b2 @ b1))
    # d ell = sum_nu h^nu (x) d_{h_nu} ell; for ell = s/alpha(lambda^vee):
    # d_{h} ell = -s alpha(h)/alpha^2, so d ell = -s h_alpha / alpha^2
    # with h_alpha the trace-dual of alpha (E_ii - E_jj).
    dr = 0
    for ell, a, b, root in terms:
        i, j = root
        h = np.zeros((g.N, g.N))
        h[i, i], h[j, j] = 1, -1
        dr = dr + (-ell / vals[root]) * _t3(a, b, h)
    alt = dr + _cyc(dr, 1) + _cyc(dr, 2)
    res = cyb - alt
    return float(np.abs(res).max() / max(1.0, np.abs(cyb).max()))


def _cyc(T, k):
    """X^{2,3,1} (k=1) and X^{3,1,2} (k=2): factor s of X goes to slot sigma(s)."""
    # T has axes (i1, i2, i3, j1, j2, j3); X^{2,3,1} puts factor 1 in slot 2, etc.
    perm = {1: (2, 0, 1), 2: (1, 2, 0)}[k]
    axes = list(perm) + [p + 3 for p in perm]
    return T.transpose(axes)


def mu(T, N):
    """mu(a (x) b) = [a, b] on a tensor given as an N^2 x N^2 matrix."""
    R = T.reshape(N, N, N, N)
    out = np.zeros((N, N), dtype=complex)
    for i in range(N):
        for j in range(N):
            for k in range(N):
                for l in range(N):
                    c = R[i, k, j, l]
                    if c != 0:
                        a = np.zeros((N, N))
                        b = np.zeros((N, N))
                        a[i, j] = 1
                        b[k, l] = 1
                        out += c * (a @ b - b @ a)
    return out


def _complex_step(f, lam, direction, h=1e-30):
    lam = np.asarray(lam, dtype=complex) + 1j * h * np.asarray(direction, dtype=float)
    return np.imag(f(lam)) / h


def lemma_logP_residual(lam, N, data=None):
    """max_nu |d_nu log P + <h_nu, mu(r)>| relative, d_nu along the coroot H_nu."""
    g = data or SimpleLieData(N)
    lam = np.asarray(lam, dtype=float)
    r = dynamical_r(lam, N, g).tensor()
    m = mu(r, N)
    P0 = g.P(lam).real
    worst = 0.0
    for nu, a in enumerate(g.cartan):
        e = np.zeros(len(g.cartan))
        e[nu] = 1
        dP = _complex_step(lambda c: g.P(c), lam, e)
        lhs = dP / P0
        rhs = np.trace(g.basis_f[a] @ m)
        worst = max(worst, abs(lhs + rhs) / max(1.0, abs(lhs)))
    return worst


def lemma_laplace_residual(lam, N, data=None):
    """sum_nu d_nu <h^nu, mu(r)/2> - <h_nu, mu(r)/2><h^nu, mu(r)/2>, relative."""
    g = data or SimpleLieData(N)
    lam = np.asarray(lam, dtype=float)
    hc = [g.basis_f[a] for a in g.cartan]
    Gh = np.array([[np.trace(a @ b) for b in hc] for a in hc])
    Ghi = np.linalg.inv(Gh)
    dual = [sum(Ghi[nu, k] * hc[k] for k in range(len(hc))) for nu in range(len(hc))]

    def half_mu(c):
        return 0.5 * mu(dynamical_r(c, N, g).tensor(), N)

    m0 = half_mu(lam.astype(complex))
    div = 0.0
    sq = 0.0
    for nu in range(len(hc)):
        e = np.zeros(len(hc))
        e[nu] = 1
        comp = lambda c, nu=nu: np.trace(dual[nu] @ half_mu(c))
        div += _complex_step(comp, lam, e)
        sq += (np.trace(hc[nu] @ m0) * np.trace(dual[nu] @ m0)).real
    return abs(div - sq) / max(1.0, abs(sq))


def simplification_residuals(lam, N, data=None):
    """(a) [lambda^vee, h_nu] = 0 and (b) the n-part of
    [(ad lambda^vee)^{-1}(e_beta), e_beta] vanishes, summed over beta."""
    g = data or SimpleLieData(N)
    lv = g.lam_vee(lam)
    a = max(np.abs(lv @ g.basis_f[k] - g.basis_f[k] @ lv).max() for k in g.cartan)
    A = g.ad_nil(lam)
    Ai = np.linalg.inv(A)
    tot = np.zeros((g.N, g.N), dtype=complex)
    for col, b in enumerate(g.nil):
        coeffs = np.array([np.trace(g.basis_f[b] @ g.dual_f[c]) for c in g.nil])
        inv = sum(v * g.basis_f[c] for v, c in zip(Ai @ coeffs, g.nil))
        tot += inv @ g.dual_f[b] - g.dual_f[b] @ inv
    b = np.abs(tot - np.diag(np.diag(tot))).max()
    return float(a), float(b)


# ------------------------------------------------ exact reduced realization

class ReducedRealization:
    """rho_{g,h} on h-invariant functions of lambda valued in (C^N)^{(x)n}.

    lambda^vee = sum_nu c_nu H_nu; derivatives are d/dc_nu (derivative along
    H_nu).  Identities are checked symbolically in c and then evaluated
    exactly at rational points.
    """

    def __init__(self, N, n):
        import sympy
        self.sp = sympy
        self.g = SimpleLieData(N)
        self.N, self.n = N, n
        self.c = sympy.symbols("c1:%d" % N)
        self.zero_weight = [idx for idx in product(range(N), repeat=n)
                            if all(idx.count(k) == idx.count(0) for k in range(N))]
        if not self.zero_weight:
            raise ValueError("weight-zero subspace is empty")
        self.m = len(self.zero_weight)
        self.windex = {w: k for k, w in enumerate(self.zero_weight)}
        self._lv = sum((ci * self._sm(self.g.basis[a]) for ci, a in zip(self.c, self.g.cartan)),
                       sympy.zeros(N, N))
        hc = [self.g.basis[a] for a in self.g.cartan]
        Gh = sympy.Matrix([[_tr(a, b) for b in hc] for a in hc])
        Ghi = Gh.inv()
        self.h_dual = [sum((Ghi[nu, k] * self._sm(hc[k]) for k in range(len(hc))), sympy.zeros(N, N))
                       for nu in range(len(hc))]
        self.r_terms = self._r_terms()

    def _sm(self, M):
        return self.sp.Matrix(M.tolist())

    def _r_terms(self):
        """r = sum_a e_a (x) (ad lambda^vee)|_n^{-1}(e^a), inverted on the basis of n."""
        sp = self.sp
        g = self.g
        nb = [self._sm(g.basis[a]) for a in g.nil]
        nd = [self._sm(g.dual[a]) for a in g.nil]
        k = len(nb)
        A = sp.zeros(k, k)
        for col in range(k):
            img = self._lv * nb[col] - nb[col] * self._lv
            for row in range(k):
                A[row, col] = (img * nd[row]).trace()
        Ai = A.inv()
        out = []
        for col in range(k):
            v = sp.Matrix([(nd[col] * nd[row]).trace() for row in range(k)])
            w = Ai * v
            second = sum((sp.simplify(w[row]) * nb[row] for row in range(k)), sp.zeros(self.N, self.N))
            out.append((nb[col], second))
        return out

    def _pair_op(self, i, A, j, B):
        """A^{(i)} B^{(j)} restricted to weight zero (i may equal j)."""
        sp = self.sp
        M = sp.zeros(self.m, self.m)
        for col, w in enumerate(self.zero_weight):
            # apply B on factor j then A on factor i
            for bj in range(self.N):
                vb = B[bj, w[j - 1]]
                if vb == 0:
                    continue
                w1 = list(w)
                w1[j - 1] = bj
                for ai in range(self.N):
                    va = A[ai, w1[i - 1]]
                    if va == 0:
                        continue
                    w2 = list(w1)
                    w2[i - 1] = ai
                    w2 = tuple(w2)
                    if w2 not in self.windex:
                        raise ValueError("operator leaves the weight-zero subspace")
                    M[self.windex[w2], col] += va * vb
        return M

    def _single_op(self, i, A):
        return self._pair_op(i, A, i, self.sp.eye(self.N))

    def x_bar(self, i):
        M = self._single_op(i, self._lv)
        return lambda F: M * F

    def t_bar(self, i, j):
        g = self.g
        M = sum((self._pair_op(i, self._sm(g.basis[a]), j, self._sm(g.dual[a])) for a in range(g.dim)),
                self.sp.zeros(self.m, self.m))
        return lambda F: M * F

    def y_bar(self, i):
        sp = self.sp
        H = [self._single_op(i, hd) for hd in self.h_dual]
        R = sp.zeros(self.m, self.m)
        for j in range(1, self.n + 1):
            for a, b in self.r_terms:
                R += self._pair_op(i, a, j, b)

        def apply(F):
            out = R * F
            for nu, c in enumerate(self.c):
                out -= H[nu] * F.diff(c)
            return out
        return apply

    def sample_points(self, count, seed=0):
        rng = np.random.default_rng(seed)
        pts = []
        while len(pts) < count:
            vals = [Fraction(int(rng.integers(-40, 41)), int(rng.integers(1, 12))) for _ in self.c]
            lam = [float(v) for v in vals]
            if abs(self.g.P(lam)) > 1e-9:
                pts.append(vals)
        return pts

    def _vanish(self, expr_vec, points):
        sp = self.sp
        for p in points:
            sub = {c: sp.Rational(v.numerator, v.denominator) for c, v in zip(self.c, p)}
            vals = expr_vec.subs(sub)
            if any(sp.nsimplify(v) != 0 for v in vals):
                return False
        return True

    def test_functions(self):
        sp = self.sp
        fs = [sp.Integer(1)] + list(self.c)
        fs += [a * b for a, b in combinations(self.c, 2)] + [a ** 2 for a in self.c]
        return fs

    def check_relations(self, points=5, seed=0):
        sp = self.sp
        pts = self.sample_points(points, seed)
        res = RelationReport("rho_gh N=%d n=%d" % (self.N, self.n))
        n = self.n
        X = {i: self.x_bar(i) for i in range(1, n + 1)}
        Y = {i: self.y_bar(i) for i in range(1, n + 1)}
        vecs = []
        for f in self.test_functions():
            for k in range(self.m):
                v = sp.zeros(self.m, 1)
                v[k] = f
                vecs.append(v)

        def check(name, fn):
            res.results[name] = all(self._vanish(fn(v), pts) for v in vecs)

        check("sum x = 0", lambda v: sum((X[i](v) for i in range(1, n + 1)), sp.zeros(self.m, 1)))
        check("sum y = 0", lambda v: sum((Y[i](v) for i in range(1, n + 1)), sp.zeros(self.m, 1)))
        for i, j in combinations(range(1, n + 1), 2):
            check("[x%d,x%d] = 0" % (i, j), lambda v, i=i, j=j: X[i](X[j](v)) - X[j](X[i](v)))
            check("[y%d,y%d] = 0" % (i, j), lambda v, i=i, j=j: Y[i](Y[j](v)) - Y[j](Y[i](v)))
        for i in range(1, n + 1):
            for j in range(1, n + 1):
                if i != j:
                    T = self.t_bar(i, j)
                    check("[x%d,y%d] = t%d%d" % (i, j, i, j),
                          lambda v, i=i, j=j, T=T: X[i](Y[j](v)) - Y[j](X[i](v)) - T(v))
        for i in range(1, n + 1):
            for j, k in combinations([a for a in range(1, n + 1) if a != i], 2):
                T = self.t_bar(j, k)
                check("[x%d,t%d%d] = 0" % (i, j, k), lambda v, i=i, T=T: X[i](T(v)) - T(X[i](v)))
                check("[y%d,t%d%d] = 0" % (i, j, k), lambda v, i=i, T=T: Y[i](T(v)) - T(Y[i](v)))
        return res

    # restriction from the rho_g module ----------------------------------------
    def restrict(self, module, vec_col):
        """Restriction of an element of S(g) (x) V to lambda^vee in h, projected
        to weight zero; returns (weight-zero vector, off-weight remainder)."""
        sp = self.sp
        g = self.g
        pvals = [(self._sm(g.basis[a]) * self._lv).trace() for a in range(g.dim)]
        out = sp.zeros(self.m, 1)
        off = sp.Integer(0)
        V = module.vdim
        for k, e in enumerate(module.monos):
            mono = None
            for s in range(V):
                v = vec_col[k * V + s]
                if v == 0:
                    continue
                if mono is None:
                    mono = sp.Integer(1)
                    for a, p in enumerate(e):
                        if p:
                            mono *= pvals[a] ** p
                idx = _decode(s, self.N, self.n)
                val = sp.Rational(int(v.p), int(v.q)) * mono
                if idx in self.windex:
                    out[self.windex[idx]] += val
                else:
                    off += val ** 2
        return sp.expand(out), sp.expand(off)

    def check_restriction(self, cut=2, points=5, seed=0):
        """Res(rho_g(a) Phi) = rho_gh(a) Res(Phi) for a in {x_i, y_i}."""
        sp = self.sp
        module = PolynomialModule(self.N, self.n, cut + 1)
        pts = self.sample_points(points, seed)
        res = RelationReport("restriction N=%d n=%d cut=%d" % (self.N, self.n, cut))
        inv = module.invariants()
        cols = []
        for d in range(cut + 1):
            B = inv[d]
            for c in range(B.ncols()):
                cols.append([B[r, c] for r in range(B.nrows())])
        ok_off = True
        for kind in ("x", "y"):
            for i in range(1, self.n + 1):
                op_g = module.letter_op("%s%d" % (kind, i)).M
                op_h = self.x_bar(i) if kind == "x" else self.y_bar(i)
                good = True
                for col in cols:
                    v = flint.fmpq_mat(module.dim, 1, col)
                    img = op_g * v
                    lhs, off1 = self.restrict(module, [img[r, 0] for r in range(module.dim)])
                    f, off0 = self.restrict(module, col)
                    ok_off = ok_off and off0 == 0 and off1 == 0
                    if not self._vanish(lhs - op_h(f), pts):
                        good = False
                        break
                res.results["restriction intertwines %s%d" % (kind, i)] = good
        res.results["restrictions have weight zero"] = ok_off
        return res


# ------------------------------------------- reduced KZB connection, rank one

class _JetOp:
    """Differential operator sum_k A_k(c) d_c^k; A_k given by matrix Taylor
    coefficients in (c - c0), shape (p+1, m, m)."""

    def __init__(self, coeffs, p, m):
        self.a = {k: np.asarray(v, dtype=complex) for k, v in coeffs.items()}
        self.p, self.m = p, m

    @classmethod
    def mult(cls, jet, M, p):
        """Multiplication by the scalar jet times the constant matrix M."""
        jet = np.asarray(jet, dtype=complex)[:p + 1]
        return cls({0: jet[:, None, None] * M[None, :, :]}, p, M.shape[0])

    @classmethod
    def deriv(cls, M, order, p):
        c = np.zeros((p + 1,) + M.shape, dtype=complex)
        c[0] = M
        return cls({order: c}, p, M.shape[0])

    def __add__(self, o):
        out = dict(self.a)
        for k, v in o.a.items():
            out[k] = out[k] + v if k in out else v
        return _JetOp(out, self.p, self.m)

    def __neg__(self):
        return _JetOp({k: -v for k, v in self.a.items()}, self.p, self.m)

    def __sub__(self, o):
        return self + (-o)

    def scale(self, s):
        return _JetOp({k: s * v for k, v in self.a.items()}, self.p, self.m)

    @staticmethod
    def _dj(A, l):
        out = np.zeros_like(A)
        p = A.shape[0] - 1
        for k in range(p + 1 - l):
            out[k] = A[k + l] * (math.factorial(k + l) / math.factorial(k))
        return out

    @staticmethod
    def _jmul(A, B):
        p = A.shape[0] - 1
        out = np.zeros_like(A)
        for k in range(p + 1):
            for s in range(k + 1):
                out[k] += A[s] @ B[k - s]
        return out

    def __mul__(self, o):
        out = {}
        for a, A in self.a.items():
            for b, B in o.a.items():
                for l in range(a + 1):
                    term = math.comb(a, l) * self._jmul(A, self._dj(B, l))
                    k = a - l + b
                    out[k] = out[k] + term if k in out else term
        return _JetOp(out, self.p, self.m)

    def bracket(self, o):
        return self * o - o * self

    def value_norm(self):
        return max((float(np.abs(v[0]).max()) for v in self.a.values()), default=0.0)


def _series_exp(a, p):
    return sf.Jet(np.asarray(a, dtype=complex)[:p + 1]).exp().c


def _logtheta_shift(w, tau, p, extra=0):
    """Taylor coefficients of log theta(w + t) - log theta(w) in t, up to t^p."""
    D, Dt = sf.logtheta_derivatives(w, tau, p + extra)
    L = np.zeros(p + 1, dtype=complex)
    for k in range(1, p + 1):
        L[k] = D[k] / math.factorial(k)
    return D, Dt, L


def _pair_functions(z, s, c0, tau, p):
    """Jets in (c - c0) of F(z, a), d_z F, d_tau F, G = d_a F, d_z G at a = 2 s c.

    F(z, a) = theta(z + a)/(theta(z) theta(a)).
    """
    a0 = 2 * s * c0
    q = p + 2
    D1, Dt1, L1 = _logtheta_shift(z + a0, tau, q, extra=1)
    D2, Dt2, _ = _logtheta_shift(z, tau, 1)
    D3, Dt3, L3 = _logtheta_shift(a0, tau, q)
    F0 = sf.theta(z + a0, tau) / (sf.theta(z, tau) * sf.theta(a0, tau))
    E = F0 * _series_exp(L1 - L3, q)                          # F(z, a0 + t)
    B = np.zeros(q + 1, dtype=complex)                        # d_z log F
    for k in range(q + 1):
        B[k] = D1[k + 1] / math.factorial(k)
    B[0] -= D2[1]
    T = np.zeros(q + 1, dtype=complex)                        # d_tau log F
    for k in range(q + 1):
        T[k] = (Dt1[k] - Dt3[k]) / math.factorial(k)
    T[0] -= Dt2[0]
    Fz = np.convolve(E, B)[:q + 1]
    Ft = np.convolve(E, T)[:q + 1]
    G = _deriv_series(E)
    Gz = _deriv_series(Fz)
    scale = (2 * s) ** np.arange(q + 1)
    cut = lambda v: (np.pad(v, (0, q + 1 - len(v)))[:q + 1] * scale)[:p + 1]
    return {"F": cut(E), "Fz": cut(Fz), "Ft": cut(Ft), "G": cut(G), "Gz": cut(Gz)}


def _deriv_series(v):
    return np.array([v[k + 1] * (k + 1) for k in range(len(v) - 1)], dtype=complex)


def _diag_G(s, c0, tau, p):
    """G(0, a) = (log theta)''(a) at a = 2 s c, as a jet in (c - c0)."""
    a0 = 2 * s * c0
    D, _, _ = _logtheta_shift(a0, tau, p + 2)
    v = np.array([D[k + 2] / math.factorial(k) for k in range(p + 1)], dtype=complex)
    return v * (2 * s) ** np.arange(p + 1)


def _const(v, p):
    out = np.zeros(p + 1, dtype=complex)
    out[0] = v
    return out


class ReducedConnection:
    """Felder's reduced KZB operators for sl_2, V_i = C^2, n even.

    lambda^vee = c h with h = diag(1, -1); functions are jets in c at c0.
    With the orthonormal h_nu = h/sqrt(2): h_nu^i d_nu = h^i d_c / 2 and
    d_nu^2 = d_c^2 / 2.
    """

    def __init__(self, z, tau, c0, n=2, p=6, g_closed_form_half=False):
        if n % 2:
            raise ValueError("weight-zero subspace of (C^2)^{(x)n} is empty for odd n")
        self.z = [complex(v) for v in z]
        self.n, self.tau, self.c0, self.p = n, complex(tau), complex(c0), p
        if abs(self.c0) < 1e-9 or sf.lattice_distance(2 * self.c0, self.tau) < 1e-6:
            raise SingularWeight("2 c0 on the lattice")
        self.half = g_closed_form_half
        self.zero_weight = [w for w in product(range(2), repeat=n) if sum(w) == n // 2]
        self.m = len(self.zero_weight)
        full = 2 ** n
        P = np.zeros((full, self.m))
        for k, w in enumerate(self.zero_weight):
            P[int("".join(map(str, w)), 2), k] = 1
        self._P = P
        self.e = np.array([[0., 1.], [0., 0.]])
        self.f = self.e.T.copy()
        self.h = np.diag([1., -1.])
        self.cas = self.e @ self.f + self.f @ self.e + self.h @ self.h / 2
        mp = sf._mp(self.tau)
        M, _ = sf.theta_over_x_logjet(mp, 4)
        self.g00 = -M.c[2]
        self.pairs = {}
        for i in range(1, n + 1):
            for j in range(1, n + 1):
                if i != j:
                    self.pairs[(i, j)] = self._pair(self.z[i - 1] - self.z[j - 1])

    def _op(self, *facs):
        mats = [np.eye(2) for _ in range(self.n)]
        for i, A in facs:
            mats[i - 1] = mats[i - 1] @ A
        out = mats[0]
        for A in mats[1:]:
            out = np.kron(out, A)
        return self._P.T @ out @ self._P

    def _pair(self, z):
        p = self.p
        out = {s: _pair_functions(z, s, self.c0, self.tau, p) for s in (1, -1)}
        D, Dt = sf.logtheta_derivatives(z, self.tau, 3)
        out["dlog"] = _const(D[1], p)
        out["dlog_z"] = _const(D[2], p)
        out["dlog_t"] = _const(Dt[1], p)
        out["g0"] = _const(0.5 * (D[2] + D[1] ** 2) + self.g00, p)
        out["g0_z"] = _const(0.5 * (D[3] + 2 * D[1] * D[2]), p)
        return out

    def _K_terms(self, i, j, which):
        """Coefficient of K_i coming from pair (i, j); which in {'', 'z', 't'}."""
        d = self.pairs[(i, j)]
        key = {"": "F", "z": "Fz", "t": "Ft"}[which]
        dl = {"": "dlog", "z": "dlog_z", "t": "dlog_t"}[which]
        p = self.p
        ef = self._op((i, self.e), (j, self.f))
        fe = self._op((i, self.f), (j, self.e))
        hh = self._op((i, self.h), (j, self.h)) / 2
        return (_JetOp.mult(d[1][key], ef, p) + _JetOp.mult(d[-1][key], fe, p)
                + _JetOp.mult(d[dl], hh, p))

    def K(self, i):
        p = self.p
        out = _JetOp.deriv(self._op((i, self.h)) / 2, 1, p)
        for j in range(1, self.n + 1):
            if j != i:
                out = out + self._K_terms(i, j, "")
        return out

    def dK(self, i, k):
        """d K_i / d z_k."""
        out = _JetOp({}, self.p, self.m)
        for j in range(1, self.n + 1):
            if j == i:
                continue
            sgn = (k == i) - (k == j)
            if sgn:
                out = out + self._K_terms(i, j, "z").scale(sgn)
        return out

    def dK_tau(self, i):
        out = _JetOp({}, self.p, self.m)
        for j in range(1, self.n + 1):
            if j != i:
                out = out + self._K_terms(i, j, "t")
        return out

    def _half_mu_component(self):
        """<h_nu, mu(r)/2> = -1/(sqrt 2 c) as a jet, and its d_nu derivative."""
        p = self.p
        c0 = self.c0
        inv = np.array([(-1) ** k / c0 ** (k + 1) for k in range(p + 2)], dtype=complex)
        u = -inv / math.sqrt(2)
        du = _deriv_series(u) / math.sqrt(2)
        return u[:p + 1], du[:p + 1]

    def _G(self, d, s, which):
        """g(z, a) - a^{-2} from the pair data, optionally the halved closed form."""
        G = d[s]["Gz" if which == "z" else "G"]
        return G * 0.5 if self.half else G

    def two_pi_i_Delta(self, dz=None):
        """2 pi i Delta~, or its d/dz_dz derivative when dz is given."""
        p, n = self.p, self.n
        I = np.eye(self.m)
        if dz is None:
            out = _JetOp.deriv(I / 4, 2, p)
            u, du = self._half_mu_component()
            out = out + _JetOp.mult(du - np.convolve(u, u)[:p + 1], I, p)
            cas = sum(self._op((i, self.cas)) for i in range(1, n + 1))
            out = out + _JetOp.mult(_const(-self.g00 * 0.5, p), cas, p)
            for i in range(1, n + 1):
                for s, A, B in ((1, self.e, self.f), (-1, self.f, self.e)):
                    G = _diag_G(s, self.c0, self.tau, p)
                    if self.half:
                        G = 0.5 * G
                    out = out + _JetOp.mult(0.5 * G, self._op((i, A @ B)), p)
                out = out + _JetOp.mult(_const(0.5 * self.g00, p), self._op((i, self.h @ self.h)) / 2, p)
        else:
            out = _JetOp({}, p, self.m)
        for (i, j), d in self.pairs.items():
            if dz is None:
                sgn, which = 1, ""
            else:
                sgn, which = (dz == i) - (dz == j), "z"
                if not sgn:
                    continue
            ef = self._op((i, self.e), (j, self.f))
            fe = self._op((i, self.f), (j, self.e))
            hh = self._op((i, self.h), (j, self.h)) / 2
            g0 = d["g0_z" if which == "z" else "g0"]
            term = (_JetOp.mult(0.5 * self._G(d, 1, which), ef, p)
                    + _JetOp.mult(0.5 * self._G(d, -1, which), fe, p)
                    + _JetOp.mult(0.5 * g0, hh, p))
            out = out + term.scale(sgn)
        return out

    def flatness_residuals(self):
        """Relative curvature components: z-z pairs and the tau direction."""
        tpi = 2j * math.pi
        Kc = {i: self.K(i) for i in range(1, self.n + 1)}
        Dl = self.two_pi_i_Delta().scale(1 / tpi)
        out = {}
        for i, j in combinations(range(1, self.n + 1), 2):
            parts = [self.dK(j, i), self.dK(i, j), Kc[i] * Kc[j]]
            R = -self.dK(j, i) + self.dK(i, j) + Kc[i].bracket(Kc[j])
            scale = max(1.0, max(t.value_norm() for t in parts))
            out["z%d%d" % (i, j)] = R.value_norm() / scale
        for i in range(1, self.n + 1):
            dD = self.two_pi_i_Delta(dz=i).scale(1 / tpi)
            dKt = self.dK_tau(i)
            R = dD - dKt + Dl.bracket(Kc[i])
            scale = max(1.0, dD.value_norm(), dKt.value_norm(), (Dl * Kc[i]).value_norm())
            out["tau,%d" % i] = R.value_norm() / scale
        return out

    def flatness_residual(self):
        return max(self.flatness_residuals().values())

    def conjugation_residuals(self):
        """P^{1/2}[h^i_nu d_nu - r^{ii}]P^{-1/2} - h^i_nu d_nu and the second-order
        identity, with P = -4 c^2 on the branch through c0."""
        p, c0 = self.p, self.c0
        I = np.eye(self.m)
        logc = np.zeros(p + 1, dtype=complex)
        logc[0] = np.log(-4 * c0 ** 2)
        for k in range(1, p + 1):
            logc[k] = 2 * (-1) ** (k + 1) / (k * c0 ** k)
        Phalf = _JetOp.mult(_series_exp(logc / 2, p) * np.exp(logc[0] / 2) / _series_exp(logc / 2, p)[0], I, p)
        Pmhalf = _JetOp.mult(_series_exp(-logc / 2, p) * np.exp(-logc[0] / 2) / _series_exp(-logc / 2, p)[0], I, p)
        inv2c = np.array([(-1) ** k / (2 * c0 ** (k + 1)) for k in range(p + 1)], dtype=complex)
        out = {}
        for i in range(1, self.n + 1):
            hd = _JetOp.deriv(self._op((i, self.h)) / 2, 1, p)
            rii = _JetOp.mult(-inv2c, self._op((i, self.h)), p)
            R = Phalf * (hd - rii) * Pmhalf - hd
            out["first order %d" % i] = R.value_norm()
        # sum_nu d_nu^2 + <[(ad)^{-1} e_b, e_b], h_nu> d_nu = d_c^2/2 + d_c/c
        invc = 2 * inv2c
        L = _JetOp.deriv(I / 2, 2, p) + _JetOp({1: invc[:, None, None] * I[None]}, p, self.m)
        u, du = self._half_mu_component()
        Rhs = _JetOp.deriv(I / 2, 2, p) + _JetOp.mult(du - np.convolve(u, u)[:p + 1], I, p)
        R = Phalf * L * Pmhalf - Rhs
        out["second order"] = R.value_norm()
        return out


def reduced_connection(z, tau, lam, N=2, n=2, **kw):
    if N != 2:
        raise NotImplementedError("the reduced connection is implemented for sl_2")
    c0 = lam[0] if np.ndim(lam) else lam
    return ReducedConnection(z, tau, c0, n=n, **kw)


def rho_gh(n, N, gen):
    """Reduced image of a generator name x<i>, y<i> or t<i><j>, as a map on
    sympy column vectors of functions of lambda."""
    R = ReducedRealization(N, n)
    m = re.fullmatch(r"([xyt])(\d)(\d)?", gen)
    if not m or (m.group(1) == "t") != bool(m.group(3)):
        raise ValueError("generator must look like x1, y2 or t12, got %r" % (gen,))
    i = int(m.group(2))
    if m.group(1) == "t":
        return R.t_bar(i, int(m.group(3)))
    return R.x_bar(i) if m.group(1) == "x" else R.y_bar(i)


def sample_reduced_point(rng, n=2):
    tau = complex(rng.uniform(-0.4, 0.4), rng.uniform(0.8, 1.6))
    while True:
        z = [complex(rng.uniform(0, 1), rng.uniform(0, 0.8)) * tau.imag for _ in range(n)]
        z = [complex(v.real, v.imag) for v in z]
        c0 = complex(rng.uniform(0.1, 0.4), rng.uniform(0.05, 0.3))
        ok = all(sf.lattice_distance(z[i] - z[j], tau) > 0.1 for i, j in combinations(range(n), 2))
        pts = [2 * c0] + [z[i] - z[j] + s * 2 * c0 for i in range(n) for j in range(n)
                          if i != j for s in (1, -1)]
        ok = ok and all(sf.lattice_distance(w, tau) > 0.1 for w in pts)
        if ok:
            return z, tau, c0
