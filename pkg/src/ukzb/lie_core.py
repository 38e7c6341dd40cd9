"""Free Lie algebras, truncated finitely presented quotients, derivations.

Every generator has degree 1.  Elements of the free Lie algebra are
handled either as word polynomials (dicts word -> coefficient) or as
coordinates on the Lyndon basis {P_w}; quotients keep the non-pivot
Lyndon words of an exact row reduction of the relator ideal.
"""
import itertools
import json
from fractions import Fraction

import numpy as np

from . import _exact


# ---------------------------------------------------------------- words

def lyndon_words(r, d):
    """Lyndon words of length exactly d over range(r), lexicographic."""
    out = []
    w = [-1]
    while w:
        w[-1] += 1
        m = len(w)
        if m == d:
            out.append(tuple(w))
        while len(w) < d:
            w.append(w[len(w) - m])
        while w and w[-1] == r - 1:
            w.pop()
    return out


def is_lyndon(w):
    n = len(w)
    return n > 0 and all(w < w[i:] + w[:i] for i in range(1, n)) and \
        all(w < w[i:] for i in range(1, n))


def standard_factorization(w):
    """w = uv with v the longest proper Lyndon suffix."""
    for i in range(1, len(w)):
        if is_lyndon(w[i:]):
            return w[:i], w[i:]
    raise ValueError("standard factorization needs a Lyndon word of length >= 2")


def witt_dimension(r, d):
    """Dimension of the degree-d part of the free Lie algebra on r letters."""
    total = 0
    for k in range(1, d + 1):
        if d % k == 0:
            total += _mobius(k) * r ** (d // k)
    return total // d


def _mobius(n):
    res, p = 1, 2
    while p * p <= n:
        if n % p == 0:
            n //= p
            if n % p == 0:
                return 0
            res = -res
        p += 1
    return -res if n > 1 else res


def word_index(w, r):
    i = 0
    for a in w:
        i = i * r + a
    return i


# ---------------------------------------------------------- word polynomials

def wp_add(*ps):
    out = {}
    for p in ps:
        for w, c in p.items():
            out[w] = out.get(w, 0) + c
    return {w: c for w, c in out.items() if c != 0}


def wp_scale(p, s):
    return {w: c * s for w, c in p.items() if c * s != 0}


def wp_mul(p, q):
    out = {}
    for u, a in p.items():
        for v, b in q.items():
            w = u + v
            out[w] = out.get(w, 0) + a * b
    return {w: c for w, c in out.items() if c != 0}


def wp_bracket(p, q):
    return wp_add(wp_mul(p, q), wp_scale(wp_mul(q, p), -1))


def wp_degree(p):
    degs = {len(w) for w in p}
    if len(degs) > 1:
        raise ValueError("inhomogeneous word polynomial")
    return degs.pop() if degs else None


def wp_to_vector(p, r, d):
    v = np.zeros(r ** d, dtype=object)
    v[:] = 0
    for w, c in p.items():
        v[word_index(w, r)] += c
    return v


# --------------------------------------------------------- presentations

class Presentation:
    """Generators (degree 1) given as combinations of letters, plus relators.

    letters: names of the free generators actually used.
    gens: original generator name -> word polynomial of degree 1 in letters.
    relators: list of homogeneous word polynomials (Lie elements).
    """

    def __init__(self, letters, gens, relators, name=""):
        self.letters = list(letters)
        self.gens = dict(gens)
        self.name = name
        self.relators = []
        for rel in relators:
            rel = {w: Fraction(c) for w, c in rel.items() if c != 0}
            if not rel:
                continue
            wp_degree(rel)
            self.relators.append(rel)

    @property
    def r(self):
        return len(self.letters)

    def g(self, name):
        return self.gens[name]


def _letters_xy(n):
    out = []
    for i in range(1, n + 1):
        out += ["x%d" % i, "y%d" % i]
    return out


def _unit(k):
    return {(k,): Fraction(1)}


def t1n_relators(n, G):
    """Defining relations of t_{1,n} in terms of generators x_i, y_i.

    G maps generator names to word polynomials; t_ij := [x_i, y_j].
    """
    br = wp_bracket
    x = lambda i: G["x%d" % i]
    y = lambda i: G["y%d" % i]

    def t(i, j):
        return br(x(i), y(j))

    rels = []
    idx = range(1, n + 1)
    for i, j in itertools.combinations(idx, 2):
        rels.append(wp_add(t(i, j), wp_scale(t(j, i), -1)))
        rels.append(br(x(i), x(j)))
        rels.append(br(y(i), y(j)))
        rels.append(br(wp_add(x(i), x(j)), t(i, j)))
        rels.append(br(wp_add(y(i), y(j)), t(i, j)))
    for i in idx:
        rels.append(wp_add(br(x(i), y(i)), *[t(i, j) for j in idx if j != i]))
    for i, j, k in itertools.permutations(idx, 3):
        if j < k:
            rels.append(br(x(i), t(j, k)))
            rels.append(br(y(i), t(j, k)))
        if i < j:
            rels.append(br(t(i, j), wp_add(t(i, k), t(j, k))))
    for i, j, k, l in itertools.permutations(idx, 4):
        if i < j and k < l and i < k:
            rels.append(br(t(i, j), t(k, l)))
    return rels


def t1n_presentation(n):
    letters = _letters_xy(n)
    gens = {name: _unit(k) for k, name in enumerate(letters)}
    return Presentation(letters, gens, t1n_relators(n, gens), name="t_1,%d" % n)


def tbar1n_presentation(n):
    """Reduced algebra: x_n = -sum x_i, y_n = -sum y_i eliminated."""
    letters = _letters_xy(n - 1)
    gens = {}
    for k, name in enumerate(letters):
        gens[name] = _unit(k)
    gens["x%d" % n] = wp_scale(wp_add(*[gens["x%d" % i] for i in range(1, n)]), -1) if n > 1 else {}
    gens["y%d" % n] = wp_scale(wp_add(*[gens["y%d" % i] for i in range(1, n)]), -1) if n > 1 else {}
    return Presentation(letters, gens, t1n_relators(n, gens), name="tbar_1,%d" % n)


def presentation_A(n, G=None):
    """Presentation (A) of t_{1,n}: generators x_i, y_i."""
    letters = _letters_xy(n)
    if G is None:
        G = {name: _unit(k) for k, name in enumerate(letters)}
    br = wp_bracket
    x = lambda i: G["x%d" % i]
    y = lambda i: G["y%d" % i]
    idx = range(1, n + 1)
    sx = wp_add(*[x(i) for i in idx])
    sy = wp_add(*[y(i) for i in idx])
    rels = []
    for i, j in itertools.combinations(idx, 2):
        rels.append(wp_add(br(x(i), y(j)), wp_scale(br(x(j), y(i)), -1)))
    for i, j in itertools.combinations(idx, 2):
        rels.append(br(x(i), x(j)))
        rels.append(br(y(i), y(j)))
    for i in idx:
        rels.append(br(sx, y(i)))
        rels.append(br(sy, x(i)))
    for i, j, k in itertools.permutations(idx, 3):
        rels.append(br(x(i), br(x(j), y(k))))
        rels.append(br(y(i), br(y(j), x(k))))
    return Presentation(letters, G, rels, name="A_%d" % n)


def presentation_B(n, G=None):
    """Presentation (B): generators a_i = sum_{j>=i} x_j, b_i = sum_{j>=i} y_j.

    Relators are returned as word polynomials in the x/y letters when G
    expresses a_i, b_i through them; by default a, b are the letters.
    """
    if G is None:
        letters = []
        for i in range(1, n + 1):
            letters += ["a%d" % i, "b%d" % i]
        G = {name: _unit(k) for k, name in enumerate(letters)}
    else:
        letters = None
    br = wp_bracket
    a = lambda i: G["a%d" % i]
    b = lambda i: G["b%d" % i]
    idx = range(1, n + 1)

    def c(j, k):
        return br(b(k), wp_add(a(k), wp_scale(a(j), -1)))

    rels = []
    for i, j in itertools.combinations(idx, 2):
        rels.append(br(a(i), a(j)))
        rels.append(br(b(i), b(j)))
    for j in idx:
        rels.append(br(a(1), b(j)))
        rels.append(br(b(1), a(j)))
    for j, k in itertools.combinations(idx, 2):
        rels.append(wp_add(br(a(j), b(k)), wp_scale(br(a(k), b(j)), -1)))
    for i in idx:
        for j in idx:
            for k in idx:
                if i <= j <= k:
                    rels.append(br(a(i), c(j, k)))
                    rels.append(br(b(i), c(j, k)))
    if letters is None:
        return rels
    return Presentation(letters, G, rels, name="B_%d" % n)


def presentation_change_report(n, D):
    """(A) and (B) carried to each other by a_i = sum_{j>=i} x_j, b_i = sum_{j>=i} y_j.

    Returns {check: bool}: B-relators vanish in the A-quotient, A-relators
    (with x_i = a_i - a_{i+1}, y_i = b_i - b_{i+1}) vanish in the B-quotient,
    and the graded dimensions agree up to degree D."""
    PA = presentation_A(n)
    PB = presentation_B(n)
    QA = TruncatedLieAlgebra(PA, D)
    QB = TruncatedLieAlgebra(PB, D)
    GA = {}
    for i in range(1, n + 1):
        GA["a%d" % i] = wp_add(*[PA.g("x%d" % j) for j in range(i, n + 1)])
        GA["b%d" % i] = wp_add(*[PA.g("y%d" % j) for j in range(i, n + 1)])
    GB = {}
    for i in range(1, n + 1):
        for l in "xy":
            s = "a" if l == "x" else "b"
            nxt = PB.g("%s%d" % (s, i + 1)) if i < n else {}
            GB["%s%d" % (l, i)] = wp_add(PB.g("%s%d" % (s, i)), wp_scale(nxt, -1))
    out = {}
    out["B relators vanish in (A)"] = all(
        QA.from_wordpoly(r).is_zero() for r in presentation_B(n, GA) if (wp_degree(r) or 0) <= D)
    out["A relators vanish in (B)"] = all(
        QB.from_wordpoly(r).is_zero() for r in presentation_A(n, GB).relators if (wp_degree(r) or 0) <= D)
    out["graded dimensions agree"] = QA.dims_list() == QB.dims_list()
    return out


def delta_suite(n, D, ms=(1, 2)):
    """Well-definedness of delta~_2m on tbar_{1,n} and ad(Delta0~)^{2m+1} delta~_2m = 0.

    Returns (checks, relators) where relators[m] counts the relators whose
    image fits below D; a relator of degree r is only seen once r + 2m + 2 <= D."""
    alg = TruncatedLieAlgebra(tbar1n_presentation(n), D)
    D0 = d_derivation(alg, n, "Delta0")
    out, seen = {}, {}
    for m in ms:
        try:
            dl = d_derivation(alg, n, "delta", m)
        except IllDefinedDerivation:
            out["delta%d well defined" % (2 * m)] = False
            seen[m] = 0
            continue
        out["delta%d well defined" % (2 * m)] = True
        seen[m] = sum(1 for k in dl.report if k.startswith("relator"))
        acc = dl
        for _ in range(2 * m + 1):
            acc = D0.commutator(acc)
        out["ad(Delta0)^%d delta%d = 0" % (2 * m + 1, 2 * m)] = acc.is_zero_on_generators()
    return out, seen


def drinfeld_kohno_presentation(n):
    """t_n: letters t_ij (i<j), [t_ij, t_ik + t_jk] = 0, [t_ij, t_kl] = 0."""
    pairs = list(itertools.combinations(range(1, n + 1), 2))
    letters = ["t%d%d" % p for p in pairs]
    gens = {}
    for k, (i, j) in enumerate(pairs):
        gens["t%d%d" % (i, j)] = _unit(k)
        gens["t%d%d" % (j, i)] = _unit(k)
    t = lambda i, j: gens["t%d%d" % (i, j)]
    rels = []
    for i, j, k in itertools.permutations(range(1, n + 1), 3):
        if i < j:
            rels.append(wp_bracket(t(i, j), wp_add(t(i, k), t(j, k))))
    for i, j, k, l in itertools.permutations(range(1, n + 1), 4):
        if i < j and k < l and i < k:
            rels.append(wp_bracket(t(i, j), t(k, l)))
    return Presentation(letters, gens, rels, name="t_%d" % n)


def free_presentation(names):
    gens = {name: _unit(k) for k, name in enumerate(names)}
    return Presentation(names, gens, [], name="free(%s)" % ",".join(names))


# ---------------------------------------------------------- free Lie tables

class FreeLieTables:
    """Lyndon bases, word expansions and triangular coordinate systems."""

    def __init__(self, r, D):
        self.r, self.D = r, D
        self.lyn = {d: lyndon_words(r, d) for d in range(1, D + 1)}
        self.lyn_pos = {d: {w: i for i, w in enumerate(ws)} for d, ws in self.lyn.items()}
        self.rows = {d: np.array([word_index(w, r) for w in ws], dtype=np.int64)
                     for d, ws in self.lyn.items()}
        self._col = {}
        self.E = {}
        self.T = {}
        for d in range(1, D + 1):
            cols = [self.expansion(w) for w in self.lyn[d]]
            full = np.array(cols, dtype=np.int64).T.reshape(r ** d, len(cols))
            if d < D:
                self.E[d] = full
            self.T[d] = full[self.rows[d]]
            if d == D:
                for w in self.lyn[d]:
                    self._col.pop(w, None)

    def dim(self, d):
        return len(self.lyn[d])

    def expansion(self, w):
        """Dense word vector of the standard bracketing P_w."""
        if w in self._col:
            return self._col[w]
        if len(w) == 1:
            v = np.zeros(self.r, dtype=np.int64)
            v[w[0]] = 1
        else:
            u, x = standard_factorization(w)
            a, b = self.expansion(u), self.expansion(x)
            v = np.kron(a, b) - np.kron(b, a)
        self._col[w] = v
        return v

    def coords(self, d, W):
        """Lyndon coordinates of Lie elements given as word vectors (columns)."""
        W = np.asarray(W)
        vec = W.ndim == 1
        if vec:
            W = W[:, None]
        return self.coords_rows(d, W[self.rows[d]], vec)

    def coords_rows(self, d, sub, vec=False):
        """Same as coords, with the word vectors already restricted to Lyndon rows."""
        if sub.ndim == 1:
            sub, vec = sub[:, None], True
        if sub.dtype == object:
            out = self._coords_rational(d, sub)
        else:
            out = _exact.int_solve_unitriangular(self.T[d], sub)
        return out[:, 0] if vec else out

    def _coords_rational(self, d, sub):
        den = 1
        for v in sub.reshape(-1):
            q = Fraction(v).denominator
            den = den * q // np.gcd(den, q)
        ints = np.array([[int(Fraction(v) * den) for v in row] for row in sub], dtype=object)
        if ints.size and max(abs(int(v)) for v in ints.reshape(-1)) < 2 ** 40:
            c = _exact.int_solve_unitriangular(self.T[d], ints.astype(np.int64))
            out = np.empty(c.shape, dtype=object)
            for idx, v in np.ndenumerate(c):
                out[idx] = Fraction(int(v), den)
            return out
        T = _exact.to_fraction_array(self.T[d])
        n, m = sub.shape
        out = np.empty((n, m), dtype=object)
        for j in range(m):
            for i in range(n):
                out[i, j] = Fraction(sub[i, j]) - T[i, :i].dot(out[:i, j]) if i else Fraction(sub[i, j])
        return out

    def bracket_coeffs(self, i, A, j, B, d_rows=None):
        """Coefficients of [A_a, B_b] at the Lyndon words of degree i+j.

        A: r^i x a word expansions, B: r^j x b.  Returns (L_{i+j}, a, b).
        """
        r = self.r
        rows = self.rows[i + j] if d_rows is None else d_rows
        p1, s1 = rows // r ** j, rows % r ** j
        p2, s2 = rows // r ** i, rows % r ** i
        return A[p1][:, :, None] * B[s1][:, None, :] - B[p2][:, None, :] * A[s2][:, :, None]


# ----------------------------------------------------- truncated quotient

class TruncatedLieAlgebra:
    """Degree-truncated quotient of a free Lie algebra by a relator ideal."""

    def __init__(self, presentation, D, use_flint=True):
        self.pres = presentation
        self.D = D
        self.r = presentation.r
        self.letters = presentation.letters
        self.tab = FreeLieTables(self.r, D)
        self.use_flint = use_flint
        self._build_ideal()
        self.offsets = {}
        off = 0
        for d in range(1, D + 1):
            self.offsets[d] = off
            off += self.dims[d]
        self.size = off
        self._build_structure()
        self._float_cache = {}

    # -- construction
    def _relator_coords(self):
        by_deg = {}
        for rel in self.pres.relators:
            d = wp_degree(rel)
            if d > self.D:
                continue
            v = wp_to_vector(rel, self.r, d)
            if all(Fraction(c).denominator == 1 for c in v):
                c = self.tab.coords(d, v.astype(np.int64))
            else:
                c = self.tab.coords(d, v)
            by_deg.setdefault(d, []).append(c)
        return by_deg

    def _letter_maps(self, d):
        """L_g: coordinates of [g, P_w] for w of degree d-1, one per letter."""
        tab = self.tab
        B = tab.E[d - 1]
        maps = []
        for g in range(self.r):
            A = np.zeros((self.r, 1), dtype=np.int64)
            A[g, 0] = 1
            W = tab.bracket_coeffs(1, A, d - 1, B)[:, 0, :]
            maps.append(tab.coords_rows(d, W))
        return maps

    def _build_ideal(self):
        rel = self._relator_coords()
        self.dims, self.basis, self.pivots, self.red = {}, {}, {}, {}
        self.NF = {}
        prev = None
        for d in range(1, self.D + 1):
            L = self.tab.dim(d)
            span = []
            if prev is not None and len(prev):
                pint = _integer_rows(prev)
                for Lg in self._letter_maps(d):
                    span.extend(_int_matmul(pint, Lg.T))
            for c in rel.get(d, []):
                span.append([Fraction(v) for v in c])
            if span:
                R, piv = _exact.rref(span, L, use_flint=self.use_flint)
            else:
                R, piv = np.zeros((0, L), dtype=object), []
            nonpiv = [j for j in range(L) if j not in set(piv)]
            self.red[d] = R
            self.pivots[d] = piv
            self.basis[d] = nonpiv
            self.dims[d] = len(nonpiv)
            nf = np.zeros((len(nonpiv), L), dtype=object)
            nf[:] = Fraction(0)
            for a, j in enumerate(nonpiv):
                nf[a, j] = Fraction(1)
            for k, p in enumerate(piv):
                for a, j in enumerate(nonpiv):
                    nf[a, p] = -R[k, j]
            self.NF[d] = nf
            prev = R

    def _build_structure(self):
        tab = self.tab
        self.S = {}
        self.basis_words = {d: [tab.lyn[d][j] for j in self.basis[d]] for d in self.basis}
        for i in range(1, self.D):
            for j in range(i, self.D - i + 1):
                qi, qj, k = self.dims[i], self.dims[j], i + j
                if qi == 0 or qj == 0 or self.dims[k] == 0:
                    self.S[(i, j)] = np.zeros((self.dims[k], qi, qj), dtype=object)
                    self.S[(i, j)][:] = Fraction(0)
                    continue
                A = tab.E[i][:, self.basis[i]]
                B = tab.E[j][:, self.basis[j]]
                W = tab.bracket_coeffs(i, A, j, B).reshape(tab.dim(k), qi * qj)
                c = tab.coords_rows(k, W)
                S = _exact.qmatmul(self.NF[k], c).reshape(self.dims[k], qi, qj)
                self.S[(i, j)] = S

    # -- basic access
    def dim(self, d):
        return self.dims.get(d, 0)

    def dims_list(self):
        return [self.dims[d] for d in range(1, self.D + 1)]

    def zero(self, exact=True):
        return LieElement(self, _zeros(self.size, exact))

    def gen(self, name):
        """Image of an original generator (degree 1)."""
        return self.from_wordpoly(self.pres.g(name))

    def from_wordpoly(self, p, exact=True):
        out = _zeros(self.size, exact)
        by_deg = {}
        for w, c in p.items():
            by_deg.setdefault(len(w), {})[w] = c
        for d, part in by_deg.items():
            if d > self.D:
                continue
            v = wp_to_vector(part, self.r, d)
            c = self.tab.coords(d, v)
            nf = self.normal_form_coords(d, c)
            out[self.offsets[d]:self.offsets[d] + self.dims[d]] += nf if exact else nf.astype(complex)
        return LieElement(self, out)

    def normal_form_coords(self, d, c):
        """Free Lyndon coordinates (degree d) -> quotient coordinates."""
        if d > self.D:
            raise ValueError("degree %d above cutoff %d" % (d, self.D))
        c = np.asarray(c)
        if c.dtype == object:
            return self.NF[d].dot(c) if len(c) else np.zeros(0, dtype=object)
        return self.nf_float(d) @ c

    def nf_float(self, d):
        key = ("nf", d)
        if key not in self._float_cache:
            self._float_cache[key] = _exact.frac_to_complex(self.NF[d])
        return self._float_cache[key]

    def S_float(self, i, j):
        key = ("S", i, j)
        if key not in self._float_cache:
            self._float_cache[key] = _exact.frac_to_complex(self.S[(i, j)])
        return self._float_cache[key]

    def basis_element(self, d, a, exact=True):
        v = _zeros(self.size, exact)
        v[self.offsets[d] + a] = 1
        return LieElement(self, v)

    def lyndon_element(self, w, exact=True):
        """Normal form of the free element P_w."""
        d = len(w)
        c = np.zeros(self.tab.dim(d), dtype=object)
        c[:] = Fraction(0)
        c[self.tab.lyn_pos[d][w]] = Fraction(1)
        v = _zeros(self.size, True)
        v[self.offsets[d]:self.offsets[d] + self.dims[d]] = self.NF[d].dot(c)
        e = LieElement(self, v)
        return e if exact else e.to_complex()

    def basis_labels(self):
        out = []
        for d in range(1, self.D + 1):
            for w in self.basis_words[d]:
                out.append("".join(self._letter_tag(a) for a in w))
        return out

    def _letter_tag(self, a):
        return "[" + self.letters[a] + "]"

    def word_expansion(self, d):
        """Word vectors (r^d x q_d) of the quotient basis elements."""
        key = ("wexp", d)
        if key not in self._float_cache:
            cols = [self.tab.expansion(w) if d == self.D else self.tab.E[d][:, j]
                    for w, j in zip(self.basis_words[d], self.basis[d])]
            if cols:
                M = np.array(cols, dtype=np.int64).T
            else:
                M = np.zeros((self.r ** d, 0), dtype=np.int64)
            self._float_cache[key] = M
        return self._float_cache[key]

    def dump(self):
        return json.dumps({
            "name": self.pres.name, "D": self.D, "letters": self.letters,
            "dims": self.dims_list(),
            "basis": {str(d): ["".join(self.letters[a] + "." for a in w).rstrip(".")
                               for w in self.basis_words[d]] for d in self.basis_words},
        }, indent=1)

    # -- bracket
    def bracket(self, a, b):
        if a.alg is not self or b.alg is not self:
            raise ValueError("operands belong to different algebras")
        exact = a.exact and b.exact
        if a.exact != b.exact:
            raise TypeError("exact and floating elements cannot be mixed")
        out = _zeros(self.size, exact)
        for i in range(1, self.D):
            ai = a.part(i)
            bi = b.part(i)
            for j in range(1, self.D - i + 1):
                k = i + j
                if self.dims[k] == 0:
                    continue
                aj, bj = a.part(j), b.part(j)
                sl = slice(self.offsets[k], self.offsets[k] + self.dims[k])
                if i <= j:
                    S = self.S[(i, j)] if exact else self.S_float(i, j)
                    if _nonzero(ai) and _nonzero(bj):
                        out[sl] += _contract(S, ai, bj)
                else:
                    S = self.S[(j, i)] if exact else self.S_float(j, i)
                    if _nonzero(ai) and _nonzero(bj):
                        out[sl] -= _contract(S, bj, ai)
        return LieElement(self, out)


def _contract(S, u, v):
    if S.dtype == object:
        return np.tensordot(np.tensordot(S, v, axes=([2], [0])), u, axes=([1], [0]))
    return np.einsum("kab,a,b->k", S, u, v)


def _nonzero(v):
    return len(v) and any(x != 0 for x in v)


def _zeros(n, exact):
    if exact:
        v = np.empty(n, dtype=object)
        v[:] = Fraction(0)
        return v
    return np.zeros(n, dtype=complex)


def _integer_rows(R):
    out = []
    for row in R:
        den = 1
        for v in row:
            den = den * Fraction(v).denominator // np.gcd(den, Fraction(v).denominator)
        out.append([int(Fraction(v) * den) for v in row])
    return np.array(out, dtype=object)


def _int_matmul(A, B):
    """Integer product via flint when available (exact, fast)."""
    if _exact.HAVE_FLINT:
        fa = _exact.flint.fmpz_mat([[int(v) for v in row] for row in A.tolist()])
        fb = _exact.flint.fmpz_mat(np.asarray(B, dtype=np.int64).tolist())
        return [[int(v) for v in row] for row in (fa * fb).tolist()]
    return [[int(v) for v in row] for row in A.dot(np.asarray(B, dtype=object))]


# -------------------------------------------------------------- elements

class LieElement:
    """Coordinates on the quotient basis, all degrees concatenated.

    dtype object holds Fractions (exact); complex128 holds numerics.
    """

    __slots__ = ("alg", "vec")

    def __init__(self, alg, vec):
        self.alg = alg
        self.vec = vec

    @property
    def exact(self):
        return self.vec.dtype == object

    def part(self, d):
        if d < 1 or d > self.alg.D:
            return self.vec[0:0]
        o = self.alg.offsets[d]
        return self.vec[o:o + self.alg.dims[d]]

    def degree_part(self, d):
        v = _zeros(self.alg.size, self.exact)
        o = self.alg.offsets[d]
        v[o:o + self.alg.dims[d]] = self.part(d)
        return LieElement(self.alg, v)

    def truncate(self, D):
        v = self.vec.copy()
        for d in range(D + 1, self.alg.D + 1):
            o = self.alg.offsets[d]
            v[o:o + self.alg.dims[d]] = 0
        return LieElement(self.alg, v)

    def _check(self, other):
        if other.alg is not self.alg:
            raise ValueError("operands belong to different algebras")
        if other.exact != self.exact:
            raise TypeError("exact and floating elements cannot be mixed")

    def __add__(self, other):
        self._check(other)
        return LieElement(self.alg, self.vec + other.vec)

    def __sub__(self, other):
        self._check(other)
        return LieElement(self.alg, self.vec - other.vec)

    def __neg__(self):
        return LieElement(self.alg, -self.vec)

    def __mul__(self, s):
        if self.exact and isinstance(s, (complex, float)):
            raise TypeError("exact element scaled by a float")
        return LieElement(self.alg, self.vec * s)

    __rmul__ = __mul__

    def bracket(self, other):
        return self.alg.bracket(self, other)

    def to_complex(self):
        if not self.exact:
            return self
        return LieElement(self.alg, _exact.frac_to_complex(self.vec))

    def is_zero(self):
        return all(v == 0 for v in self.vec)

    def norm(self):
        if self.exact:
            return float(max((abs(v) for v in self.vec), default=0))
        return float(np.abs(self.vec).max(initial=0.0))

    def min_degree(self):
        for d in range(1, self.alg.D + 1):
            if _nonzero(self.part(d)):
                return d
        return None

    def __repr__(self):
        terms = []
        labels = self.alg.basis_labels()
        for lab, v in zip(labels, self.vec):
            if v != 0:
                terms.append("%s*%s" % (v, lab))
        return "LieElement(" + (" + ".join(terms) if terms else "0") + ")"


def bracket(a, b):
    return a.alg.bracket(a, b)


def ad_power(x, m, y):
    for _ in range(m):
        y = x.bracket(y)
    return y


def truncate_quotient(presentation, D, use_flint=True):
    return TruncatedLieAlgebra(presentation, D, use_flint=use_flint)


def lyndon_basis(r, d):
    """Basis of the degree-d free Lie algebra on r letters (standard bracketings)."""
    if d < 1:
        raise ValueError("degree must be positive")
    return [_bracket_string(w) for w in lyndon_words(r, d)]


def _bracket_string(w):
    if len(w) == 1:
        return str(w[0])
    u, v = standard_factorization(w)
    return "[" + _bracket_string(u) + "," + _bracket_string(v) + "]"


def normal_form(alg, e):
    """Quotient coordinates of a word polynomial or a LieElement."""
    if isinstance(e, LieElement):
        return e.vec
    for w in e:
        if len(w) > alg.D:
            raise ValueError("degree overflow: %d > %d" % (len(w), alg.D))
    return alg.from_wordpoly(e).vec


# ------------------------------------------------------------ derivations

class Derivation:
    """Derivation of a truncated quotient with a fixed degree shift.

    mats[d] maps quotient degree d to degree d + shift (exact Fractions).
    """

    def __init__(self, alg, shift, mats, report=None, name=""):
        self.alg, self.shift, self.mats = alg, shift, mats
        self.report = report or {}
        self.name = name

    def apply(self, e):
        alg = self.alg
        out = _zeros(alg.size, e.exact)
        for d in range(1, alg.D + 1):
            t = d + self.shift
            if t < 1 or t > alg.D or d not in self.mats:
                continue
            M = self.mats[d]
            if not e.exact:
                M = self._float(d)
            o = alg.offsets[t]
            out[o:o + alg.dims[t]] += M.dot(e.part(d))
        return LieElement(alg, out)

    def __call__(self, e):
        return self.apply(e)

    def _float(self, d):
        key = ("der", id(self), d)
        cache = self.alg._float_cache
        if key not in cache:
            cache[key] = _exact.frac_to_complex(self.mats[d])
        return cache[key]

    def commutator(self, other):
        """[self, other] = self o other - other o self."""
        alg = self.alg
        s = self.shift + other.shift
        mats = {}
        for d in range(1, alg.D + 1):
            t = d + s
            if t < 1 or t > alg.D:
                continue
            M = _zero_mat(alg.dims[t], alg.dims[d])
            m1 = d + other.shift
            if 1 <= m1 <= alg.D and d in other.mats and m1 in self.mats:
                M = M + self.mats[m1].dot(other.mats[d])
            m2 = d + self.shift
            if 1 <= m2 <= alg.D and d in self.mats and m2 in other.mats:
                M = M - other.mats[m2].dot(self.mats[d])
            mats[d] = M
        return Derivation(alg, s, mats, name="[%s,%s]" % (self.name, other.name))

    def scaled(self, c):
        return Derivation(self.alg, self.shift, {d: M * c for d, M in self.mats.items()},
                          name="%s*%s" % (c, self.name))

    def is_zero_on_generators(self):
        alg = self.alg
        for name in alg.pres.gens:
            if not self.apply(alg.gen(name)).is_zero():
                return False
        return True

    def is_zero(self):
        return all(all(v == 0 for v in M.reshape(-1)) for M in self.mats.values())

    def check_leibniz(self, a, b):
        lhs = self.apply(a.bracket(b))
        rhs = self.apply(a).bracket(b) + a.bracket(self.apply(b))
        return (lhs - rhs)


def _zero_mat(m, n):
    M = np.empty((m, n), dtype=object)
    M[:] = Fraction(0)
    return M


class IllDefinedDerivation(ValueError):
    pass


def make_derivation(alg, images, shift, name="", strict=True):
    """Extend letter images to a derivation of the quotient.

    images: generator name -> LieElement (exact).  Letters not named are
    sent to zero.  Well-definedness: every relator (and every degree-1
    generator relation) of image degree <= D maps to 0.
    """
    pres = alg.pres
    letter_img = {}
    for k, lname in enumerate(pres.letters):
        letter_img[k] = images.get(lname, alg.zero())
    memo = {}

    def D_of(w):
        if w in memo:
            return memo[w]
        if len(w) == 1:
            v = letter_img[w[0]]
        else:
            u, x = standard_factorization(w)
            v = D_of(u).bracket(alg.lyndon_element(x)) + alg.lyndon_element(u).bracket(D_of(x))
        memo[w] = v
        return v

    mats = {}
    for d in range(1, alg.D + 1):
        t = d + shift
        if t < 1 or t > alg.D:
            continue
        M = _zero_mat(alg.dims[t], alg.dims[d])
        for a, w in enumerate(alg.basis_words[d]):
            M[:, a] = D_of(w).part(t)
        mats[d] = M
    der = Derivation(alg, shift, mats, name=name)

    # well-definedness on relators and on the original generators
    report = {}
    bad = []

    def image_of_free(p):
        by_deg = {}
        for w, c in p.items():
            by_deg.setdefault(len(w), {})[w] = c
        out = alg.zero()
        for d, part in by_deg.items():
            if d + shift > alg.D:
                continue
            v = wp_to_vector(part, alg.r, d)
            c = alg.tab.coords(d, v)
            for j, cj in enumerate(c):
                if cj != 0:
                    out = out + D_of(alg.tab.lyn[d][j]) * cj
        return out

    for k, rel in enumerate(pres.relators):
        d = wp_degree(rel)
        if d + shift > alg.D:
            continue
        img = image_of_free(rel)
        report["relator %d" % k] = img.norm()
        if not img.is_zero():
            bad.append(k)
    for gname, p in pres.gens.items():
        if gname in images:
            diff = image_of_free(p) - images[gname]
            report["generator %s" % gname] = diff.norm()
            if not diff.is_zero():
                bad.append(gname)
    der.report = report
    if bad and strict:
        raise IllDefinedDerivation("derivation %s is not well defined: offending %r"
                                   % (name, bad[:5]))
    der.bad = bad
    return der


# --------------------------------------------- the derivations of d on tbar

def _t(alg, i, j):
    return alg.gen("x%d" % i).bracket(alg.gen("y%d" % j))


def derivation_images(alg, n, kind, m=None):
    """Generator images of d~, X~, Delta0~, delta~_{2m} on t_{1,n} or tbar_{1,n}."""
    x = {i: alg.gen("x%d" % i) for i in range(1, n + 1)}
    y = {i: alg.gen("y%d" % i) for i in range(1, n + 1)}
    img = {}
    if kind == "d":
        for i in range(1, n + 1):
            img["x%d" % i] = x[i]
            img["y%d" % i] = -y[i]
        return img, 0
    if kind == "X":
        for i in range(1, n + 1):
            img["x%d" % i] = alg.zero()
            img["y%d" % i] = x[i]
        return img, 0
    if kind == "Delta0":
        for i in range(1, n + 1):
            img["x%d" % i] = y[i]
            img["y%d" % i] = alg.zero()
        return img, 0
    if kind == "delta":
        for i in range(1, n + 1):
            img["x%d" % i] = alg.zero()
            tot = alg.zero()
            for j in range(1, n + 1):
                if j == i:
                    continue
                tij = _t(alg, i, j)
                for p in range(2 * m):
                    q = 2 * m - 1 - p
                    a = ad_power(x[i], p, tij)
                    b = ad_power(x[i], q, tij) * ((-1) ** q)
                    tot = tot + a.bracket(b) * Fraction(1, 2)
            img["y%d" % i] = tot
        return img, 2 * m + 2
    raise ValueError("unknown derivation kind %r" % kind)


def d_derivation(alg, n, kind, m=None, strict=True):
    img, shift = derivation_images(alg, n, kind, m)
    name = kind if kind != "delta" else "delta%d" % (2 * m)
    return make_derivation(alg, img, shift, name=name, strict=strict)


# -------------------------------------------------------- index morphisms

class LieMorphism:
    """Morphism of presented algebras determined by degree-1 letter images."""

    def __init__(self, src, tgt, letter_images):
        self.src, self.tgt = src, tgt
        M = np.zeros((tgt.r, src.r), dtype=object)
        M[:] = Fraction(0)
        for k, p in enumerate(letter_images):
            for w, c in p.items():
                if len(w) != 1:
                    raise ValueError("letter images must have degree 1")
                M[w[0], k] += Fraction(c)
        self.M = M
        self.Mf = _exact.frac_to_complex(M)
        self._pow = {}

    def word_matrix(self, d, exact=True):
        key = (d, exact)
        if key not in self._pow:
            base = self.M if exact else self.Mf
            P = base
            for _ in range(d - 1):
                P = np.kron(P, base)
            self._pow[key] = P
        return self._pow[key]

    def apply_wordpoly(self, p):
        out = {}
        for w, c in p.items():
            cur = {(): Fraction(c)}
            for a in w:
                col = {(b,): self.M[b, a] for b in range(self.tgt.r) if self.M[b, a] != 0}
                cur = wp_mul(cur, col)
            out = wp_add(out, cur)
        return out

    def apply(self, e):
        src, tgt = self.src, self.tgt
        out = _zeros(tgt.size, e.exact)
        for d in range(1, min(src.D, tgt.D) + 1):
            v = e.part(d)
            if not _nonzero(v):
                continue
            W = src.word_expansion(d)
            words = W.astype(object).dot(v) if e.exact else W @ v
            img = self.word_matrix(d, e.exact).dot(words)
            if e.exact:
                c = tgt.tab.coords(d, img)
                nf = tgt.normal_form_coords(d, c)
            else:
                c = _float_coords(tgt.tab, d, img)
                nf = tgt.nf_float(d) @ c
            o = tgt.offsets[d]
            out[o:o + tgt.dims[d]] += nf
        return LieElement(tgt, out)

    def __call__(self, e):
        return self.apply(e)

    def check_relators(self):
        """Max normal-form size of relator images (0 for a morphism)."""
        worst = 0
        for rel in self.src.pres.relators:
            if wp_degree(rel) > self.tgt.D:
                continue
            img = self.tgt.from_wordpoly(self.apply_wordpoly(rel))
            worst = max(worst, img.norm())
        return worst


def _float_coords(tab, d, v):
    from scipy.linalg import solve_triangular
    sub = np.asarray(v)[tab.rows[d]]
    return solve_triangular(tab.T[d].astype(float), sub, lower=True, unit_diagonal=True,
                            check_finite=False)


def coproduct_map(src, tgt, blocks, kind="tbar"):
    """x -> x^phi for an index map given as blocks.

    blocks[i-1] lists the target indices i' with phi(i') = i, so
    (x_i)^phi = sum of x_{i'} over that block.  kind 'tbar'/'t1n' acts on
    x_i, y_i; kind 'dk' acts on Drinfeld-Kohno letters t_ij.
    """
    imgs = []
    if kind in ("tbar", "t1n"):
        for lname in src.letters:
            i = int(lname[1:])
            targets = blocks[i - 1]
            p = wp_add(*[tgt.pres.g(lname[0] + str(j)) for j in targets]) if targets else {}
            imgs.append(p)
    elif kind == "dk":
        for lname in src.letters:
            i, j = int(lname[1]), int(lname[2])
            p = {}
            for a in blocks[i - 1]:
                for b in blocks[j - 1]:
                    if a != b:
                        p = wp_add(p, tgt.pres.g("t%d%d" % (a, b)))
            imgs.append(p)
    else:
        raise ValueError("unknown algebra kind %r" % kind)
    mor = LieMorphism(src, tgt, imgs)
    if mor.check_relators() != 0:
        raise ValueError("index map does not induce a morphism")
    return mor


def parse_blocks(spec):
    """'12,3' -> [[1,2],[3]]; '0,1' style with 0 meaning empty -> use '' ."""
    out = []
    for part in spec.split(","):
        out.append([int(c) for c in part if c.isdigit()])
    return out


# ---------------------------------------------------------- envelope

class Envelope:
    """Degree-truncated universal envelope U(g)/U(g)_{>D} of a presented algebra.

    Elements are tensor representatives (one complex array of length r^d
    per degree d = 0..D); equality is decided modulo the two-sided ideal J
    generated by the relators, through orthonormal bases of J_d^perp.
    """

    def __init__(self, presentation, D, lie=None, rank_tol=1e-9):
        self.pres = presentation
        self.D = D
        self.r = presentation.r
        self.letters = presentation.letters
        self.lie = lie
        r = self.r
        self.sizes = [r ** d for d in range(D + 1)]
        self.offsets = np.concatenate([[0], np.cumsum(self.sizes)]).astype(int)
        self.N = int(self.offsets[-1])
        self.perp = {0: np.eye(1, dtype=complex)}
        self.ideal_rank = {0: 0}
        rel = {}
        for p in presentation.relators:
            d = wp_degree(p)
            if d <= D:
                rel.setdefault(d, []).append(
                    np.array(wp_to_vector(p, r, d), dtype=complex))
        J_prev = np.zeros((1, 0), dtype=complex)
        for d in range(1, D + 1):
            blocks = []
            if J_prev.shape[1]:
                eye = np.eye(r, dtype=complex)
                blocks.append(np.kron(eye, J_prev))
                blocks.append(np.kron(J_prev, eye))
            if d in rel:
                blocks.append(np.array(rel[d]).T)
            if blocks:
                S = np.concatenate(blocks, axis=1)
                U, s, _ = np.linalg.svd(S, full_matrices=True)
                k = int((s > rank_tol * max(s[0], 1.0)).sum()) if len(s) else 0
            else:
                U, k = np.eye(r ** d, dtype=complex), 0
            self.ideal_rank[d] = k
            J_prev = U[:, :k]
            self.perp[d] = U[:, k:]
        if lie is not None:
            expected = pbw_dimensions(lie.dims_list(), D)
            got = [r ** d - self.ideal_rank[d] for d in range(D + 1)]
            if got != expected:
                raise ArithmeticError("envelope quotient dims %r differ from PBW count %r"
                                      % (got, expected))

    # -- element constructors
    def zero(self):
        return EnvElement(self, np.zeros(self.N, dtype=complex))

    def one(self):
        v = np.zeros(self.N, dtype=complex)
        v[0] = 1
        return EnvElement(self, v)

    def scalar(self, c):
        return self.one() * c

    def letter(self, k):
        v = np.zeros(self.N, dtype=complex)
        v[1 + k] = 1
        return EnvElement(self, v)

    def gen(self, name):
        return self.from_wordpoly(self.pres.g(name))

    def from_wordpoly(self, p):
        v = np.zeros(self.N, dtype=complex)
        for w, c in p.items():
            if len(w) <= self.D:
                v[self.offsets[len(w)] + word_index(w, self.r)] += complex(c)
        return EnvElement(self, v)

    def from_lie(self, e):
        """Embed a LieElement of the matching truncated algebra."""
        lie = e.alg
        v = np.zeros(self.N, dtype=complex)
        for d in range(1, min(self.D, lie.D) + 1):
            part = e.part(d)
            if not _nonzero(part):
                continue
            W = lie.word_expansion(d)
            v[self.offsets[d]:self.offsets[d + 1]] += W @ np.asarray(part, dtype=complex)
        return EnvElement(self, v)

    def block(self, v, d):
        return v[self.offsets[d]:self.offsets[d + 1]]

    # -- arithmetic on flat vectors
    def mul(self, a, b):
        out = np.zeros(self.N, dtype=complex)
        for i in range(self.D + 1):
            ai = self.block(a, i)
            if not ai.any():
                continue
            for j in range(self.D + 1 - i):
                bj = self.block(b, j)
                if not bj.any():
                    continue
                out[self.offsets[i + j]:self.offsets[i + j + 1]] += np.kron(ai, bj)
        return out

    def left_matrix(self, a):
        """Matrix of v -> a*v on flat vectors."""
        M = np.zeros((self.N, self.N), dtype=complex)
        for i in range(self.D + 1):
            ai = self.block(a, i)
            if not ai.any():
                continue
            for j in range(self.D + 1 - i):
                rows = slice(self.offsets[i + j], self.offsets[i + j + 1])
                cols = slice(self.offsets[j], self.offsets[j + 1])
                M[rows, cols] += np.kron(ai[:, None], np.eye(self.sizes[j]))
        return M

    def right_matrix(self, a):
        M = np.zeros((self.N, self.N), dtype=complex)
        for i in range(self.D + 1):
            ai = self.block(a, i)
            if not ai.any():
                continue
            for j in range(self.D + 1 - i):
                rows = slice(self.offsets[i + j], self.offsets[i + j + 1])
                cols = slice(self.offsets[j], self.offsets[j + 1])
                M[rows, cols] += np.kron(np.eye(self.sizes[j]), ai[:, None])
        return M

    def residual(self, v):
        """Size of v modulo the ideal, max over degrees."""
        return max(float(np.abs(self.perp[d].conj().T @ self.block(v, d)).max(initial=0.0))
                   for d in range(self.D + 1))

    def reduce(self, v):
        """Canonical representative: orthogonal projection onto J^perp."""
        out = np.zeros_like(v)
        for d in range(self.D + 1):
            P = self.perp[d]
            out[self.offsets[d]:self.offsets[d + 1]] = P @ (P.conj().T @ self.block(v, d))
        return out

    def to_lie(self, v):
        """Lie coordinates of a primitive representative and the fit residual."""
        if self.lie is None:
            raise ValueError("envelope built without its Lie algebra")
        lie = self.lie
        out = np.zeros(lie.size, dtype=complex)
        worst = abs(v[0])
        for d in range(1, min(self.D, lie.D) + 1):
            W = lie.word_expansion(d).astype(complex)
            P = self.perp[d].conj().T
            rhs = P @ self.block(v, d)
            if W.shape[1] == 0:
                worst = max(worst, float(np.abs(rhs).max(initial=0.0)))
                continue
            c, *_ = np.linalg.lstsq(P @ W, rhs, rcond=None)
            worst = max(worst, float(np.abs(P @ W @ c - rhs).max(initial=0.0)))
            out[lie.offsets[d]:lie.offsets[d] + lie.dims[d]] = c
        return LieElement(lie, out), worst

    def substitute(self, elem, images):
        """Evaluate elem (an EnvElement of this envelope, read as a
        noncommutative polynomial in the letters) at target EnvElements."""
        tgt = images[0].env
        imgs = [im.vec for im in images]
        out = np.zeros(tgt.N, dtype=complex)
        out += elem.vec[0] * tgt.one().vec
        prev = {(): tgt.one().vec}
        for d in range(1, self.D + 1):
            cur = {}
            blk = self.block(elem.vec, d)
            for w in itertools.product(range(self.r), repeat=d):
                p = prev[w[:-1]]
                if not p.any():
                    cur[w] = p
                    continue
                val = tgt.mul(p, imgs[w[-1]])
                cur[w] = val
                c = blk[word_index(w, self.r)]
                if c != 0:
                    out += c * val
            prev = cur
        return EnvElement(tgt, out)

    def map_letters(self, tgt, M):
        """Algebra map induced by a letter-level linear map (tgt.r x r)."""
        M = np.asarray(M, dtype=complex)

        def apply(elem):
            out = np.zeros(tgt.N, dtype=complex)
            out[0] = elem.vec[0]
            P = np.ones((1, 1), dtype=complex)
            for d in range(1, min(self.D, tgt.D) + 1):
                P = np.kron(P, M)
                out[tgt.offsets[d]:tgt.offsets[d + 1]] = P @ self.block(elem.vec, d)
            return EnvElement(tgt, out)
        return apply

    def derivation_matrix(self, letter_images):
        """Matrix on flat vectors of the derivation with given letter images
        (EnvElements), extended by the Leibniz rule on words."""
        M = np.zeros((self.N, self.N), dtype=complex)
        imgs = [im.vec for im in letter_images]
        for d in range(1, self.D + 1):
            for w in itertools.product(range(self.r), repeat=d):
                col = self.offsets[d] + word_index(w, self.r)
                for pos in range(d):
                    left = self._word_vec(w[:pos])
                    right = self._word_vec(w[pos + 1:])
                    M[:, col] += self.mul(self.mul(left, imgs[w[pos]]), right)
        return M

    def _word_vec(self, w):
        v = np.zeros(self.N, dtype=complex)
        if len(w) <= self.D:
            v[self.offsets[len(w)] + word_index(w, self.r)] = 1
        return v


def pbw_dimensions(lie_dims, D):
    """Graded dimensions of U(g) up to degree D from the Lie dimensions."""
    series = [1] + [0] * D
    for d, m in enumerate(lie_dims, start=1):
        if d > D:
            break
        # multiply by (1 - t^d)^{-m}
        for _ in range(m):
            for k in range(d, D + 1):
                series[k] += series[k - d]
    return series


class EnvElement:
    """Element of a truncated envelope (complex tensor representative)."""

    __slots__ = ("env", "vec")

    def __init__(self, env, vec):
        self.env, self.vec = env, vec

    def _chk(self, o):
        if o.env is not self.env:
            raise ValueError("operands belong to different envelopes")

    def __add__(self, o):
        self._chk(o)
        return EnvElement(self.env, self.vec + o.vec)

    def __sub__(self, o):
        self._chk(o)
        return EnvElement(self.env, self.vec - o.vec)

    def __neg__(self):
        return EnvElement(self.env, -self.vec)

    def __mul__(self, o):
        if isinstance(o, EnvElement):
            self._chk(o)
            return EnvElement(self.env, self.env.mul(self.vec, o.vec))
        return EnvElement(self.env, self.vec * o)

    def __rmul__(self, s):
        return EnvElement(self.env, self.vec * s)

    def __matmul__(self, o):
        return self * o

    @property
    def constant(self):
        return self.vec[0]

    def degree_part(self, d):
        v = np.zeros_like(self.vec)
        sl = slice(self.env.offsets[d], self.env.offsets[d + 1])
        v[sl] = self.vec[sl]
        return EnvElement(self.env, v)

    def residual_to(self, o):
        self._chk(o)
        return self.env.residual(self.vec - o.vec)

    def exp(self):
        return envelope_exp(self)

    def log(self):
        return envelope_log(self)

    def inverse(self):
        c = self.vec[0]
        if c == 0:
            raise ZeroDivisionError("element with zero constant term is not invertible")
        x = EnvElement(self.env, -self.vec / c)
        x.vec[0] = 0
        out = self.env.one()
        term = self.env.one()
        for _ in range(self.env.D):
            term = term * x
            out = out + term
        return out * (1 / c)

    def conj_by(self, g):
        """g * self * g^{-1}."""
        return g * self * g.inverse()

    def to_lie(self):
        return self.env.to_lie(self.vec)

    def is_grouplike(self, tol=1e-9):
        if abs(self.vec[0] - 1) > tol:
            return False
        _, res = self.log().to_lie()
        return res < tol


def envelope_exp(x):
    """Truncated exponential of an element with zero constant term."""
    if isinstance(x, LieElement):
        raise TypeError("embed the Lie element with Envelope.from_lie first")
    if abs(x.vec[0]) > 0:
        raise ValueError("exp needs a zero constant term")
    env = x.env
    out = env.one()
    term = env.one()
    for k in range(1, env.D + 1):
        term = term * x * (1.0 / k)
        out = out + term
    return out


def envelope_log(g):
    """Truncated logarithm of a unipotent element (constant term 1)."""
    env = g.env
    if abs(g.vec[0] - 1) > 1e-12:
        raise ValueError("log needs constant term 1 (unipotent input)")
    x = g - env.one()
    out = env.zero()
    term = env.one()
    for k in range(1, env.D + 1):
        term = term * x
        out = out + term * (((-1) ** (k + 1)) / k)
    return out


def envelope_product(*gs):
    out = gs[0]
    for g in gs[1:]:
        out = out * g
    return out


def group_commutator(a, b):
    """(a, b) = a b a^{-1} b^{-1}."""
    return a * b * a.inverse() * b.inverse()
