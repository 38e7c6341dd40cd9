"""The universal elliptic KZB connection on configuration space.

K_i(z|tau) = -y_i + sum_{j != i} k(z_ij, ad x_i|tau)(t_ij) and
Delta(z|tau) = -(1/2 pi i) Delta_0 - (1/2 pi i) sum_n a_{2n} E_{2n+2}(tau) delta_{2n}
               + (1/2 pi i) sum_{i<j} g(z_ij, ad x_i|tau)(t_ij),
valued in the truncated algebras of lie_core.  Heads Delta_0, delta_{2n}
are kept symbolic and act only through derivations.
"""
import itertools
import math
from fractions import Fraction
from functools import lru_cache

import numpy as np

from . import lie_core as lc
from . import special_fn as sf

TWO_PI_I = sf.TWO_PI_I


class ConnectionPoint:
    """n marked points z and a modulus tau away from the diagonal locus."""

    def __init__(self, z, tau, margin=1e-6, terms=None):
        self.z = [complex(v) for v in z]
        self.n = len(self.z)
        self.mp = sf._mp(tau, terms)
        self.tau = self.mp.tau
        for i, j in itertools.combinations(range(self.n), 2):
            if sf.lattice_distance(self.z[i] - self.z[j], self.tau) < margin:
                raise sf.PoleError("z_%d - z_%d lies on the lattice" % (i + 1, j + 1))

    def zij(self, i, j):
        return self.z[i - 1] - self.z[j - 1]

    def shifted(self, dz=None, tau=None):
        z = list(self.z) if dz is None else [a + b for a, b in zip(self.z, dz)]
        return ConnectionPoint(z, self.tau if tau is None else tau,
                               terms=self.mp.terms if self.mp.fixed else None)


class ConnectionAlgebra:
    """Truncated t_{1,n} or tbar_{1,n} with cached ad-power elements and derivations."""

    def __init__(self, n, D, kind="tbar", alg=None):
        if kind not in ("tbar", "t1n"):
            raise ValueError("kind must be 'tbar' or 't1n'")
        self.n, self.D, self.kind = n, D, kind
        pres = lc.tbar1n_presentation(n) if kind == "tbar" else lc.t1n_presentation(n)
        self.alg = alg if alg is not None else lc.TruncatedLieAlgebra(pres, D)
        A = self.alg
        self.x = {i: A.gen("x%d" % i) for i in range(1, n + 1)}
        self.y = {i: A.gen("y%d" % i) for i in range(1, n + 1)}
        self.adpow = {}
        for i, j in itertools.permutations(range(1, n + 1), 2):
            e = self.x[i].bracket(self.y[j])
            seq = [e]
            for _ in range(D):
                e = self.x[i].bracket(e)
                seq.append(e)
            self.adpow[(i, j)] = seq
        self.adpow_c = {key: np.array([e.to_complex().vec for e in seq])
                        for key, seq in self.adpow.items()}
        self.y_c = {i: self.y[i].to_complex().vec for i in self.y}
        self.x_c = {i: self.x[i].to_complex().vec for i in self.x}
        self._ders = {}

    def t(self, i, j):
        return self.adpow[(i, j)][0]

    def element(self, vec):
        return lc.LieElement(self.alg, np.asarray(vec, dtype=complex))

    def series(self, i, j, jet):
        """f(ad x_i)(t_ij) for a jet f, as a complex coordinate vector."""
        M = self.adpow_c[(i, j)]
        m = min(len(jet.c), M.shape[0])
        return jet.c[:m] @ M[:m]

    def derivation(self, kind, m=None):
        key = (kind, m)
        if key not in self._ders:
            self._ders[key] = lc.d_derivation(self.alg, self.n, kind, m)
        return self._ders[key]

    def max_delta(self):
        """Largest m with delta_{2m} acting nontrivially below the cutoff."""
        return max(0, (self.D - 3) // 2)


@lru_cache(maxsize=8)
def connection_algebra(n, D, kind="tbar"):
    return ConnectionAlgebra(n, D, kind)


class DeltaData:
    """Delta(z|tau) = c0 Delta_0 + sum_m c[m] delta_{2m} + tail (Lie element)."""

    def __init__(self, c0, heads, tail):
        self.c0, self.heads, self.tail = c0, heads, tail

    def act(self, CA, e):
        """[Delta, e] for a Lie element e (heads act as derivations)."""
        out = CA.derivation("Delta0").apply(e) * self.c0
        for m, c in self.heads.items():
            out = out + CA.derivation("delta", m).apply(e) * c
        return out + self.tail.bracket(e)


# ------------------------------------------------------------ builders

def _jets(point, CA, order=None):
    order = CA.D if order is None else order
    out = {}
    for i, j in itertools.combinations(range(1, point.n + 1), 2):
        out[(i, j)] = sf.KZBJets(point.zij(i, j), point.mp, order)
    return out


def _antisym(jet, sign_pattern):
    """Coefficients of f(-z, -x) from those of f(z, x) given parity data."""
    m = np.arange(len(jet.c))
    return sf.Jet(jet.c * sign_pattern * (-1.0) ** m)


def build_K(point, CA, jets=None, with_derivatives=False):
    """K_1..K_n (complex LieElements); optionally dK_i/dz_j and dK_i/dtau."""
    n = point.n
    if n != CA.n:
        raise ValueError("point has %d marked points, algebra expects %d" % (n, CA.n))
    jets = _jets(point, CA) if jets is None else jets
    K = {i: -CA.y_c[i].copy() for i in range(1, n + 1)}
    dK = {(i, j): np.zeros(CA.alg.size, dtype=complex)
          for i in range(1, n + 1) for j in range(1, n + 1)}
    dKt = {i: np.zeros(CA.alg.size, dtype=complex) for i in range(1, n + 1)}
    for (i, j), J in jets.items():
        # k(-z,-x) = -k(z,x): the (j,i) coefficients follow from (i,j) exactly
        kij = J.k
        kji = _antisym(kij, -1)
        K[i] += CA.series(i, j, kij)
        K[j] += CA.series(j, i, kji)
        if with_derivatives:
            kz = J.k_z
            kzji = _antisym(kz, 1)       # d/dz of k(-z,-x) is +k_z(z,x) mirrored
            s_ij = CA.series(i, j, kz)
            s_ji = CA.series(j, i, kzji)
            # z_ij = z_i - z_j
            dK[(i, i)] += s_ij
            dK[(i, j)] -= s_ij
            # K_j depends on z_ji = z_j - z_i; k(z_ji) has z-derivative kzji at z_ij
            dK[(j, j)] += s_ji
            dK[(j, i)] -= s_ji
            kt = J.k_tau
            dKt[i] += CA.series(i, j, kt)
            dKt[j] += CA.series(j, i, _antisym(kt, -1))
    Ks = {i: CA.element(v) for i, v in K.items()}
    if not with_derivatives:
        return Ks
    return Ks, {k: CA.element(v) for k, v in dK.items()}, {i: CA.element(v) for i, v in dKt.items()}


def build_Delta(point, CA, jets=None, with_derivatives=False):
    """Delta-data at a point; optionally dDelta/dz_i (tail only, heads are z-independent)."""
    if CA.kind != "tbar":
        raise ValueError("Delta is defined on tbar_{1,n}")
    jets = _jets(point, CA) if jets is None else jets
    tail = np.zeros(CA.alg.size, dtype=complex)
    dtail = {i: np.zeros(CA.alg.size, dtype=complex) for i in range(1, point.n + 1)}
    for (i, j), J in jets.items():
        tail += CA.series(i, j, J.g)
        if with_derivatives:
            s = CA.series(i, j, J.g_z)
            dtail[i] += s
            dtail[j] -= s
    heads = {}
    for m in range(1, CA.max_delta() + 1):
        heads[m] = -sf.a2n(m) * sf.eisenstein(2 * m + 2, point.mp) / TWO_PI_I
    data = DeltaData(-1 / TWO_PI_I, heads, CA.element(tail / TWO_PI_I))
    if not with_derivatives:
        return data
    return data, {i: CA.element(v / TWO_PI_I) for i, v in dtail.items()}


def delta_via_phi(point, CA):
    """Same Delta assembled as -(1/2 pi i) Delta_phi + (1/2 pi i) g, with phi taken
    from its theta-function definition rather than from Eisenstein series."""
    jets = _jets(point, CA)
    ph = sf.phi_jet(point.mp, 2 * CA.max_delta() + 2)
    heads = {m: -ph.c[2 * m] / TWO_PI_I for m in range(1, CA.max_delta() + 1)}
    tail = np.zeros(CA.alg.size, dtype=complex)
    for (i, j), J in jets.items():
        tail += CA.series(i, j, J.g)
    return DeltaData(-1 / TWO_PI_I, heads, CA.element(tail / TWO_PI_I))


def delta_difference(a, b, CA):
    """Size of the difference of two Delta-data (heads and tails)."""
    r = abs(a.c0 - b.c0)
    for m in set(a.heads) | set(b.heads):
        r = max(r, abs(a.heads.get(m, 0) - b.heads.get(m, 0)))
    return max(r, (a.tail - b.tail).norm())


def _scale(*els):
    return max([1.0] + [e.norm() for e in els])


# -------------------------------------------------------- residuals

def sum_K_exact(CA):
    """Exact check that sum_i K_i vanishes (tbar) or equals -sum y_i (t1n).

    The (j,i) coefficients are (-1)^{m+1} times the (i,j) ones, so the sum
    vanishes iff (ad x_j)^m t_ji = (-1)^m (ad x_i)^m t_ij exactly and
    sum_i y_i = 0 (tbar only)."""
    ok = True
    for i, j in itertools.combinations(range(1, CA.n + 1), 2):
        for m, (a, b) in enumerate(zip(CA.adpow[(i, j)], CA.adpow[(j, i)])):
            if not (b - a * ((-1) ** m)).is_zero():
                ok = False
    ysum = CA.alg.zero()
    for i in range(1, CA.n + 1):
        ysum = ysum + CA.y[i]
    if CA.kind == "tbar":
        ok = ok and ysum.is_zero()
    return ok


def sum_K_residual(point, CA):
    K = build_K(point, CA)
    tot = CA.alg.zero(exact=False)
    for v in K.values():
        tot = tot + v
    if CA.kind == "t1n":
        for i in range(1, CA.n + 1):
            tot = tot + CA.element(CA.y_c[i])
    return tot.norm()


def flatness_residual(point, CA):
    """max over i<j of |d_j K_i - d_i K_j + [K_i, K_j]| (relative)."""
    K, dK, _ = build_K(point, CA, with_derivatives=True)
    worst = 0.0
    for i, j in itertools.combinations(range(1, point.n + 1), 2):
        a, b, c = dK[(i, j)], dK[(j, i)], K[i].bracket(K[j])
        worst = max(worst, (a - b + c).norm() / _scale(a, b, c))
    return worst


def cdybe_residual(point, CA, i=1, j=2, k=3):
    """Universal dynamical Yang-Baxter identity for three distinct indices."""
    if len({i, j, k}) < 3:
        raise ValueError("indices must be distinct")
    jets = _jets(point, CA)

    def Kij(a, b):
        if a < b:
            J = jets[(a, b)].k
        else:
            J = _antisym(jets[(b, a)].k, -1)
        return CA.element(CA.series(a, b, J))

    y = {a: CA.element(CA.y_c[a]) for a in (i, j, k)}
    terms = [-(y[i].bracket(Kij(j, k))), -(y[j].bracket(Kij(k, i))), -(y[k].bracket(Kij(i, j))),
             Kij(j, i).bracket(Kij(k, i)), Kij(k, j).bracket(Kij(i, j)), Kij(i, k).bracket(Kij(j, k))]
    tot = terms[0]
    for t in terms[1:]:
        tot = tot + t
    return tot.norm() / _scale(*terms)


def tau_flatness_residual(point, CA):
    """(r1, r2): dK_i/dtau - dDelta/dz_i and [Delta, K_i], max over i, relative."""
    jets = _jets(point, CA)
    K, _, dKt = build_K(point, CA, jets=jets, with_derivatives=True)
    Dl, dD = build_Delta(point, CA, jets=jets, with_derivatives=True)
    r1 = r2 = 0.0
    for i in range(1, point.n + 1):
        a, b = dKt[i], dD[i]
        r1 = max(r1, (a - b).norm() / _scale(a, b))
        c = Dl.act(CA, K[i])
        parts = [CA.derivation("Delta0").apply(K[i]) * Dl.c0, Dl.tail.bracket(K[i])]
        for m, cm in Dl.heads.items():
            parts.append(CA.derivation("delta", m).apply(K[i]) * cm)
        r2 = max(r2, c.norm() / _scale(*parts))
    return r1, r2


def _exp_ad(CA, xvec, e, s):
    """exp(s ad x)(e), truncated (ad x raises degree)."""
    x = CA.element(xvec)
    out = e
    term = e
    for m in range(1, CA.D + 1):
        term = x.bracket(term) * (s / m)
        out = out + term
    return out


def equivariance_residual(point, CA, kind, j=1, u=0.37 + 0.11j, realization=None):
    """Translation identities in the truncated algebra (shift_1, shift_tau,
    shift_Delta, shift_diag) or modular identities (mod_K, mod_Delta) as
    operator identities in a finite-dimensional realization."""
    if kind in ("mod_K", "mod_Delta"):
        if realization is None:
            raise ValueError("%s needs a finite-dimensional realization" % kind)
        return modular_residual(point, realization, kind)
    n = point.n
    K = build_K(point, CA)
    if kind == "shift_1":
        dz = [1.0 if a == j - 1 else 0 for a in range(n)]
        K2 = build_K(point.shifted(dz), CA)
        return max((K2[i] - K[i]).norm() / _scale(K[i]) for i in K)
    if kind == "shift_tau":
        dz = [point.tau if a == j - 1 else 0 for a in range(n)]
        K2 = build_K(point.shifted(dz), CA)
        worst = 0.0
        for i in K:
            rhs = _exp_ad(CA, CA.x_c[j], K[i], -TWO_PI_I)
            worst = max(worst, (K2[i] - rhs).norm() / _scale(K2[i], rhs))
        return worst
    if kind == "shift_diag":
        K2 = build_K(point.shifted([u] * n), CA)
        D1, D2 = build_Delta(point, CA), build_Delta(point.shifted([u] * n), CA)
        r = max((K2[i] - K[i]).norm() / _scale(K[i]) for i in K)
        return max(r, delta_difference(D1, D2, CA) / _scale(D1.tail))
    if kind == "shift_Delta":
        if CA.kind != "tbar":
            raise ValueError("shift_Delta needs tbar")
        dz = [point.tau if a == j - 1 else 0 for a in range(n)]
        lhs = build_Delta(point.shifted(dz), CA)
        rhs = build_Delta(point, CA)
        # Lie part of exp(-2 pi i ad x_j)(Delta - K_j)
        lie = _exp_ad(CA, CA.x_c[j], rhs.tail - K[j], -TWO_PI_I)
        # head contribution: exp(-2 pi i ad x_j)(c0 Delta_0) - c0 Delta_0,
        # using [x_j, Delta_0] = -y_j; delta heads commute with x_j
        yj = CA.element(CA.y_c[j])
        term = yj * (-1.0)
        acc = CA.alg.zero(exact=False)
        for m in range(1, CA.D + 2):
            acc = acc + term * ((-TWO_PI_I) ** m / math.factorial(m))
            term = CA.element(CA.x_c[j]).bracket(term)
        lie = lie + acc * rhs.c0
        r = (lhs.tail - lie).norm() / _scale(lhs.tail, lie)
        heads = abs(lhs.c0 - rhs.c0) + sum(abs(lhs.heads[m] - rhs.heads[m]) for m in lhs.heads)
        return max(r, heads)
    raise ValueError("unknown equivariance kind %r" % kind)


# ------------------------------------------------ realized connection

def _realized_pieces(R):
    n = R.n
    x = {i: np.asarray(R.letters["x%d" % i], dtype=complex) for i in range(1, n + 1)}
    y = {i: np.asarray(R.letters["y%d" % i], dtype=complex) for i in range(1, n + 1)}
    t = {}
    for (i, j), M in R.t.items():
        t[(i, j)] = t[(j, i)] = np.asarray(M, dtype=complex)
    return x, y, t


def _ad_powers(x, e):
    """[e, ad x e, (ad x)^2 e, ...] until the powers vanish (ad x is nilpotent)."""
    out = [e]
    for _ in range(4 * e.shape[0]):
        nxt = x @ out[-1] - out[-1] @ x
        if not np.any(np.abs(nxt) > 1e-300):
            return out
        out.append(nxt)
    raise ValueError("ad x is not nilpotent on this realization")


def _apply_jet(jet, powers):
    if len(jet.c) < len(powers):
        raise ValueError("jet order %d below the nilpotency order %d" % (len(jet.c), len(powers)))
    return sum(c * M for c, M in zip(jet.c, powers))


def realized_K(point, R, order=None):
    """K_i(z|tau) as matrices; exact up to the jets since ad x_i is nilpotent."""
    x, y, t = _realized_pieces(R)
    order = order or 2 * R.dim
    K = {i: -y[i] for i in x}
    for i, j in itertools.permutations(x, 2):
        J = sf.KZBJets(point.zij(i, j), point.mp, order).k
        K[i] = K[i] + _apply_jet(J, _ad_powers(x[i], t[(i, j)]))
    return K


def realized_Delta(point, R, order=None):
    """Delta(z|tau) as a matrix, heads included."""
    x, y, t = _realized_pieces(R)
    order = order or 2 * R.dim
    out = -np.asarray(R.Delta0, dtype=complex) / TWO_PI_I
    for i, j in itertools.combinations(sorted(x), 2):
        J = sf.KZBJets(point.zij(i, j), point.mp, order).g
        out = out + _apply_jet(J, _ad_powers(x[i], t[(i, j)])) / TWO_PI_I
    m = 1
    while np.any(R.delta(m)):
        out = out - sf.a2n(m) * sf.eisenstein(2 * m + 2, point.mp) * R.delta(m) / TWO_PI_I
        m += 1
    return out


def modular_cocycle(point, R):
    """c_T(z|tau) = tau^d exp((2 pi i/tau)(sum z_i x_i + X)), tau^d on the principal branch."""
    from scipy.linalg import expm
    x, _, _ = _realized_pieces(R)
    tau = point.tau
    w, V = np.linalg.eig(np.asarray(R.d, dtype=complex))
    if np.linalg.cond(V) > 1e8:
        raise ValueError("d is not diagonalizable in this realization")
    taud = V @ np.diag(np.exp(w * np.log(tau))) @ np.linalg.inv(V)
    S = np.asarray(R.X, dtype=complex) + sum(point.z[i - 1] * x[i] for i in x)
    return taud @ expm(TWO_PI_I / tau * S)


def modular_residual(point, R, kind, cocycle=None):
    """Relative residuals of
        (1/tau) K_i(z/tau|-1/tau) = Ad(c_T)(K_i(z|tau)) + 2 pi i x_i            (mod_K)
        (1/tau^2) Delta(z/tau|-1/tau) = Ad(c_T)(Delta + (1/tau) sum z_i K_i)
                                        + d/tau - 2 pi i X                       (mod_Delta)
    cocycle overrides c_T (used to show the identities pin it down)."""
    tau = point.tau
    moved = ConnectionPoint([v / tau for v in point.z], -1 / tau,
                            terms=point.mp.terms if point.mp.fixed else None)
    c = modular_cocycle(point, R) if cocycle is None else cocycle
    ci = np.linalg.inv(c)
    x, _, _ = _realized_pieces(R)
    K = realized_K(point, R)

    def rel(a, b):
        return float(np.abs(a - b).max() / max(1.0, np.abs(a).max(), np.abs(b).max()))
    if kind == "mod_K":
        K2 = realized_K(moved, R)
        return max(rel(K2[i] / tau, c @ K[i] @ ci + TWO_PI_I * x[i]) for i in K)
    if kind == "mod_Delta":
        lhs = realized_Delta(moved, R) / tau ** 2
        inner = realized_Delta(point, R) + sum(point.z[i - 1] * K[i] for i in K) / tau
        rhs = c @ inner @ ci + np.asarray(R.d, dtype=complex) / tau - TWO_PI_I * np.asarray(R.X, dtype=complex)
        return rel(lhs, rhs)
    raise ValueError("unknown modular kind %r" % kind)


def permutation_residual(point, CA, perm):
    """S_n equivariance: K at the permuted point vs. relabelled K."""
    n = point.n
    inv = {perm[a] - 1: a for a in range(n)}
    zs = [point.z[inv[a]] for a in range(n)]
    moved = ConnectionPoint(zs, point.mp)
    blocks = [[perm[a]] for a in range(n)]
    phi = lc.coproduct_map(CA.alg, CA.alg, blocks, kind=CA.kind)
    K = build_K(point, CA)
    K2 = build_K(moved, CA)
    worst = 0.0
    for i in range(1, n + 1):
        a, b = phi(K[i]), K2[perm[i - 1]]
        worst = max(worst, (a - b).norm() / _scale(a, b))
    if CA.kind == "tbar":
        D1, D2 = build_Delta(point, CA), build_Delta(moved, CA)
        a, b = phi(D1.tail), D2.tail
        worst = max(worst, (a - b).norm() / _scale(a, b))
    return worst


def sample_point(rng, n, im_range=(0.6, 2.0), margin=0.05, terms=None):
    """Random point with pairwise differences away from the lattice."""
    tau = sf.sample_tau(rng, im_range)
    zs = []
    for _ in range(n):
        zs.append(sf.sample_z(rng, tau, margin=0.0, avoid=zs) if zs else
                  rng.uniform(0, 1) + rng.uniform(0, 1) * tau)
        while any(sf.lattice_distance(zs[-1] - w, tau) < margin for w in zs[:-1]):
            zs[-1] = rng.uniform(0, 1) + rng.uniform(0, 1) * tau
    return ConnectionPoint(zs, tau, terms=terms)
