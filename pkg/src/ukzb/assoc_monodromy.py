"""KZ associator, elliptic generators and monodromy of the KZB connection.

Contents, in dependency order:
  * a regular-singular series solver for u_i d/du_i X = C_i X,
  * the KZ associator Phi_lambda in a truncated free envelope,
  * the elliptic pair (A~_lambda, B~_lambda) and the relation suites,
  * adaptive Magnus transport along paths (Chen series),
  * the numerical monodromy of the two-point KZB system and its comparison
    with the algebraic formulas.
"""
import cmath
import itertools
import math

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm, solve_sylvester

from . import lie_core as lc
from . import special_fn as sf
from .kzb_connection import ConnectionAlgebra

TWO_PI_I = sf.TWO_PI_I


class IncompatibleSystem(ValueError):
    pass


class ResonanceError(ValueError):
    pass


# ------------------------------------------------ regular-singular solver

class MatrixAlgebra:
    """Square complex matrices."""

    def __init__(self, m):
        self.m = m

    def one(self):
        return np.eye(self.m, dtype=complex)

    def zero(self):
        return np.zeros((self.m, self.m), dtype=complex)

    def mul(self, a, b):
        return a @ b

    def comm(self, a, b):
        return a @ b - b @ a

    def norm(self, a):
        return float(np.abs(a).max(initial=0.0))

    def exp(self, a):
        return expm(a)

    def check_residue(self, C0, nmax):
        ev = np.linalg.eigvals(C0)
        d = ev[:, None] - ev[None, :]
        for n in range(1, nmax + 1):
            if np.any(np.abs(d - n) < 1e-9):
                raise ResonanceError("residue eigenvalues differ by the integer %d" % n)

    def solve_shift(self, n, C0, rhs):
        """Y with n Y - [C0, Y] = rhs."""
        return solve_sylvester(n * self.one() - C0, C0, rhs)


class EnvelopeAlgebra:
    """Flat vectors of a truncated envelope; residues must have no constant term,
    so ad C0 is nilpotent and n - ad C0 is inverted by a finite Neumann series."""

    def __init__(self, env):
        self.env = env

    def one(self):
        return self.env.one().vec

    def zero(self):
        return self.env.zero().vec

    def mul(self, a, b):
        return self.env.mul(a, b)

    def comm(self, a, b):
        return self.env.mul(a, b) - self.env.mul(b, a)

    def norm(self, a):
        return float(np.abs(a).max(initial=0.0))

    def exp(self, a):
        return lc.envelope_exp(lc.EnvElement(self.env, a)).vec

    def check_residue(self, C0, nmax):
        if abs(C0[0]) > 0:
            raise ResonanceError("residue with a constant term is not nilpotent")

    def solve_shift(self, n, C0, rhs):
        out = rhs / n
        term = out
        for _ in range(self.env.D):
            term = self.comm(C0, term) / n
            out = out + term
        return out


class RegularSingularSystem:
    """u_i d/du_i X = C_i(u) X, i = 1..n, with C_i given by Taylor coefficients.

    coeffs[i] maps multi-indices (tuples of length n) to algebra elements;
    missing entries are zero.  The residues are C_i(0)."""

    def __init__(self, algebra, coeffs, tol=1e-9):
        self.alg = algebra
        self.n = len(coeffs)
        self.coeffs = [dict(c) for c in coeffs]
        zero = (0,) * self.n
        self.res = [c.get(zero, algebra.zero()) for c in self.coeffs]
        for i, j in itertools.combinations(range(self.n), 2):
            if algebra.norm(algebra.comm(self.res[i], self.res[j])) > tol:
                raise IncompatibleSystem("residues %d and %d do not commute" % (i + 1, j + 1))
        self.tol = tol


def _multi_indices(n, order):
    out = []
    for tot in range(order + 1):
        for a in itertools.product(range(tot + 1), repeat=n):
            if sum(a) == tot:
                out.append(a)
    return out


class NormalizedSolution:
    """X = Y(u) * prod_i u_i^{C0_i} with Y = 1 + O(u)."""

    def __init__(self, system, Y, order, compat):
        self.system, self.Y, self.order, self.compat = system, Y, order, compat

    def series(self, u):
        alg = self.system.alg
        u = np.atleast_1d(np.asarray(u, dtype=complex))
        out = alg.zero()
        for a, y in self.Y.items():
            out = out + y * np.prod(u ** np.array(a))
        return out

    def power(self, u):
        alg = self.system.alg
        out = alg.one()
        u = np.atleast_1d(np.asarray(u, dtype=complex))
        for i, C0 in enumerate(self.system.res):
            out = alg.mul(out, alg.exp(C0 * cmath.log(u[i])))
        return out

    def __call__(self, u):
        return self.system.alg.mul(self.series(u), self.power(u))


def solve_regular_singular(system, order):
    """Normalized solution to total order `order` in u.

    For each multi-index a != 0 with first nonzero entry at i:
        a_i Y_a - [C0_i, Y_a] = sum_{g != 0} C_{i,g} Y_{a-g};
    the remaining equations are evaluated as a compatibility residual."""
    alg, n = system.alg, system.n
    for C0 in system.res:
        alg.check_residue(C0, order)
    idx = _multi_indices(n, order)
    Y = {idx[0]: alg.one()}

    def rhs(i, a):
        out = alg.zero()
        for g, c in system.coeffs[i].items():
            if not any(g):
                continue
            b = tuple(x - y for x, y in zip(a, g))
            if min(b) < 0 or b not in Y:
                continue
            out = out + alg.mul(c, Y[b])
        return out

    for a in idx[1:]:
        i = next(k for k in range(n) if a[k])
        Y[a] = alg.solve_shift(a[i], system.res[i], rhs(i, a))
    worst = 0.0
    for a in idx[1:]:
        for i in range(n):
            lhs = a[i] * Y[a] - alg.comm(system.res[i], Y[a])
            r = alg.norm(lhs - rhs(i, a))
            worst = max(worst, r / max(1.0, alg.norm(lhs)))
    if worst > system.tol:
        raise IncompatibleSystem("compatibility residual %.3g" % worst)
    return NormalizedSolution(system, Y, order, worst)


def picard_solution(C_terms, u, steps=None):
    """Oracle for n = 1: X(u) u^{-C0} by Dyson iteration in t = log u.

    C_terms: list [C0, C1, ...] of matrices, C(u) = sum C_k u^k.  With
    X = V(u) u^{C0}, V solves u V' = C(u) V - V C0; integrate from a tiny
    u_start with V = 1 using a fixed-step RK4 in log u."""
    C0 = C_terms[0]
    m = C0.shape[0]
    u = complex(u)
    L = cmath.log(u)
    s0 = L - 40.0                 # |u| * e^{-40}: O(u) tail negligible
    n = steps or 4000
    h = (L - s0) / n
    V = np.eye(m, dtype=complex)

    def f(s, V):
        w = cmath.exp(s)
        C = sum(c * w ** k for k, c in enumerate(C_terms))
        return C @ V - V @ C0
    s = s0
    for _ in range(n):
        k1 = f(s, V)
        k2 = f(s + h / 2, V + h / 2 * k1)
        k3 = f(s + h / 2, V + h / 2 * k2)
        k4 = f(s + h, V + h * k3)
        V = V + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        s += h
    return V


# ------------------------------------------------------------ associator

def free_envelope(D, letters=("a", "b")):
    pres = lc.free_presentation(list(letters))
    return lc.Envelope(pres, D, lie=lc.TruncatedLieAlgebra(pres, D))


class Associator:
    """Phi_lambda(a, b) as an element of the truncated free envelope on a, b."""

    def __init__(self, env, elem, lam, report=None):
        self.env, self.elem, self.lam = env, elem, lam
        self.report = report or {}

    @property
    def D(self):
        return self.env.D

    def __call__(self, a, b):
        """Substitute envelope elements of a target algebra for (a, b)."""
        return self.env.substitute(self.elem, [a, b])

    def coefficient(self, word):
        idx = lc.word_index(tuple("ab".index(c) for c in word), 2)
        return self.elem.vec[self.env.offsets[len(word)] + idx]

    def lyndon_coefficients(self):
        """log Phi in the Lyndon basis of the free Lie algebra: {word: coeff}."""
        lie, _ = self.elem.log().to_lie()
        out = {}
        for lab, v in zip(lie.alg.basis_labels(), lie.vec):
            out[lab] = complex(v)
        return out


def _kz_series(env, A, B, alpha, order):
    """P(u) with G_0 = P(u) u^{alpha A} for G' = alpha(A/u + B/(u-1)) G."""
    alg = EnvelopeAlgebra(env)
    coeffs = {(0,): alpha * A}
    for m in range(1, order + 1):
        coeffs[(m,)] = -alpha * B
    return solve_regular_singular(RegularSingularSystem(alg, [coeffs]), order)


def kz_associator(D, lam=TWO_PI_I, z0=0.3, z1=0.7, order=None, rtol=1e-13):
    """Phi = G_1(z)^{-1} G_0(z): the two normalized solutions are series at
    the ends, joined by a DOP853 transport from z0 to z1 (no transport when
    z0 == z1)."""
    env = free_envelope(D)
    A, B = env.letter(0).vec, env.letter(1).vec
    alpha = lam / TWO_PI_I
    worst = max(z0, 1 - z1)
    order = order or int(math.ceil(math.log(1e-18) / math.log(worst))) + 2
    P = _kz_series(env, A, B, alpha, order)   # at u = z
    Q = _kz_series(env, B, A, alpha, order)   # at w = 1 - z, roles swapped
    G0 = P(z0)
    if z1 != z0:
        La, Lb = env.left_matrix(A), env.left_matrix(B)

        def rhs(z, g):
            return alpha * ((La @ g) / z + (Lb @ g) / (z - 1))
        sol = solve_ivp(rhs, (z0, z1), G0.astype(complex), method="DOP853",
                        rtol=rtol, atol=1e-16)
        if not sol.success:
            raise RuntimeError("associator transport failed: %s" % sol.message)
        G0 = sol.y[:, -1]
    G1 = lc.EnvElement(env, Q(1 - z1))
    phi = G1.inverse() * lc.EnvElement(env, G0)
    rep = {"z0": z0, "z1": z1, "order": order,
           "grouplike": phi.log().to_lie()[1]}
    return Associator(env, phi, lam, rep)


def picard_degree2(lam=TWO_PI_I, eps=1e-14, dps=30):
    """Independent oracle: coefficients of ab and ba in Phi from the
    regularized degree-2 iterated integrals, by mpmath quadrature.

    Phi ~ e^{-alpha b L} T e^{alpha a L}, L = log eps, T the transport
    from eps to 1 - eps of G' = alpha(a/z + b/(z-1))G."""
    import mpmath as mp
    mp.mp.dps = dps
    alpha = mp.mpc(lam) / (2j * mp.pi)
    e = mp.mpf(eps)
    L = mp.log(e)
    # T_a = int dz/z, T_b = int dz/(z-1), T_{uv} = int w_u(z) int^z w_v
    Ta = mp.log((1 - e) / e)
    Tb = mp.log(e / (1 - e))
    Tab = mp.quad(lambda z: mp.log((1 - z) / (1 - e)) / z, [e, 0.5, 1 - e])
    Tba = mp.quad(lambda z: mp.log(z / e) / (z - 1), [e, 0.5, 1 - e])
    # word ab: a on the left
    ab = alpha ** 2 * Tab
    ba = alpha ** 2 * Tba + (-alpha * L) * (alpha * Ta) + (alpha * Tb) * (alpha * L) \
        + (-alpha * L) * (alpha * L)
    return complex(ab), complex(ba)


# ------------------------------------------ Drinfeld-Kohno envelopes

def dk_envelope(n, D):
    pres = lc.drinfeld_kohno_presentation(n)
    return lc.Envelope(pres, D, lie=lc.TruncatedLieAlgebra(pres, D))


def dk_t(env, A, B):
    """t_{A,B} = sum_{a in A, b in B} t_ab as a degree-1 envelope element."""
    out = env.zero()
    for a in A:
        for b in B:
            if a != b:
                out = out + env.gen("t%d%d" % (a, b))
    return out


def phi_blocks(phi, env, X, Y, Z, tfun=dk_t):
    """Phi^{X,Y,Z} = Phi(t_{X,Y}, t_{Y,Z}) for index blocks X, Y, Z."""
    return phi(tfun(env, X, Y), tfun(env, Y, Z))


def duality_residual(phi):
    env = phi.env
    swap = env.map_letters(env, [[0, 1], [1, 0]])
    return (swap(phi.elem) * phi.elem).residual_to(env.one())


def hexagon_residual(phi, env3=None):
    env = env3 or dk_envelope(3, phi.D)
    lam = phi.lam
    t = lambda i, j: env.gen("t%d%d" % (i, j))
    e = lambda x: (x * lam * 0.5).exp()
    P = lambda a, b, c: phi_blocks(phi, env, [a], [b], [c])
    lhs = e(t(3, 1)) * P(2, 3, 1) * e(t(2, 3)) * P(1, 2, 3) * e(t(1, 2)) * P(3, 1, 2)
    rhs = e(t(1, 2) + t(2, 3) + t(1, 3))
    return lhs.residual_to(rhs)


def pentagon_residual(phi, env4=None):
    env = env4 or dk_envelope(4, phi.D)
    P = lambda X, Y, Z: phi_blocks(phi, env, X, Y, Z)
    lhs = P([2], [3], [4]) * P([1], [2, 3], [4]) * P([1], [2], [3])
    rhs = P([1], [2], [3, 4]) * P([1, 2], [3], [4])
    return lhs.residual_to(rhs)


# ------------------------------------------------------- elliptic pair

def tilde_y_coeffs(lam, m):
    """c_0..c_m with u/(e^{lam u}-1) = sum c_j u^j, c_j = B_j lam^{j-1}/j!."""
    if lam == 0:
        raise ValueError("lambda must be nonzero")
    return [sf.bernoulli(j) * lam ** (j - 1) / math.factorial(j) for j in range(m + 1)]


def tilde_y(alg, x, y, lam):
    """y~_lambda = -(ad x/(e^{lam ad x} - 1))(y) in a truncated Lie algebra."""
    c = tilde_y_coeffs(lam, alg.D)
    x, y = x.to_complex(), y.to_complex()
    out = alg.zero(exact=False)
    term = y
    for j in range(alg.D):
        out = out - term * c[j]
        term = x.bracket(term)
    return out


class TbarEnvelope:
    """Truncated envelope of tbar_{1,n} with named generators and relabelling."""

    def __init__(self, n, D):
        self.n, self.D = n, D
        self.alg = lc.TruncatedLieAlgebra(lc.tbar1n_presentation(n), D)
        self.env = lc.Envelope(self.alg.pres, D, lie=self.alg)

    def gen(self, name):
        return self.env.gen(name)

    def t(self, i, j):
        x, y = self.gen("x%d" % i), self.gen("y%d" % j)
        return x * y - y * x

    def tblock(self, A, B):
        out = self.env.zero()
        for a in A:
            for b in B:
                if a != b:
                    out = out + self.t(a, b)
        return out

    def lie(self, e):
        return self.env.from_lie(e)

    def map_from(self, src, blocks):
        """Envelope map x -> x^{blocks} from a smaller TbarEnvelope."""
        mor = lc.coproduct_map(src.alg, self.alg, blocks, kind="tbar")
        return src.env.map_letters(self.env, mor.Mf)

    def permutation(self, perm):
        """Relabelling i -> perm[i-1] as an envelope automorphism."""
        return self.map_from(self, [[p] for p in perm])


class EllipticPair:
    """A~_lambda, B~_lambda in the tbar_{1,2} envelope built from Phi_lambda.

    index selects x = x_index, y = y_index; t = tbar_12 in either case."""

    def __init__(self, phi, lam=None, D=None, index=2, space=None):
        self.phi = phi
        self.lam = phi.lam if lam is None else lam
        self.D = D or phi.D
        self.index = index
        self.T = space or TbarEnvelope(2, self.D)
        T, lam = self.T, self.lam
        env = T.env
        xs, ys = "x%d" % index, "y%d" % index
        self.x = T.gen(xs)
        self.y = T.gen(ys)
        self.t = T.t(1, 2)
        self.ytl = tilde_y(T.alg, T.alg.gen(xs), T.alg.gen(ys), lam)
        yt = env.from_lie(self.ytl)
        self.yt = yt
        t = self.t
        P1 = phi(yt, t)
        P2 = phi(-yt - t, t)
        e = lambda v, s: (v * s).exp()
        self.A = P1 * e(yt, lam) * P1.inverse()
        self.A_alt = e(t, -lam / 2) * P2 * e(yt + t, lam) * P2.inverse() * e(t, -lam / 2)
        self.B = e(t, lam / 2) * P2 * e(self.x, lam) * P1.inverse()

    def commutator_residual(self):
        """(A~, B~) against e^{-lambda t}."""
        lhs = lc.group_commutator(self.A, self.B)
        return lhs.residual_to((self.t * (-self.lam)).exp())

    def A_forms_residual(self):
        return self.A.residual_to(self.A_alt)

    def grouplike_residual(self):
        return max(self.A.log().to_lie()[1], self.B.log().to_lie()[1])

    def empty_block_residual(self):
        """A~^{1,empty} = B~^{1,empty} = 1 under the projection to tbar_{1,1} = 0."""
        T1 = self.T.env
        kill = T1.map_letters(T1, np.zeros((T1.r, T1.r)))
        return max(kill(self.A).residual_to(T1.one()), kill(self.B).residual_to(T1.one()))


def build_elliptic_pair(phi, lam=None, D=None, index=2):
    """A~_lambda, B~_lambda from a group-like Phi_lambda."""
    lam = phi.lam if lam is None else lam
    if lam == 0:
        raise ValueError("lambda must be nonzero")
    if not phi.elem.is_grouplike(1e-8):
        raise ValueError("Phi is not group-like")
    return EllipticPair(phi, lam, D, index)


def _tbar_phi(phi, T3, a, b, c):
    """{Phi}^{a,b,c} in tbar_{1,3}: Phi(t_ab, t_bc)."""
    return phi(T3.t(a, b), T3.t(b, c))


def check_gamma13(pair, T3=None):
    """Residuals of the three Gamma_{1,[3]} identities in the tbar_{1,3} envelope."""
    T3 = T3 or TbarEnvelope(3, pair.D)
    lam, phi = pair.lam, pair.phi
    up = lambda blocks, g: T3.map_from(pair.T, blocks)(g)
    P = lambda a, b, c: _tbar_phi(phi, T3, a, b, c)
    t12 = T3.t(1, 2)
    e = lambda v, s: (v * s).exp()
    out = {}

    def side(G, s):
        left = e(t12, s * lam / 2) * P(3, 1, 2) * up([[2], [1, 3]], G) * P(2, 1, 3) \
            * e(t12, s * lam / 2)
        right = P(3, 2, 1) * up([[1], [2, 3]], G) * P(1, 2, 3)
        return left, right

    LA, RA = side(pair.A, 1)
    LB, RB = side(pair.B, -1)
    A123 = up([[1, 2], [3]], pair.A)
    B123 = up([[1, 2], [3]], pair.B)
    out["A_identity"] = A123.residual_to(LA * RA)
    out["B_identity"] = B123.residual_to(LB * RB)
    target = P(3, 2, 1) * e(T3.t(2, 3), lam) * P(1, 2, 3)
    out["mixed_left"] = lc.group_commutator(B123, LA).residual_to(target)
    out["mixed_right"] = lc.group_commutator(LB, A123).residual_to(target)
    return out


# ---------------------------------------------- Gamma_{1,[3]} images

class SemidirectElement:
    """(g, s) in exp(tbar_{1,n}) x| S_n with (g,s)(h,u) = (g s(h), s u)."""

    def __init__(self, space, g, perm):
        self.T, self.g, self.perm = space, g, tuple(perm)

    def __mul__(self, o):
        h = self.T.permutation(self.perm)(o.g) if self.perm != tuple(range(1, self.T.n + 1)) else o.g
        perm = tuple(self.perm[p - 1] for p in o.perm)
        return SemidirectElement(self.T, self.g * h, perm)

    def inverse(self):
        inv = [0] * len(self.perm)
        for i, p in enumerate(self.perm):
            inv[p - 1] = i + 1
        ginv = self.g.inverse()
        g = self.T.permutation(inv)(ginv)
        return SemidirectElement(self.T, g, inv)

    def residual_to(self, o):
        if self.perm != o.perm:
            return float("inf")
        return self.g.residual_to(o.g)


def gamma_images(pair, n=3, T=None):
    """Images of A_i, B_i, sigma_i, C_jk for n = 3 and their relation report."""
    if n != 3:
        raise NotImplementedError("relation suites run at n = 3")
    T = T or TbarEnvelope(3, pair.D)
    lam, phi = pair.lam, pair.phi
    P = lambda a, b, c: _tbar_phi(phi, T, a, b, c)
    ident = (1, 2, 3)
    one = T.env.one()
    Phi = P(1, 2, 3)
    PhiI = Phi.inverse()
    up = lambda blocks, g: T.map_from(pair.T, blocks)(g)
    img = {}
    # Phi_{lambda,1} = Phi^{0,1,23} Phi^{1,2,3} = Phi, Phi_{lambda,2} = Phi, Phi_{lambda,3} = 1
    img["A1"] = one
    img["A2"] = PhiI * up([[1], [2, 3]], pair.A) * Phi
    img["A3"] = up([[1, 2], [3]], pair.A)
    img["B1"] = one
    img["B2"] = PhiI * up([[1], [2, 3]], pair.B) * Phi
    img["B3"] = up([[1, 2], [3]], pair.B)
    e = lambda v, s: (v * s).exp()
    s1 = SemidirectElement(T, e(T.t(1, 2), lam / 2), (2, 1, 3))
    s2 = SemidirectElement(T, PhiI * e(T.t(2, 3), lam / 2), (1, 3, 2)) \
        * SemidirectElement(T, Phi, ident)
    img["C12"] = PhiI * e(T.tblock([1], [2, 3]), lam) * Phi
    img["C23"] = PhiI * e(T.t(2, 3), lam) * Phi
    img["C13"] = e(T.tblock([1, 2], [3]), lam)
    gc = lc.group_commutator
    rep = {}
    rep["(A2,A3)=1"] = gc(img["A2"], img["A3"]).residual_to(one)
    rep["(B2,B3)=1"] = gc(img["B2"], img["B3"]).residual_to(one)
    rep["(B2,A2)=C12"] = gc(img["B2"], img["A2"]).residual_to(img["C12"])
    rep["(B3,A3A2^-1)=C23"] = gc(img["B3"], img["A3"] * img["A2"].inverse()).residual_to(img["C23"])
    tot = T.t(1, 2) + T.t(1, 3) + T.t(2, 3)
    rep["C12C23=exp(lam sum t)"] = (img["C12"] * img["C23"]).residual_to(e(tot, lam))
    rep["braid"] = (s1 * s2 * s1).residual_to(s2 * s1 * s2)
    sq = s1 * s1
    rep["sigma1^2 in exp"] = 0.0 if sq.perm == ident else float("inf")
    return img, {"sigma1": s1, "sigma2": s2}, rep


# ---------------------------------------------------------- Chen series

class Line:
    def __init__(self, a, b):
        self.a, self.b = complex(a), complex(b)

    def point(self, s):
        return self.a + s * (self.b - self.a)

    def deriv(self, s):
        return self.b - self.a


class Arc:
    """z(s) = c + (z_start - c) e^{i angle s}."""

    def __init__(self, z_start, angle, center=0.0):
        self.c, self.r0, self.ang = complex(center), complex(z_start) - complex(center), angle

    def point(self, s):
        return self.c + self.r0 * cmath.exp(1j * self.ang * s)

    def deriv(self, s):
        return 1j * self.ang * self.r0 * cmath.exp(1j * self.ang * s)


_GL = (0.5 - math.sqrt(3) / 6, 0.5 + math.sqrt(3) / 6)


def _magnus_step(env, field, seg, s, h):
    A1 = field(seg.point(s + _GL[0] * h)) * seg.deriv(s + _GL[0] * h)
    A2 = field(seg.point(s + _GL[1] * h)) * seg.deriv(s + _GL[1] * h)
    comm = env.mul(A2, A1) - env.mul(A1, A2)
    om = (A1 + A2) * (h / 2) + comm * (math.sqrt(3) * h * h / 12)
    return lc.envelope_exp(lc.EnvElement(env, om)).vec


class ChenResult:
    def __init__(self, elem, steps, rejected):
        self.elem, self.steps, self.rejected = elem, steps, rejected


def chen_transport(env, field, path, tol=1e-12, h0=0.05, hmin=1e-9):
    """T with F(end) = T F(start) for dF/dz = field(z) F along a path.

    field(z) returns a flat envelope vector; path is a list of segments.
    Fourth-order Magnus steps, step-doubling error control."""
    T = env.one().vec
    steps = rejected = 0
    for seg in path:
        s, h = 0.0, h0
        while s < 1.0 - 1e-15:
            h = min(h, 1.0 - s)
            full = _magnus_step(env, field, seg, s, h)
            half = env.mul(_magnus_step(env, field, seg, s + h / 2, h / 2),
                           _magnus_step(env, field, seg, s, h / 2))
            err = float(np.abs(full - half).max())
            if err <= tol or h <= hmin:
                if err > tol:
                    raise FloatingPointError("step size underflow near a pole")
                T = env.mul(half, T)
                s += h
                steps += 1
                h = h * min(2.0, 0.9 * (tol / max(err, 1e-300)) ** 0.2)
            else:
                rejected += 1
                h = h * max(0.2, 0.9 * (tol / err) ** 0.2)
    return ChenResult(lc.EnvElement(env, T), steps, rejected)


def chen_monodromy(env, field, path, **kw):
    """Group-like holonomy of dF = field F along path (see chen_transport)."""
    return chen_transport(env, field, path, **kw).elem


def reverse_path(path):
    out = []
    for seg in reversed(path):
        if isinstance(seg, Line):
            out.append(Line(seg.b, seg.a))
        else:
            out.append(Arc(seg.point(1.0), -seg.ang, seg.c))
    return out


# -------------------------------------------- two-point KZB monodromy

class TwoPointSystem:
    """dF/dz = K(z) F, K(z) = -y + k(z, ad x|tau)(t) with z = z_21,
    x = xbar_2, y = ybar_2, t = tbar_12, in the tbar_{1,2} envelope."""

    def __init__(self, tau, D, space=None, terms=None):
        self.tau = complex(tau)
        self.mp = sf._mp(tau, terms)
        self.D = D
        self.T = space or TbarEnvelope(2, D)
        T = self.T
        self.CA = ConnectionAlgebra(2, D, "tbar", alg=T.alg)
        self.env = T.env
        lie = T.alg
        W = np.zeros((self.env.N, lie.size), dtype=complex)
        for k in range(lie.size):
            v = np.zeros(lie.size, dtype=complex)
            v[k] = 1
            W[:, k] = self.env.from_lie(lc.LieElement(lie, v)).vec
        self.W = W
        self.x = T.gen("x2")
        self.y = T.gen("y2")
        self.t = T.t(1, 2)
        # (ad x)^m t in Lie coordinates, x = x2, t = t_21 = t_12
        self.adpow = self.CA.adpow_c[(2, 1)]
        self.yvec = self.CA.y_c[2]

    def K(self, z):
        J = sf.KZBJets(z, self.mp, self.D)
        m = min(len(J.k.c), self.adpow.shape[0])
        return self.W @ (J.k.c[:m] @ self.adpow[:m] - self.yvec)

    def F0_series(self, order=14):
        """Normalized solution at z = 0: z d/dz F = (t + z R(z)) F."""
        D = self.D
        S = sf.k_laurent2(self.mp, order + D)
        c = S.c
        env = self.env
        alg = EnvelopeAlgebra(env)
        tvec = self.t.vec
        # (ad x)^j t in the envelope
        adx = [self.W @ self.adpow[j] for j in range(self.adpow.shape[0])]
        R = {}
        for i in range(order):
            # coefficient of z^i in -y + ((z + ad x) S(z, ad x))(t)
            v = np.zeros(env.N, dtype=complex)
            if i == 0:
                v -= self.W @ self.yvec
            for j in range(len(adx)):
                if i >= 1 and i - 1 + j < c.shape[0] and j < c.shape[1]:
                    v += c[i - 1, j] * adx[j]
                if j >= 1 and i + j - 1 < c.shape[0]:
                    v += c[i, j - 1] * adx[j]
            R[i] = v
        coeffs = {(0,): tvec}
        for i in range(order):
            coeffs[(i + 1,)] = R[i]
        return solve_regular_singular(RegularSingularSystem(alg, [coeffs]), order)


def adjoint_xi_matrix(system, tau):
    """Matrix of ad(Xi(tau)) on the envelope, Xi = Delta_0 + a_0 E_2 t
    + sum_k a_2k E_{2k+2} (delta_2k + (ad x)^{2k} t); tau=None gives E = 1."""
    T, env = system.T, system.env
    alg = T.alg
    letters = env.letters
    M = np.zeros((env.N, env.N), dtype=complex)
    img, _ = lc.derivation_images(alg, 2, "Delta0")
    M += env.derivation_matrix([env.from_lie(img[l].to_complex()) for l in letters])
    E = (lambda k: 1.0) if tau is None else (lambda k: sf.eisenstein(k, tau))
    tvec = system.t.vec
    lie_t = system.t
    adt = env.left_matrix(tvec) - env.right_matrix(tvec)
    M += sf.a2n(0) * E(2) * adt
    for k in range(1, (system.D - 2) // 2 + 1):
        img, _ = lc.derivation_images(alg, 2, "delta", k)
        Dk = env.derivation_matrix([env.from_lie(img[l].to_complex()) for l in letters])
        v = system.W @ system.adpow[2 * k] if 2 * k < system.adpow.shape[0] else np.zeros(env.N)
        Dk = Dk + env.left_matrix(v) - env.right_matrix(v)
        M += sf.a2n(k) * E(2 * k + 2) * Dk
    return M


def adjoint_C(system, tau, tau_inf=8j, rtol=1e-12):
    """Ad of C(tau), 2 pi i dC/dtau + Xi(tau) C = 0, C ~ exp(-tau Xi_inf/(2 pi i))."""
    M_inf = adjoint_xi_matrix(system, None)
    start = expm(-(tau_inf / TWO_PI_I) * M_inf)
    N = start.shape[0]
    path = lambda s: tau_inf + s * (tau - tau_inf)
    dt = tau - tau_inf

    def rhs(s, v):
        M = adjoint_xi_matrix(system, path(s))
        Y = v.reshape(N, N)
        return (-(dt / TWO_PI_I) * (M @ Y)).reshape(-1)
    sol = solve_ivp(rhs, (0.0, 1.0), start.reshape(-1).astype(complex), method="DOP853",
                    rtol=rtol, atol=1e-14)
    if not sol.success:
        raise RuntimeError("tau transport failed: %s" % sol.message)
    return sol.y[:, -1].reshape(N, N)


def _power(env, v, c):
    """exp(c v) for a flat envelope vector with zero constant term."""
    return lc.envelope_exp(lc.EnvElement(env, v * c))


class MonodromyReport:
    def __init__(self, **kw):
        self.__dict__.update(kw)

    def as_dict(self):
        return {k: v for k, v in self.__dict__.items() if isinstance(v, (int, float, complex, str))}


def monodromy_AB(tau=1.8j, D=3, z0=None, phi=None, series_order=14, tol=1e-12,
                 tau_inf=8j, index=2):
    """Numerical A~, B~ from translation paths of the normalized two-point
    solution, compared with the associator formulas at lambda = 2 pi i."""
    sysm = TwoPointSystem(tau, D)
    env = sysm.env
    z0 = complex(0.05 + 0.05 * tau) if z0 is None else complex(z0)
    F0 = sysm.F0_series(series_order)
    F = lc.EnvElement(env, F0(z0))
    Fi = F.inverse()
    TA = chen_transport(env, sysm.K, [Line(z0, z0 + 1)], tol=tol)
    TB = chen_transport(env, sysm.K, [Line(z0, z0 + tau)], tol=tol)
    A0 = Fi * TA.elem * F
    B0 = Fi * _power(env, sysm.x.vec, TWO_PI_I) * TB.elem * F
    AdC = adjoint_C(sysm, tau, tau_inf)
    AdCi = np.linalg.inv(AdC)
    A_num = lc.EnvElement(env, AdCi @ A0.vec)
    B_num = lc.EnvElement(env, AdCi @ B0.vec)
    phi = phi or kz_associator(D)
    pair = EllipticPair(phi, TWO_PI_I, D, index=index, space=sysm.T)
    c = cmath.log(2 * math.pi / 1j)
    Pp = _power(env, sysm.t.vec, c)
    Pm = _power(env, sysm.t.vec, -c)
    A_alg = Pp * pair.A * Pm
    B_alg = Pp * pair.B * Pm
    # half-turn z0 -> -z0 followed by the relabelling 1 <-> 2
    half = chen_transport(env, sysm.K, [Arc(z0, math.pi)], tol=tol)
    swap = env.map_letters(env, -np.eye(env.r))
    sig = Fi * swap(half.elem * F)
    full = chen_transport(env, sysm.K, [Arc(z0, 2 * math.pi)], tol=tol)
    loop = Fi * full.elem * F
    return MonodromyReport(
        tau=complex(tau), D=D, z0=z0, branch_log=str(c),
        A_residual=A_num.residual_to(A_alg), B_residual=B_num.residual_to(B_alg),
        sigma_residual=sig.residual_to(_power(env, sysm.t.vec, 1j * math.pi)),
        loop_residual=loop.residual_to(_power(env, sysm.t.vec, 2j * math.pi)),
        series_compat=F0.compat, steps=TA.steps + TB.steps + half.steps,
        A_num=A_num, B_num=B_num, A_alg=A_alg, B_alg=B_alg)


# ------------------------------------------- Psi~ and Theta~ in a realization

def envelope_operator(elem, letters):
    """Evaluate a truncated envelope element on matrices assigned to its letters."""
    env = elem.env
    mats = [np.asarray(letters[name], dtype=complex) for name in env.letters]
    m = mats[0].shape[0]
    r = env.r
    out = elem.vec[0] * np.eye(m, dtype=complex)

    def block(coeffs, depth):
        # coeffs has r**depth entries, most significant letter first
        if depth == 1:
            return sum(c * M for c, M in zip(coeffs, mats))
        step = r ** (depth - 1)
        acc = np.zeros((m, m), dtype=complex)
        for l in range(r):
            part = coeffs[l * step:(l + 1) * step]
            if np.any(part):
                acc = acc + mats[l] @ block(part, depth - 1)
        return acc

    for d in range(1, env.D + 1):
        part = elem.vec[env.offsets[d]:env.offsets[d + 1]]
        if np.any(part):
            out = out + block(part, d)
    return out


def tilde_psi(lam=TWO_PI_I, kmax=4):
    """Psi~_lambda = exp(-(1/lambda)(Delta0 + sum_k a_2k(lambda) delta_2k)) as exponent coefficients."""
    if lam == 0:
        raise ValueError("lambda must be nonzero")
    head = {"Delta0": -1 / lam}
    for k in range(1, kmax + 1):
        head["delta%d" % (2 * k)] = -sf.a2n(k, lam) / lam
    return head


def _head_operator(head, R):
    out = head["Delta0"] * np.asarray(R.Delta0, dtype=complex)
    for name, c in head.items():
        if name.startswith("delta"):
            out = out + c * R.delta(int(name[5:]) // 2)
    return out


def _rel(A, B):
    return float(np.abs(A - B).max() / max(1.0, np.abs(B).max()))


def _pair_ops(pair, R):
    if R is None:
        raise ValueError("a realization is required")
    return envelope_operator(pair.A, R.letters), envelope_operator(pair.B, R.letters)


def psi_conjugation_residual(pair, R, extra=None):
    """Residuals of [Psi~]e^{lambda t/12} A~ (..)^{-1} = A~ and of B~ -> B~A~ on R.

    extra multiplies the conjugating operator on the right (sabotage hook)."""
    lam = pair.lam
    A, B = _pair_ops(pair, R)
    P = expm(_head_operator(tilde_psi(lam), R)) @ expm(lam * R.t[(1, 2)] / 12)
    if extra is not None:
        P = P @ extra
    Pi = np.linalg.inv(P)
    return _rel(P @ A @ Pi, A), _rel(P @ B @ Pi, B @ A)


class ThetaReport:
    def __init__(self, Theta, Psi, residuals, info):
        self.Theta, self.Psi, self.residuals, self.info = Theta, Psi, residuals, info

    def ok(self, tol=1e-3):
        return all(v < tol for v in self.residuals.values())

    def warnings(self, tol=1e-3):
        return ["%s residual %.3g exceeds %.0e" % (k, v, tol)
                for k, v in self.residuals.items() if not v < tol]


def _n1_transport(R, tau_from, tau_to, kmax, rtol):
    """Transport of 2 pi i F' + (Delta0 + sum a_2k E_{2k+2} delta_2k) F = 0 along a segment."""
    D0 = np.asarray(R.Delta0, dtype=complex)
    dl = {k: np.asarray(R.delta(k), dtype=complex) for k in range(1, kmax + 1)}
    a = {k: sf.a2n(k) for k in dl}
    m = D0.shape[0]
    dtau = tau_to - tau_from

    def rhs(s, v):
        tau = tau_from + s * dtau
        M = D0.copy()
        for k, dk in dl.items():
            if np.any(dk):
                M = M + a[k] * sf.eisenstein(2 * k + 2, tau) * dk
        return (-(dtau / TWO_PI_I) * (M @ v.reshape(m, m))).reshape(-1)

    sol = solve_ivp(rhs, (0.0, 1.0), np.eye(m, dtype=complex).reshape(-1), method="DOP853",
                    rtol=rtol, atol=rtol * 1e-3)
    if not sol.success:
        raise RuntimeError("tau transport failed: %s" % sol.message)
    return sol.y[:, -1].reshape(m, m)


def _normalized_F(R, tau, tau_inf, kmax, rtol):
    """F(tau) with F ~ exp(-(tau/2 pi i)(Delta0 + sum a_2k delta_2k)) at tau_inf."""
    if abs(cmath.exp(TWO_PI_I * tau_inf)) > 1e-12:
        raise ValueError("normalization regime unreachable: Im tau_inf too small")
    Minf = -_head_operator(tilde_psi(TWO_PI_I, kmax), R) * TWO_PI_I
    start = expm(-(tau_inf / TWO_PI_I) * Minf)
    return _n1_transport(R, tau_inf, tau, kmax, rtol) @ start


def theta_tilde_in_rep(R, tau=1.25j, tau_inf=6j, pair=None, kmax=4, rtol=1e-12,
                       literal_cocycle=False, max_cond=1e6):
    """Theta~ from c(tau)^{-1} F(-1/tau) = F(tau) Theta~ with n = 1 on R.

    c(tau)^{-1} = e^{-(2 pi i/tau) X}(-tau)^{-d} is the factor for which
    Theta~ is independent of tau; literal_cocycle=True uses the inverse
    (-tau)^d e^{(2 pi i/tau) X}, which is not. The branch of (-tau)^d is taken
    on the eigenvalues of d, which must be diagonalizable."""
    tau = complex(tau)
    ev, V = np.linalg.eig(np.asarray(R.d, dtype=complex))
    if np.linalg.cond(V) > 1e8:
        raise ValueError("ill-conditioned tau^d branch: d is not diagonalizable")
    X = np.asarray(R.X, dtype=complex)
    if literal_cocycle:
        powd = V @ np.diag(np.exp(ev * cmath.log(-tau))) @ np.linalg.inv(V)
        c_inv = powd @ expm((TWO_PI_I / tau) * X)
    else:
        powd = V @ np.diag(np.exp(-ev * cmath.log(-tau))) @ np.linalg.inv(V)
        c_inv = expm(-(TWO_PI_I / tau) * X) @ powd
    F1 = _normalized_F(R, tau, tau_inf, kmax, rtol)
    F2 = _normalized_F(R, -1 / tau, tau_inf, kmax, rtol)
    if max(np.linalg.cond(F1), np.linalg.cond(F2)) > max_cond:
        raise ValueError("normalization regime unreachable: F is ill-conditioned")
    Th = np.linalg.solve(F1, c_inv @ F2)
    Psi = expm(_head_operator(tilde_psi(TWO_PI_I, kmax), R))
    I = np.eye(Th.shape[0])
    Thi, Psii = np.linalg.inv(Th), np.linalg.inv(Psi)
    mp = np.linalg.matrix_power
    res = {
        "Theta^4 = 1": _rel(mp(Th, 4), I),
        "(Theta Psi)^3 = 1": _rel(mp(Th @ Psi, 3), I),
        "(Theta^2, Psi) = 1": _rel(Th @ Th @ Psi @ Thi @ Thi @ Psii, I),
    }
    if pair is not None:
        A, B = _pair_ops(pair, R)
        P = Th @ expm(1j * math.pi * R.t[(1, 2)] / 2)
        Pi = np.linalg.inv(P)
        Bi = np.linalg.inv(B)
        res["[Theta] A~ = B~^-1"] = _rel(P @ A @ Pi, Bi)
        res["[Theta] B~ = B~ A~ B~^-1"] = _rel(P @ B @ Pi, B @ A @ Bi)
    return ThetaReport(Th, Psi, res, {"tau": tau, "tau_inf": tau_inf, "dim": Th.shape[0]})
