"""Theta function, Eisenstein series and the jets k(z,x|tau), g(z,x|tau).

theta(z|tau) = u^{1/2} prod_{s>0}(1-q^s u) prod_{s>=0}(1-q^s/u) / (2 pi i prod_{s>0}(1-q^s)^2)
with u = e^{2 pi i z}, q = e^{2 pi i tau}.  Derivatives of log theta are
lattice sums of E_j(w) = (w d/dw)^j w/(1-w), so every z- and tau-derivative
used downstream is analytic (no finite differences).
"""
import math
from fractions import Fraction
from functools import lru_cache

import numpy as np

from . import _kernels

TWO_PI_I = 2j * math.pi
DEFAULT_ORDER = 8
DEFAULT_QTERMS = 60
EPS = 1e-17


class PoleError(ValueError):
    """Raised when a point lies on the lattice where a finite value is needed."""


# ------------------------------------------------------------ Bernoulli

@lru_cache(maxsize=None)
def bernoulli(n):
    """B_n with x/(e^x-1) = sum B_n x^n/n! (so B_1 = -1/2)."""
    B = [Fraction(1)]
    for m in range(1, n + 1):
        s = Fraction(0)
        for k in range(m):
            s += math.comb(m + 1, k) * B[k]
        B.append(-s / (m + 1))
    return B[n]


def a2n(m, lam=TWO_PI_I):
    """a_{2m}(lam) = -(2m+1) B_{2m+2} lam^{2m+2} / (2m+2)!; lam = 2 pi i by default."""
    if m < 0:
        raise ValueError("m must be nonnegative")
    c = -(2 * m + 1) * bernoulli(2 * m + 2) / math.factorial(2 * m + 2)
    return complex(float(c)) * lam ** (2 * m + 2)


def zeta_even(n):
    """zeta(2n) from Bernoulli numbers."""
    return float((-1) ** (n + 1) * bernoulli(2 * n) * (2 * math.pi) ** (2 * n)
                 / (2 * math.factorial(2 * n)))


# ------------------------------------------------------------- points

class ModularPoint:
    """tau in the upper half plane with a q-series truncation.

    terms=None picks enough terms for double precision; an explicit count is
    used as given (convergence studies)."""

    def __init__(self, tau, terms=None):
        tau = complex(tau)
        if tau.imag <= 0:
            raise ValueError("tau must lie in the upper half plane")
        self.tau = tau
        self.q = np.exp(TWO_PI_I * tau)
        aq = abs(self.q)
        need = int(math.ceil(math.log(EPS) / math.log(aq))) + 2 if aq > 0 else 1
        self.fixed = terms is not None
        self.terms = max(1, int(terms)) if self.fixed else max(DEFAULT_QTERMS, need)

    def __repr__(self):
        return "ModularPoint(tau=%r, terms=%d)" % (self.tau, self.terms)


def _mp(tau, terms=None):
    if isinstance(tau, ModularPoint):
        return tau
    return ModularPoint(tau, terms)


def lattice_distance(z, tau):
    """Euclidean distance from z to the lattice Z + tau Z."""
    tau = complex(tau)
    b = round((complex(z).imag) / tau.imag)
    best = float("inf")
    for bb in (b - 1, b, b + 1):
        w = complex(z) - bb * tau
        a = round(w.real)
        for aa in (a - 1, a, a + 1):
            best = min(best, abs(w - aa))
    return best


# -------------------------------------------------------------- jets

class Jet:
    """Truncated power series c_0 + c_1 x + ... + c_n x^n (complex)."""

    __slots__ = ("c",)

    def __init__(self, c):
        self.c = np.asarray(c, dtype=complex)

    @property
    def order(self):
        return len(self.c) - 1

    @classmethod
    def const(cls, a, n):
        c = np.zeros(n + 1, dtype=complex)
        c[0] = a
        return cls(c)

    @classmethod
    def var(cls, n, scale=1.0):
        c = np.zeros(n + 1, dtype=complex)
        if n >= 1:
            c[1] = scale
        return cls(c)

    def _n(self, o):
        return min(self.order, o.order)

    def __add__(self, o):
        if not isinstance(o, Jet):
            r = self.c.copy()
            r[0] += o
            return Jet(r)
        n = self._n(o)
        return Jet(self.c[:n + 1] + o.c[:n + 1])

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.c)

    def __sub__(self, o):
        return self + (-o)

    def __rsub__(self, o):
        return (-self) + o

    def __mul__(self, o):
        if not isinstance(o, Jet):
            return Jet(self.c * o)
        n = self._n(o)
        return Jet(_kernels.jet_mul(self.c, o.c, n))

    __rmul__ = __mul__

    def truncate(self, n):
        return Jet(self.c[:n + 1].copy())

    def exp(self):
        """exp of a jet (constant term allowed)."""
        n = self.order
        a = self.c.copy()
        c0 = np.exp(a[0])
        a[0] = 0
        out = np.zeros(n + 1, dtype=complex)
        out[0] = 1
        # f' = a' f
        da = a[1:] * np.arange(1, n + 1)
        for m in range(1, n + 1):
            out[m] = np.dot(da[:m], out[m - 1::-1][:m]) / m
        return Jet(out * c0)

    def log(self):
        n = self.order
        c0 = self.c[0]
        if c0 == 0:
            raise ZeroDivisionError("log of a jet without constant term")
        f = self.c / c0
        out = np.zeros(n + 1, dtype=complex)
        out[0] = np.log(c0)
        # f l' = f'
        for m in range(1, n + 1):
            s = m * f[m] - sum(k * out[k] * f[m - k] for k in range(1, m))
            out[m] = s / m
        return Jet(out)

    def inverse(self):
        n = self.order
        if self.c[0] == 0:
            raise ZeroDivisionError("jet not invertible")
        out = np.zeros(n + 1, dtype=complex)
        out[0] = 1 / self.c[0]
        for m in range(1, n + 1):
            out[m] = -np.dot(self.c[1:m + 1], out[m - 1::-1][:m]) / self.c[0]
        return Jet(out)

    def __truediv__(self, o):
        if isinstance(o, Jet):
            return self * o.inverse()
        return Jet(self.c / o)

    def div_x(self, k=1, check=1e-300):
        """Exact division by x^k; the k lowest coefficients must vanish."""
        if k and np.abs(self.c[:k]).max() > check:
            raise ArithmeticError("jet is not divisible by x^%d" % k)
        return Jet(self.c[k:].copy())

    def shift_div_x(self):
        """(f - f(0))/x."""
        return Jet(self.c[1:].copy())

    def deriv(self):
        n = self.order
        return Jet(self.c[1:] * np.arange(1, n + 1))

    def scale(self, a):
        """f(a x)."""
        return Jet(self.c * a ** np.arange(self.order + 1))

    def reversed(self):
        """f(-x)."""
        return self.scale(-1)

    def __call__(self, x):
        return np.polyval(self.c[::-1], x)

    def norm(self):
        return float(np.abs(self.c).max(initial=0.0))

    def __repr__(self):
        return "Jet(%s)" % np.array2string(self.c, precision=4)


class Jet2:
    """Truncated series in (u, v): c[a, b] u^a v^b with a + b <= n."""

    __slots__ = ("c", "n")

    def __init__(self, c, n=None):
        c = np.asarray(c, dtype=complex)
        self.n = c.shape[0] - 1 if n is None else n
        self.c = c[:self.n + 1, :self.n + 1].copy()
        mask = np.add.outer(np.arange(self.n + 1), np.arange(self.n + 1)) > self.n
        self.c[mask] = 0

    @classmethod
    def zero(cls, n):
        return cls(np.zeros((n + 1, n + 1)), n)

    @classmethod
    def const(cls, a, n):
        c = np.zeros((n + 1, n + 1), dtype=complex)
        c[0, 0] = a
        return cls(c, n)

    @classmethod
    def compose_linear(cls, f, a, b, n=None):
        """f(a u + b v) for a one-variable jet f."""
        n = f.order if n is None else min(n, f.order)
        c = np.zeros((n + 1, n + 1), dtype=complex)
        for m in range(n + 1):
            if f.c[m] == 0:
                continue
            for i in range(m + 1):
                c[i, m - i] += f.c[m] * math.comb(m, i) * a ** i * b ** (m - i)
        return cls(c, n)

    def _lift(self, o):
        if isinstance(o, Jet2):
            n = min(self.n, o.n)
            return n, self.c[:n + 1, :n + 1], o.c[:n + 1, :n + 1]
        return None

    def __add__(self, o):
        if not isinstance(o, Jet2):
            c = self.c.copy()
            c[0, 0] += o
            return Jet2(c, self.n)
        n, a, b = self._lift(o)
        return Jet2(a + b, n)

    __radd__ = __add__

    def __neg__(self):
        return Jet2(-self.c, self.n)

    def __sub__(self, o):
        return self + (-o)

    def __rsub__(self, o):
        return (-self) + o

    def __mul__(self, o):
        if not isinstance(o, Jet2):
            return Jet2(self.c * o, self.n)
        n, a, b = self._lift(o)
        return Jet2(_kernels.jet2_mul(a, b, n), n)

    __rmul__ = __mul__

    def div_u(self, check=None):
        low = np.abs(self.c[0, :]).max()
        if check is not None and low > check:
            raise ArithmeticError("not divisible by u")
        c = np.zeros((self.n, self.n), dtype=complex)
        c[:, :] = self.c[1:, :self.n]
        return Jet2(c, self.n - 1)

    def div_v(self, check=None):
        low = np.abs(self.c[:, 0]).max()
        if check is not None and low > check:
            raise ArithmeticError("not divisible by v")
        c = np.zeros((self.n, self.n), dtype=complex)
        c[:, :] = self.c[:self.n, 1:]
        return Jet2(c, self.n - 1)

    def div_upv(self):
        """Division by (u + v); returns (quotient, max remainder)."""
        n = self.n
        g = np.zeros((n, n), dtype=complex)
        rem = abs(self.c[0, 0])
        for d in range(1, n + 1):
            # f[a, d-a] = g[a-1, d-a] + g[a, d-1-a]
            prev = 0
            for a in range(d):
                val = self.c[a, d - a] - prev
                g[a, d - 1 - a] = val
                prev = val
            rem = max(rem, abs(self.c[d, 0] - prev))
        return Jet2(g, n - 1), rem

    def swap(self):
        return Jet2(self.c.T.copy(), self.n)

    def truncate(self, n):
        return Jet2(self.c[:n + 1, :n + 1], n)

    def norm(self):
        return float(np.abs(self.c).max(initial=0.0))


# ------------------------------------------------------- theta numerics

def _qsum_terms(mp):
    return mp.terms


def logtheta_derivatives(z, tau, kmax, terms=None):
    """(D, Dt): D[k] = d^k/dz^k log theta(z|tau), k = 1..kmax (D[0] unused),
    Dt[k] = d/dtau D[k], k = 0..kmax."""
    mp = _mp(tau, terms)
    if lattice_distance(z, mp.tau) < 1e-12:
        raise PoleError("z on the lattice")
    q, N = mp.q, mp.terms
    u = np.exp(TWO_PI_I * complex(z))
    Su = _kernels.lattice_sums(u, q, 1, N, kmax)
    Si = _kernels.lattice_sums(1 / u, q, 0, N, kmax)
    Wu = _kernels.lattice_sums(u, q, 1, N, kmax + 1, weight=1)
    Wi = _kernels.lattice_sums(1 / u, q, 0, N, kmax + 1, weight=1)
    W0 = _kernels.lattice_sums(1.0, q, 1, N, 0, weight=1)
    D = np.zeros(kmax + 1, dtype=complex)
    Dt = np.zeros(kmax + 1, dtype=complex)
    if kmax >= 1:
        D[1] = 1j * math.pi
    for j in range(kmax):
        D[j + 1] += -(TWO_PI_I ** (j + 1)) * Su[j] - (-TWO_PI_I) ** (j + 1) * Si[j]
    Dt[0] = -TWO_PI_I * (Wu[0] + Wi[0]) + 2 * TWO_PI_I * W0[0]
    for j in range(kmax):
        Dt[j + 1] = -TWO_PI_I * (TWO_PI_I ** (j + 1) * Wu[j + 1]
                                 + (-TWO_PI_I) ** (j + 1) * Wi[j + 1])
    return D, Dt


def theta_over_x_logjet(tau, order, terms=None):
    """(M, Mt): jets of log(theta(x|tau)/x) and its tau-derivative."""
    mp = _mp(tau, terms)
    q, N = mp.q, mp.terms
    T = _kernels.lattice_sums(1.0, q, 1, N, order)
    TW = _kernels.lattice_sums(1.0, q, 1, N, order + 1, weight=1)
    M = np.zeros(order + 1, dtype=complex)
    Mt = np.zeros(order + 1, dtype=complex)
    for k in range(1, order + 1):
        fac = (TWO_PI_I ** k + (-TWO_PI_I) ** k)
        M[k] = -fac * T[k - 1] / math.factorial(k)
        Mt[k] = -fac * TWO_PI_I * TW[k] / math.factorial(k)
    for n in range(1, order // 2 + 1):
        M[2 * n] += -zeta_even(n) / n
    return Jet(M), Jet(Mt)


def theta(z, tau, terms=None):
    """theta(z|tau) by the product formula."""
    mp = _mp(tau, terms)
    q, N = mp.q, mp.terms
    z = complex(z)
    u = np.exp(TWO_PI_I * z)
    s = np.arange(1, N + 1)
    qs = q ** s
    val = np.exp(1j * math.pi * z) * (1 - 1 / u)
    val *= np.prod(1 - qs * u) * np.prod(1 - qs / u) / np.prod(1 - qs) ** 2
    return val / TWO_PI_I


def theta_dz(k, z, tau, terms=None):
    """k-th z-derivative of theta(z|tau), analytic."""
    mp = _mp(tau, terms)
    if lattice_distance(z, mp.tau) < 1e-9:
        # reduce to z = 0 using periodicity in 1 and quasi-periodicity in tau
        b = round(complex(z).imag / mp.tau.imag)
        a = round((complex(z) - b * mp.tau).real)
        if b != 0:
            raise PoleError("derivatives at lattice points off the real line are not supported")
        M, _ = theta_over_x_logjet(mp, k + 1)
        jet = Jet(np.concatenate([[0], M.exp().c[:k]]))
        return (-1) ** a * jet.c[k] * math.factorial(k)
    D, _ = logtheta_derivatives(z, mp, k)
    L = np.zeros(k + 1, dtype=complex)
    for m in range(1, k + 1):
        L[m] = D[m] / math.factorial(m)
    return theta(z, mp) * Jet(L).exp().c[k] * math.factorial(k)


def dedekind_eta(tau, terms=None):
    mp = _mp(tau, terms)
    s = np.arange(1, mp.terms + 1)
    return np.exp(TWO_PI_I * mp.tau / 24) * np.prod(1 - mp.q ** s)


def dlog_eta(tau, terms=None):
    """d/dtau log eta(tau) by differentiating the product term by term."""
    mp = _mp(tau, terms)
    s = np.arange(1, mp.terms + 1)
    qs = mp.q ** s
    return TWO_PI_I / 24 - TWO_PI_I * np.sum(s * qs / (1 - qs))


def _divisor_sums(p, N):
    sig = np.zeros(N + 1)
    for d in range(1, N + 1):
        sig[d::d] += float(d) ** p
    return sig


def eisenstein(two_k, tau, terms=None):
    """E_{2k}(tau) = 1 - (4k/B_{2k}) sum_n sigma_{2k-1}(n) q^n."""
    if two_k < 2 or two_k % 2:
        raise ValueError("weight must be even and >= 2")
    mp = _mp(tau, terms)
    N = mp.terms
    sig = _divisor_sums(two_k - 1, N)
    n = np.arange(N + 1)
    series = np.sum(sig[1:] * mp.q ** n[1:])
    return 1 - complex(float(Fraction(2 * two_k) / bernoulli(two_k))) * series


# -------------------------------------------------------- k and g jets

def _trig_jets(n):
    """Jets of cos(pi x), sin(pi x) and pi x / sin(pi x) to order n."""
    c = np.zeros(n + 1, dtype=complex)
    sn = np.zeros(n + 1, dtype=complex)
    for m in range(n + 1):
        t = math.pi ** m / math.factorial(m)
        if m % 2 == 0:
            c[m] = (-1) ** (m // 2) * t
        else:
            sn[m] = (-1) ** (m // 2) * t
    sinc = Jet(np.concatenate([sn[1:], [0]]) / math.pi)
    return Jet(c), Jet(sn), sinc.inverse()


def _logP_derivatives(w, mp, kmax):
    """Derivatives of log prod_{s>0}(1-q^s u)(1-q^s/u) at w: (P, Pt) with
    P[k] = d^k/dw^k (k = 1..kmax) and Pt[k] = d/dtau of it (k = 0..kmax)."""
    q, N = mp.q, mp.terms
    u = np.exp(TWO_PI_I * complex(w))
    Su = _kernels.lattice_sums(u, q, 1, N, kmax)
    Si = _kernels.lattice_sums(1 / u, q, 1, N, kmax)
    Wu = _kernels.lattice_sums(u, q, 1, N, kmax, weight=1)
    Wi = _kernels.lattice_sums(1 / u, q, 1, N, kmax, weight=1)
    P = np.zeros(kmax + 1, dtype=complex)
    Pt = np.zeros(kmax + 1, dtype=complex)
    for k in range(1, kmax + 1):
        P[k] = -(TWO_PI_I ** k) * Su[k - 1] - (-TWO_PI_I) ** k * Si[k - 1]
    for k in range(0, kmax + 1):
        Pt[k] = -TWO_PI_I * (TWO_PI_I ** k * Wu[k] + (-TWO_PI_I) ** k * Wi[k])
    return P, Pt


class KZBJets:
    """Jets in x of k(z,x|tau), g = k_x and their z-, tau-derivatives at one point.

    z is first moved into the strip |Im z| <= Im(tau)/2 with the
    quasi-periodicity of k; there

        x theta(z+x)/(theta(z) theta(x)) = (cos pi x + cot(pi z) sin pi x)
                                          * (pi x / sin pi x) * exp(Q(x))

    with Q built from the regular product part only, so no pole of theta is
    cancelled numerically.
    """

    def __init__(self, z, tau, order=DEFAULT_ORDER, terms=None):
        mp = _mp(tau, terms)
        self.z, self.mp, self.order = complex(z), mp, order
        if lattice_distance(z, mp.tau) < 1e-9:
            raise PoleError("z = %r lies on the lattice" % (z,))
        n = order + 2
        b = int(round(self.z.imag / mp.tau.imag))
        w = self.z - b * mp.tau
        w -= round(w.real)
        self.shift = b
        P, Pt = _logP_derivatives(w, mp, n + 1)
        P0, P0t = _logP_derivatives(0.0, mp, n)
        Q = np.zeros(n + 1, dtype=complex)
        Qt = np.zeros(n + 1, dtype=complex)
        Qz = np.zeros(n + 1, dtype=complex)
        for m in range(1, n + 1):
            f = math.factorial(m)
            Q[m] = (P[m] - P0[m]) / f
            Qt[m] = (Pt[m] - P0t[m]) / f
            Qz[m] = P[m + 1] / f
        cos_j, sin_j, inv_sinc = _trig_jets(n)
        cot = math.pi * np.cos(math.pi * w) / np.sin(math.pi * w) / math.pi
        csc2 = 1 / np.sin(math.pi * w) ** 2
        G = inv_sinc * Jet(Q).exp()
        trig = cos_j + sin_j * cot
        E = trig * G
        Et = E * Jet(Qt)
        Ez = sin_j * (-math.pi * csc2) * G + E * Jet(Qz)
        if b:
            # k(z) = e^{-2 pi i b x} k(w) + (e^{-2 pi i b x} - 1)/x, with w = z - b tau
            ex = Jet([(-TWO_PI_I * b) ** m / math.factorial(m) for m in range(n + 1)])
            Et = ex * (Et - Ez * b)
            E = ex * E
            Ez = ex * Ez
        self._E, self._Et, self._Ez = E, Et, Ez

    def _cut(self, J, extra=0):
        return Jet(J.c[1:self.order + 2 + extra])

    @property
    def k(self):
        return self._cut(self._E)

    @property
    def k_tau(self):
        return self._cut(self._Et)

    @property
    def k_z(self):
        return self._cut(self._Ez)

    @property
    def g(self):
        return self._cut(self._E, 1).deriv()

    @property
    def g_tau(self):
        return self._cut(self._Et, 1).deriv()

    @property
    def g_z(self):
        return self._cut(self._Ez, 1).deriv()


def k_jet(z, tau, order=DEFAULT_ORDER, terms=None):
    """Coefficients of x^0..x^order of theta(z+x)/(theta(z)theta(x)) - 1/x."""
    return KZBJets(z, tau, order, terms).k


def g_jet(z, tau, order=DEFAULT_ORDER, terms=None):
    return KZBJets(z, tau, order, terms).g


def g_jet0(tau, order=DEFAULT_ORDER, terms=None):
    """g(0,x|tau) = (log theta/x)''(x) as a jet."""
    M, _ = theta_over_x_logjet(tau, order + 2, terms)
    return M.deriv().deriv().truncate(order)


def g_jet0_tau(tau, order=DEFAULT_ORDER, terms=None):
    _, Mt = theta_over_x_logjet(tau, order + 2, terms)
    return Mt.deriv().deriv().truncate(order)


def phi_jet(tau, order=DEFAULT_ORDER, terms=None):
    """phi(x|tau) = g(0,0|tau) - g(0,x|tau)."""
    g0 = g_jet0(tau, order, terms)
    return g0.c[0] - g0


def phi_from_eisenstein(tau, order=DEFAULT_ORDER, terms=None, lam=TWO_PI_I):
    """sum_{n>=1} a_{2n} E_{2n+2}(tau) x^{2n}."""
    c = np.zeros(order + 1, dtype=complex)
    for n in range(1, order // 2 + 1):
        c[2 * n] = a2n(n, lam) * eisenstein(2 * n + 2, tau, terms)
    return Jet(c)


def k_laurent2(tau, order, terms=None):
    """Two-variable jet S(z, x) with k(z,x|tau) = 1/z + (z + x) S(z, x) near z = 0.

    Variables are (u, v) = (z, x)."""
    n = order + 2
    M, _ = theta_over_x_logjet(tau, n, terms)
    Th = M.exp()
    R = Jet2.compose_linear(Th, 1, 1, n) * Jet2.compose_linear(Th.inverse(), 1, 0, n) \
        * Jet2.compose_linear(Th.inverse(), 0, 1, n)
    return (R - 1).div_u().div_v()


# ---------------------------------------------------- scalar identities

def sample_tau(rng, im_range=(0.6, 2.0)):
    return complex(rng.uniform(-0.5, 0.5), rng.uniform(*im_range))


def sample_z(rng, tau, margin=0.05, avoid=()):
    """Uniform point of the period parallelogram away from the lattice
    and from the given points modulo the lattice."""
    while True:
        z = rng.uniform(0, 1) + rng.uniform(0, 1) * tau
        if lattice_distance(z, tau) < margin:
            continue
        if any(lattice_distance(z - w, tau) < margin for w in avoid):
            continue
        return z


def _rel(res, *terms):
    scale = max([1.0] + [t.norm() if hasattr(t, "norm") else abs(t) for t in terms])
    return res / scale


def _k2(J, a, b, n):
    return Jet2.compose_linear(J, a, b, n)


def fay_residual(z, zp, tau, order=DEFAULT_ORDER, terms=None):
    """Three-term identity for ktilde(z,x) = k + 1/x, multiplied out by u v (u+v)."""
    n = order
    mp = _mp(tau, terms)
    kz = KZBJets(z, mp, n + 1).k
    kzp = KZBJets(zp, mp, n + 1).k
    kd = KZBJets(zp - z, mp, n + 1).k
    one = Jet2.const(1, n)
    U = Jet2.compose_linear(Jet.var(n + 1), 1, 0, n)
    V = Jet2.compose_linear(Jet.var(n + 1), 0, 1, n)
    W = U + V
    vK_z_mv = V * _k2(kz, 0, -1, n) - one          # v ktilde(z,-v)
    wK_zp = W * _k2(kzp, 1, 1, n) + one            # (u+v) ktilde(z',u+v)
    uK_z = U * _k2(kz, 1, 0, n) + one              # u ktilde(z,u)
    wK_d = W * _k2(kd, 1, 1, n) + one
    uK_zp = U * _k2(kzp, 1, 0, n) + one
    vK_d = V * _k2(kd, 0, 1, n) + one
    t1 = U * vK_z_mv * wK_zp
    t2 = V * uK_z * wK_d
    t3 = W * uK_zp * vK_d
    return _rel((t1 - t2 + t3).norm(), t1, t2, t3)


def six_term_k_residual(z, zp, tau, order=DEFAULT_ORDER, terms=None):
    """Six-term k identity (scalar form of the dynamical Yang-Baxter identity)."""
    n = order + 2
    mp = _mp(tau, terms)
    kz, kzp, kd = (KZBJets(w, mp, n).k for w in (z, zp, zp - z))
    a = _k2(kz, 0, -1, n) * _k2(kzp, 1, 1, n)
    b = _k2(kz, 1, 0, n) * _k2(kd, 1, 1, n)
    c = _k2(kzp, 1, 0, n) * _k2(kd, 0, 1, n)
    d = (_k2(kd, 0, 1, n) - _k2(kd, 1, 1, n)).div_u()
    e = (_k2(kzp, 1, 0, n) - _k2(kzp, 1, 1, n)).div_v()
    f, rem = (_k2(kz, 1, 0, n) - _k2(kz, 0, -1, n)).div_upv()
    tot = (a - b + c).truncate(order) + d.truncate(order) + e.truncate(order) - f.truncate(order)
    return max(_rel(tot.norm(), a, b, c, d, e, f), rem)


def triple_theta_residual(z, x, tau, terms=None):
    mp = _mp(tau, terms)
    vals = {}
    for key, w in (("z", z), ("x", x), ("zx", z + x)):
        D, _ = logtheta_derivatives(w, mp, 2)
        vals[key] = (D[1], D[2] + D[1] ** 2)
    tz, tx, tzx = vals["z"][0], vals["x"][0], vals["zx"][0]
    parts = [2 * tz * tx, -2 * tx * tzx, -2 * tz * tzx, vals["z"][1], vals["x"][1],
             vals["zx"][1], -12j * math.pi * dlog_eta(mp)]
    return abs(sum(parts)) / max(1.0, max(abs(p) for p in parts))


def heat_residual(z, tau, terms=None):
    """d_tau log vartheta - (1/4 pi i) vartheta''/vartheta, vartheta = eta^3 theta."""
    mp = _mp(tau, terms)
    D, Dt = logtheta_derivatives(z, mp, 2)
    lhs = Dt[0] + 3 * dlog_eta(mp)
    rhs = (D[2] + D[1] ** 2) / (4j * math.pi)
    return abs(lhs - rhs) / max(1.0, abs(lhs), abs(rhs))


def k_modularity_residual(z, tau, order=DEFAULT_ORDER, terms=None):
    """(1/tau) k(z/tau, x|-1/tau) = e^{2 pi i z x} k(z, tau x|tau) + (e^{2 pi i z x} - 1)/(x tau)."""
    tau = complex(tau)
    lhs = KZBJets(z / tau, -1 / tau, order, terms).k * (1 / tau)
    ex = Jet([(TWO_PI_I * z) ** m / math.factorial(m) for m in range(order + 2)])
    kk = KZBJets(z, tau, order, terms).k.scale(tau)
    rhs = (ex.truncate(order) * kk) + ex.shift_div_x() * (1 / tau)
    return _rel((lhs - rhs).norm(), lhs, rhs)


def k_shift_residuals(z, tau, order=DEFAULT_ORDER, terms=None):
    """Residuals of k(z+1) = k(z) and k(z+tau) = e^{-2 pi i x} k(z) + (e^{-2 pi i x}-1)/x."""
    mp = _mp(tau, terms)
    k0 = KZBJets(z, mp, order).k
    k1 = KZBJets(z + 1, mp, order).k
    kt = KZBJets(z + mp.tau, mp, order).k
    ex = Jet([(-TWO_PI_I) ** m / math.factorial(m) for m in range(order + 2)])
    rhs = ex.truncate(order) * k0 + ex.shift_div_x()
    return _rel((k1 - k0).norm(), k0), _rel((kt - rhs).norm(), kt, rhs)


def g_shift_residual(z, tau, order=DEFAULT_ORDER, terms=None):
    """g(z+tau) = e^{-2pi i x} g(z) - 2 pi i e^{-2 pi i x} k(z) + (1/x)((1-e^{-2pi i x})/x - 2 pi i e^{-2 pi i x})."""
    mp = _mp(tau, terms)
    J0 = KZBJets(z, mp, order)
    Jt = KZBJets(z + mp.tau, mp, order)
    J1 = KZBJets(z + 1, mp, order)
    n = order
    ex = Jet([(-TWO_PI_I) ** m / math.factorial(m) for m in range(n + 3)])
    # (1 - e)/x - 2 pi i e, then divided by x
    inner = (-ex).shift_div_x() + ex.truncate(n + 1) * (-TWO_PI_I)
    tail = inner.div_x(1, check=1e-9 * max(1.0, inner.norm()))
    rhs = ex.truncate(n) * J0.g - TWO_PI_I * ex.truncate(n) * J0.k + tail.truncate(n)
    r_tau = _rel((Jt.g - rhs).norm(), Jt.g, rhs)
    r_one = _rel((J1.g - J0.g).norm(), J0.g)
    return max(r_tau, r_one)


def _H_parts(z, zp, tau, order, terms):
    n = order + 3
    mp = _mp(tau, terms)

    def jets(w):
        if lattice_distance(w, mp.tau) < 1e-9:
            return None
        return KZBJets(w, mp, n)

    def kof(w):
        return jets(w).k

    def gof(w):
        if lattice_distance(w, mp.tau) < 1e-9:
            return g_jet0(mp, n)
        return jets(w).g

    kz, kzp = kof(z), kof(zp)
    kxz, kxzp = kz.deriv(), kzp.deriv()
    U = Jet2.compose_linear(Jet.var(n), 1, 0, n)
    V = Jet2.compose_linear(Jet.var(n), 0, 1, n)
    p1 = (_k2(kz, 1, 1, n) - _k2(kz, 1, 0, n) - V * _k2(kxz, 1, 0, n - 1)).div_v().div_v()
    p2 = (_k2(kzp, 1, 1, n) - _k2(kzp, 0, 1, n) - U * _k2(kxzp, 0, 1, n - 1)).div_u().div_u()
    gd = gof(zp - z)
    p3, rem = (_k2(gd, -1, 0, n) - _k2(gd, 0, 1, n)).div_upv()
    p4 = _k2(gof(-zp), 0, -1, n) * _k2(kof(-z), -1, 0, n)
    p5 = _k2(gof(-z), -1, 0, n) * _k2(kof(-zp), 0, -1, n)
    p6 = _k2(gof(z - zp), 0, -1, n) * _k2(kz, 1, 1, n)
    p7 = _k2(gd, -1, 0, n) * _k2(kzp, 1, 1, n)
    cut = order
    parts = [p1.truncate(cut), -p2.truncate(cut), p3.truncate(cut), -p4.truncate(cut),
             p5.truncate(cut), -p6.truncate(cut), p7.truncate(cut)]
    return parts, rem


def H_function(z, zp, tau, order=DEFAULT_ORDER, terms=None):
    parts, _ = _H_parts(z, zp, tau, order, terms)
    tot = parts[0]
    for p in parts[1:]:
        tot = tot + p
    return tot


def H_residual(z, zp, tau, order=DEFAULT_ORDER, terms=None):
    parts, rem = _H_parts(z, zp, tau, order, terms)
    tot = parts[0]
    for p in parts[1:]:
        tot = tot + p
    return max(_rel(tot.norm(), *parts), rem)


def L_function(z, tau, order=DEFAULT_ORDER, terms=None):
    """L(z,u,v) from the commutation identity, as a (u,v)-jet."""
    n = order + 3
    mp = _mp(tau, terms)
    J = KZBJets(z, mp, n)
    k, g = J.k, J.g
    kx = k.deriv()
    ph = phi_jet(mp, n)
    U = Jet2.compose_linear(Jet.var(n), 1, 0, n)
    V = Jet2.compose_linear(Jet.var(n), 0, 1, n)
    dphi = _k2(ph, 1, 0, n) - _k2(ph, 0, 1, n)
    q1, rem = dphi.div_upv()
    t2 = _k2(k, 1, 1, n) * dphi
    t3 = _k2(g, 1, 0, n) * _k2(k, 0, 1, n) - _k2(k, 1, 0, n) * _k2(g, 0, 1, n)
    p1 = (_k2(k, 1, 1, n) - _k2(k, 1, 0, n) - V * _k2(kx, 1, 0, n - 1)).div_v().div_v()
    p2 = (_k2(k, 1, 1, n) - _k2(k, 0, 1, n) - U * _k2(kx, 0, 1, n - 1)).div_u().div_u()
    cut = order
    parts = [q1.truncate(cut) * 0.5, t2.truncate(cut) * 0.5, t3.truncate(cut) * 0.5,
             p1.truncate(cut) * -0.5, p2.truncate(cut) * 0.5]
    return parts, rem


def L_residual(z, tau, order=DEFAULT_ORDER, terms=None):
    parts, rem = L_function(z, tau, order, terms)
    tot = parts[0]
    for p in parts[1:]:
        tot = tot + p
    return max(_rel(tot.norm(), *parts), rem)


def L_vs_H_residual(z, tau, order=DEFAULT_ORDER, terms=None):
    parts, _ = L_function(z, tau, order, terms)
    L = parts[0]
    for p in parts[1:]:
        L = L + p
    H = H_function(z, z, tau, order, terms)
    return _rel((L + H * 0.5).norm(), L, H)


SCALAR_IDENTITIES = ("fay", "triple_theta", "k_modularity", "g_modularity",
                     "H_vanishing", "heat", "L_vanishing")


def check_scalar_identity(name, samples=20, seed=0, order=DEFAULT_ORDER, terms=None):
    """Max residual of a named scalar identity over random sample points."""
    if name not in SCALAR_IDENTITIES:
        raise KeyError("unknown identity %r; known: %s" % (name, ", ".join(SCALAR_IDENTITIES)))
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        tau = sample_tau(rng)
        mp = ModularPoint(tau, terms)
        z = sample_z(rng, tau)
        if name == "fay":
            zp = sample_z(rng, tau, avoid=(z,))
            r = max(fay_residual(z, zp, mp, order), six_term_k_residual(z, zp, mp, order))
        elif name == "triple_theta":
            x = sample_z(rng, tau, avoid=(-z,))
            r = triple_theta_residual(z, x, mp)
        elif name == "k_modularity":
            r = max(k_modularity_residual(z, tau, order, terms), *k_shift_residuals(z, mp, order))
        elif name == "g_modularity":
            r = g_shift_residual(z, mp, order)
        elif name == "H_vanishing":
            zp = sample_z(rng, tau, avoid=(z,))
            r = H_residual(z, zp, mp, order)
        elif name == "heat":
            r = heat_residual(z, mp)
        else:
            r = max(L_residual(z, mp, order), L_vs_H_residual(z, mp, order))
        worst = max(worst, float(r))
    return worst
