"""Hot numeric kernels: q-series lattice sums and jet products.

Each kernel has a numba and a plain numpy implementation.  The numba path
is used when numba imports and UKZB_KERNELS is not set to "numpy".
"""
import os

import numpy as np

_WANT = os.environ.get("UKZB_KERNELS", "numba").strip().lower()

try:
    if _WANT == "numpy":
        raise ImportError("numpy kernels requested")
    from numba import njit
    BACKEND = "numba"
except ImportError:
    BACKEND = "numpy"


def eulerian_numerators(jmax):
    """P_j with (w d/dw)^j (w/(1-w)) = P_j(w)/(1-w)^{j+1}, coefficients low to high."""
    P = np.zeros((jmax + 1, jmax + 2))
    P[0, 1] = 1.0
    for j in range(jmax):
        p = P[j]
        dp = np.zeros_like(p)
        dp[:-1] = p[1:] * np.arange(1, len(p))
        # w * (p'(1-w) + (j+1) p)
        inner = dp.copy()
        inner[1:] -= dp[:-1]
        inner += (j + 1) * p
        P[j + 1, 1:] = inner[:-1]
    return P


_P_CACHE = {}


def _numerators(jmax):
    if jmax not in _P_CACHE:
        _P_CACHE[jmax] = eulerian_numerators(jmax)
    return _P_CACHE[jmax]


def _sums_numpy(w0, q, s0, s1, jmax, weight, P):
    out = np.zeros(jmax + 1, dtype=np.complex128)
    if s1 < s0:
        return out
    s = np.arange(s0, s1 + 1)
    w = w0 * q ** s
    big = np.abs(w) > 1.0
    with np.errstate(over="ignore", invalid="ignore"):
        v = np.where(big, 1.0 / np.where(big, w, 1), w)
    sw = s.astype(float) ** weight
    den = 1.0 - v
    powv = v[None, :] ** np.arange(P.shape[1])[:, None]
    for j in range(jmax + 1):
        e = (P[j] @ powv) / den ** (j + 1)
        if j == 0:
            e = np.where(big, -1.0 - e, e)
        elif (j + 1) % 2 == 1:
            e = np.where(big, -e, e)
        out[j] = np.sum(sw * e)
    return out


if BACKEND == "numba":
    @njit(cache=True)
    def _sums_numba(w0, q, s0, s1, jmax, weight, P):
        out = np.zeros(jmax + 1, dtype=np.complex128)
        deg = P.shape[1]
        qs = q ** s0
        for s in range(s0, s1 + 1):
            w = w0 * qs
            qs *= q
            big = abs(w) > 1.0
            v = 1.0 / w if big else w
            den = 1.0 - v
            sw = float(s) ** weight
            dpow = den
            for j in range(jmax + 1):
                acc = 0j
                for c in range(deg - 1, -1, -1):
                    acc = acc * v + P[j, c]
                e = acc / dpow
                dpow *= den
                if big:
                    if j == 0:
                        e = -1.0 - e
                    elif j % 2 == 0:
                        e = -e
                out[j] += sw * e
        return out

    @njit(cache=True)
    def _jet_mul_numba(a, b, n):
        out = np.zeros(n + 1, dtype=np.complex128)
        for i in range(min(n, a.shape[0] - 1) + 1):
            ai = a[i]
            if ai == 0:
                continue
            for j in range(min(n - i, b.shape[0] - 1) + 1):
                out[i + j] += ai * b[j]
        return out

    @njit(cache=True)
    def _jet2_mul_numba(a, b, n):
        out = np.zeros((n + 1, n + 1), dtype=np.complex128)
        for i1 in range(n + 1):
            for j1 in range(n + 1 - i1):
                x = a[i1, j1]
                if x == 0:
                    continue
                for i2 in range(n + 1 - i1 - j1):
                    for j2 in range(n + 1 - i1 - j1 - i2):
                        out[i1 + i2, j1 + j2] += x * b[i2, j2]
        return out


def _jet_mul_numpy(a, b, n):
    out = np.zeros(n + 1, dtype=np.complex128)
    c = np.convolve(a[:n + 1], b[:n + 1])[:n + 1]
    out[:len(c)] = c
    return out


def _jet2_mul_numpy(a, b, n):
    out = np.zeros((n + 1, n + 1), dtype=np.complex128)
    for i in range(n + 1):
        for j in range(n + 1 - i):
            x = a[i, j]
            if x == 0:
                continue
            out[i:, j:] += x * b[:n + 1 - i, :n + 1 - j]
    mask = np.add.outer(np.arange(n + 1), np.arange(n + 1)) > n
    out[mask] = 0
    return out


def lattice_sums(w0, q, s0, s1, jmax, weight=0, backend=None):
    """out[j] = sum_{s=s0..s1} s^weight E_j(q^s w0), E_j = (w d/dw)^j w/(1-w).

    Terms with |q^s w0| > 1 use E_j(w) = (-1)^{j+1} E_j(1/w) (j >= 1) and
    E_0(w) = -1 - E_0(1/w), so every evaluation is well conditioned.
    """
    P = _numerators(jmax)
    b = backend or BACKEND
    if b == "numba" and BACKEND == "numba":
        return _sums_numba(complex(w0), complex(q), int(s0), int(s1), int(jmax), float(weight), P)
    return _sums_numpy(complex(w0), complex(q), int(s0), int(s1), int(jmax), float(weight), P)


def jet_mul(a, b, n, backend=None):
    b_ = backend or BACKEND
    a = np.ascontiguousarray(a, dtype=np.complex128)
    b = np.ascontiguousarray(b, dtype=np.complex128)
    if b_ == "numba" and BACKEND == "numba":
        return _jet_mul_numba(a, b, n)
    return _jet_mul_numpy(a, b, n)


def jet2_mul(a, b, n, backend=None):
    b_ = backend or BACKEND
    a = np.ascontiguousarray(a, dtype=np.complex128)
    b = np.ascontiguousarray(b, dtype=np.complex128)
    if b_ == "numba" and BACKEND == "numba":
        return _jet2_mul_numba(a, b, n)
    return _jet2_mul_numpy(a, b, n)
