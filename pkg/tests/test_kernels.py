import numpy as np
import pytest
import sympy as sp
from hypothesis import given, strategies as st

from ukzb import _kernels as kn

backends = ["numpy"] + (["numba"] if kn.BACKEND == "numba" else [])

_W = sp.Symbol("w")


def _E_sympy(jmax):
    """E_j(w) = (w d/dw)^j w/(1-w), built symbolically."""
    out, e = [], _W / (1 - _W)
    for _ in range(jmax + 1):
        out.append(sp.lambdify(_W, e, "numpy"))
        e = sp.simplify(_W * sp.diff(e, _W))
    return out


E_REF = _E_sympy(5)


def brute(w0, q, s0, s1, jmax, weight):
    return np.array([sum(s ** weight * E_REF[j](w0 * q ** s) for s in range(s0, s1 + 1))
                     for j in range(jmax + 1)], dtype=complex)


def test_eulerian_numerators_small():
    P = kn.eulerian_numerators(3)
    # P_1 = w, P_2 = w + w^2, P_3 = w + 4w^2 + w^3
    assert list(P[1][:3]) == [0, 1, 0]
    assert list(P[2][:3]) == [0, 1, 1]
    assert list(P[3][:4]) == [0, 1, 4, 1]


def test_eulerian_numerator_row_sums_are_factorials():
    P = kn.eulerian_numerators(8)
    assert [int(P[j].sum()) for j in range(9)] == [1, 1, 2, 6, 24, 120, 720, 5040, 40320]


@pytest.mark.parametrize("backend", backends)
@pytest.mark.parametrize("w0,q,s0,s1,weight", [
    (0.3 + 0.1j, 0.2 - 0.05j, 0, 12, 0),
    (2.5 - 0.5j, 0.3 + 0.1j, -6, 6, 1),
    (-0.4 + 0.7j, 0.1j, 1, 9, 2),
])
def test_lattice_sums_vs_symbolic(backend, w0, q, s0, s1, weight):
    got = kn.lattice_sums(w0, q, s0, s1, 5, weight, backend=backend)
    ref = brute(w0, q, s0, s1, 5, weight)
    assert np.abs(got - ref).max() < 1e-9 * max(1, np.abs(ref).max())


def test_empty_range_is_zero():
    assert not kn.lattice_sums(0.3, 0.1, 5, 4, 3, backend="numpy").any()


cplx = st.builds(complex, st.floats(-1, 1), st.floats(-1, 1))


@pytest.mark.skipif(kn.BACKEND != "numba", reason="numba unavailable")
@given(st.builds(complex, st.floats(-3, 3), st.floats(-3, 3)).filter(lambda w: abs(abs(w) - 1) > 0.05),
       st.builds(complex, st.floats(-0.4, 0.4), st.floats(-0.4, 0.4)).filter(lambda q: 0.01 < abs(q) < 0.5),
       st.integers(-5, 0), st.integers(0, 6), st.integers(0, 2))
def test_lattice_sums_backends_agree(w0, q, s0, s1, weight):
    terms = w0 * q ** np.arange(s0, s1 + 1)
    if np.any(np.abs(np.abs(terms) - 1) < 0.05):
        return
    a = kn.lattice_sums(w0, q, s0, s1, 4, weight, backend="numba")
    b = kn.lattice_sums(w0, q, s0, s1, 4, weight, backend="numpy")
    assert np.abs(a - b).max() <= 1e-9 * max(1, np.abs(b).max())


@pytest.mark.parametrize("backend", backends)
@given(st.lists(cplx, min_size=1, max_size=9), st.lists(cplx, min_size=1, max_size=9), st.integers(0, 8))
def test_jet_mul_is_truncated_convolution(backend, a, b, n):
    got = kn.jet_mul(np.array(a), np.array(b), n, backend=backend)
    ref = np.zeros(n + 1, dtype=complex)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            if i + j <= n:
                ref[i + j] += x * y
    assert got.shape == (n + 1,)
    assert np.allclose(got, ref, atol=1e-12)


@pytest.mark.parametrize("backend", backends)
@given(st.integers(0, 5), st.integers(0, 2 ** 31 - 1))
def test_jet2_mul_is_truncated_product(backend, n, seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(n + 1, n + 1)) + 1j * rng.normal(size=(n + 1, n + 1))
    b = rng.normal(size=(n + 1, n + 1)) + 1j * rng.normal(size=(n + 1, n + 1))
    got = kn.jet2_mul(a, b, n, backend=backend)
    ref = np.zeros((n + 1, n + 1), dtype=complex)
    for i1 in range(n + 1):
        for j1 in range(n + 1):
            for i2 in range(n + 1):
                for j2 in range(n + 1):
                    if i1 + j1 + i2 + j2 <= n and i1 + j1 <= n and i2 + j2 <= n:
                        ref[i1 + i2, j1 + j2] += a[i1, j1] * b[i2, j2]
    assert np.allclose(got, ref, atol=1e-10)
