import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, strategies as st

from ukzb import special_fn as sf

import oracles

taus = st.builds(complex, st.floats(-0.5, 0.5), st.floats(0.7, 1.6))
unit = st.floats(-0.45, 0.45)


# ---------------------------------------------------------------- oracles

@pytest.mark.parametrize("n", range(0, 21))
def test_bernoulli_matches_sympy(n):
    assert sf.bernoulli(n) == oracles.bernoulli(n)


@pytest.mark.parametrize("m", [0, 1, 2, 3])
def test_a2n_formula(m):
    lam = 0.7 + 1.1j
    expect = -(2 * m + 1) * float(oracles.bernoulli(2 * m + 2)) * lam ** (2 * m + 2) / math.factorial(2 * m + 2)
    assert abs(sf.a2n(m, lam) - expect) < 1e-14 * max(1, abs(expect))


def test_a2n_frozen_values():
    # a_0(2 pi i) = pi^2/3 and a_2(2 pi i) = pi^4/15
    assert abs(sf.a2n(0) - math.pi ** 2 / 3) < 1e-13
    assert abs(sf.a2n(1) - math.pi ** 4 / 15) < 1e-11


@given(taus, unit, unit)
def test_theta_matches_mpmath(tau, a, b):
    z = a + b * tau
    ref = oracles.theta(z, tau)
    assert abs(sf.theta(z, tau) - ref) < 1e-12 * max(1, abs(ref))


@given(taus)
def test_eisenstein_matches_theta_constants(tau):
    for k in (4, 6):
        ref = oracles.eisenstein_theta(k, tau)
        assert abs(sf.eisenstein(k, tau) - ref) < 1e-12 * max(1, abs(ref))


def test_eisenstein_rejects_odd_weight():
    with pytest.raises(ValueError):
        sf.eisenstein(3, 1j)


@pytest.mark.parametrize("tau,z", [(0.1 + 1.1j, 0.3 + 0.2j), (-0.2 + 0.9j, 0.25 - 0.3j)])
def test_k_jet_matches_mpmath_taylor(tau, z):
    order = 6
    with mp.workdps(40):
        nome = mp.exp(1j * mp.pi * mp.mpc(tau))
        d1 = mp.jtheta(1, 0, nome, 1)
        th = lambda u: mp.jtheta(1, mp.pi * u, nome) / (mp.pi * d1)
        f = lambda x: th(z + x) / (th(z) * th(x)) - 1 / x if x != 0 else mp.nan
        # Taylor coefficients from a contour integral around x = 0 (radius inside the pole-free disc)
        r = 0.05
        N = 64
        pts = [r * mp.exp(2j * mp.pi * j / N) for j in range(N)]
        vals = [f(p) for p in pts]
        coeffs = [complex(sum(v * p ** (-m) for v, p in zip(vals, pts)) / N) for m in range(order + 1)]
    J = sf.KZBJets(z, tau, order).k
    assert np.abs(np.array(J.c[:order + 1]) - np.array(coeffs)).max() < 1e-9


# -------------------------------------------------------------- identities

@given(taus, unit, unit)
def test_theta_quasi_periodicity(tau, a, b):
    z = a + b * tau
    t = sf.theta(z, tau)
    assert abs(sf.theta(z + 1, tau) + t) < 1e-12 * max(1, abs(t))
    assert abs(sf.theta(-z, tau) + t) < 1e-12 * max(1, abs(t))
    shifted = -np.exp(-1j * math.pi * tau - 2j * math.pi * z) * t
    assert abs(sf.theta(z + tau, tau) - shifted) < 1e-10 * max(1, abs(shifted))


@given(taus)
def test_e4_modularity(tau):
    lhs = sf.eisenstein(4, -1 / tau)
    assert abs(lhs - tau ** 4 * sf.eisenstein(4, tau)) < 1e-10 * max(1, abs(lhs))


@given(taus)
def test_e2_anomaly_sign(tau):
    """E_2(-1/tau) = tau^2 E_2(tau) - (6i/pi) tau; the opposite sign fails."""
    lhs = sf.eisenstein(2, -1 / tau)
    good = tau ** 2 * sf.eisenstein(2, tau) - 6j / math.pi * tau
    bad = tau ** 2 * sf.eisenstein(2, tau) + 6j / math.pi * tau
    assert abs(lhs - good) < 1e-10 * max(1, abs(lhs))
    assert abs(lhs - bad) > 1.0


def test_e2_from_eta():
    tau = 0.1 + 1.1j
    assert abs(sf.eisenstein(2, tau) - 24 / (2j * math.pi) * sf.dlog_eta(tau)) < 1e-12


@pytest.mark.parametrize("name", sf.SCALAR_IDENTITIES)
def test_scalar_identity_suite(name):
    assert sf.check_scalar_identity(name, samples=6, seed=3) < 1e-9


def test_unknown_identity_rejected():
    with pytest.raises(KeyError):
        sf.check_scalar_identity("nope")


def test_pole_is_reported():
    with pytest.raises(sf.PoleError):
        sf.KZBJets(1.0, 1j, 4)


# -------------------------------------------------------------------- jets

coeff = st.builds(complex, st.floats(-2, 2), st.floats(-2, 2))


@given(st.lists(coeff, min_size=5, max_size=5))
def test_jet_exp_log_roundtrip(c):
    c = [0j] + c
    J = sf.Jet(np.array(c))
    assert (J.exp().log() - J).norm() < 1e-10 * max(1, J.exp().norm())


@given(st.lists(coeff, min_size=6, max_size=6))
def test_jet_inverse(c):
    c[0] = c[0] + 3
    J = sf.Jet(np.array(c))
    one = sf.Jet.const(1, 5)
    assert (J * J.inverse() - one).norm() < 1e-10 * max(1, J.inverse().norm())
