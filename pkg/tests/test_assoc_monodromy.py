import math
from fractions import Fraction

import numpy as np
import pytest
from scipy.linalg import expm

from ukzb import assoc_monodromy as am
from ukzb import cherednik as ch

import oracles

GENERIC = 0.7 + 1.3j


@pytest.fixture(scope="module")
def phi4():
    return am.kz_associator(4)


@pytest.fixture(scope="module")
def pair4(phi4):
    return am.EllipticPair(phi4, am.TWO_PI_I, 4)


@pytest.fixture(scope="module")
def xi_rep():
    return ch.xi_realization(2, 5, Fraction(1, 100), Fraction(1, 100))


# ------------------------------------------------------------- associator

def test_duality(phi4):
    assert am.duality_residual(phi4) < 1e-10


def test_hexagon(phi4):
    assert am.hexagon_residual(phi4) < 1e-9


def test_pentagon(phi4):
    assert am.pentagon_residual(phi4) < 1e-9


def test_associator_is_grouplike(phi4):
    assert phi4.elem.is_grouplike(1e-9)


@pytest.mark.parametrize("lam", [1, am.TWO_PI_I, GENERIC])
def test_degree2_vs_picard_quadrature(lam):
    ab, ba = am.picard_degree2(lam)
    p = am.kz_associator(2, lam=lam)
    assert abs(p.coefficient("ab") - ab) < 1e-9
    assert abs(p.coefficient("ba") - ba) < 1e-9


@pytest.mark.parametrize("lam", [1, am.TWO_PI_I, GENERIC])
def test_degree2_frozen_zeta2(lam):
    """The ab coefficient is zeta(2) lambda^2 / (4 pi^2) and ba is its negative."""
    p = am.kz_associator(2, lam=lam)
    ref = oracles.zeta2_coefficient(lam)
    assert abs(p.coefficient("ab") - ref) < 1e-10
    assert abs(p.coefficient("ba") + ref) < 1e-10


def test_frozen_values():
    assert abs(oracles.zeta2_coefficient(1) - 1 / 24) < 1e-15
    assert abs(oracles.zeta2_coefficient(am.TWO_PI_I) + math.pi ** 2 / 6) < 1e-13


def test_base_point_independence():
    """Two normalization base points give the same associator (dual route)."""
    p = am.kz_associator(4, z0=0.3, z1=0.7)
    q = am.kz_associator(4, z0=0.2, z1=0.55)
    assert np.abs(p.elem.vec - q.elem.vec).max() < 1e-9


# ------------------------------------------------------------ elliptic pair

@pytest.mark.parametrize("lam", [am.TWO_PI_I, GENERIC])
def test_elliptic_pair_identities(lam):
    pair = am.EllipticPair(am.kz_associator(4, lam=lam), lam, 4)
    assert pair.commutator_residual() < 1e-8
    assert pair.A_forms_residual() < 1e-8
    assert pair.grouplike_residual() < 1e-8
    g = am.check_gamma13(pair)
    for key in ("A_identity", "B_identity", "mixed_left", "mixed_right"):
        assert g[key] < 1e-8, key


def test_empty_block(pair4):
    assert pair4.empty_block_residual() < 1e-12


def test_gamma_images(pair4):
    res = am.gamma_images(pair4)[2]
    for key, v in res.items():
        assert v < 1e-7, key


def test_monodromy_matches_associator():
    rep = am.monodromy_AB(tau=1.8j, D=3)
    assert rep.A_residual < 1e-5
    assert rep.B_residual < 1e-5
    assert rep.sigma_residual < 1e-5
    assert rep.loop_residual < 1e-5


# ------------------------------------------------------- Psi~ and Theta~

def test_envelope_operator_words():
    env = am.free_envelope(4)
    a, b = env.gen("a"), env.gen("b")
    rng = np.random.default_rng(0)
    A, B = rng.normal(size=(2, 3, 3))
    elem = a * b - 2 * (b * a * a * b) + env.one() * 3
    got = am.envelope_operator(elem, {"a": A, "b": B})
    assert np.allclose(got, A @ B - 2 * B @ A @ A @ B + 3 * np.eye(3))


def test_envelope_operator_exp():
    env = am.free_envelope(6)
    a = env.gen("a")
    A = np.array([[0, 1.0], [0, 0]]) * 0.3
    assert np.allclose(am.envelope_operator((a * 1.0).exp(), {"a": A, "b": A}), expm(A))


def test_tilde_psi_head():
    h = am.tilde_psi()
    assert abs(h["Delta0"] + 1 / am.TWO_PI_I) < 1e-15
    with pytest.raises(ValueError):
        am.tilde_psi(0)


@pytest.mark.parametrize("lam", [am.TWO_PI_I, 1.3 + 0.4j])
def test_psi_conjugation(lam, xi_rep):
    pair = am.EllipticPair(am.kz_associator(4, lam=lam), lam, 4)
    rA, rB = am.psi_conjugation_residual(pair, xi_rep)
    assert rA < 1e-6 and rB < 1e-6


def test_psi_conjugation_needs_t_factor(pair4, xi_rep):
    undo = expm(-pair4.lam * xi_rep.t[(1, 2)] / 12)
    rA, rB = am.psi_conjugation_residual(pair4, xi_rep, extra=undo)
    assert max(rA, rB) > 1e-6


def test_psi_needs_realization(pair4):
    with pytest.raises(ValueError):
        am.psi_conjugation_residual(pair4, None)


@pytest.fixture(scope="module")
def theta(xi_rep, pair4):
    return am.theta_tilde_in_rep(xi_rep, pair=pair4)


def test_theta_relations(theta):
    for key, v in theta.residuals.items():
        assert v < 1e-6, key
    assert theta.ok() and not theta.warnings()


def test_theta_is_tau_independent(xi_rep, theta):
    other = am.theta_tilde_in_rep(xi_rep, tau=0.2 + 1.1j)
    assert np.abs(other.Theta - theta.Theta).max() < 1e-9 * max(1, np.abs(theta.Theta).max())


def test_theta_literal_cocycle_fails(xi_rep):
    lit = am.theta_tilde_in_rep(xi_rep, literal_cocycle=True)
    assert lit.residuals["Theta^4 = 1"] > 1e-3
    assert lit.warnings()


def test_theta_guard_on_ill_conditioned_normalization():
    R = ch.xi_realization(2, 5, Fraction(1), Fraction(1))
    with pytest.raises(ValueError, match="normalization regime unreachable"):
        am.theta_tilde_in_rep(R)


def test_build_elliptic_pair_validates(phi4):
    pair = am.build_elliptic_pair(phi4, D=4)
    assert pair.commutator_residual() < 1e-8
    with pytest.raises(ValueError):
        am.build_elliptic_pair(phi4, lam=0)
    bad = am.kz_associator(4)
    bad.elem = bad.elem + bad.elem.degree_part(2)
    with pytest.raises(ValueError, match="group-like"):
        am.build_elliptic_pair(bad)


def test_chen_monodromy_composes():
    sysm = am.TwoPointSystem(1.8j, 3)
    z0, z1, z2 = 0.1 + 0.1j, 0.4 + 0.15j, 0.6 + 0.5j
    T1 = am.chen_monodromy(sysm.env, sysm.K, [am.Line(z0, z1)])
    T2 = am.chen_monodromy(sysm.env, sysm.K, [am.Line(z1, z2)])
    T12 = am.chen_monodromy(sysm.env, sysm.K, [am.Line(z0, z1), am.Line(z1, z2)])
    assert T12.residual_to(T2 * T1) < 1e-10
    back = am.chen_monodromy(sysm.env, sysm.K, am.reverse_path([am.Line(z0, z1)]))
    assert (back * T1).residual_to(sysm.env.one()) < 1e-10
    assert T1.is_grouplike(1e-9)
