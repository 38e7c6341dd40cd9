import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ukzb import realizations as rz

weights2 = st.lists(st.floats(0.2, 1.5), min_size=1, max_size=1)
weights3 = st.tuples(st.floats(0.2, 1.5), st.floats(-1.5, -0.2)).map(list)


def test_rho_g_is_a_morphism():
    rep = rz.check_rho_g(module=rz.PolynomialModule(2, 2, 3))
    assert rep.ok, rep.failures()


def test_rho_d_respects_relations():
    rep = rz.check_rho_d(module=rz.PolynomialModule(2, 2, 5))
    assert rep.ok, rep.failures()


@pytest.mark.parametrize("N,lam", [(2, [0.7]), (3, [0.6, -1.1])])
def test_dynamical_r_two_routes(N, lam):
    """r from its definition vs the root formula, and antisymmetry."""
    r = rz.dynamical_r(lam, N)
    assert np.abs(r.tensor() - rz.r_root_form(lam, N)).max() < 1e-12
    assert r.antisymmetry_residual() < 1e-12


def test_singular_weight_rejected():
    with pytest.raises(rz.SingularWeight):
        rz.dynamical_r([0.0], 2)


@settings(max_examples=10)
@given(weights2)
def test_cdybe_sl2(lam):
    assert rz.cdybe_residual(lam, 2) < 1e-10


@settings(max_examples=10)
@given(weights3.filter(lambda l: abs(l[0] + l[1]) > 0.1))
def test_cdybe_sl3(lam):
    assert rz.cdybe_residual(lam, 3) < 1e-10


@pytest.mark.parametrize("N,lam", [(2, [0.9]), (3, [0.6, -1.1])])
def test_reduction_lemmas(N, lam):
    assert rz.lemma_logP_residual(lam, N) < 1e-10
    assert rz.lemma_laplace_residual(lam, N) < 1e-10


def test_reduced_realization_relations():
    rep = rz.ReducedRealization(2, 2).check_relations(seed=0)
    assert rep.ok, rep.failures()


@pytest.mark.parametrize("n", [2, 4])
def test_reduced_connection_flat(n):
    rng = np.random.default_rng(5)
    z, tau, c0 = rz.sample_reduced_point(rng, n)
    rc = rz.ReducedConnection(z, tau, c0, n=n)
    assert rc.flatness_residual() < 1e-7
    assert max(rc.conjugation_residuals().values()) < 1e-7


def test_reduced_connection_sabotage():
    """The closed form of g with an extra factor 1/2 must break flatness."""
    rng = np.random.default_rng(5)
    z, tau, c0 = rz.sample_reduced_point(rng, 2)
    bad = rz.ReducedConnection(z, tau, c0, n=2, g_closed_form_half=True)
    assert bad.flatness_residual() > 1e-3


def test_reduced_connection_only_sl2():
    with pytest.raises(NotImplementedError):
        rz.reduced_connection([0.1, 0.3], 1j, [0.2, 0.1], N=3)


def test_restriction_to_cartan():
    rep = rz.ReducedRealization(2, 2).check_restriction(cut=2)
    assert rep.ok, rep.failures()


def test_rho_d_generators():
    mod, X = rz.rho_d(2, 2, "X", 4)
    d, D0 = mod.d(), mod.Delta0()
    assert X.M == mod.X().M
    assert mod.vanishes(d.bracket(X) - X * 2)
    assert mod.vanishes(d.bracket(D0) + D0 * 2)
    assert not mod.vanishes(X)
    with pytest.raises(ValueError):
        rz.rho_d(2, 2, "delta", 3)
    with pytest.raises(ValueError):
        rz.rho_d(2, 2, "nope", 3)


def test_rho_gh_bracket():
    """[rho(x_1), rho(y_2)] = rho(t_12) on the reduced realization."""
    import sympy
    R = rz.ReducedRealization(2, 2)
    F = sympy.Matrix([sympy.Function("f%d" % k)(*R.c) for k in range(R.m)])
    x1, y2, t12 = rz.rho_gh(2, 2, "x1"), rz.rho_gh(2, 2, "y2"), rz.rho_gh(2, 2, "t12")
    lhs = x1(y2(F)) - y2(x1(F))
    assert sympy.simplify(lhs - t12(F)) == sympy.zeros(R.m, 1)
    with pytest.raises(ValueError):
        rz.rho_gh(2, 2, "t1")
