from fractions import Fraction

import numpy as np
import pytest

from ukzb import cherednik as ch
from ukzb import kzb_connection as kc

D = 4


@pytest.fixture(scope="module", params=[2, 3])
def setup(request):
    n = request.param
    return n, kc.connection_algebra(n, D)


@pytest.fixture(scope="module")
def CA3():
    return kc.connection_algebra(3, D)


def points(n, k=3, seed=11):
    rng = np.random.default_rng(seed)
    return [kc.sample_point(rng, n) for _ in range(k)]


def test_sum_K_exact(setup):
    n, CA = setup
    assert kc.sum_K_exact(CA)


def test_sum_K_numeric(setup):
    n, CA = setup
    for p in points(n):
        assert kc.sum_K_residual(p, CA) < 1e-9


def test_flatness_z(setup):
    n, CA = setup
    for p in points(n):
        assert kc.flatness_residual(p, CA) < 1e-8


def test_flatness_tau(setup):
    n, CA = setup
    for p in points(n):
        r1, r2 = kc.tau_flatness_residual(p, CA)
        assert r1 < 1e-8 and r2 < 1e-8


def test_delta_two_routes_agree(setup):
    """Delta from Eisenstein heads vs Delta from the theta definition of phi."""
    n, CA = setup
    for p in points(n, 2):
        a, b = kc.build_Delta(p, CA), kc.delta_via_phi(p, CA)
        assert kc.delta_difference(a, b, CA) < 1e-9 * max(1, a.tail.norm())


def test_cdybe(CA3):
    for p in points(3):
        assert kc.cdybe_residual(p, CA3) < 1e-9


def test_cdybe_needs_distinct_indices(CA3):
    with pytest.raises(ValueError):
        kc.cdybe_residual(points(3, 1)[0], CA3, 1, 1, 2)


@pytest.mark.parametrize("kind", ["shift_1", "shift_tau", "shift_diag", "shift_Delta"])
def test_equivariance(kind):
    CA = kc.connection_algebra(2, D)
    for p in points(2, 2):
        assert kc.equivariance_residual(p, CA, kind) < 1e-8


def test_permutation_equivariance(CA3):
    for p in points(3, 2):
        assert kc.permutation_residual(p, CA3, (2, 3, 1)) < 1e-9


def test_shift_tau_sabotage():
    """Dropping the exp(-2 pi i ad x_j) twist must break the tau-shift identity."""
    CA = kc.connection_algebra(2, D)
    p = points(2, 1)[0]
    K = kc.build_K(p, CA)
    K2 = kc.build_K(p.shifted([p.tau, 0]), CA)
    assert max((K2[i] - K[i]).norm() / max(1, K[i].norm()) for i in K) > 1e-3


def test_unknown_kind_rejected():
    CA = kc.connection_algebra(2, 3)
    with pytest.raises(ValueError):
        kc.equivariance_residual(points(2, 1)[0], CA, "shift_nope")


def test_t1n_flatness_and_sum():
    """Over t_{1,n}, sum K_i = -sum y_i and the connection is still flat."""
    CA = kc.connection_algebra(2, 3, kind="t1n")
    for p in points(2, 2):
        assert kc.sum_K_residual(p, CA) < 1e-9
        assert kc.flatness_residual(p, CA) < 1e-8


# ------------------------------------------------- modular identities


@pytest.fixture(scope="module", params=[(2, 5, Fraction(1), Fraction(1)), (2, 3, Fraction(2, 3), Fraction(-5, 7)),
                                        (3, 4, Fraction(1), Fraction(1))])
def realization(request):
    n, r, a, b = request.param
    return ch.xi_realization(n, r, a, b)


@pytest.mark.parametrize("kind", ["mod_K", "mod_Delta"])
def test_modular_identities_in_realization(realization, kind):
    rng = np.random.default_rng(2)
    for _ in range(3):
        p = kc.sample_point(rng, realization.n, im_range=(0.8, 1.3))
        assert kc.equivariance_residual(p, None, kind, realization=realization) < 1e-7


@pytest.mark.parametrize("kind", ["mod_K", "mod_Delta"])
def test_modular_identities_pin_the_cocycle(realization, kind):
    """The inverse cocycle fails, so the check is sensitive to orientation."""
    p = kc.sample_point(np.random.default_rng(4), realization.n, im_range=(0.8, 1.3))
    bad = np.linalg.inv(kc.modular_cocycle(p, realization))
    assert kc.modular_residual(p, realization, kind, cocycle=bad) > 1e-2


def test_modular_kinds_need_realization():
    CA = kc.connection_algebra(2, 3)
    with pytest.raises(ValueError, match="realization"):
        kc.equivariance_residual(points(2, 1)[0], CA, "mod_K")


def test_realized_K_matches_universal_sum(realization):
    """sum_i K_i = 0 survives the realization (tbar relation sum y_i = 0)."""
    p = kc.sample_point(np.random.default_rng(6), realization.n)
    K = kc.realized_K(p, realization)
    assert np.abs(sum(K.values())).max() < 1e-12


def test_flatness_improves_with_q_truncation(CA3):
    """Fixed q-series truncations of 1, 3 and 6 terms give decreasing residuals."""
    p0 = kc.sample_point(np.random.default_rng(3), 3, im_range=(0.6, 0.8))
    res = []
    for terms in (1, 3, 6):
        p = kc.ConnectionPoint(p0.z, p0.tau, terms=terms)
        res.append(max(kc.flatness_residual(p, CA3), *kc.tau_flatness_residual(p, CA3)))
    assert res[0] > res[1] > res[2]
    assert res[0] > 1e-4 and res[2] < 1e-8
