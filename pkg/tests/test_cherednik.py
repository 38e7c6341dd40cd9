from fractions import Fraction

import numpy as np
import pytest
import sympy

from ukzb import cherednik as ch

import oracles

q = sympy.Symbol("q")


# ------------------------------------------------------------ S_n and gl_N

@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_sn_characters_murnaghan_nakayama(n):
    for shape in ch.partitions(n):
        for ct in ch.conjugacy_classes(n):
            assert ch.sn_character(shape, ct) == oracles.mn_character(shape, ct), (shape, ct)


@pytest.mark.parametrize("n", [3, 4, 5, 6])
def test_standard_tableaux_count_is_hook_dimension(n):
    for shape in ch.partitions(n):
        assert len(ch.standard_tableaux(shape)) == oracles.hook_dimension(shape)


@pytest.mark.parametrize("n", [3, 4])
def test_class_sizes_sum_to_factorial(n):
    import math
    assert sum(ch.class_size(ct) for ct in ch.conjugacy_classes(n)) == math.factorial(n)


@pytest.mark.parametrize("mu,N", [((2,), 2), ((3, 1), 3), ((2, 1), 3), ((2, 2, 1), 4), ((1, 1), 2)])
def test_weyl_dimension_vs_hook_content(mu, N):
    assert ch.weyl_dimension(mu, N) == oracles.weyl_dimension(mu, N)


@pytest.mark.parametrize("mu,N", [((2,), 2), ((2, 1), 3), ((3, 1), 3)])
def test_phi_product_specializes_to_dimension(mu, N):
    good = ch.phi_product(mu, N)
    assert sympy.limit(good, q, 1) == ch.weyl_dimension(mu, N)
    bad = ch.phi_product(mu, N, as_printed=True)
    assert sympy.limit(bad, q, 1) != ch.weyl_dimension(mu, N)


@pytest.mark.parametrize("N,ct", [(2, (1, 1)), (2, (2,)), (3, (2, 1)), (2, (3, 1)), (3, (1, 1, 1))])
def test_tensor_trace_formula_vs_bruteforce(N, ct):
    assert sympy.simplify(ch.tensor_trace_formula(N, ct) - ch.tensor_trace_bruteforce(N, ct)) == 0


@pytest.mark.parametrize("mu,N,cut", [((2,), 2, 6), ((1, 1), 2, 4), ((2, 1), 3, 3)])
def test_kostant_exponents(mu, N, cut):
    d, e = ch.kostant_check(mu, N, cut)
    assert d == e


# ----------------------------------------------------- rational Cherednik

def test_sign_convention_is_unique():
    assert ch.find_sign_convention() == [ch.DUNKL_SIGNS]


@pytest.mark.parametrize("n,cut", [(2, 5), (3, 4)])
def test_dunkl_relations(n, cut):
    M = ch.dunkl_module(n, Fraction(1, 3), cut, check=False)
    rep = ch.check_cherednik_relations(M)
    assert rep.ok, rep.failures()


@pytest.fixture(scope="module")
def lc_module():
    return ch.lowest_weight_module((3,), 3, Fraction(2, 3), 6)


def test_lc_dimension_and_grading(lc_module):
    assert lc_module.finite
    assert lc_module.dim() == 4
    assert [d for d in lc_module.dims if d] == [1, 2, 1]


def test_lc_character(lc_module):
    assert all(ch.lc_check(lc_module, 2).values())


def test_lc_decomposition(lc_module):
    for mu in ((3,), (2, 1)):
        assert ch.deco_check(2, 3, mu, lc_module)[0]


def test_lc_contravariant_form(lc_module):
    assert ch.radical_matches_quotient(lc_module)


@pytest.fixture(scope="module")
def V2():
    return ch.build_VN(2, 2, 8)


def test_V2_character(V2):
    g = ch.graded_character(V2)
    assert g.shift == Fraction(3, 2)
    assert all(c == 1 for c in g.coeffs[:9])


def test_V2_sl2_triple(V2):
    assert ch.eulh_report(V2).ok
    assert ch.check_cherednik_relations(V2).ok


def test_V2_characters_by_class(V2):
    for ct in ch.conjugacy_classes(2):
        assert ch.graded_character(V2, ct) == ch.chara_formula(2, 2, ct, 8)


@pytest.mark.parametrize("a,b", [(Fraction(1), Fraction(1)), (Fraction(2, 3), Fraction(-5, 7))])
def test_xi_is_a_morphism(a, b):
    M = ch.dunkl_module(2, Fraction(2, 7), 6, check=False)
    rep = ch.check_xi(M, a, b, 2)
    assert rep.ok, rep.failures()


def test_xi_literal_delta_fails():
    """The delta image without the factor 2k^2(ab)^2 is not a morphism."""
    k, a, b = Fraction(2, 7), Fraction(2, 3), Fraction(-5, 7)
    M = ch.dunkl_module(2, k, 6, check=False)
    assert not ch.check_xi(M, a, b, 2, literal_delta=True).ok
    xi = ch.xi_ab(M, a, b)
    for m in (1, 2):
        assert (xi.delta(m) - xi.delta(m, literal=True) * (2 * k ** 2 * (a * b) ** 2)).vanishes()


def test_dense_xi_realization_shape():
    R = ch.xi_realization()
    assert R.t[(1, 2)].shape == (5, 5)
    assert not np.any(R.delta(9))


# ---------------------------------------------------------------- DAHA

@pytest.fixture(scope="module")
def hecke():
    return ch.daha_hecke_check()


def test_hecke_relation(hecke):
    assert hecke.ok
    assert hecke.residual < 1e-5 and hecke.eig_error < 1e-5


def test_hecke_literal_parameters_fail(hecke):
    assert hecke.residual_literal > 0.5


def test_xi_ab_rejects_zero_scalars():
    M = ch.dunkl_module(2, Fraction(2, 7), 3, check=False)
    assert ch.xi_ab(M, 1, 2).a == 1
    with pytest.raises(ValueError):
        ch.xi_ab(M, 0, 1)
