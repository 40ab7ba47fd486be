import mpmath
import numpy as np
import pytest
from modules.arith import FamilySelector, admissible_discriminants
from modules.errors import ConvergenceError
from modules.lfunc import (
    TwistedLFunction,
    central_value,
    collinearity_deviation,
    hardy_z,
    kernel_cutoff,
    lowest_zeros,
    twisted_l_function,
    upper_incomplete_gamma,
    verify_functional_equation,
)
from modules.newforms import LABELS


def family(form, x, count):
    return admissible_discriminants(form, x, FamilySelector(form.kind))[:count]


@pytest.mark.parametrize("w", [0.5 + 0.3j, 2.5 - 1j, 4.0 + 0j, -1.5 - 0.5j, 0.5 - 0.5j, 2.0 + 3j])
def test_upper_incomplete_gamma_matches_mpmath(w):
    x = np.array([0.01, 0.3, 1.0, 2.9, 5.0, 12.0, 40.0])
    got = upper_incomplete_gamma(w, x)
    for xi, g in zip(x, got):
        expected = complex(mpmath.gammainc(w, a=xi))
        assert abs(g - expected) <= 1e-10 * abs(expected), xi


def test_kernel_cutoff_bounds_the_tail():
    x = kernel_cutoff(3.5, 1e-12)
    assert 2.5 * np.log(x) - x <= np.log(1e-12)
    assert kernel_cutoff(3.5, 1e-6) < x


@pytest.mark.parametrize("label", LABELS)
def test_afe_matches_dirichlet_series(calibrated, label):
    form = calibrated(label)
    s = 3 + 0.5j
    for d in family(form, 300, 3):
        L = twisted_l_function(form, d)
        direct = L.dirichlet_series(s, 50_000)
        assert abs(L.value(s) - direct) <= 1e-8 * abs(direct), d


@pytest.mark.parametrize("label", LABELS)
def test_functional_equation_holds_across_the_family(calibrated, label):
    form = calibrated(label)
    for d in family(form, 600, 10):
        assert verify_functional_equation(twisted_l_function(form, d)) < 1e-6, d


def test_wrong_sign_breaks_the_functional_equation(calibrated):
    form = calibrated("11.2.a.a")
    d = family(form, 100, 1)[0]
    L = twisted_l_function(form, d)
    flipped = TwistedLFunction(form, d, -L.sign)
    assert verify_functional_equation(flipped) > 1e-3


@pytest.mark.parametrize("label", LABELS)
def test_root_numbers_are_unimodular(calibrated, label):
    eps = calibrated(label).epsilon_f
    assert abs(eps) == pytest.approx(1.0, abs=1e-9)
    if calibrated(label).is_self_dual:
        assert eps in (1, -1)


def test_central_values_of_a_non_self_dual_family_lie_on_a_line(calibrated):
    form = calibrated("13.2.e.a")
    values = [central_value(twisted_l_function(form, d)) for d in family(form, 400, 8)]
    assert collinearity_deviation(values) < 1e-3


@pytest.mark.parametrize("label", ["11.2.a.a", "7.4.a.a", "7.3.b.a"])
def test_self_dual_central_values_are_real(calibrated, label):
    form = calibrated(label)
    for d in family(form, 200, 4):
        value = central_value(twisted_l_function(form, d))
        assert abs(value.imag) < 1e-8 * max(1.0, abs(value))


def test_first_zero_of_the_untwisted_weight_two_form(calibrated):
    L = twisted_l_function(calibrated("11.2.a.a"), 1)
    zeros = lowest_zeros(L, count=2, t_max=15.0)
    assert zeros.lowest == pytest.approx(6.3626, abs=1e-3)
    assert zeros.ordinates[1] > zeros.lowest
    for t in zeros.ordinates:
        assert abs(hardy_z(L, t)) < 1e-6 * L.z_scale(t)


def test_hardy_z_is_real_and_changes_sign_at_the_zero(calibrated):
    L = twisted_l_function(calibrated("11.2.a.a"), 1)
    t = lowest_zeros(L).lowest
    assert hardy_z(L, t - 0.05) * hardy_z(L, t + 0.05) < 0


def test_zero_search_gives_up_at_t_max(calibrated):
    L = twisted_l_function(calibrated("11.2.a.a"), 1)
    with pytest.raises(ConvergenceError):
        lowest_zeros(L, t_max=1.0)


def test_twists_need_coprime_discriminants(calibrated):
    with pytest.raises(ValueError):
        twisted_l_function(calibrated("7.4.a.a"), 28)


def test_term_cap(calibrated):
    form = calibrated("3.8.a.a")
    L = TwistedLFunction(form, 13, 1.0, max_terms=10)
    with pytest.raises(ConvergenceError):
        L.value(0.5)


def test_collinearity_deviation():
    assert collinearity_deviation([1 + 1j, 2 + 2j, -3 - 3j]) == pytest.approx(0.0, abs=1e-12)
    assert collinearity_deviation([1, 1j]) == pytest.approx(np.pi / 2)
    assert collinearity_deviation([0, 1, 2]) == pytest.approx(0.0)
    with pytest.raises(ValueError):
        collinearity_deviation([0, 0])


def test_small_twist_of_the_weight_two_form(calibrated):
    L = twisted_l_function(calibrated("11.2.a.a"), 5)
    direct = L.dirichlet_series(3.0, 50_000)
    assert abs(L.value(3.0) - direct) <= 1e-8 * abs(direct)
    s = 0.6 + 0.3j
    lhs = L.completed(s)
    assert abs(lhs - L.sign * np.conj(L.completed(np.conj(1 - s)))) <= 1e-8 * abs(lhs)


@pytest.mark.parametrize("label", ["11.2.a.a", "7.3.b.a"])
def test_hardy_z_is_even_in_modulus(calibrated, label):
    form = calibrated(label)
    L = twisted_l_function(form, family(form, 100, 1)[0])
    assert abs(hardy_z(L, 0.7)) == pytest.approx(abs(hardy_z(L, -0.7)), rel=1e-8)
