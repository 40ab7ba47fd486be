import itertools

import numpy as np
import pytest
from modules.arith import FamilySelector, admissible_discriminants, kronecker
from modules.enums import FamilyKind
from modules.errors import MissingDataError
from modules.lfunc import central_value, twisted_l_function
from modules.newforms import get_newform
from modules.shimura import (
    LIFT_3_6,
    LIFT_3_8,
    LIFT_7_4,
    LIFTS,
    HalfIntegralLift,
    build_lift,
    calibrate_kappa,
    central_value_kz,
    default_reference_d,
    discretization_threshold,
    empirical_lift,
    genus_character,
    gplus_coeffs_3_6,
    gplus_coeffs_3_8,
    gplus_coeffs_7_4,
    is_vanishing,
)

AUXILIARY = [(lift, ell) for lift in LIFTS.values() for ell in lift.auxiliary]


def principal_family(form, x):
    return admissible_discriminants(form, x, FamilySelector(FamilyKind.PRINCIPAL))


def cone(lift, ell):
    """Nonzero vectors mod ell on which the norm form vanishes."""
    for x, y, z in itertools.product(range(ell), repeat=3):
        if (x, y, z) != (0, 0, 0) and (lift.binary(x, y) + lift.z_coeff * z * z) % ell == 0:
            yield x, y, z


def brute_force_lift(lift, ell, n_max, bound=40):
    r = np.arange(-bound, bound + 1)
    x, y, z = np.meshgrid(r, r, r, indexing="ij")
    q = lift.binary(x, y) + lift.z_coeff * z * z
    keep = (q % ell == 0) & (q <= ell * n_max)
    x, y, z, q = x[keep], y[keep], z[keep], q[keep]
    weights = genus_character(lift.binary, lift.z_coeff, ell)(x, y)
    if lift.ramified is not None:
        weights = weights * lift.ramified(x, y)
    weights = weights * sum(xy_part(x, y) * z_part(z) for xy_part, z_part in lift.parts)
    return np.rint(np.bincount(q // ell, weights=weights, minlength=n_max + 1)).astype(np.int64)


@pytest.mark.parametrize(("lift", "ell"), AUXILIARY)
def test_genus_character_branches_agree_on_the_cone(lift, ell):
    chi = genus_character(lift.binary, lift.z_coeff, ell)
    for x, y, _ in cone(lift, ell):
        u = (chi.first[0] * x + chi.first[1] * y) % ell
        v = (chi.second[0] * x + chi.second[1] * y) % ell
        if u and v:
            assert kronecker(u, ell) == chi.sign * kronecker(v, ell)


@pytest.mark.parametrize(("lift", "ell"), AUXILIARY)
def test_genus_character_is_odd_and_never_zero_on_the_cone(lift, ell):
    chi = genus_character(lift.binary, lift.z_coeff, ell)
    for x, y, _ in cone(lift, ell):
        value = int(chi(np.array([x]), np.array([y]))[0])
        assert value in (-1, 1)
        for t in range(1, ell):
            scaled = int(chi(np.array([t * x]), np.array([t * y]))[0])
            assert scaled == kronecker(t, ell) * value


def test_genus_character_needs_a_prime_three_mod_four():
    with pytest.raises(ValueError):
        genus_character(LIFT_3_8.binary, LIFT_3_8.z_coeff, 13)


@pytest.mark.parametrize(("lift", "ell"), [(lift, lift.auxiliary[0]) for lift in LIFTS.values()])
def test_lattice_sum_matches_a_brute_force_sum(lift, ell):
    np.testing.assert_array_equal(lift.lattice_sum(ell, 200), brute_force_lift(lift, ell, 200))


@pytest.mark.parametrize(("lift", "ell"), AUXILIARY[::2])
def test_factored_sum_matches_lattice_sum(lift, ell):
    np.testing.assert_array_equal(lift.factored_sum(ell, 300), lift.lattice_sum(ell, 300))


@pytest.mark.parametrize("lift", LIFTS.values())
def test_coefficients_are_primitive_integers(lift):
    c = lift.coefficients(200)
    assert c.dtype == np.int64
    assert np.gcd.reduce(c) == 1


def test_named_coefficient_series():
    np.testing.assert_array_equal(gplus_coeffs_7_4(120), LIFT_7_4.coefficients(120))
    np.testing.assert_array_equal(gplus_coeffs_3_6(120), LIFT_3_6.coefficients(120))
    np.testing.assert_array_equal(gplus_coeffs_3_8(120), LIFT_3_8.coefficients(120))


@pytest.mark.parametrize("label", ["7.4.a.a", "3.6.a.a", "3.8.a.a"])
def test_kohnen_zagier_matches_direct_central_values(calibrated, label):
    form = calibrated(label)
    family = principal_family(form, 200)
    lift = build_lift(form, max(family))
    reference = default_reference_d(lift, family)
    calibrate_kappa(lift, reference)

    # includes discriminants divisible by the first auxiliary prime
    assert any(d % LIFTS[label].auxiliary[0] == 0 for d in family)
    for d in family:
        direct = central_value(twisted_l_function(form, d)).real
        if lift.c(d) == 0:
            assert is_vanishing(direct, lift, d), d
        else:
            assert direct == pytest.approx(central_value_kz(lift, d), rel=1e-4), d


@pytest.mark.parametrize("label", ["7.4.a.a", "3.6.a.a", "3.8.a.a"])
def test_lattice_path_lift_matches_direct_central_values(calibrated, label):
    form = calibrated(label)
    family = principal_family(form, 120)
    lift = HalfIntegralLift(form, LIFTS[label].coefficients(max(family), exhaustive=True))
    np.testing.assert_array_equal(lift.coefficients, build_lift(form, max(family)).coefficients)
    reference = default_reference_d(lift, family)
    calibrate_kappa(lift, reference)
    for d in [d for d in family if d != reference and lift.c(d) != 0][:4]:
        direct = central_value(twisted_l_function(form, d)).real
        assert direct == pytest.approx(central_value_kz(lift, d), rel=1e-4), d


def test_nonzero_central_values_clear_the_discretization_bound(calibrated):
    form = calibrated("3.8.a.a")
    family = principal_family(form, 250)
    lift = build_lift(form, max(family))
    calibrate_kappa(lift, default_reference_d(lift, family))
    for d in family:
        if lift.c(d) != 0:
            assert central_value_kz(lift, d) >= discretization_threshold(lift, d) * (1 - 1e-12)


def test_weight_two_has_no_lift():
    with pytest.raises(MissingDataError):
        build_lift(get_newform("11.2.a.a"), 100)


def test_uncalibrated_lift():
    lift = build_lift(get_newform("3.8.a.a"), 50)
    with pytest.raises(MissingDataError):
        central_value_kz(lift, 13)
    with pytest.raises(MissingDataError):
        lift.c(51)


def test_empirical_lift_takes_the_smallest_scaled_value():
    form = get_newform("11.2.a.a")
    lift = empirical_lift(form, {5: 2.0, 8: 0.0, 12: 0.5})
    assert lift.reference_d == 12
    assert lift.kappa == pytest.approx(0.5 * 12**0.5)
    assert is_vanishing(0.0, lift, 8)
    assert not is_vanishing(lift.kappa / 8**0.5, lift, 8)


def test_empirical_lift_needs_a_nonzero_value():
    with pytest.raises(MissingDataError):
        empirical_lift(get_newform("11.2.a.a"), {5: 0.0})


def test_reference_needs_a_nonzero_coefficient():
    lift = HalfIntegralLift(get_newform("3.8.a.a"), np.zeros(20, dtype=np.int64))
    with pytest.raises(MissingDataError):
        default_reference_d(lift, [13, 19])


def test_kappa_does_not_depend_on_the_reference(calibrated):
    form = calibrated("3.6.a.a")
    family = principal_family(form, 300)
    lift = build_lift(form, max(family))
    references = [d for d in family if lift.c(d) != 0][:2]
    first = calibrate_kappa(lift, references[0])
    second = calibrate_kappa(lift, references[1])
    assert second == pytest.approx(first, rel=1e-4)
