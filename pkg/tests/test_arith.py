import pytest
from modules.arith import (
    FamilySelector,
    admissible_discriminants,
    fundamental_discriminants,
    is_fundamental_discriminant,
    kronecker,
    kronecker_table,
    sign_of_functional_equation,
)
from modules.enums import FamilyKind
from modules.newforms import LABELS

ODD_PRIMES = (3, 5, 7, 11, 13, 17)


@pytest.mark.parametrize("p", ODD_PRIMES)
def test_kronecker_matches_euler_criterion(p):
    for a in range(-40, 41):
        expected = pow(a % p, (p - 1) // 2, p)
        expected = -1 if expected == p - 1 else expected
        assert kronecker(a, p) == expected, (a, p)


def test_kronecker_at_two():
    assert [kronecker(a, 2) for a in (1, 3, 5, 7, 9, -1, -3)] == [1, -1, -1, 1, 1, 1, -1]
    assert kronecker(4, 2) == 0


def test_kronecker_is_multiplicative_in_the_denominator():
    for a in (-7, -4, 5, 8, 12, 13):
        for m in range(1, 30):
            for n in range(1, 30):
                assert kronecker(a, m * n) == kronecker(a, m) * kronecker(a, n)


def test_kronecker_special_cases():
    assert kronecker(1, 0) == 1
    assert kronecker(-1, 0) == 1
    assert kronecker(2, 0) == 0
    assert kronecker(5, -1) == 1
    assert kronecker(-5, -1) == -1


def test_kronecker_table_is_periodic():
    table = kronecker_table(13, 100)
    assert len(table) == 101
    assert list(table) == [kronecker(13, n) for n in range(101)]


def test_fundamental_discriminants_up_to_40():
    assert fundamental_discriminants(40) == [5, 8, 12, 13, 17, 21, 24, 28, 29, 33, 37, 40]
    assert fundamental_discriminants(4) == []


def test_fundamental_discriminant_predicate():
    assert not is_fundamental_discriminant(1)
    assert is_fundamental_discriminant(-4)
    assert is_fundamental_discriminant(-3)
    assert not is_fundamental_discriminant(16)
    assert not is_fundamental_discriminant(20)
    assert all(is_fundamental_discriminant(d) for d in fundamental_discriminants(500))


def test_weight_eight_family_is_the_residues_mod_three(calibrated):
    form = calibrated("3.8.a.a")
    family = admissible_discriminants(form, 100, FamilySelector(FamilyKind.PRINCIPAL))
    assert family == [d for d in fundamental_discriminants(100) if d % 3 == 1]


@pytest.mark.parametrize("label", ["11.2.a.a", "7.4.a.a", "3.6.a.a", "3.8.a.a"])
def test_principal_families_have_even_sign(calibrated, label):
    form = calibrated(label)
    for d in admissible_discriminants(form, 300, FamilySelector(FamilyKind.PRINCIPAL)):
        assert sign_of_functional_equation(form, d) == pytest.approx(1.0)


@pytest.mark.parametrize("label", ["11.2.a.a", "7.4.a.a", "3.6.a.a", "3.8.a.a"])
def test_root_number_agrees_with_atkin_lehner_eigenvalue(calibrated, label):
    form = calibrated(label)
    m, k = form.level, form.weight
    a_m = form.coefficients(m)[m].real
    assert form.epsilon_f.real == pytest.approx((-1) ** (k // 2) * (-a_m / m ** (k / 2 - 1)))


def test_self_cm_twists_keep_the_root_number(calibrated):
    form = calibrated("7.3.b.a")
    family = admissible_discriminants(form, 300, FamilySelector(FamilyKind.SELF_CM))
    assert family
    for d in family:
        assert sign_of_functional_equation(form, d) == pytest.approx(form.epsilon_f)


def test_non_self_dual_family_is_one_residue_class(calibrated):
    form = calibrated("13.2.e.a")
    family = admissible_discriminants(form, 200, FamilySelector(FamilyKind.NON_SELF_DUAL, diamond=1))
    assert family == [d for d in fundamental_discriminants(200) if d % 13 == 1]


def test_sign_requires_coprime_discriminant(calibrated):
    with pytest.raises(ValueError):
        sign_of_functional_equation(calibrated("11.2.a.a"), 44)


def test_selector_validation():
    with pytest.raises(ValueError):
        FamilySelector(FamilyKind.SELF_CM, heart=0).validate(7)
    with pytest.raises(ValueError):
        FamilySelector(FamilyKind.NON_SELF_DUAL, diamond=13).validate(13)
    FamilySelector(FamilyKind.SELF_CM, heart=-1).validate(7)


def test_every_label_is_registered():
    assert set(LABELS) == {"11.2.a.a", "7.4.a.a", "3.6.a.a", "3.8.a.a", "7.3.b.a", "13.2.e.a"}
