import random
from fractions import Fraction

import pytest
from sympy.polys.domains import QQ_I

from hirotalax.core.errors import NotRepresentableError
from hirotalax.core.fields import EXACT, ExactField, FloatField, GaussianRational, field_for, gaussian


@pytest.mark.unit
def test_gaussian_rational_arithmetic():
    a = gaussian(1, 2)
    b = gaussian(3, -1)
    assert a * b == gaussian(5, 5)
    assert a + b == gaussian(4, 1)
    assert a - b == gaussian(-2, 3)
    assert (a / b) * b == a
    assert EXACT.conjugate(a) == gaussian(1, -2)
    assert EXACT.imag_unit**2 == gaussian(-1)


@pytest.mark.unit
def test_exact_scalars_are_sympy_gaussian_rationals():
    assert isinstance(EXACT.convert(Fraction(1, 3)), GaussianRational)
    assert EXACT.convert(Fraction(1, 3)).parent() == QQ_I
    assert EXACT.convert(0.5 - 2j) == gaussian(Fraction(1, 2), -2)


@pytest.mark.unit
def test_gaussian_rational_mixes_with_ints_and_fractions():
    a = gaussian(Fraction(1, 3))
    assert EXACT.equal(a * 3, 1)
    assert 1 - a == gaussian(Fraction(2, 3))
    assert EXACT.equal(a, Fraction(1, 3))
    assert EXACT.to_complex(gaussian(Fraction(1, 2), -2)) == complex(0.5, -2.0)
    assert EXACT.to_fraction_pair(a) == (Fraction(1, 3), Fraction(0))


@pytest.mark.unit
def test_division_by_zero_raises():
    with pytest.raises(ZeroDivisionError):
        gaussian(1) / gaussian(0)


@pytest.mark.unit
def test_exact_zero_test_does_not_rely_on_int_equality():
    assert EXACT.is_zero(EXACT.zero)
    assert EXACT.is_zero(gaussian(1, 1) - gaussian(1, 1))
    assert not EXACT.is_zero(gaussian(0, Fraction(1, 10**12)))


@pytest.mark.unit
def test_exact_sqrt_of_perfect_squares_only():
    assert EXACT.sqrt(Fraction(9, 4)) == gaussian(Fraction(3, 2))
    with pytest.raises(NotRepresentableError):
        EXACT.sqrt(Fraction(5, 4))
    with pytest.raises(NotRepresentableError):
        EXACT.sqrt(-1)


@pytest.mark.unit
def test_float_field_tolerance():
    field = FloatField(tolerance=1e-6)
    assert field.is_zero(1e-7)
    assert not field.is_zero(1e-5)
    assert field.sqrt(4.0) == 2.0
    assert field.half_shift(3) == 1.5j
    assert field.convert(gaussian(Fraction(1, 4), 1)) == complex(0.25, 1.0)


@pytest.mark.unit
def test_half_shift_is_exact():
    assert EXACT.half_shift(-3) == gaussian(0, Fraction(-3, 2))


@pytest.mark.unit
def test_random_elements_are_reproducible(rng):
    first = [EXACT.random_element(random.Random(5)) for _ in range(3)]
    second = [EXACT.random_element(random.Random(5)) for _ in range(3)]
    assert first == second
    assert EXACT.is_real(EXACT.random_element(rng, real=True))


@pytest.mark.unit
def test_field_for():
    assert isinstance(field_for("exact"), ExactField)
    assert field_for("float", 1e-6).tolerance == 1e-6
    with pytest.raises(ValueError):
        field_for("p-adic")
