from fractions import Fraction

import numpy as np
import pytest
import sympy
from sympy.polys.domains import QQ_I

from hirotalax.core.errors import TruncationError
from hirotalax.core.fields import EXACT, FloatField, gaussian
from hirotalax.core.specfun import (
    U,
    Poly,
    ShiftSeries,
    SpectralFunction,
    bar,
    circle_nodes,
    extract_tk,
    interpolate_on_circle,
    sample_points,
    series_from_inverse,
    shift,
)

I = gaussian(0, 1)
HALF_I = gaussian(0, Fraction(1, 2))


def u(field=EXACT):
    return Poly.monomial(1, field)


def random_poly(rng, degree, real=False, field=EXACT):
    return Poly([field.random_element(rng, real=real) for _ in range(degree)] + [1], field)


@pytest.mark.unit
def test_shift_examples():
    assert shift(u(), 2) == Poly([I, 1])
    assert shift(Poly.linear(HALF_I) ** 2, -1) == Poly.monomial(2)
    phi = Poly.linear(HALF_I)
    assert shift(phi, 0) == phi


@pytest.mark.unit
def test_shift_is_a_group_action(rng):
    f = SpectralFunction(random_poly(rng, 3), random_poly(rng, 2))
    for a, b in ((1, 2), (-3, 5), (4, -4)):
        assert f.shift(a).shift(b) == f.shift(a + b)
    assert f.shift(3).shift(-3) == f


@pytest.mark.unit
def test_bar_examples(rng):
    assert bar(Poly.linear(HALF_I)) == Poly.linear(-HALF_I)
    real = random_poly(rng, 4, real=True)
    assert bar(real) == real
    assert real.is_real_analytic()
    phi = Poly.linear(HALF_I) ** 2
    assert bar(phi) == Poly.linear(-HALF_I) ** 2


@pytest.mark.unit
def test_bar_reverses_shifts(rng):
    f = SpectralFunction(random_poly(rng, 3), random_poly(rng, 1))
    for k in (-2, 1, 3):
        assert bar(f.shift(k)) == bar(f).shift(-k)
    assert bar(bar(f)) == f


@pytest.mark.unit
def test_poly_division_and_gcd():
    a = Poly.from_roots([1, 2, 3])
    b = Poly.from_roots([2, 5])
    q, r = divmod(a, b)
    assert q * b + r == a
    assert r.degree < b.degree
    assert a.gcd(b) == Poly.from_roots([2])


@pytest.mark.unit
def test_gcd_over_gaussian_rationals():
    a = Poly.from_roots([I, -I, 2])
    b = Poly.from_roots([I, Fraction(1, 3)])
    assert a.gcd(b) == Poly.from_roots([I])
    assert (a // a.gcd(b)) * Poly.from_roots([I]) == a


@pytest.mark.unit
def test_exact_poly_round_trips_through_sympy():
    p = Poly.from_roots([HALF_I, Fraction(2, 7)])
    assert p.to_sympy().domain == QQ_I
    assert Poly.from_sympy(p.to_sympy()) == p
    assert Poly.from_sympy(sympy.expand((U - sympy.I / 2) * (U - sympy.Rational(2, 7)))) == p
    with pytest.raises(TypeError):
        Poly([1, 2], FloatField()).to_sympy()


@pytest.mark.unit
def test_exact_shift_matches_substitution():
    p = Poly.linear(HALF_I) ** 3
    shifted = sympy.expand((U + sympy.I + sympy.I / 2) ** 3)
    assert p.shift(2) == Poly.from_sympy(shifted)


@pytest.mark.unit
def test_spectral_function_round_trips_through_expressions():
    f = SpectralFunction(Poly.from_roots([I, 2]), Poly.from_roots([Fraction(1, 2)]))
    assert SpectralFunction.from_expr(f.to_expr()) == f
    assert SpectralFunction.from_expr((U**2 - 1) / (U - 1)) == SpectralFunction(Poly.from_roots([-1]))


@pytest.mark.unit
def test_poly_evaluate_and_derivative():
    p = Poly([1, 2, 3])
    assert EXACT.equal(p(2), 17)
    assert EXACT.equal(p(I), -2 + 2j)
    assert p.derivative() == Poly([2, 6])
    assert Poly(()).degree == -1
    assert np.allclose(p.evaluate_array(np.array([0.0, 1.0])), [1.0, 6.0])


@pytest.mark.unit
def test_poly_roots_in_float_model(flt):
    p = Poly.from_roots([0.5, -1.5, 2.0], flt)
    assert np.allclose(sorted(p.roots().real), [-1.5, 0.5, 2.0])


@pytest.mark.unit
def test_spectral_function_is_reduced():
    f = SpectralFunction(Poly.from_roots([1, 2]), Poly.from_roots([1, 3]))
    assert f.num == Poly.from_roots([2])
    assert f.den == Poly.from_roots([3])


@pytest.mark.unit
def test_spectral_function_float_model_strips_monomials(flt):
    f = SpectralFunction(Poly([0, 0, 1, 1], flt), Poly([0, 2], flt))
    assert f.den.degree == 0
    assert f.num.degree == 2


@pytest.mark.unit
def test_spectral_function_arithmetic(rng):
    f = SpectralFunction(random_poly(rng, 2), random_poly(rng, 1))
    g = SpectralFunction(random_poly(rng, 1), random_poly(rng, 2))
    assert (f + g) - g == f
    assert (f * g) / g == f
    assert f.reciprocal() * f == SpectralFunction.constant(1)
    assert (f**2).equals(f * f)


@pytest.mark.unit
def test_spectral_function_pole_raises():
    f = SpectralFunction(Poly.constant(1), u())
    with pytest.raises(ZeroDivisionError):
        f.evaluate(0)
    with pytest.raises(ZeroDivisionError):
        SpectralFunction(u(), Poly(()))


@pytest.mark.unit
def test_spectral_function_json():
    f = SpectralFunction(Poly([HALF_I, 1]), u())
    assert f.to_json() == {"num": [[0.0, 0.5], [1.0, 0.0]], "den": [[0.0, 0.0], [1.0, 0.0]]}


@pytest.mark.unit
def test_series_commutation_rule(rng):
    c = SpectralFunction(random_poly(rng, 1))
    d = SpectralFunction(random_poly(rng, 2))
    left = ShiftSeries.monomial(c, 1, 5)
    right = ShiftSeries.monomial(d, 2, 5)
    product = left * right
    assert product.coefficient(3) == c * d.shift(-1)


@pytest.mark.unit
def test_series_from_inverse_examples(rng):
    order = 4
    assert series_from_inverse(ShiftSeries({}, order), order).equals(ShiftSeries.identity(order))

    c = SpectralFunction(random_poly(rng, 1))
    S = series_from_inverse(ShiftSeries.monomial(c, 1, order), order)
    assert S.coefficient(2) == c * c.shift(-1)
    one_minus = ShiftSeries.identity(order) - ShiftSeries.monomial(c, 1, order)
    assert (one_minus * S).equals(ShiftSeries.identity(order))


@pytest.mark.unit
def test_series_from_inverse_rejects_constant_term():
    with pytest.raises(ValueError):
        series_from_inverse(ShiftSeries.identity(3), 3)


@pytest.mark.unit
def test_series_multiplication_is_associative(rng):
    order = 8

    def random_series():
        return ShiftSeries({m: SpectralFunction(random_poly(rng, 1)) for m in (1, 2, 3)}, order)

    a, b, c = random_series(), random_series(), random_series()
    assert ((a * b) * c).equals(a * (b * c))


@pytest.mark.unit
def test_extract_tk():
    W = ShiftSeries.identity(2)
    assert extract_tk(W, 0) == SpectralFunction.constant(1)
    with pytest.raises(TruncationError):
        extract_tk(W, 2)


@pytest.mark.unit
def test_sample_points_are_deterministic():
    pts = sample_points(7, 50, 1.5, 3.0)
    assert pts == sample_points(7, 50, 1.5, 3.0)
    radii = np.abs(np.array(pts))
    assert radii.min() >= 1.5 and radii.max() <= 3.0


@pytest.mark.unit
def test_interpolate_on_circle_recovers_polynomial(flt):
    p = Poly([1 + 2j, -0.5, 0.25j, 3.0], flt)
    nodes = circle_nodes(8, 2.75, 0.3)
    recovered = interpolate_on_circle(p.evaluate_array(nodes), 2.75, 0.3, flt)
    assert recovered.degree == 3
    assert recovered.equals(p)
