"""Polynomials, rational functions and shift-operator series in the spectral parameter u.

Conventions: ``f^{[k]}(u) = f(u + i k / 2)`` and ``bar f(u) = conj(f(conj(u)))``,
i.e. conjugation of every coefficient.  The shift operator ``D`` acts as
``D f = f^{[-1]} D``.

Exact polynomials are stored as ``QQ_I`` coefficient tuples and delegate
their algebra to ``sympy.Poly``; float polynomials delegate to
``numpy.polynomial``.
"""

from __future__ import annotations

import logging
import operator
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable, Iterable, Mapping, Sequence

import numpy as np
import sympy
from numpy.polynomial import polynomial as npoly
from sympy.polys.densetools import dup_eval
from sympy.polys.domains import QQ_I

from hirotalax.core.errors import TruncationError
from hirotalax.core.fields import EXACT, CoefficientField, GaussianRational

logger = logging.getLogger(__name__)

U = sympy.Symbol("u")

_SCALARS = (int, Fraction, float, complex, GaussianRational)


class Poly:
    """Dense univariate polynomial, coefficients in ascending degree.

    The zero polynomial has no coefficients and reports ``degree == -1``.
    """

    __slots__ = ("coeffs", "field")

    def __init__(self, coeffs: Iterable[Any] = (), field: CoefficientField = EXACT):
        cs = [field.convert(c) for c in coeffs]
        while cs and field.is_null(cs[-1]):
            cs.pop()
        self.coeffs: tuple = tuple(cs)
        self.field = field

    @classmethod
    def constant(cls, value: Any, field: CoefficientField = EXACT) -> Poly:
        return cls([value], field)

    @classmethod
    def monomial(cls, n: int, field: CoefficientField = EXACT, coefficient: Any = 1) -> Poly:
        return cls([0] * n + [coefficient], field)

    @classmethod
    def linear(cls, root_offset: Any, field: CoefficientField = EXACT) -> Poly:
        """The polynomial ``u + root_offset``."""
        return cls([root_offset, 1], field)

    @classmethod
    def from_roots(cls, roots: Iterable[Any], field: CoefficientField = EXACT) -> Poly:
        result = cls.constant(1, field)
        for r in roots:
            result = result * cls([-field.convert(r), 1], field)
        return result

    @classmethod
    def from_sympy(cls, p: sympy.Poly | sympy.Expr) -> Poly:
        """Exact polynomial from a ``sympy.Poly`` or an expression in ``u``."""
        if not isinstance(p, sympy.Poly):
            p = sympy.Poly(p, U, domain=QQ_I)
        elif p.domain != QQ_I:
            p = p.set_domain(QQ_I)
        return cls(reversed(p.rep.to_list()), EXACT)

    def to_sympy(self) -> sympy.Poly:
        if not self.field.exact:
            raise TypeError("only exact polynomials convert to sympy")
        return sympy.Poly.from_list(list(reversed(self.coeffs)) or [QQ_I.zero], U, domain=QQ_I)

    def _array(self) -> np.ndarray:
        return np.array([self.field.to_complex(c) for c in self.coeffs] or [0j])

    def _combine(
        self, other: Poly, exact_op: Callable, float_op: Callable
    ) -> Poly:
        if self.field.exact:
            return Poly.from_sympy(exact_op(self.to_sympy(), other.to_sympy()))
        return Poly(float_op(self._array(), other._array()), self.field)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def leading(self) -> Any:
        return self.coeffs[-1] if self.coeffs else self.field.zero

    def is_zero(self) -> bool:
        if self.field.exact:
            return not self.coeffs
        return all(self.field.is_zero(c) for c in self.coeffs)

    def is_constant(self) -> bool:
        return self.degree <= 0

    def is_real_analytic(self) -> bool:
        return all(self.field.is_real(c) for c in self.coeffs)

    def lowest_order(self) -> int:
        for n, c in enumerate(self.coeffs):
            if not self.field.is_null(c):
                return n
        return 0

    def _lift(self, other: Any) -> Poly | None:
        if isinstance(other, Poly):
            if other.field != self.field:
                raise TypeError(
                    f"Mixed coefficient models: {self.field.name} and {other.field.name}"
                )
            return other
        if isinstance(other, _SCALARS):
            return Poly.constant(other, self.field)
        return None

    def __add__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        return self._combine(o, operator.add, npoly.polyadd)

    __radd__ = __add__

    def __neg__(self):
        return Poly([-c for c in self.coeffs], self.field)

    def __sub__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        return self._combine(o, operator.sub, npoly.polysub)

    def __rsub__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        return o - self

    def __mul__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        if not self.coeffs or not o.coeffs:
            return Poly((), self.field)
        return self._combine(o, operator.mul, npoly.polymul)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            return NotImplemented
        if self.field.exact:
            return Poly.from_sympy(self.to_sympy() ** n)
        return Poly(npoly.polypow(self._array(), n), self.field)

    def __truediv__(self, other):
        if isinstance(other, _SCALARS):
            inv = self.field.one / self.field.convert(other)
            return Poly([c * inv for c in self.coeffs], self.field)
        if isinstance(other, (Poly, SpectralFunction)):
            return SpectralFunction(self) / other
        return NotImplemented

    def __rtruediv__(self, other):
        if isinstance(other, _SCALARS):
            return SpectralFunction(Poly.constant(other, self.field), self)
        return NotImplemented

    def __divmod__(self, other: Poly) -> tuple[Poly, Poly]:
        o = self._lift(other)
        if o is None:
            return NotImplemented
        if not o.coeffs:
            raise ZeroDivisionError("polynomial division by zero")
        if self.field.exact:
            quot, rem = self.to_sympy().div(o.to_sympy())
            return Poly.from_sympy(quot), Poly.from_sympy(rem)
        quot, rem = npoly.polydiv(self._array(), o._array())
        # entries above deg(o) - 1 are rounding noise
        return Poly(quot, self.field), Poly(rem[: len(o.coeffs) - 1], self.field)

    def __floordiv__(self, other):
        return divmod(self, other)[0]

    def __mod__(self, other):
        return divmod(self, other)[1]

    def __eq__(self, other):
        if isinstance(other, Poly):
            return self.field == other.field and self.coeffs == other.coeffs
        if isinstance(other, _SCALARS):
            return self == Poly.constant(other, self.field)
        return NotImplemented

    def __hash__(self):
        return hash(self.coeffs)

    def equals(self, other: Any) -> bool:
        """Equality in the coefficient model: exact, or within tolerance."""
        return (self - other).is_zero()

    def evaluate(self, u: Any) -> Any:
        if self.field.exact:
            return dup_eval(list(reversed(self.coeffs)), self.field.convert(u), QQ_I)
        return complex(npoly.polyval(self.field.convert(u), self._array()))

    __call__ = evaluate

    def evaluate_array(self, points: np.ndarray) -> np.ndarray:
        return npoly.polyval(np.asarray(points, dtype=complex), self._array())

    def shift(self, k: int) -> Poly:
        """Return ``p(u + i k / 2)``."""
        if k == 0 or self.degree <= 0:
            return self
        offset = self.field.half_shift(k)
        if self.field.exact:
            return Poly.from_sympy(self.to_sympy().shift(offset))
        acc = np.array([0j])
        for c in reversed(self.coeffs):
            acc = npoly.polyadd(npoly.polymul(acc, [offset, 1.0]), [c])
        return Poly(acc, self.field)

    def conjugate(self) -> Poly:
        return Poly([self.field.conjugate(c) for c in self.coeffs], self.field)

    def derivative(self) -> Poly:
        if self.field.exact:
            return Poly.from_sympy(self.to_sympy().diff(U))
        return Poly(npoly.polyder(self._array()), self.field)

    def monic(self) -> Poly:
        if not self.coeffs:
            return self
        return self / self.leading

    def strip_low(self, m: int) -> Poly:
        """Divide by ``u**m`` assuming the low coefficients vanish."""
        return Poly(self.coeffs[m:], self.field)

    def gcd(self, other: Poly) -> Poly:
        """Monic gcd in the exact model; common monomial factor in the float model."""
        if not self.field.exact:
            orders = [p.lowest_order() for p in (self, other) if p.coeffs]
            return Poly.monomial(min(orders, default=0), self.field)
        g = Poly.from_sympy(self.to_sympy().gcd(other.to_sympy()))
        if not g.coeffs:
            return Poly.constant(1, self.field)
        return g.monic()

    def roots(self) -> np.ndarray:
        if self.degree <= 0:
            return np.array([], dtype=complex)
        return np.roots(self._array()[::-1])

    def to_json(self) -> list[list[float]]:
        return [self.field.pair(c) for c in self.coeffs]

    def with_field(self, field: CoefficientField) -> Poly:
        if field.exact == self.field.exact:
            return Poly(self.coeffs, field)
        return Poly([self.field.to_complex(c) for c in self.coeffs], field)

    def __repr__(self):
        if not self.coeffs:
            return "Poly(0)"
        terms = [
            f"({c})*u^{n}" for n, c in enumerate(self.coeffs) if not self.field.is_null(c)
        ]
        return "Poly(" + " + ".join(terms) + ")"


class SpectralFunction:
    """Rational function ``num / den`` of u with a monic denominator.

    In the exact model the pair is kept coprime. In the float model only
    common powers of u are cancelled, since a numerical gcd is unstable.
    """

    __slots__ = ("num", "den")

    def __init__(self, num: Poly | Any, den: Poly | Any = None, *, reduce: bool = True):
        if not isinstance(num, Poly):
            field = den.field if isinstance(den, Poly) else EXACT
            num = Poly.constant(num, field)
        field = num.field
        if den is None:
            den = Poly.constant(1, field)
        elif not isinstance(den, Poly):
            den = Poly.constant(den, field)
        if not den.coeffs:
            raise ZeroDivisionError("SpectralFunction with zero denominator")
        if not num.coeffs:
            den = Poly.constant(1, field)
        elif reduce:
            num, den = self._reduce(num, den)
        if not field.is_null(den.leading - field.one):
            lead = den.leading
            num, den = num / lead, den / lead
        self.num = num
        self.den = den

    @staticmethod
    def _reduce(num: Poly, den: Poly) -> tuple[Poly, Poly]:
        if den.degree <= 0:
            return num, den
        if num.field.exact:
            g = num.gcd(den)
            if g.degree > 0:
                return num // g, den // g
            return num, den
        m = min(num.lowest_order(), den.lowest_order())
        if m:
            return num.strip_low(m), den.strip_low(m)
        return num, den

    @classmethod
    def constant(cls, value: Any, field: CoefficientField = EXACT) -> SpectralFunction:
        return cls(Poly.constant(value, field))

    @classmethod
    def variable(cls, field: CoefficientField = EXACT) -> SpectralFunction:
        return cls(Poly.monomial(1, field))

    @classmethod
    def from_expr(cls, expr: sympy.Expr) -> SpectralFunction:
        """Exact spectral function from a rational sympy expression in ``u``."""
        num, den = sympy.fraction(sympy.cancel(expr))
        return cls(Poly.from_sympy(num), Poly.from_sympy(den))

    def to_expr(self) -> sympy.Expr:
        return self.num.to_sympy().as_expr() / self.den.to_sympy().as_expr()

    @property
    def field(self) -> CoefficientField:
        return self.num.field

    def _lift(self, other: Any) -> SpectralFunction | None:
        if isinstance(other, SpectralFunction):
            if other.field != self.field:
                raise TypeError(
                    f"Mixed coefficient models: {self.field.name} and {other.field.name}"
                )
            return other
        if isinstance(other, Poly):
            return SpectralFunction(other, reduce=False)
        if isinstance(other, _SCALARS):
            return SpectralFunction.constant(other, self.field)
        return None

    def __add__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        if self.den == o.den:
            return SpectralFunction(self.num + o.num, self.den)
        if self.field.exact:
            g = self.den.gcd(o.den)
            left, right = o.den // g, self.den // g
            return SpectralFunction(self.num * left + o.num * right, self.den * left)
        return SpectralFunction(self.num * o.den + o.num * self.den, self.den * o.den)

    __radd__ = __add__

    def __neg__(self):
        return SpectralFunction(-self.num, self.den, reduce=False)

    def __sub__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        return o - self

    def __mul__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        if not self.num.coeffs or not o.num.coeffs:
            return SpectralFunction(Poly((), self.field))
        if self.field.exact:
            g1 = self.num.gcd(o.den)
            g2 = o.num.gcd(self.den)
            return SpectralFunction(
                (self.num // g1) * (o.num // g2),
                (self.den // g2) * (o.den // g1),
                reduce=False,
            )
        return SpectralFunction(self.num * o.num, self.den * o.den)

    __rmul__ = __mul__

    def reciprocal(self) -> SpectralFunction:
        if not self.num.coeffs:
            raise ZeroDivisionError("reciprocal of the zero function")
        return SpectralFunction(self.den, self.num, reduce=False)

    def __truediv__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        return self * o.reciprocal()

    def __rtruediv__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        return o * self.reciprocal()

    def __pow__(self, n: int):
        if not isinstance(n, int):
            return NotImplemented
        if n < 0:
            return self.reciprocal() ** (-n)
        return SpectralFunction(self.num**n, self.den**n, reduce=False)

    def __eq__(self, other):
        o = self._lift(other) if not isinstance(other, SpectralFunction) else other
        if o is None:
            return NotImplemented
        return self.num == o.num and self.den == o.den

    def __hash__(self):
        return hash((self.num, self.den))

    def shift(self, k: int) -> SpectralFunction:
        if k == 0:
            return self
        return SpectralFunction(self.num.shift(k), self.den.shift(k), reduce=False)

    def conjugate(self) -> SpectralFunction:
        return SpectralFunction(self.num.conjugate(), self.den.conjugate(), reduce=False)

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def equals(self, other: Any) -> bool:
        return (self - other).is_zero()

    def is_polynomial(self) -> bool:
        return self.den.degree == 0

    def is_real_analytic(self) -> bool:
        return self.num.is_real_analytic() and self.den.is_real_analytic()

    def evaluate(self, u: Any) -> Any:
        d = self.den.evaluate(u)
        if self.field.is_null(d):
            raise ZeroDivisionError(f"pole of the spectral function at u={u}")
        return self.num.evaluate(u) / d

    __call__ = evaluate

    def evaluate_array(self, points: np.ndarray) -> np.ndarray:
        return self.num.evaluate_array(points) / self.den.evaluate_array(points)

    def to_json(self) -> dict[str, list[list[float]]]:
        return {"num": self.num.to_json(), "den": self.den.to_json()}

    def __repr__(self):
        if self.is_polynomial():
            return f"SpectralFunction({self.num!r})"
        return f"SpectralFunction({self.num!r} / {self.den!r})"


def as_spectral(value: Any, field: CoefficientField = EXACT) -> SpectralFunction:
    if isinstance(value, SpectralFunction):
        return value
    if isinstance(value, Poly):
        return SpectralFunction(value, reduce=False)
    return SpectralFunction.constant(value, field)


def shift(f: SpectralFunction | Poly, k: int) -> SpectralFunction | Poly:
    """``f^{[k]}(u) = f(u + i k / 2)``."""
    return f.shift(k)


def bar(f: SpectralFunction | Poly) -> SpectralFunction | Poly:
    """Complex-conjugate every coefficient, ``bar f(u) = conj(f(conj u))``."""
    return f.conjugate()


@dataclass(frozen=True)
class SpectralRing:
    """Ring protocol (zero / one / is_zero) over spectral functions, for detkit."""

    field: CoefficientField = EXACT

    @property
    def zero(self) -> SpectralFunction:
        return SpectralFunction.constant(0, self.field)

    @property
    def one(self) -> SpectralFunction:
        return SpectralFunction.constant(1, self.field)

    @property
    def exact(self) -> bool:
        return self.field.exact

    def convert(self, value: Any) -> SpectralFunction:
        return as_spectral(value, self.field)

    def is_zero(self, value: SpectralFunction) -> bool:
        return value.is_zero()


class ShiftSeries:
    """Truncated formal sum ``sum_m c_m D^m`` with spectral-function coefficients."""

    __slots__ = ("coeffs", "order", "field")

    def __init__(
        self,
        coeffs: Mapping[int, SpectralFunction],
        order: int,
        field: CoefficientField = EXACT,
    ):
        if order < 0:
            raise ValueError("truncation order must be non-negative")
        kept: dict[int, SpectralFunction] = {}
        for m, c in coeffs.items():
            if m < 0:
                raise ValueError(f"negative shift power {m}")
            c = as_spectral(c, field)
            if m <= order and c.num.coeffs:
                kept[m] = c
        self.coeffs = dict(sorted(kept.items()))
        self.order = order
        self.field = field

    @classmethod
    def identity(cls, order: int, field: CoefficientField = EXACT) -> ShiftSeries:
        return cls({0: SpectralFunction.constant(1, field)}, order, field)

    @classmethod
    def monomial(
        cls, coefficient: Any, power: int, order: int, field: CoefficientField = EXACT
    ) -> ShiftSeries:
        return cls({power: as_spectral(coefficient, field)}, order, field)

    def coefficient(self, m: int) -> SpectralFunction:
        return self.coeffs.get(m, SpectralFunction.constant(0, self.field))

    def truncate(self, order: int) -> ShiftSeries:
        return ShiftSeries(self.coeffs, min(order, self.order), self.field)

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.coeffs.values())

    def __add__(self, other: ShiftSeries) -> ShiftSeries:
        order = min(self.order, other.order)
        out = dict(self.coeffs)
        for m, c in other.coeffs.items():
            out[m] = out[m] + c if m in out else c
        return ShiftSeries(out, order, self.field)

    def __neg__(self) -> ShiftSeries:
        return ShiftSeries({m: -c for m, c in self.coeffs.items()}, self.order, self.field)

    def __sub__(self, other: ShiftSeries) -> ShiftSeries:
        return self + (-other)

    def __mul__(self, other: ShiftSeries) -> ShiftSeries:
        # (c D^m)(d D^n) = c d^{[-m]} D^{m+n}
        order = min(self.order, other.order)
        out: dict[int, SpectralFunction] = {}
        for m, c in self.coeffs.items():
            for n, d in other.coeffs.items():
                if m + n > order:
                    continue
                term = c * d.shift(-m)
                out[m + n] = out[m + n] + term if m + n in out else term
        return ShiftSeries(out, order, self.field)

    def equals(self, other: ShiftSeries) -> bool:
        return (self - other).is_zero()

    def __repr__(self):
        return f"ShiftSeries(order={self.order}, powers={list(self.coeffs)})"


def series_from_inverse(terms: ShiftSeries, order: int) -> ShiftSeries:
    """Truncated ``(1 - terms)^{-1}`` as the geometric series ``sum_n terms^n``."""
    if not terms.coefficient(0).is_zero():
        raise ValueError("1 - terms is not invertible: terms has a D^0 component")
    terms = terms.truncate(order)
    result = ShiftSeries.identity(terms.order, terms.field)
    power = result
    for _ in range(terms.order):
        power = power * terms
        if not power.coeffs:
            break
        result = result + power
    return result


def extract_tk(W: ShiftSeries, k: int) -> SpectralFunction:
    """Read ``T_k`` off ``W = sum_k D^k T_k D^k``, using ``D^k T_k D^k = T_k^{[-k]} D^{2k}``."""
    if k < 0:
        raise ValueError("k must be non-negative")
    if W.order < 2 * k:
        raise TruncationError(f"series truncated at order {W.order} < {2 * k}")
    return W.coefficient(2 * k).shift(k)


def sample_points(
    seed: int, count: int, r_min: float = 1.5, r_max: float = 3.0
) -> tuple[complex, ...]:
    """Deterministic residual sample set, uniform in the annulus r_min <= |u| <= r_max."""
    rng = np.random.default_rng(seed)
    radius = np.sqrt(rng.uniform(r_min**2, r_max**2, size=count))
    angle = rng.uniform(0.0, 2.0 * np.pi, size=count)
    return tuple(complex(z) for z in radius * np.exp(1j * angle))


def circle_nodes(count: int, radius: float, phase: float) -> np.ndarray:
    s = np.arange(count)
    return radius * np.exp(2j * np.pi * (s + phase) / count)


def interpolate_on_circle(
    values: Sequence[complex],
    radius: float,
    phase: float,
    field: CoefficientField,
    rel_trim: float = 1e-12,
) -> Poly:
    """Recover a polynomial from its values on ``circle_nodes(len(values), radius, phase)``.

    Exact for degrees below ``len(values)``.  Trailing coefficients whose
    contribution on the circle is below ``rel_trim`` of the largest one are
    dropped as rounding noise.
    """
    values = np.asarray(values, dtype=complex)
    count = len(values)
    spectrum = np.fft.fft(values) / count
    weights = np.abs(spectrum)
    cutoff = rel_trim * (weights.max() if count else 0.0)
    top = count
    while top > 0 and weights[top - 1] <= cutoff:
        top -= 1
    base = radius * np.exp(2j * np.pi * phase / count)
    coeffs = [spectrum[n] / base**n for n in range(top)]
    return Poly(coeffs, field)
