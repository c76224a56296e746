"""Coefficient models for functions of the spectral parameter.

Two interchangeable fields are provided: the exact field of Gaussian
rationals, backed by sympy's ``QQ_I`` domain, and a complex float field
whose equality is an absolute tolerance.  Polynomials and rational
functions in :mod:`hirotalax.core.specfun` are generic over either one.

Exact scalars are ``QQ_I`` elements.  They mix with ``int`` and ``Fraction``
in arithmetic but only compare equal to other ``QQ_I`` elements, so
comparisons against plain numbers go through :meth:`CoefficientField.equal`.
"""

from __future__ import annotations

import random
from abc import ABC, abstractmethod
from dataclasses import dataclass
from fractions import Fraction
from typing import Any

import numpy as np
import sympy
from sympy.polys.domains import QQ, QQ_I

from hirotalax.core.errors import NotRepresentableError

GaussianRational = QQ_I.dtype


def _rational(value: Any) -> Any:
    """A ``QQ`` element from an int, Fraction, float or ``QQ`` element."""
    if isinstance(value, float):
        value = Fraction(value)
    if isinstance(value, Fraction):
        return QQ(value.numerator, value.denominator)
    return QQ.convert(value)


def _to_float(q: Any) -> float:
    return int(q.numerator) / int(q.denominator)


def gaussian(re: Any, im: Any = 0) -> GaussianRational:
    """The Gaussian rational ``re + i im``."""
    return QQ_I(_rational(re), _rational(im))


class CoefficientField(ABC):
    """Interface shared by the exact and float coefficient models."""

    name: str
    exact: bool

    @property
    @abstractmethod
    def zero(self) -> Any: ...

    @property
    @abstractmethod
    def one(self) -> Any: ...

    @property
    @abstractmethod
    def imag_unit(self) -> Any: ...

    @abstractmethod
    def convert(self, value: Any) -> Any: ...

    @abstractmethod
    def is_zero(self, value: Any) -> bool: ...

    @abstractmethod
    def is_null(self, value: Any) -> bool:
        """Literal zero, no tolerance; decides which coefficients are stored."""

    @abstractmethod
    def random_element(
        self, rng: random.Random, real: bool = False, bound: int = 5
    ) -> Any: ...

    @abstractmethod
    def sqrt(self, value: Any) -> Any: ...

    @abstractmethod
    def conjugate(self, value: Any) -> Any: ...

    @abstractmethod
    def to_complex(self, value: Any) -> complex: ...

    def equal(self, a: Any, b: Any) -> bool:
        return self.is_zero(self.convert(a) - self.convert(b))

    def is_real(self, value: Any) -> bool:
        return self.is_zero(value - self.conjugate(value))

    def pair(self, value: Any) -> list[float]:
        z = self.to_complex(value)
        return [z.real, z.imag]

    def half_shift(self, k: int) -> Any:
        """The offset ``i*k/2`` used by the shift ``f^{[k]}(u) = f(u + ik/2)``."""
        return self.imag_unit * self.convert(Fraction(k, 2))


@dataclass(frozen=True)
class ExactField(CoefficientField):
    name: str = "exact"
    exact: bool = True

    @property
    def zero(self) -> GaussianRational:
        return QQ_I.zero

    @property
    def one(self) -> GaussianRational:
        return QQ_I.one

    @property
    def imag_unit(self) -> GaussianRational:
        return gaussian(0, 1)

    @property
    def domain(self):
        return QQ_I

    def convert(self, value: Any) -> GaussianRational:
        if isinstance(value, GaussianRational):
            return value
        if isinstance(value, complex):
            return gaussian(value.real, value.imag)
        if isinstance(value, sympy.Basic):
            return QQ_I.from_sympy(value)
        return gaussian(value)

    def is_zero(self, value: Any) -> bool:
        return self.is_null(value)

    def is_null(self, value: Any) -> bool:
        value = self.convert(value)
        return value.x == 0 and value.y == 0

    def random_element(
        self, rng: random.Random, real: bool = False, bound: int = 5
    ) -> GaussianRational:
        re = Fraction(rng.randint(-bound, bound), rng.randint(1, bound))
        im = 0 if real else Fraction(rng.randint(-bound, bound), rng.randint(1, bound))
        return gaussian(re, im)

    def sqrt(self, value: Any) -> GaussianRational:
        value = self.convert(value)
        if value.y != 0 or value.x < 0:
            raise NotRepresentableError(f"sqrt({value}) is not a real rational")
        root = sympy.sqrt(QQ.to_sympy(value.x))
        if not root.is_Rational:
            raise NotRepresentableError(
                f"sqrt({value}) is irrational; use the float model for this chain"
            )
        return QQ_I.from_sympy(root)

    def conjugate(self, value: Any) -> GaussianRational:
        value = self.convert(value)
        return QQ_I(value.x, -value.y)

    def to_complex(self, value: Any) -> complex:
        value = self.convert(value)
        return complex(_to_float(value.x), _to_float(value.y))

    def to_fraction_pair(self, value: Any) -> tuple[Fraction, Fraction]:
        value = self.convert(value)
        return (
            Fraction(int(value.x.numerator), int(value.x.denominator)),
            Fraction(int(value.y.numerator), int(value.y.denominator)),
        )


@dataclass(frozen=True)
class FloatField(CoefficientField):
    tolerance: float = 1e-9
    name: str = "float"
    exact: bool = False

    @property
    def zero(self) -> complex:
        return 0j

    @property
    def one(self) -> complex:
        return 1 + 0j

    @property
    def imag_unit(self) -> complex:
        return 1j

    def convert(self, value: Any) -> complex:
        if isinstance(value, GaussianRational):
            return EXACT.to_complex(value)
        if isinstance(value, Fraction):
            return complex(float(value), 0.0)
        return complex(value)

    def is_zero(self, value: Any) -> bool:
        return abs(value) <= self.tolerance

    def is_null(self, value: Any) -> bool:
        return value == 0

    def random_element(
        self, rng: random.Random, real: bool = False, bound: int = 5
    ) -> complex:
        im = 0.0 if real else rng.uniform(-1.0, 1.0)
        return complex(rng.uniform(-1.0, 1.0), im)

    def sqrt(self, value: Any) -> complex:
        z = complex(value)
        if abs(z.imag) > self.tolerance or z.real < -self.tolerance:
            raise NotRepresentableError(f"sqrt({value}) is not a real number")
        return complex(np.sqrt(max(z.real, 0.0)), 0.0)

    def conjugate(self, value: Any) -> complex:
        return complex(value).conjugate()

    def to_complex(self, value: Any) -> complex:
        return self.convert(value)


EXACT = ExactField()


def field_for(model: str, tolerance: float = 1e-9) -> CoefficientField:
    if model == "exact":
        return EXACT
    if model == "float":
        return FloatField(tolerance=tolerance)
    raise ValueError(f"Unknown coefficient model: {model}")
