"""Functional relations among transfer-matrix eigenvalues, as residual evaluators.

Every relation is built first as a :class:`Relation`, a signed sum of
products of spectral functions. ``Relation.residual()`` gives the literal
left-minus-right side as a rational function (zero certifies the relation
in the exact model) and ``Relation.magnitude(points)`` gives the float
sup-norm at sample points normalized by the largest single term.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np

from hirotalax.core.detkit import determinant, tk_matrix
from hirotalax.core.errors import NotRealAnalyticError
from hirotalax.core.fields import EXACT, CoefficientField
from hirotalax.core.specfun import (
    Poly,
    ShiftSeries,
    SpectralFunction,
    SpectralRing,
    as_spectral,
    bar,
    series_from_inverse,
)
from hirotalax.schemas.chain import SpectralFamily, Topology

logger = logging.getLogger(__name__)


class LaxVariant(str, Enum):
    PERIODIC = "periodic"
    OPEN_HOM = "open_hom"
    OPEN_INHOM = "open_inhom"


class LaxSide(str, Enum):
    FIRST = "first"
    SECOND = "second"


@dataclass(frozen=True)
class Term:
    sign: int
    factors: Tuple[SpectralFunction, ...]

    def value(self) -> SpectralFunction:
        out = SpectralFunction.constant(self.sign, self.factors[0].field)
        for f in self.factors:
            out = out * f
        return out

    def evaluate_array(self, points: np.ndarray) -> np.ndarray:
        out = np.full(len(points), complex(self.sign))
        for f in self.factors:
            out = out * f.evaluate_array(points)
        return out

    def shift(self, k: int) -> "Term":
        return Term(self.sign, tuple(f.shift(k) for f in self.factors))

    def conjugate(self) -> "Term":
        return Term(self.sign, tuple(f.conjugate() for f in self.factors))

    def scaled(self, sign: int, *factors: SpectralFunction) -> "Term":
        return Term(self.sign * sign, tuple(factors) + self.factors)


@dataclass(frozen=True)
class Relation:
    name: str
    terms: Tuple[Term, ...]

    def residual(self) -> SpectralFunction:
        field_ = self.terms[0].factors[0].field
        total = SpectralFunction.constant(0, field_)
        for term in self.terms:
            total = total + term.value()
        return total

    def _sampled(self, points: Sequence[complex]) -> Tuple[np.ndarray, np.ndarray]:
        pts = np.asarray(points, dtype=complex)
        with np.errstate(divide="ignore", invalid="ignore"):
            values = np.array([t.evaluate_array(pts) for t in self.terms])
        finite = np.all(np.isfinite(values), axis=0)
        return pts[finite], values[:, finite]

    def magnitude(self, points: Sequence[complex]) -> float:
        """max |residual(u_s)| / max |term(u_s)| over the sample points, skipping poles."""
        _, values = self._sampled(points)
        if values.size == 0:
            return 0.0
        scale = float(np.abs(values).max())
        total = float(np.abs(values.sum(axis=0)).max())
        return total / scale if scale > 0 else total

    def sample_table(self, points: Sequence[complex]) -> list:
        pts, values = self._sampled(points)
        scale = float(np.abs(values).max()) if values.size else 0.0
        residual = np.abs(values.sum(axis=0)) / (scale or 1.0)
        return [
            {"u": [float(z.real), float(z.imag)], "residual": float(r)}
            for z, r in zip(pts, residual)
        ]

    def shift(self, k: int) -> "Relation":
        return Relation(self.name, tuple(t.shift(k) for t in self.terms))

    def conjugate(self) -> "Relation":
        return Relation(self.name, tuple(t.conjugate() for t in self.terms))

    def negate(self) -> "Relation":
        return Relation(self.name, tuple(Term(-t.sign, t.factors) for t in self.terms))

    def times(self, *factors: SpectralFunction, sign: int = 1) -> "Relation":
        return Relation(self.name, tuple(t.scaled(sign, *factors) for t in self.terms))

    def plus(self, other: "Relation", name: Optional[str] = None) -> "Relation":
        return Relation(name or self.name, self.terms + other.terms)


def _relation(name: str, *terms: Tuple[int, Sequence[Any]]) -> Relation:
    built = []
    for sign, factors in terms:
        factors = tuple(as_spectral(f) if not isinstance(f, SpectralFunction) else f for f in factors)
        built.append(Term(sign, factors))
    return Relation(name, tuple(built))


def is_certified(relation: Relation, points: Sequence[complex], tolerance: float) -> bool:
    if relation.terms[0].factors[0].field.exact:
        return relation.residual().is_zero()
    return relation.magnitude(points) <= tolerance


# -- scalar data -------------------------------------------------------------


def phi_periodic(N: int, field: CoefficientField = EXACT) -> Tuple[Poly, Poly]:
    """phi = (u + i/2)^N and phibar = (u - i/2)^N."""
    if N < 1:
        raise ValueError("N must be at least 1")
    phi = Poly.linear(field.half_shift(1), field) ** N
    return phi, phi.conjugate()


def k0_constraint_relation(N: int, field: CoefficientField = EXACT) -> Relation:
    """phibar = phi^{[-2]}, which makes the periodic T_0 = phi^- consistent at k = 0."""
    phi, phibar = phi_periodic(N, field)
    return _relation("k0", (1, (phibar,)), (-1, (phi.shift(-2),)))


def k0_constraint_residual(N: int, field: CoefficientField = EXACT) -> Poly:
    return k0_constraint_relation(N, field).residual().num


def _boundary_radical(xi: float, field: CoefficientField):
    return field.sqrt(field.convert(1) + field.convert(xi) * field.convert(xi))


def phi_open(
    N: int, alpha: float, beta: float, xi: float, field: CoefficientField = EXACT
) -> SpectralFunction:
    if N < 1:
        raise ValueError("N must be at least 1")
    i = field.imag_unit
    half = field.convert(0.5)
    s = _boundary_radical(xi, field)
    right = Poly([i * (field.convert(alpha) - half), 1], field)
    left = Poly([-(s * i * half) - i * field.convert(beta), s], field)
    bulk = Poly.linear(i * half, field) ** (2 * N + 1)
    num = -(right * left * bulk)
    return SpectralFunction(num, Poly.monomial(1, field))


def delta_open(N: int, xi: float, field: CoefficientField = EXACT) -> Poly:
    if N < 1:
        raise ValueError("N must be at least 1")
    s = _boundary_radical(xi, field)
    plus = Poly.linear(field.half_shift(1), field) ** (2 * N + 1)
    return plus * plus.conjugate() * (field.convert(-2) * (field.one - s))


def quantum_determinant(phi: SpectralFunction, k: int) -> SpectralFunction:
    """T_{2,k} = prod_{j<k} phi^{[k-2j]} phibar^{[2j-k]}; T_{2,0} = 1."""
    if k < 0:
        raise ValueError("k must be non-negative")
    phi = as_spectral(phi)
    phibar = bar(phi)
    out = SpectralFunction.constant(1, phi.field)
    for j in range(k):
        out = out * phi.shift(k - 2 * j) * phibar.shift(2 * j - k)
    return out


def discrete_laplace_relation(phi: SpectralFunction, k: int) -> Relation:
    t = [quantum_determinant(phi, m) for m in (k - 1, k, k + 1)]
    return _relation(f"laplace.k={k}", (1, (t[1].shift(1), t[1].shift(-1))), (-1, (t[2], t[0])))


def discrete_laplace_residual(phi: SpectralFunction, k: int) -> SpectralFunction:
    return discrete_laplace_relation(phi, k).residual()


@dataclass(frozen=True)
class AuxFactors:
    X: Tuple[SpectralFunction, ...]
    Y: Tuple[SpectralFunction, ...]
    psi: Dict[Tuple[int, int], SpectralFunction] = field(repr=False)
    psibar: Dict[Tuple[int, int], SpectralFunction] = field(repr=False)

    @property
    def kmax(self) -> int:
        return len(self.X) - 1


def _shifted_product(f: SpectralFunction, shifts: Sequence[int]) -> SpectralFunction:
    out = SpectralFunction.constant(1, f.field)
    for s in shifts:
        out = out * f.shift(s)
    return out


def aux_factors(phi: SpectralFunction, kmax: int) -> AuxFactors:
    if kmax < 0:
        raise ValueError("kmax must be non-negative")
    phi = as_spectral(phi)
    phibar = bar(phi)
    X = tuple(_shifted_product(phi, [k - 2 * j for j in range(k + 1)]) for k in range(kmax + 1))
    Y = tuple(_shifted_product(phibar, [2 * j - k for j in range(k)]) for k in range(kmax + 1))
    psi = {}
    psibar = {}
    for k in range(kmax + 1):
        for l in range(k + 1):
            psi[(l, k)] = _shifted_product(phi, [k - 2 * j for j in range(k - l)])
            psibar[(l, k)] = _shifted_product(phibar, [2 * j - k for j in range(k - l)])
    return AuxFactors(X=X, Y=Y, psi=psi, psibar=psibar)


def aux_identity_relations(phi: SpectralFunction, kmax: int) -> Dict[str, Relation]:
    """Y_{k+1}^+ = phibar^{[k]} Y_k and X_k Y_k = phi^{[-k]} T_{2,k}, for k < kmax."""
    phi = as_spectral(phi)
    aux = aux_factors(phi, kmax)
    phibar = bar(phi)
    out = {}
    for k in range(kmax):
        out[f"Y.k={k}"] = _relation(
            f"aux.Y.k={k}", (1, (aux.Y[k + 1].shift(1),)), (-1, (phibar.shift(k), aux.Y[k]))
        )
        out[f"XY.k={k}"] = _relation(
            f"aux.XY.k={k}",
            (1, (aux.X[k], aux.Y[k])),
            (-1, (phi.shift(-k), quantum_determinant(phi, k))),
        )
    return out


def aux_identity_residuals(phi: SpectralFunction, kmax: int) -> Dict[str, SpectralFunction]:
    return {name: r.residual() for name, r in aux_identity_relations(phi, kmax).items()}


# -- Hirota and Hirota-like relations ------------------------------------------


def hirota_relation(family: SpectralFamily, k: int) -> Relation:
    Tk = family.T_at(k)
    Tk1 = family.T_at(k + 1)
    Tkm = family.T_at(k - 1)
    if family.topology == Topology.PERIODIC:
        rhs = (-1, (family.phi.shift(k), family.phibar.shift(-k)))
    else:
        rhs = (-1, (family.qdet_at(k),))
    return _relation(
        f"hirota.k={k}",
        (1, (Tk.shift(1), Tk.shift(-1))),
        (-1, (Tk1, Tkm)),
        rhs,
    )


def hirota_residual(family: SpectralFamily, k: int) -> SpectralFunction:
    return hirota_relation(family, k).residual()


def hirota_like_relation(family: SpectralFamily, k: int, a: int) -> Relation:
    """H_{k,a} = T_{k+1} T_{k-a-1}^{[a]} - T_k^- T_{k-a}^{[a+1]} + T_{2,k-a}^{[a]} T_a^{[a-k-1]}."""
    if not 0 <= a <= k - 1:
        raise ValueError(f"need 0 <= a <= k-1, got k={k}, a={a}")
    return _relation(
        f"hirota-like.k={k}.a={a}",
        (1, (family.T_at(k + 1), family.T_at(k - a - 1).shift(a))),
        (-1, (family.T_at(k).shift(-1), family.T_at(k - a).shift(a + 1))),
        (1, (family.qdet_at(k - a).shift(a), family.T_at(a).shift(a - k - 1))),
    )


def hirota_like_residual(family: SpectralFamily, k: int, a: int) -> SpectralFunction:
    return hirota_like_relation(family, k, a).residual()


# -- Lax pairs ---------------------------------------------------------------------


@dataclass(frozen=True)
class LaxWitness:
    family: SpectralFamily = field(repr=False)
    Q: Poly
    variant: LaxVariant
    side: LaxSide
    k: int
    residual: SpectralFunction = field(repr=False)
    relation: Relation = field(repr=False)


def _require_real(Q: Poly) -> SpectralFunction:
    if not Q.is_real_analytic():
        raise NotRealAnalyticError("Q must be real analytic (Q = bar Q)")
    return as_spectral(Q, Q.field)


def lax_relation(
    family: SpectralFamily, Q: Poly, k: int, variant: LaxVariant, side: LaxSide
) -> Relation:
    variant = LaxVariant(variant)
    side = LaxSide(side)
    q = _require_real(Q)
    phi, phibar = family.phi, family.phibar
    name = f"lax.{variant.value}.{side.value}.k={k}"
    Tk_minus = family.T_at(k).shift(-1)

    if variant == LaxVariant.PERIODIC:
        if side == LaxSide.FIRST:
            return _relation(
                name,
                (1, (family.T_at(k + 1), q.shift(k))),
                (-1, (Tk_minus, q.shift(k + 2))),
                (-1, (phi.shift(k), q.shift(-k - 2))),
            )
        return _relation(
            name,
            (1, (family.T_at(k - 1), q.shift(-k - 2))),
            (-1, (Tk_minus, q.shift(-k))),
            (1, (phibar.shift(-k), q.shift(k))),
        )

    aux = aux_factors(phi, k + 1)
    if side == LaxSide.FIRST:
        relation = _relation(
            name,
            (1, (family.T_at(k + 1), q.shift(k))),
            (-1, (phibar.shift(k), Tk_minus, q.shift(k + 2))),
            (-1, (aux.X[k], q.shift(-k - 2))),
        )
        if variant == LaxVariant.OPEN_INHOM:
            delta = family.delta
            source = _relation(
                name,
                *[
                    (-1, (aux.psi[(l, k)], delta.shift(2 * l - k), family.T_at(l).shift(l - k - 1)))
                    for l in range(k + 1)
                ],
            )
            relation = relation.plus(source)
        return relation

    relation = _relation(
        name,
        (1, (phi.shift(-k), family.T_at(k - 1), q.shift(-k - 2))),
        (-1, (Tk_minus, q.shift(-k))),
        (1, (aux.Y[k], q.shift(k))),
    )
    if variant == LaxVariant.OPEN_INHOM and k >= 1:
        delta = family.delta
        source = _relation(
            name,
            *[
                (
                    1,
                    (
                        aux.psibar[(l, k - 1)].shift(-1),
                        delta.shift(k - 2 * l - 2),
                        family.T_at(l).shift(k - l - 1),
                    ),
                )
                for l in range(k)
            ],
        )
        relation = relation.plus(source)
    return relation


def lax_residual(
    family: SpectralFamily, Q: Poly, k: int, variant: LaxVariant, side: LaxSide
) -> LaxWitness:
    relation = lax_relation(family, Q, k, variant, side)
    return LaxWitness(
        family=family,
        Q=Q,
        variant=LaxVariant(variant),
        side=LaxSide(side),
        k=k,
        residual=relation.residual(),
        relation=relation,
    )


def lax_generation_relation(
    family: SpectralFamily, Q: Poly, k: int, variant: LaxVariant
) -> Relation:
    """shift(first(k-1), +1) + bar(second(k)): vanishes on real-analytic data."""
    if k < 1:
        raise ValueError("the generation relation needs k >= 1")
    first = lax_relation(family, Q, k - 1, variant, LaxSide.FIRST).shift(1)
    second = lax_relation(family, Q, k, variant, LaxSide.SECOND).conjugate()
    return first.plus(second, name=f"lax-generation.{LaxVariant(variant).value}.k={k}")


def lax_generation_residual(
    family: SpectralFamily, Q: Poly, k: int, variant: LaxVariant
) -> SpectralFunction:
    return lax_generation_relation(family, Q, k, variant).residual()


# -- compatibility of the inhomogeneous pair -------------------------------------


def compatibility_relation(
    family: SpectralFamily, Q: Poly, delta: SpectralFunction, k: int
) -> Relation:
    """phi^{[-k]} Q^{[-k-2]} (open Hirota residual) minus the H_{k,a} double sum."""
    q = _require_real(Q)
    delta = as_spectral(delta, q.field)
    lhs = hirota_relation(family, k).times(family.phi.shift(-k), q.shift(-k - 2))
    relation = Relation(f"compatibility.k={k}", lhs.terms)
    for a in range(k):
        weight = _shifted_product(family.phibar, [-k + 2 * j for j in range(a)])
        h = hirota_like_relation(family, k, a)
        relation = relation.plus(h.times(delta.shift(-k + 2 * a), weight, sign=-1))
    return relation


def compatibility_residual(
    family: SpectralFamily, Q: Poly, delta: SpectralFunction, k: int
) -> SpectralFunction:
    return compatibility_relation(family, Q, delta, k).residual()


def compatibility_defect(family: SpectralFamily, Q: Poly, k: int) -> SpectralFunction:
    """T_k^- E2_{k+1}^+ - T_{k+1} E2_k + Y_k E1_k with E1, E2 the inhomogeneous Lax residuals.

    Equals ``compatibility_residual`` identically whenever T_0 = 1.
    """
    inhom = LaxVariant.OPEN_INHOM
    e1 = lax_residual(family, Q, k, inhom, LaxSide.FIRST).residual
    e2 = lax_residual(family, Q, k, inhom, LaxSide.SECOND).residual
    e2_next = lax_residual(family, Q, k + 1, inhom, LaxSide.SECOND).residual
    Y = aux_factors(family.phi, k).Y[k]
    return (
        family.T_at(k).shift(-1) * e2_next.shift(1)
        - family.T_at(k + 1) * e2
        + Y * e1
    )


# -- T-Q relation, generating series and closed forms ---------------------------------


def tq_relation(
    T1: SpectralFunction,
    Q: Poly,
    phi: SpectralFunction,
    delta: Optional[SpectralFunction] = None,
) -> Relation:
    q = _require_real(Q)
    phi = as_spectral(phi, q.field)
    terms = [
        (1, (as_spectral(T1, q.field), q)),
        (-1, (bar(phi), q.shift(2))),
        (-1, (phi, q.shift(-2))),
    ]
    if delta is not None and not as_spectral(delta, q.field).is_zero():
        terms.append((-1, (as_spectral(delta, q.field),)))
    return _relation("tq", *terms)


def tq_residual(
    T1: SpectralFunction,
    Q: Poly,
    phi: SpectralFunction,
    delta: Optional[SpectralFunction] = None,
) -> SpectralFunction:
    return tq_relation(T1, Q, phi, delta).residual()


def ab_factors(
    Q: Poly, phi: SpectralFunction, delta: Optional[SpectralFunction] = None
) -> Tuple[SpectralFunction, SpectralFunction, SpectralFunction]:
    """A = phi Q^{[-2]}/Q, B = phibar Q^{[2]}/Q, C = Delta/Q."""
    q = as_spectral(Q, Q.field)
    phi = as_spectral(phi, Q.field)
    A = phi * q.shift(-2) / q
    B = bar(phi) * q.shift(2) / q
    C = (as_spectral(delta, Q.field) if delta is not None else q * 0) / q
    return A, B, C


def tk_from_q_diag(A: SpectralFunction, B: SpectralFunction, k: int) -> SpectralFunction:
    total = SpectralFunction.constant(0, A.field)
    for l in range(k + 1):
        term = _shifted_product(B, [k - 1 - 2 * j for j in range(k - l)])
        term = term * _shifted_product(A, [2 * l - k - 1 - 2 * i for i in range(l)])
        total = total + term
    return total


def w_diag(A: SpectralFunction, B: SpectralFunction, order: int) -> ShiftSeries:
    """(1 - B^- D^2)^{-1} (1 - A^- D^2)^{-1}, truncated at D^order."""
    field_ = A.field
    left = series_from_inverse(ShiftSeries.monomial(B.shift(-1), 2, order, field_), order)
    right = series_from_inverse(ShiftSeries.monomial(A.shift(-1), 2, order, field_), order)
    return left * right


def w_inhom(
    A: SpectralFunction, B: SpectralFunction, C: SpectralFunction, order: int
) -> ShiftSeries:
    """(1 - D(A+B+C)D + D A D^2 B D)^{-1}, truncated at D^order."""
    field_ = A.field
    terms = ShiftSeries(
        {
            2: (A + B + C).shift(-1),
            4: -(A.shift(-1) * B.shift(-3)),
        },
        order,
        field_,
    )
    return series_from_inverse(terms, order)


def det_solution(T1: SpectralFunction, phi: SpectralFunction, k: int) -> SpectralFunction:
    """T_k as the determinant of the k x k tridiagonal matrix in T_1, phi, phibar."""
    if k < 0:
        raise ValueError("k must be non-negative")
    T1 = as_spectral(T1)
    phi = as_spectral(phi, T1.field)
    return determinant(tk_matrix(T1, phi, k), SpectralRing(T1.field))


def family_from_t1(
    T1: SpectralFunction,
    phi: SpectralFunction,
    kmax: int,
    delta: Optional[SpectralFunction] = None,
    label: str = "det",
) -> SpectralFamily:
    """Open-chain family with T_k = det_solution(T_1, phi, k) and T_0 = 1."""
    T1 = as_spectral(T1)
    field_ = T1.field
    phi = as_spectral(phi, field_)
    T = tuple(
        [SpectralFunction.constant(1, field_), T1]
        + [det_solution(T1, phi, k) for k in range(2, kmax + 1)]
    )[: kmax + 1]
    return SpectralFamily(
        label=label,
        topology=Topology.OPEN,
        T=T,
        phi=phi,
        phibar=bar(phi),
        delta=as_spectral(delta, field_) if delta is not None else SpectralFunction.constant(0, field_),
        qdet=tuple(quantum_determinant(phi, k) for k in range(kmax + 1)),
        provenance={"source": "determinant"},
    )
