"""Determinant identities: minors, Jacobi's identity, Plücker brackets.

Matrices are plain row sequences. Every function takes a ``ring`` that
provides ``zero``, ``one``, ``exact``, ``convert`` and ``is_zero``: either a
coefficient field from :mod:`hirotalax.core.fields` or a
:class:`~hirotalax.core.specfun.SpectralRing`.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np
from sympy.polys.domains import QQ_I
from sympy.polys.matrices import DomainMatrix

from hirotalax.core.errors import IndexClashError
from hirotalax.core.specfun import U, SpectralFunction, SpectralRing, bar

logger = logging.getLogger(__name__)

Matrix = Sequence[Sequence[Any]]


def _exact_det(m: list[list[Any]], ring) -> Any:
    """Determinant over ``QQ_I`` or its rational-function field ``QQ_I(u)``."""
    n = len(m)
    if isinstance(ring, SpectralRing):
        K = QQ_I.frac_field(U)
        rows = [[K.from_sympy(x.to_expr()) for x in row] for row in m]
        det = DomainMatrix(rows, (n, n), K).det()
        return SpectralFunction.from_expr(K.to_sympy(det))
    return DomainMatrix(m, (n, n), QQ_I).det()


def _laplace(m: list[list[Any]], ring) -> Any:
    n = len(m)
    if n == 1:
        return m[0][0]
    # expand along the sparsest row
    row = max(range(n), key=lambda i: sum(ring.is_zero(x) for x in m[i]))
    total = ring.zero
    for j, entry in enumerate(m[row]):
        if ring.is_zero(entry):
            continue
        sub = [r[:j] + r[j + 1 :] for i, r in enumerate(m) if i != row]
        term = entry * _laplace(sub, ring)
        total = total + term if (row + j) % 2 == 0 else total - term
    return total


def determinant(matrix: Matrix, ring) -> Any:
    """Determinant of a square matrix; the empty matrix has determinant one.

    Exact rings use sympy's domain-matrix determinant, float scalars use
    numpy's pivoted LU, and float spectral functions use cofactor expansion
    so that no rational-function division is needed.
    """
    n = len(matrix)
    if any(len(row) != n for row in matrix):
        raise ValueError("determinant of a non-square matrix")
    if n == 0:
        return ring.one
    m = [[ring.convert(x) for x in row] for row in matrix]
    if ring.exact:
        return _exact_det(m, ring)
    if isinstance(ring, SpectralRing):
        return _laplace(m, ring)
    return complex(np.linalg.det(np.array(m, dtype=complex)))


def _check_indices(indices: Sequence[int], size: int, what: str) -> None:
    if len(set(indices)) != len(indices):
        raise IndexClashError(f"repeated {what} index in {list(indices)}")
    for i in indices:
        if not 1 <= i <= size:
            raise IndexClashError(f"{what} index {i} outside 1..{size}")


def minor(
    matrix: Matrix, removed_rows: Sequence[int], removed_cols: Sequence[int], ring
) -> Any:
    """``D[rows|cols]``: determinant with the listed 1-based rows and columns removed."""
    if len(removed_rows) != len(removed_cols):
        raise ValueError(
            f"removing {len(removed_rows)} rows but {len(removed_cols)} columns"
        )
    n = len(matrix)
    _check_indices(removed_rows, n, "row")
    _check_indices(removed_cols, n, "column")
    rows = set(removed_rows)
    cols = set(removed_cols)
    sub = [
        [x for j, x in enumerate(row, start=1) if j not in cols]
        for i, row in enumerate(matrix, start=1)
        if i not in rows
    ]
    return determinant(sub, ring)


def jacobi_residual(matrix: Matrix, p1: int, p2: int, q1: int, q2: int, ring) -> Any:
    """``D[p1,p2|q1,q2] D - D[p1|q1] D[p2|q2] + D[p1|q2] D[p2|q1]``.

    Minors are unsigned; for ``p1 > p2`` or ``q1 > q2`` the first product
    carries the sign of the corresponding transposition.
    """
    if p1 == p2 or q1 == q2:
        raise IndexClashError(f"Jacobi indices clash: p=({p1},{p2}) q=({q1},{q2})")
    sign = (-1) ** ((p1 > p2) + (q1 > q2))
    d = determinant(matrix, ring)
    d2 = minor(matrix, (p1, p2), (q1, q2), ring)
    lead = d2 * d if sign > 0 else -(d2 * d)
    return (
        lead
        - minor(matrix, (p1,), (q1,), ring) * minor(matrix, (p2,), (q2,), ring)
        + minor(matrix, (p1,), (q2,), ring) * minor(matrix, (p2,), (q1,), ring)
    )


@dataclass(frozen=True)
class BracketMatrix:
    """Rectangular ``(n+1) x (r+1)`` matrix with ``n >= r``; rows are 0-based."""

    rows: tuple[tuple[Any, ...], ...]
    ring: Any

    def __post_init__(self):
        if not self.rows:
            raise ValueError("BracketMatrix needs at least one row")
        width = len(self.rows[0])
        if any(len(row) != width for row in self.rows):
            raise ValueError("BracketMatrix rows have unequal length")
        if len(self.rows) < width:
            raise ValueError(
                f"BracketMatrix needs n >= r, got {len(self.rows)} rows for {width} columns"
            )

    @property
    def n(self) -> int:
        return len(self.rows) - 1

    @property
    def r(self) -> int:
        return len(self.rows[0]) - 1


@dataclass(frozen=True)
class UnitRowSpec:
    """Rows ``i`` that are the unit vector at column ``p``, as ``(i, p)`` pairs."""

    pairs: tuple[tuple[int, int], ...]

    def __post_init__(self):
        rows = [i for i, _ in self.pairs]
        if len(set(rows)) != len(rows):
            raise IndexClashError(f"unit rows repeat a row index: {rows}")

    def apply(self, top: Matrix, ring) -> BracketMatrix:
        width = len(top[0])
        first = len(top)
        rows = [tuple(ring.convert(x) for x in row) for row in top]
        extra: dict[int, tuple[Any, ...]] = {}
        for i, p in self.pairs:
            if not 0 <= p < width:
                raise IndexClashError(f"unit row column {p} outside 0..{width - 1}")
            extra[i] = tuple(ring.one if c == p else ring.zero for c in range(width))
        expected = list(range(first, first + len(extra)))
        if sorted(extra) != expected:
            raise IndexClashError(
                f"unit rows must fill rows {expected}, got {sorted(extra)}"
            )
        rows.extend(extra[i] for i in expected)
        return BracketMatrix(tuple(rows), ring)


def bracket(X: BracketMatrix, indices: Sequence[int]) -> Any:
    """``(i_0 ... i_r)``: signed determinant of the listed rows, in that order."""
    if len(indices) != X.r + 1:
        raise ValueError(f"bracket needs {X.r + 1} indices, got {len(indices)}")
    for i in indices:
        if not 0 <= i <= X.n:
            raise IndexClashError(f"bracket index {i} outside 0..{X.n}")
    if len(set(indices)) != len(indices):
        return X.ring.zero
    return determinant([X.rows[i] for i in indices], X.ring)


def plucker_terms(X: BracketMatrix, i: Sequence[int], j: Sequence[int]) -> list[Any]:
    """Signed summands of the Plücker relation; they add up to its residual.

    The first entry is ``(i)(j)``; entry ``p + 1`` is minus the ``p``-th exchange product.
    """
    i, j = list(i), list(j)
    terms = [bracket(X, i) * bracket(X, j)]
    for p in range(X.r + 1):
        left = [j[p]] + i[1:]
        right = j[:p] + [i[0]] + j[p + 1 :]
        terms.append(-(bracket(X, left) * bracket(X, right)))
    return terms


def plucker_residual(X: BracketMatrix, i: Sequence[int], j: Sequence[int]) -> Any:
    total = X.ring.zero
    for term in plucker_terms(X, i, j):
        total = total + term
    return total


def tk_matrix(T1: SpectralFunction, phi: SpectralFunction, size: int) -> list[list[SpectralFunction]]:
    """The tridiagonal matrix whose determinant expresses ``T_size`` through ``T_1``."""
    field_ = T1.field
    phibar = bar(phi)
    zero = SpectralFunction.constant(0, field_)
    rows = []
    for i in range(1, size + 1):
        s = size + 1 - 2 * i
        row = [zero] * size
        row[i - 1] = T1.shift(s)
        if i >= 2:
            row[i - 2] = phibar.shift(s)
        if i < size:
            row[i] = phi.shift(s)
        rows.append(row)
    return rows


def hirota_plucker_indices(k: int, a: int) -> tuple[list[int], list[int]]:
    """Index lists ``(i, j)`` that turn the Plücker relation into the Hirota-like relation."""
    r = k
    j = list(range(r + 1))
    i = [r + 1] + list(range(1, r - a)) + [l + a + 2 for l in range(r - a, r + 1)]
    return i, j


def build_hirota_plucker_matrix(
    T1: SpectralFunction, phi: SpectralFunction, k: int, a: int
) -> BracketMatrix:
    if not 0 <= a <= k - 1:
        raise ValueError(f"need 0 <= a <= k-1, got k={k}, a={a}")
    r = k
    ring = SpectralRing(T1.field)
    top = tk_matrix(T1, phi, r + 1)
    spec = UnitRowSpec(
        ((r + 1, 0),) + tuple((r + 2 + m, r - a + m) for m in range(a + 1))
    )
    return spec.apply(top, ring)


@dataclass(frozen=True)
class PluckerWitness:
    k: int
    a: int
    residual: SpectralFunction
    surviving: int
    factor: Any
    matches: bool
    terms: tuple[SpectralFunction, ...] = field(repr=False, default=())


def _constant_ratio(s: SpectralFunction, h: SpectralFunction) -> Any | None:
    if h.is_zero():
        return None
    q = s / h
    if q.field.exact:
        if q.num.degree == 0 and q.den.degree == 0:
            return q.num.leading
        return None
    points = [complex(1.3, 0.7), complex(-0.9, 1.6), complex(2.1, -1.1)]
    values = [q.evaluate(z) for z in points]
    if all(q.field.is_zero(v - values[0]) for v in values):
        return values[0]
    return None


def _hirota_like_terms(
    T1: SpectralFunction, phi: SpectralFunction, k: int, a: int
) -> list[SpectralFunction]:
    ring = SpectralRing(T1.field)
    phibar = bar(phi)

    def T(m: int) -> SpectralFunction:
        return determinant(tk_matrix(T1, phi, m), ring)

    def T2(m: int) -> SpectralFunction:
        out = ring.one
        for jj in range(m):
            out = out * phi.shift(m - 2 * jj) * phibar.shift(2 * jj - m)
        return out

    return [
        T(k + 1) * T(k - a - 1).shift(a),
        -(T(k).shift(-1) * T(k - a).shift(a + 1)),
        T2(k - a).shift(a) * T(a).shift(a - k - 1),
    ]


def verify_hirota_like_via_plucker(
    T1: SpectralFunction, phi: SpectralFunction, k: int, a: int
) -> PluckerWitness:
    """Evaluate the Plücker relation on the Hirota-like index choice.

    Besides the residual, the witness records how many summands are nonzero
    and whether they match the three terms of ``H_{k,a}`` (built from the
    determinant solution) with one common constant factor.
    """
    X = build_hirota_plucker_matrix(T1, phi, k, a)
    i, j = hirota_plucker_indices(k, a)
    terms = plucker_terms(X, i, j)
    residual = X.ring.zero
    for term in terms:
        residual = residual + term
    surviving = [t for t in terms if not t.is_zero()]

    targets = _hirota_like_terms(T1, phi, k, a)
    factor = None
    matches = len(surviving) == len(targets)
    unused = list(range(len(targets)))
    for s in surviving if matches else []:
        hit = None
        for idx in unused:
            ratio = _constant_ratio(s, targets[idx])
            if ratio is None:
                continue
            if factor is None or X.ring.field.is_zero(ratio - factor):
                hit = idx
                factor = ratio if factor is None else factor
                break
        if hit is None:
            matches = False
            break
        unused.remove(hit)

    logger.debug(
        f"Plucker witness k={k} a={a}: {len(surviving)} surviving terms, factor={factor}"
    )
    return PluckerWitness(
        k=k,
        a=a,
        residual=residual,
        surviving=len(surviving),
        factor=factor,
        matches=matches,
        terms=tuple(terms),
    )
