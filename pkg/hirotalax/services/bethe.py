"""Q-functions: linear solve of the T-Q relation, Bethe equations, root polishing."""

import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy import linalg
from sympy.polys.domains import QQ_I
from sympy.polys.matrices import DomainMatrix

from hirotalax.core.config import settings
from hirotalax.core.errors import (
    ConvergenceError,
    DegenerateSolutionError,
    NoSolutionError,
    SingularJacobianError,
    SingularRootError,
)
from hirotalax.core.specfun import Poly, SpectralFunction, as_spectral, bar
from hirotalax.schemas.chain import Topology

logger = logging.getLogger(__name__)

RANK_TOLERANCE = 1e-9
ROOT_GUARD = 1e-9


@dataclass(frozen=True)
class QFunction:
    Q: Poly
    roots: Tuple[complex, ...]
    paired: bool = False
    residual: float = 0.0

    @property
    def degree(self) -> int:
        return self.Q.degree

    def is_real_analytic(self) -> bool:
        return self.Q.is_real_analytic()

    def pairing_defect(self) -> float:
        """Largest distance from -u_j to its nearest root; zero for negation-closed sets."""
        if not self.roots:
            return 0.0
        r = np.array(self.roots)
        return float(max(np.abs(r + z).min() for z in r))

    def to_json(self) -> dict:
        return {
            "coefficients": self.Q.to_json(),
            "roots": [[z.real, z.imag] for z in self.roots],
            "paired": self.paired,
            "residual": self.residual,
        }


def _coefficients(p: Poly) -> np.ndarray:
    return np.array([p.field.to_complex(c) for c in p.coeffs] or [0j])


def _cleared_pieces(
    T1: SpectralFunction, phi: SpectralFunction, delta: SpectralFunction, degree: int
) -> Tuple[List[List[Poly]], Poly]:
    """Per power u^m the pieces L T1 u^m, -L phibar (u+i)^m, -L phi (u-i)^m, and L Delta.

    L is the product of all denominators.
    """
    phibar = bar(phi)
    dens = [T1.den, phi.den, phibar.den, delta.den]

    def others(skip: int) -> Poly:
        out = Poly.constant(1, T1.field)
        for idx, d in enumerate(dens):
            if idx != skip:
                out = out * d
        return out

    pieces = []
    for m in range(degree + 1):
        mono = Poly.monomial(m, T1.field)
        pieces.append(
            [
                T1.num * mono * others(0),
                -(phibar.num * mono.shift(2) * others(2)),
                -(phi.num * mono.shift(-2) * others(1)),
            ]
        )
    return pieces, delta.num * others(3)


def _cleared_system(
    T1: SpectralFunction, phi: SpectralFunction, delta: SpectralFunction, degree: int
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Float matrix of the cleared relation, its per-column scales, and the cleared Delta.

    A column's scale is the size of its largest piece, so a column that
    cancels to rounding noise stays small.
    """
    pieces, rhs_poly = _cleared_pieces(T1, phi, delta, degree)
    arrays = [[_coefficients(p) for p in col] for col in pieces]
    rhs = _coefficients(rhs_poly)
    rows = max([len(p) for col in arrays for p in col] + [len(rhs)])
    A = np.zeros((rows, degree + 1), dtype=complex)
    scales = np.ones(degree + 1)
    for m, col in enumerate(arrays):
        for p in col:
            A[: len(p), m] += p
        scales[m] = max(float(np.linalg.norm(p)) for p in col) or 1.0
    b = np.zeros(rows, dtype=complex)
    b[: len(rhs)] = rhs
    return A, scales, b


def _realify(coeffs: np.ndarray) -> np.ndarray:
    scale = max(float(np.abs(coeffs).max()), 1e-300)
    if float(np.abs(coeffs.imag).max()) <= 1e-6 * scale:
        return coeffs.real.astype(complex)
    return coeffs


def _q_function(Q: Poly, residual: float, paired: bool) -> QFunction:
    roots = tuple(complex(z) for z in sorted(Q.roots(), key=lambda z: (round(z.real, 9), round(z.imag, 9))))
    return QFunction(Q=Q, roots=roots, paired=paired, residual=residual)


def _solve_q_exact(
    T1: SpectralFunction, phi: SpectralFunction, delta: SpectralFunction, degree: int
) -> Poly:
    """Exact solve over ``QQ_I``: null space or reduced row echelon form."""
    field_ = T1.field
    pieces, rhs = _cleared_pieces(T1, phi, delta, degree)
    columns = [col[0] + col[1] + col[2] for col in pieces]
    rows = max([len(c.coeffs) for c in columns] + [len(rhs.coeffs), 1])

    def padded(p: Poly) -> List:
        return list(p.coeffs) + [field_.zero] * (rows - len(p.coeffs))

    entries = list(zip(*(padded(c) for c in columns)))
    if delta.is_zero():
        A = DomainMatrix([list(r) for r in entries], (rows, degree + 1), QQ_I)
        basis = A.nullspace().to_list()
        if not basis:
            raise NoSolutionError(f"no Q of degree {degree} solves the homogeneous T-Q relation")
        if len(basis) > 1:
            raise DegenerateSolutionError(
                f"{len(basis)}-dimensional family of degree-{degree} Q solutions", len(basis)
            )
        vector = basis[0]
        if field_.is_null(vector[-1]):
            raise NoSolutionError(f"the solution has degree below {degree}")
        return Poly([c / vector[-1] for c in vector], field_)

    augmented = [list(r) + [c] for r, c in zip(entries, padded(rhs))]
    reduced, pivots = DomainMatrix(augmented, (rows, degree + 2), QQ_I).rref()
    if degree + 1 in pivots:
        raise NoSolutionError(f"no Q of degree {degree} solves the inhomogeneous T-Q relation")
    if tuple(pivots) != tuple(range(degree + 1)):
        free = degree + 1 - len(pivots)
        raise DegenerateSolutionError(
            f"degree-{degree} inhomogeneous solve is not unique", free
        )
    solution = reduced.to_list()
    return Poly([solution[m][degree + 1] for m in range(degree + 1)], field_)


def solve_q_linear(
    T1: SpectralFunction,
    phi: SpectralFunction,
    delta: Optional[SpectralFunction],
    degree: int,
    *,
    paired: bool = False,
) -> QFunction:
    """Solve T_1 Q - phibar Q^{[2]} - phi Q^{[-2]} - Delta = 0 for Q of the given degree.

    With Delta = 0 the solution is the monic null vector; otherwise the
    unique solution. Denominators are cleared by the product of all
    denominators before matching powers of u. Exact inputs are solved
    exactly over the Gaussian rationals and report a zero residual.
    """
    if degree < 0:
        raise ValueError("degree must be non-negative")
    T1 = as_spectral(T1)
    field_ = T1.field
    phi = as_spectral(phi, field_)
    delta = as_spectral(delta, field_) if delta is not None else SpectralFunction.constant(0, field_)
    if field_.exact:
        Q = _solve_q_exact(T1, phi, delta, degree)
        logger.debug(f"Solved exact Q of degree {degree}")
        return _q_function(Q, 0.0, paired)

    A, scales, b = _cleared_system(T1, phi, delta, degree)
    As = A / scales[None, :]
    null = linalg.null_space(As, rcond=RANK_TOLERANCE)

    if delta.is_zero():
        nullity = null.shape[1]
        if nullity == 0:
            raise NoSolutionError(f"no Q of degree {degree} solves the homogeneous T-Q relation")
        if nullity > 1:
            raise DegenerateSolutionError(
                f"{nullity}-dimensional family of degree-{degree} Q solutions", nullity
            )
        vector = null[:, 0]
        coeffs = vector / scales
        if abs(coeffs[-1]) <= RANK_TOLERANCE * float(np.abs(coeffs).max()):
            raise NoSolutionError(f"the solution has degree below {degree}")
        coeffs = coeffs / coeffs[-1]
        residual = float(np.linalg.norm(As @ vector))
    else:
        if null.shape[1] > 0:
            raise DegenerateSolutionError(
                f"degree-{degree} inhomogeneous solve is not unique", null.shape[1]
            )
        scaled, *_ = linalg.lstsq(As, b)
        coeffs = scaled / scales
        residual = float(np.linalg.norm(As @ scaled - b) / max(np.linalg.norm(b), 1e-300))
    if residual > settings.CHECK_TOLERANCE:
        raise NoSolutionError(
            f"degree-{degree} Q leaves relative T-Q residual {residual:.3e}"
        )
    logger.debug(f"Solved Q of degree {degree} with residual {residual:.3e}")
    return _q_function(Poly(_realify(coeffs), field_), residual, paired)


def q_degrees(topology: Topology, sites: int, delta_is_zero: bool) -> List[int]:
    """Candidate Q degrees, smallest first."""
    if topology == Topology.PERIODIC:
        return list(range(sites // 2 + 1))
    if delta_is_zero:
        return [2 * m for m in range(sites + 1)]
    return [2 * sites]


def find_q(
    T1: SpectralFunction,
    phi: SpectralFunction,
    delta: Optional[SpectralFunction],
    topology: Topology,
    sites: int,
) -> QFunction:
    """Smallest admissible degree whose linear solve succeeds."""
    delta_zero = delta is None or as_spectral(delta, T1.field).is_zero()
    paired = topology == Topology.OPEN
    tried = []
    for degree in q_degrees(topology, sites, delta_zero):
        try:
            return solve_q_linear(T1, phi, delta, degree, paired=paired)
        except NoSolutionError as e:
            tried.append(degree)
            logger.debug(f"No Q at degree {degree}: {e}")
    raise NoSolutionError(f"no Q found at degrees {tried}")


def _check_roots(roots: Sequence[complex], poles: Sequence[complex]) -> np.ndarray:
    r = np.asarray(roots, dtype=complex)
    for i in range(len(r)):
        for p in poles:
            if abs(r[i] - p) <= ROOT_GUARD:
                raise SingularRootError(f"root {r[i]} sits on the singular point {p}")
        for j in range(i):
            if abs(r[i] - r[j]) <= ROOT_GUARD:
                raise SingularRootError(f"roots {j} and {i} coincide at {r[i]}")
    return r


def bethe_residual_periodic(roots: Sequence[complex], N: int, *, relative: bool = False) -> List[complex]:
    """((u_k+i/2)/(u_k-i/2))^N - prod_{j!=k} (u_k-u_j+i)/(u_k-u_j-i) for each root."""
    r = _check_roots(roots, (0.5j, -0.5j))
    out = []
    for k, uk in enumerate(r):
        lhs = ((uk + 0.5j) / (uk - 0.5j)) ** N
        rhs = 1.0 + 0j
        for j, uj in enumerate(r):
            if j != k:
                rhs *= (uk - uj + 1j) / (uk - uj - 1j)
        value = complex(lhs - rhs)
        if relative:
            value /= max(abs(lhs), abs(rhs))
        out.append(value)
    return out


def _at(p: Poly, z: complex) -> complex:
    return complex(p.evaluate_array(np.array([z]))[0])


def tq_root_residuals(
    roots: Sequence[complex],
    phi: SpectralFunction,
    delta: Optional[SpectralFunction] = None,
    *,
    relative: bool = False,
) -> List[complex]:
    """phibar(u_k) Q(u_k+i) + phi(u_k) Q(u_k-i) + Delta(u_k), with Q built from all roots.

    All denominators are cleared first; the cleared form is kept at roots
    where they vanish (the 1/u pole of the open phi).
    """
    phi = as_spectral(phi)
    phibar = bar(phi)
    delta = as_spectral(delta, phi.field) if delta is not None else SpectralFunction.constant(0, phi.field)
    q = npoly.polyfromroots([complex(z) for z in roots]) if len(roots) else np.array([1.0 + 0j])
    out = []
    for uk in (complex(z) for z in roots):
        d_phi, d_bar, d_delta = _at(phi.den, uk), _at(phibar.den, uk), _at(delta.den, uk)
        terms = [
            _at(phibar.num, uk) * d_phi * d_delta * npoly.polyval(uk + 1j, q),
            _at(phi.num, uk) * d_bar * d_delta * npoly.polyval(uk - 1j, q),
            _at(delta.num, uk) * d_phi * d_bar,
        ]
        clear = d_phi * d_bar * d_delta
        if abs(clear) > ROOT_GUARD:
            terms = [t / clear for t in terms]
        else:
            logger.debug(f"root {uk} sits on a pole of phi; using the cleared residual")
        value = complex(sum(terms))
        if relative:
            value /= max(max(abs(t) for t in terms), 1e-300)
        out.append(value)
    return out


def bethe_residual_open(
    roots: Sequence[complex],
    phi: SpectralFunction,
    delta: Optional[SpectralFunction],
    *,
    relative: bool = False,
) -> List[complex]:
    return tq_root_residuals(roots, phi, delta, relative=relative)


@dataclass(frozen=True)
class Reconstruction:
    T1: SpectralFunction
    remainder: float


def reconstruct_t1(
    Q: QFunction | Poly,
    phi: SpectralFunction,
    delta: Optional[SpectralFunction] = None,
    tolerance: Optional[float] = None,
) -> Reconstruction:
    """T_1 = (phibar Q^{[2]} + phi Q^{[-2]} + Delta) / Q, with the division remainder reported."""
    q = Q.Q if isinstance(Q, QFunction) else Q
    if q.is_zero():
        raise ValueError("Q must be nonzero")
    field_ = q.field
    phi = as_spectral(phi, field_)
    qs = as_spectral(q, field_)
    total = bar(phi) * qs.shift(2) + phi * qs.shift(-2)
    if delta is not None:
        total = total + as_spectral(delta, field_)
    quotient, rest = divmod(total.num, q)
    size = max((abs(field_.to_complex(c)) for c in total.num.coeffs), default=0.0)
    remainder = 0.0 if rest.is_zero() and field_.exact else (
        max((abs(field_.to_complex(c)) for c in rest.coeffs), default=0.0) / max(size, 1e-300)
    )
    tolerance = settings.CHECK_TOLERANCE if tolerance is None else tolerance
    if (field_.exact and not rest.is_zero()) or remainder > tolerance:
        raise NoSolutionError(f"Q does not divide the T-Q numerator (remainder {remainder:.3e})")
    return Reconstruction(T1=SpectralFunction(quotient, total.den), remainder=remainder)


@dataclass(frozen=True)
class RootRefinement:
    roots: Tuple[complex, ...]
    iterations: int
    residual: float
    history: Tuple[float, ...] = field(default=(), repr=False)


def refine_roots_newton(
    roots: Sequence[complex],
    residual_fn: Callable[[np.ndarray], Sequence[complex]],
    max_iter: Optional[int] = None,
    tol: float = 1e-12,
) -> RootRefinement:
    """Damped Newton iteration with a finite-difference Jacobian."""
    max_iter = settings.NEWTON_MAX_ITER if max_iter is None else max_iter
    x = np.asarray(roots, dtype=complex)
    for i in range(len(x)):
        for j in range(i):
            if abs(x[i] - x[j]) <= ROOT_GUARD:
                raise SingularJacobianError(f"starting roots {j} and {i} coincide")

    def evaluate(z: np.ndarray) -> np.ndarray:
        try:
            return np.asarray(residual_fn(z), dtype=complex)
        except SingularRootError as e:
            raise SingularJacobianError(str(e)) from e

    r = evaluate(x)
    norm = float(np.linalg.norm(r))
    history = [norm]
    if norm <= tol or len(x) == 0:
        return RootRefinement(tuple(complex(z) for z in x), 0, norm, tuple(history))

    for iteration in range(1, max_iter + 1):
        J = np.empty((len(r), len(x)), dtype=complex)
        for m in range(len(x)):
            h = 1e-7 * max(1.0, abs(x[m]))
            dx = x.copy()
            dx[m] += h
            J[:, m] = (evaluate(dx) - r) / h
        if not np.all(np.isfinite(J)) or np.linalg.cond(J) > 1e12:
            raise SingularJacobianError(f"Jacobian is singular at iteration {iteration}")
        step = np.linalg.solve(J, -r)
        damping = 1.0
        while True:
            candidate = x + damping * step
            r_new = evaluate(candidate)
            if np.linalg.norm(r_new) < norm or damping < 1 / 64:
                break
            damping /= 2
        x, r = candidate, r_new
        norm = float(np.linalg.norm(r))
        history.append(norm)
        if norm <= tol:
            logger.debug(f"Newton converged in {iteration} iterations to {norm:.3e}")
            return RootRefinement(tuple(complex(z) for z in x), iteration, norm, tuple(history))
    raise ConvergenceError(
        f"Newton did not reach {tol:.1e} in {max_iter} iterations", max_iter, norm
    )


def bethe_energy_periodic(roots: Sequence[complex]) -> float:
    """E = -1/2 sum 1/(u_j^2 + 1/4) for H = (1/4) sum (sigma . sigma - 1)."""
    return float(sum(-0.5 / (complex(u) ** 2 + 0.25) for u in roots).real) if roots else 0.0
