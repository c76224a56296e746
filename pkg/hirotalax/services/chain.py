"""Fused R- and K-matrices, transfer matrices and Hamiltonians of XXX spin-1/2 chains.

Operators are dense complex matrices with explicit tensor legs.  Site 1 is
the leftmost factor and ``sigma^z = diag(1, -1)``.  Fusion levels are passed
as ``j`` (1/2, 1, 3/2, ...) and handled internally as ``n = 2j`` auxiliary
spin-1/2 spaces.  Transfer matrices trace over the (2j+1)-dimensional image
of the symmetric projector, which is exact because every fused factor is
sandwiched by that projector.
"""

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from hirotalax.core.config import settings
from hirotalax.core.errors import (
    DiagonalizationError,
    FusionPoleError,
    GuardError,
    InterpolationError,
)
from hirotalax.core.fields import CoefficientField, FloatField
from hirotalax.core.specfun import (
    Poly,
    SpectralFunction,
    circle_nodes,
    interpolate_on_circle,
)
from hirotalax.schemas.chain import ChainSpec, SpectralFamily, Topology
from hirotalax.services.hirota import (
    delta_open,
    phi_open,
    phi_periodic,
    quantum_determinant,
)

logger = logging.getLogger(__name__)

I2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PERMUTATION = np.eye(4, dtype=complex)[[0, 2, 1, 3]]

POLE_GUARD = 1e-12
EXTRA_NODES = 4
HELDOUT_POINTS = 6
SPREAD_TOLERANCE = 1e-7


@dataclass(frozen=True)
class KParams:
    """Boundary parameters of the fundamental K-matrix."""

    alpha: complex
    xi_plus: complex = 0.0
    xi_minus: complex = 0.0


class OperatorMatrix:
    """Square matrix acting on a tensor product of local spaces of dimensions ``legs``."""

    __slots__ = ("data", "legs")

    def __init__(self, data: np.ndarray, legs: Sequence[int]):
        legs = tuple(int(d) for d in legs)
        dim = math.prod(legs)
        data = np.asarray(data, dtype=complex)
        if data.shape != (dim, dim):
            raise ValueError(f"matrix of shape {data.shape} does not match legs {legs}")
        self.data = data
        self.legs = legs

    @classmethod
    def identity(cls, legs: Sequence[int]) -> "OperatorMatrix":
        return cls(np.eye(math.prod(legs), dtype=complex), legs)

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    def tensor(self) -> np.ndarray:
        return self.data.reshape(self.legs + self.legs)

    def _check_same(self, other: "OperatorMatrix") -> None:
        if self.legs != other.legs:
            raise ValueError(f"leg mismatch: {self.legs} vs {other.legs}")

    def __matmul__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        self._check_same(other)
        return OperatorMatrix(self.data @ other.data, self.legs)

    def __add__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        self._check_same(other)
        return OperatorMatrix(self.data + other.data, self.legs)

    def __sub__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        self._check_same(other)
        return OperatorMatrix(self.data - other.data, self.legs)

    def __mul__(self, scalar: complex) -> "OperatorMatrix":
        return OperatorMatrix(self.data * scalar, self.legs)

    __rmul__ = __mul__

    def adjoint(self) -> "OperatorMatrix":
        return OperatorMatrix(self.data.conj().T, self.legs)

    def trace(self) -> complex:
        return complex(np.trace(self.data))

    def norm(self) -> float:
        return float(np.linalg.norm(self.data))

    def kron(self, other: "OperatorMatrix") -> "OperatorMatrix":
        return OperatorMatrix(np.kron(self.data, other.data), self.legs + other.legs)

    def _check_positions(self, op: "OperatorMatrix", positions: Sequence[int]) -> None:
        if len(positions) != len(op.legs) or len(set(positions)) != len(positions):
            raise ValueError(f"positions {positions} do not fit operator legs {op.legs}")
        for p, d in zip(positions, op.legs):
            if self.legs[p] != d:
                raise ValueError(f"leg {p} has dimension {self.legs[p]}, operator expects {d}")

    def left_apply(self, op: "OperatorMatrix", positions: Sequence[int]) -> "OperatorMatrix":
        """``op_{positions} @ self``."""
        self._check_positions(op, positions)
        m = len(op.legs)
        out = np.tensordot(op.tensor(), self.tensor(), axes=(list(range(m, 2 * m)), list(positions)))
        out = np.moveaxis(out, list(range(m)), list(positions))
        return OperatorMatrix(out.reshape(self.dim, self.dim), self.legs)

    def right_apply(self, op: "OperatorMatrix", positions: Sequence[int]) -> "OperatorMatrix":
        """``self @ op_{positions}``."""
        self._check_positions(op, positions)
        m = len(op.legs)
        L = len(self.legs)
        inputs = [L + p for p in positions]
        out = np.tensordot(self.tensor(), op.tensor(), axes=(inputs, list(range(m))))
        out = np.moveaxis(out, list(range(2 * L - m, 2 * L)), inputs)
        return OperatorMatrix(out.reshape(self.dim, self.dim), self.legs)

    def partial_trace(self, positions: Sequence[int]) -> "OperatorMatrix":
        t = self.tensor()
        legs = list(self.legs)
        for p in sorted(set(positions), reverse=True):
            t = np.trace(t, axis1=p, axis2=len(legs) + p)
            legs.pop(p)
        dim = math.prod(legs)
        return OperatorMatrix(t.reshape(dim, dim), legs)


def embed(op: OperatorMatrix, positions: Sequence[int], legs: Sequence[int]) -> OperatorMatrix:
    return OperatorMatrix.identity(legs).left_apply(op, positions)


def local_operator(op: np.ndarray, site: int, sites: int) -> OperatorMatrix:
    """Single-site operator on site ``site`` (1-based) of an N-site chain."""
    return embed(OperatorMatrix(op, (2,)), [site - 1], (2,) * sites)


def sigma_z_total(sites: int) -> OperatorMatrix:
    return reduce(
        lambda acc, n: acc + local_operator(SIGMA_Z, n, sites),
        range(2, sites + 1),
        local_operator(SIGMA_Z, 1, sites),
    )


def _bond(sites: int, m: int, n: int) -> OperatorMatrix:
    out = OperatorMatrix(np.zeros((2**sites, 2**sites)), (2,) * sites)
    for s in (SIGMA_X, SIGMA_Y, SIGMA_Z):
        out = out + OperatorMatrix(local_operator(s, m, sites).data @ local_operator(s, n, sites).data, (2,) * sites)
    return out


def pauli_hamiltonian_periodic(sites: int) -> OperatorMatrix:
    """(1/4) sum_n (sigma_n . sigma_{n+1} - 1) with sigma_{N+1} = sigma_1."""
    identity = OperatorMatrix.identity((2,) * sites)
    out = OperatorMatrix(np.zeros((2**sites, 2**sites)), (2,) * sites)
    for n in range(1, sites + 1):
        out = out + (_bond(sites, n, n % sites + 1) - identity) * 0.25
    return out


def pauli_hamiltonian_open(sites: int, alpha: float, beta: float, xi: float) -> OperatorMatrix:
    """sum sigma_n . sigma_{n+1} + sigma^z_1 / alpha - (xi sigma^x_N + sigma^z_N) / beta."""
    if alpha == 0 or beta == 0:
        raise ValueError("alpha and beta must be nonzero")
    out = local_operator(SIGMA_Z, 1, sites) * (1.0 / alpha)
    out = out - (local_operator(SIGMA_X, sites, sites) * xi + local_operator(SIGMA_Z, sites, sites)) * (1.0 / beta)
    for n in range(1, sites):
        out = out + _bond(sites, n, n + 1)
    return out


def r_fundamental(u: complex) -> OperatorMatrix:
    """R(u) = u + i P on C^2 (x) C^2."""
    return OperatorMatrix(u * np.eye(4) + 1j * PERMUTATION, (2, 2))


def _fusion_order(j) -> int:
    n = Fraction(j) * 2
    if n.denominator != 1 or n < 1:
        raise ValueError(f"fusion level j={j} must be a positive half-integer")
    return int(n)


def projector_sym(n: int) -> OperatorMatrix:
    """(1/n!) prod_{k=1}^{n} (sum_{l<=k} P_{a_l a_k}), ordered by increasing k."""
    if n < 1:
        raise ValueError("projector needs at least one space")
    legs = (2,) * n
    swap = OperatorMatrix(PERMUTATION, (2, 2))
    out = OperatorMatrix.identity(legs)
    for k in range(n - 1, -1, -1):
        factor = OperatorMatrix.identity(legs)
        for l in range(k):
            factor = factor + embed(swap, [l, k], legs)
        out = factor @ out
    return out * (1.0 / math.factorial(n))


def symmetric_isometry(n: int) -> np.ndarray:
    """Columns are the normalized symmetric (Dicke) states of n spins, ordered by down-spin count."""
    V = np.zeros((2**n, n + 1), dtype=complex)
    for idx in range(2**n):
        m = bin(idx).count("1")
        V[idx, m] = 1.0 / math.sqrt(math.comb(n, m))
    return V


def _inverse_product(offsets: Sequence[float], u: complex) -> complex:
    denominator = 1.0 + 0j
    for c in offsets:
        denominator *= u + 1j * c
    if abs(denominator) < POLE_GUARD:
        raise FusionPoleError(f"normalization pole hit at u={u}")
    return 1.0 / denominator


def chi1(n: int, u: complex) -> complex:
    return _inverse_product([(n - 1) / 2 - k for k in range(n - 1)], u)


def chi2(n: int, u: complex) -> complex:
    return _inverse_product([(n - k) / 2 for k in range(1, 2 * n - 2)], u)


def _sandwich(op: OperatorMatrix, n: int, reduced: bool) -> OperatorMatrix:
    """P+ op P+ on the first n legs, or its compression to the symmetric image."""
    rest = op.legs[n:]
    rest_dim = math.prod(rest)
    if reduced:
        V = symmetric_isometry(n)
        t = op.data.reshape(2**n, rest_dim, 2**n, rest_dim)
        out = np.einsum("ia,ibjc,jd->abdc", V.conj(), t, V)
        return OperatorMatrix(out.reshape((n + 1) * rest_dim, (n + 1) * rest_dim), (n + 1,) + rest)
    P = projector_sym(n)
    return op.left_apply(P, range(n)).right_apply(P, range(n))


def _r_product(n: int, u: complex) -> OperatorMatrix:
    legs = (2,) * (n + 1)
    out = OperatorMatrix.identity(legs)
    for k in range(n, 0, -1):
        out = out.left_apply(r_fundamental(u + (k - (n + 1) / 2) * 1j), [k - 1, n])
    return out


def fuse_r(j, u: complex, reduced: bool = False) -> OperatorMatrix:
    """Fused (j, 1/2) R-matrix; ``reduced`` compresses the auxiliary legs to one (2j+1)-leg."""
    n = _fusion_order(j)
    if n == 1 and not reduced:
        return r_fundamental(u)
    return _sandwich(_r_product(n, u), n, reduced) * chi1(n, u)


def k_fundamental(u: complex, alpha: complex, xi_plus: complex = 0.0, xi_minus: complex = 0.0) -> OperatorMatrix:
    return OperatorMatrix(
        np.array([[1j * alpha + u, u * xi_plus], [u * xi_minus, 1j * alpha - u]], dtype=complex),
        (2,),
    )


def _k_product(n: int, u: complex, params: KParams) -> OperatorMatrix:
    factors: List[Tuple[OperatorMatrix, List[int]]] = []
    for k in range(1, n + 1):
        for l in range(1, k):
            factors.append((r_fundamental(2 * u + (k + l - n - 1) * 1j), [l - 1, k - 1]))
        factors.append(
            (k_fundamental(u + (k - (n + 1) / 2) * 1j, params.alpha, params.xi_plus, params.xi_minus), [k - 1])
        )
    out = OperatorMatrix.identity((2,) * n)
    for op, positions in reversed(factors):
        out = out.left_apply(op, positions)
    return out


def fuse_k(j, u: complex, params: KParams, reduced: bool = False) -> OperatorMatrix:
    n = _fusion_order(j)
    if n == 1 and not reduced:
        return k_fundamental(u, params.alpha, params.xi_plus, params.xi_minus)
    return _sandwich(_k_product(n, u, params), n, reduced) * chi2(n, u)


def fusion_intertwining_residual(j, u: complex, params: Optional[KParams] = None) -> float:
    """|| P+ X P+ - X P+ || / ||X|| for the unsandwiched R (or K) product X."""
    n = _fusion_order(j)
    X = _r_product(n, u) if params is None else _k_product(n, u, params)
    P = projector_sym(n)
    right = X.right_apply(P, range(n))
    both = right.left_apply(P, range(n))
    return (both - right).norm() / max(X.norm(), 1e-300)


def right_k_params(spec: ChainSpec) -> KParams:
    return KParams(alpha=spec.alpha)


def left_k_params(spec: ChainSpec) -> KParams:
    return KParams(alpha=spec.beta, xi_plus=spec.xi, xi_minus=spec.xi)


def transfer_periodic(spec: ChainSpec, j, u: complex) -> OperatorMatrix:
    if spec.topology != Topology.PERIODIC:
        raise ValueError("transfer_periodic needs a periodic chain")
    n = _fusion_order(j)
    R = fuse_r(j, u, reduced=True)
    out = OperatorMatrix.identity((n + 1,) + (2,) * spec.sites)
    for site in range(1, spec.sites + 1):
        out = out.left_apply(R, [0, site])
    return out.partial_trace([0])


def transfer_open(spec: ChainSpec, j, u: complex) -> OperatorMatrix:
    """tr K^l T K^r That with T = R_N ... R_1 and That = R_1 ... R_N."""
    if spec.topology != Topology.OPEN:
        raise ValueError("transfer_open needs an open chain")
    n = _fusion_order(j)
    R = fuse_r(j, u, reduced=True)
    Kr = fuse_k(j, u, right_k_params(spec), reduced=True)
    Kl = fuse_k(j, -u - 1j, left_k_params(spec), reduced=True)
    out = OperatorMatrix.identity((n + 1,) + (2,) * spec.sites)
    for site in range(spec.sites, 0, -1):
        out = out.left_apply(R, [0, site])
    out = out.left_apply(Kr, [0])
    for site in range(1, spec.sites + 1):
        out = out.left_apply(R, [0, site])
    out = out.left_apply(Kl, [0])
    return out.partial_trace([0])


def transfer(spec: ChainSpec, j, u: complex) -> OperatorMatrix:
    if spec.is_open:
        return transfer_open(spec, j, u)
    return transfer_periodic(spec, j, u)


def transfer_degree_bound(spec: ChainSpec, j) -> int:
    """Polynomial degree in u of t^{(j)}(u) as constructed."""
    n = _fusion_order(j)
    if not spec.is_open:
        return spec.sites
    if n == 1:
        return 2 * spec.sites + 2
    return 2 * spec.sites + n * n - 3 * n + 6


def family_degree_bound(spec: ChainSpec, k: int) -> int:
    """Degree bound of the interpolated numerator D_k T_k (see ``normalization_denominator``)."""
    if not spec.is_open:
        return spec.sites
    if k == 1:
        return 2 * spec.sites + 2
    return k * (2 * spec.sites + 3)


def normalization_denominator(spec: ChainSpec, k: int, field: FloatField) -> Poly:
    """D_k = prod_{m=1}^{k} (u + i (k + 1 - 2m)/2) for open k >= 2, else 1."""
    # roots of D_k: the string of chi1/chi2 poles, spaced by i and centred on u = 0 after the -i/2 shift
    if not spec.is_open or k < 2:
        return Poly.constant(1, field)
    return Poly.from_roots([-field.half_shift(k + 1 - 2 * m) for m in range(1, k + 1)], field)


def _derivative_at_zero(fn: Callable[[complex], np.ndarray], degree: int, radius: float = 0.5) -> np.ndarray:
    """d/du of a matrix polynomial at u = 0 from its values on a circle."""
    count = degree + 2
    nodes = circle_nodes(count, radius, 0.25)
    acc = sum(fn(z) / z for z in nodes)
    return acc / count


def hamiltonian_periodic(spec: ChainSpec) -> OperatorMatrix:
    """(i/2) t(0)^{-1} t'(0) - N/2 from the fundamental transfer matrix."""
    if spec.topology != Topology.PERIODIC:
        raise ValueError("hamiltonian_periodic needs a periodic chain")
    half = Fraction(1, 2)
    t0 = transfer_periodic(spec, half, 0.0).data
    dt = _derivative_at_zero(lambda z: transfer_periodic(spec, half, z).data, spec.sites)
    H = 0.5j * np.linalg.solve(t0, dt) - 0.5 * spec.sites * np.eye(t0.shape[0])
    return OperatorMatrix(H, (2,) * spec.sites)


def hamiltonian_open(spec: ChainSpec) -> OperatorMatrix:
    """i (-1)^{N+1} / (2 alpha beta) t'(0) - N."""
    if spec.topology != Topology.OPEN:
        raise ValueError("hamiltonian_open needs an open chain")
    if spec.alpha == 0 or spec.beta == 0:
        raise ValueError("alpha and beta must be nonzero")
    half = Fraction(1, 2)
    dt = _derivative_at_zero(
        lambda z: transfer_open(spec, half, z).data, transfer_degree_bound(spec, half)
    )
    prefactor = 1j * (-1) ** (spec.sites + 1) / (2 * spec.alpha * spec.beta)
    H = prefactor * dt - spec.sites * np.eye(dt.shape[0])
    return OperatorMatrix(H, (2,) * spec.sites)


def hamiltonian(spec: ChainSpec) -> OperatorMatrix:
    if spec.is_open:
        return hamiltonian_open(spec)
    return hamiltonian_periodic(spec)


def yang_baxter_residual(u: complex, v: complex) -> float:
    """R12(u-v) R13(u) R23(v) - R23(v) R13(u) R12(u-v), relative Frobenius norm."""
    legs = (2, 2, 2)
    r12, r13, r23 = r_fundamental(u - v), r_fundamental(u), r_fundamental(v)
    lhs = OperatorMatrix.identity(legs).left_apply(r23, [1, 2]).left_apply(r13, [0, 2]).left_apply(r12, [0, 1])
    rhs = OperatorMatrix.identity(legs).left_apply(r12, [0, 1]).left_apply(r13, [0, 2]).left_apply(r23, [1, 2])
    return (lhs - rhs).norm() / max(lhs.norm(), 1e-300)


def reflection_residual(u: complex, v: complex, params: KParams) -> float:
    """R12(u-v) K1(u) R12(u+v) K2(v) - K2(v) R12(u+v) K1(u) R12(u-v)."""
    legs = (2, 2)
    r_minus, r_plus = r_fundamental(u - v), r_fundamental(u + v)
    k1 = k_fundamental(u, params.alpha, params.xi_plus, params.xi_minus)
    k2 = k_fundamental(v, params.alpha, params.xi_plus, params.xi_minus)
    lhs = (
        OperatorMatrix.identity(legs)
        .left_apply(k2, [1])
        .left_apply(r_plus, [0, 1])
        .left_apply(k1, [0])
        .left_apply(r_minus, [0, 1])
    )
    rhs = (
        OperatorMatrix.identity(legs)
        .left_apply(r_minus, [0, 1])
        .left_apply(k1, [0])
        .left_apply(r_plus, [0, 1])
        .left_apply(k2, [1])
    )
    return (lhs - rhs).norm() / max(lhs.norm(), 1e-300)


def commutator_norm(A: OperatorMatrix, B: OperatorMatrix) -> float:
    """||AB - BA|| / (||A|| ||B||)."""
    scale = A.norm() * B.norm()
    return (A @ B - B @ A).norm() / scale if scale > 0 else 0.0


# -- simultaneous diagonalization and spectral families ----------------------------


def _cluster(values: np.ndarray, tol: float) -> List[List[int]]:
    clusters: List[List[int]] = []
    assigned = np.zeros(len(values), dtype=bool)
    for i in range(len(values)):
        if assigned[i]:
            continue
        members = [m for m in range(len(values)) if not assigned[m] and abs(values[m] - values[i]) <= tol]
        assigned[members] = True
        clusters.append(members)
    return clusters


def common_eigenbasis(generator: np.ndarray, cluster_tol: float = 1e-8) -> np.ndarray:
    """Eigenvectors of a generic element of a commuting family, orthonormalized per cluster."""
    w, v = np.linalg.eig(generator)
    order = np.lexsort((w.imag.round(10), w.real.round(10)))
    w, v = w[order], v[:, order]
    scale = max(float(np.abs(w).max()), 1.0)
    basis = v.copy()
    for members in _cluster(w, cluster_tol * scale):
        if len(members) > 1:
            q, _ = np.linalg.qr(v[:, members])
            basis[:, members] = q
    return basis


def diagonal_values(op: np.ndarray, basis: np.ndarray, tol: float = 1e-7) -> np.ndarray:
    """Eigenvalues of ``op`` in ``basis``; raises if the basis does not diagonalize it."""
    X = np.linalg.solve(basis, op @ basis)
    diag = np.diag(X).copy()
    off = X - np.diag(diag)
    scale = max(float(np.linalg.norm(op)), 1.0)
    if np.linalg.norm(off) > tol * scale:
        raise DiagonalizationError(
            f"basis leaves off-diagonal norm {np.linalg.norm(off):.3e} (scale {scale:.3e})"
        )
    return diag


def _check_guards(spec: ChainSpec, kmax: int) -> None:
    if spec.sites > settings.MAX_SITES:
        raise GuardError(f"sites={spec.sites} exceeds the limit {settings.MAX_SITES}")
    if kmax > settings.MAX_KMAX:
        raise GuardError(f"kmax={kmax} exceeds the limit {settings.MAX_KMAX}")
    if kmax < 0:
        raise GuardError("kmax must be non-negative")


def _raw_eigenvalues(spec: ChainSpec, k: int, points: np.ndarray, basis: np.ndarray) -> np.ndarray:
    """Eigenvalues of t^{(k/2)}(u - i/2) at each point, shape (points, states)."""
    j = Fraction(k, 2)
    return np.array([diagonal_values(transfer(spec, j, z - 0.5j).data, basis) for z in points])


def _group_states(signature: np.ndarray, tol: float) -> List[List[int]]:
    """Group eigenvectors whose evaluated data coincide (degenerate multiplets)."""
    scale = max(float(np.abs(signature).max()), 1.0)
    groups: List[List[int]] = []
    for s in range(signature.shape[1]):
        for g in groups:
            if np.abs(signature[:, s] - signature[:, g[0]]).max() <= tol * scale:
                g.append(s)
                break
        else:
            groups.append([s])
    return groups


def scalar_data(spec: ChainSpec, field: CoefficientField) -> Tuple[SpectralFunction, SpectralFunction]:
    """phi and Delta of the chain; Delta vanishes for periodic chains and for xi = 0."""
    if spec.is_open:
        phi = phi_open(spec.sites, spec.alpha, spec.beta, spec.xi, field)
        delta = SpectralFunction(delta_open(spec.sites, spec.xi, field))
    else:
        phi = SpectralFunction(phi_periodic(spec.sites, field)[0])
        delta = SpectralFunction.constant(0, field)
    return phi, delta


def anchor_state(a: np.ndarray) -> int:
    """Column of ``a`` that stays farthest from zero relative to its own size."""
    size = np.abs(a).max(axis=0)
    floor = np.abs(a).min(axis=0) / np.maximum(size, 1e-300)
    return int(np.argmax(floor))


def anchor_normalization(
    a: np.ndarray, b: np.ndarray, anchor: int
) -> Tuple[np.ndarray, float]:
    """rho = b / a on the anchor column, and the relative defect of b = rho a over all columns.

    Rows are sample points, columns eigenstates. The anchor column fits by
    construction; every other column is an independent check.
    """
    rho = b[:, anchor] / a[:, anchor]
    spread = float(np.abs(b - rho[:, None] * a).max() / max(np.abs(b).max(), 1e-300))
    return rho, spread


def spectrum_family(
    spec: ChainSpec,
    kmax: int,
    *,
    seed: Optional[int] = None,
    tolerance: Optional[float] = None,
) -> List[SpectralFamily]:
    """Per-eigenstate families T_0..T_kmax from exact diagonalization and interpolation.

    A generic combination of fundamental transfer matrices fixes a common
    eigenbasis; each T_k is interpolated from its eigenvalues on a circle
    and checked at held-out points. Open families for k >= 2 are rescaled
    pointwise by rho_k, fixed on one anchor eigenstate by the Hirota
    relation at k - 1 and applied unchanged to every other state. The
    anchor, rho_k at the held-out points and the defect it leaves on the
    other states are recorded.
    """
    _check_guards(spec, kmax)
    seed = settings.DEFAULT_SEED if seed is None else seed
    field = FloatField(settings.FLOAT_TOLERANCE if tolerance is None else tolerance)
    rng = np.random.default_rng(seed)
    half = Fraction(1, 2)

    last_error: Optional[Exception] = None
    for attempt in range(1, settings.DIAGONALIZATION_RETRIES + 1):
        u0, u1 = rng.normal(size=2) + 1j * rng.normal(size=2)
        c = complex(rng.normal(), rng.normal())
        generator = transfer(spec, half, u0).data + c * transfer(spec, half, u1).data
        basis = common_eigenbasis(generator)
        try:
            families = _families_in_basis(spec, kmax, basis, rng, field)
            logger.info(
                f"Built {len(families)} families for {spec.describe()} up to k={kmax} (attempt {attempt})"
            )
            return families
        except DiagonalizationError as e:
            last_error = e
            logger.warning(f"Eigenbasis attempt {attempt} failed for {spec.describe()}: {e}")
    raise DiagonalizationError(
        f"no common eigenbasis after {settings.DIAGONALIZATION_RETRIES} attempts"
    ) from last_error


def _families_in_basis(
    spec: ChainSpec, kmax: int, basis: np.ndarray, rng: np.random.Generator, field: FloatField
) -> List[SpectralFamily]:
    radius = settings.INTERPOLATION_RADIUS
    energies = diagonal_values(hamiltonian(spec).data, basis).real

    grids: Dict[int, Tuple[np.ndarray, float, np.ndarray]] = {}
    raw: Dict[int, Tuple[np.ndarray, np.ndarray]] = {}
    for k in range(1, kmax + 1):
        count = family_degree_bound(spec, k) + 1 + EXTRA_NODES
        phase = float(rng.uniform())
        nodes = circle_nodes(count, radius, phase)
        heldout = radius * np.exp(2j * np.pi * rng.uniform(size=HELDOUT_POINTS))
        grids[k] = (nodes, phase, heldout)
        raw[k] = (
            _raw_eigenvalues(spec, k, nodes, basis),
            _raw_eigenvalues(spec, k, heldout, basis),
        )

    signature = np.vstack([energies[None, :]] + [raw[k][0] for k in raw]) if raw else energies[None, :]
    groups = _group_states(signature, 1e-7)
    reps = [g[0] for g in groups]
    logger.debug(f"{len(basis)} eigenvectors fall into {len(groups)} distinct families")

    phi, delta = scalar_data(spec, field)
    T0 = SpectralFunction.constant(1, field) if spec.is_open else phi.shift(-1)
    qdet = [quantum_determinant(phi, k) for k in range(kmax + 1)]
    columns: List[List[SpectralFunction]] = [[T0] for _ in reps]
    normalization: Dict[str, Dict[str, Any]] = {}
    errors: Dict[str, float] = {}

    for k in range(1, kmax + 1):
        nodes, phase, heldout = grids[k]
        at_nodes = raw[k][0][:, reps]
        at_heldout = raw[k][1][:, reps]
        if spec.is_open and k >= 2:
            a_nodes, b_nodes = _hirota_sides(columns, qdet, k, nodes, at_nodes)
            a_held, b_held = _hirota_sides(columns, qdet, k, heldout, at_heldout)
            anchor = anchor_state(np.vstack([a_nodes, a_held]))
            rho_nodes, spread_nodes = anchor_normalization(a_nodes, b_nodes, anchor)
            rho_held, spread_held = anchor_normalization(a_held, b_held, anchor)
            at_nodes = at_nodes * rho_nodes[:, None]
            at_heldout = at_heldout * rho_held[:, None]
            spread = max(spread_nodes, spread_held)
            normalization[str(k)] = {
                "anchor": anchor,
                "spread": spread,
                "points": [[float(z.real), float(z.imag)] for z in heldout],
                "rho": [[float(z.real), float(z.imag)] for z in rho_held],
            }
            if len(reps) == 1:
                logger.debug(f"T_{k} normalization rests on a single family and is not cross-checked")
            if spread > SPREAD_TOLERANCE:
                logger.warning(f"T_{k} normalization varies across eigenstates by {spread:.3e}")
        denominator = normalization_denominator(spec, k, field)
        scaled = at_nodes * denominator.evaluate_array(nodes)[:, None]
        worst = 0.0
        for s in range(len(reps)):
            numerator = interpolate_on_circle(scaled[:, s], radius, phase, field, rel_trim=1e-13)
            Tk = SpectralFunction(numerator, denominator)
            predicted = Tk.evaluate_array(heldout)
            reference = at_heldout[:, s]
            err = float(np.abs(predicted - reference).max() / max(np.abs(reference).max(), 1e-300))
            worst = max(worst, err)
            columns[s].append(Tk)
        errors[str(k)] = worst
        if worst > settings.INTERPOLATION_TOLERANCE:
            raise InterpolationError(
                f"T_{k} interpolation misses held-out eigenvalues by {worst:.3e} for {spec.describe()}"
            )

    families = []
    for s, g in enumerate(groups):
        families.append(
            SpectralFamily(
                label="",
                topology=spec.topology,
                T=tuple(columns[s]),
                phi=phi,
                phibar=phi.conjugate(),
                delta=delta,
                qdet=tuple(qdet),
                energy=float(energies[g[0]]),
                degeneracy=len(g),
                provenance={
                    "chain": spec.model_dump(mode="json"),
                    "normalization": normalization,
                    "interpolation_error": errors,
                    "degree_bounds": {str(k): family_degree_bound(spec, k) for k in range(1, kmax + 1)},
                },
            )
        )
    return _labelled(families, normalization)


def _hirota_sides(
    columns: List[List[SpectralFunction]],
    qdet: List[SpectralFunction],
    k: int,
    points: np.ndarray,
    values: np.ndarray,
) -> Tuple[np.ndarray, np.ndarray]:
    """Both sides of rho T_k T_{k-2} = T_{k-1}^+ T_{k-1}^- - T_{2,k-1} for raw open T_k values."""
    a = np.empty_like(values)
    b = np.empty_like(values)
    rhs = qdet[k - 1].evaluate_array(points)
    for s, col in enumerate(columns):
        prev = col[k - 1]
        a[:, s] = col[k - 2].evaluate_array(points) * values[:, s]
        b[:, s] = prev.shift(1).evaluate_array(points) * prev.shift(-1).evaluate_array(points) - rhs
    return a, b


def _labelled(
    families: List[SpectralFamily], normalization: Dict[str, Dict[str, Any]]
) -> List[SpectralFamily]:
    """Label families s0, s1, ... by energy, and name the normalization anchors by label."""

    def key(s: int):
        f = families[s]
        t1 = f.T[1].evaluate(1.0) if len(f.T) > 1 else 0j
        return (round(f.energy, 8), round(t1.real, 6), round(t1.imag, 6))

    order = sorted(range(len(families)), key=key)
    labels = {s: f"s{rank}" for rank, s in enumerate(order)}
    for entry in normalization.values():
        entry["anchor"] = labels[entry["anchor"]]
    return [families[s].model_copy(update={"label": labels[s]}) for s in order]
