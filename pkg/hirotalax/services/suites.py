"""Verification suites behind the command line: each check becomes a CheckRecord."""

import asyncio
import logging
import random
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from hirotalax.core.config import settings
from hirotalax.core.constants import ANCHORS, SUITE_DESCRIPTIONS
from hirotalax.core.detkit import (
    BracketMatrix,
    jacobi_residual,
    plucker_residual,
    verify_hirota_like_via_plucker,
)
from hirotalax.core.errors import (
    ConfigurationError,
    ConvergenceError,
    HirotaLaxError,
    NotRepresentableError,
    SingularJacobianError,
)
from hirotalax.core.fields import CoefficientField, FloatField, field_for
from hirotalax.core.specfun import (
    Poly,
    ShiftSeries,
    SpectralFunction,
    bar,
    extract_tk,
    sample_points,
)
from hirotalax.schemas.chain import ChainSpec, SpectralFamily
from hirotalax.schemas.reports import (
    CheckRecord,
    Command,
    Report,
    RunConfig,
    StateRecord,
    Suite,
)
from hirotalax.services import bethe, chain, hirota
from hirotalax.services.hirota import LaxSide, LaxVariant, Relation, Term

logger = logging.getLogger(__name__)

Outcome = Union[CheckRecord, List[CheckRecord]]

FUSION_LEVELS = (Fraction(1, 2), Fraction(1), Fraction(3, 2))
CHAIN_SAMPLES = 5
PLUCKER_KMAX = 4
PLUCKER_SHAPES = ((2, 1), (3, 2), (4, 2), (5, 3))
PAIRING_TOLERANCE = 1e-6
BETHE_TOLERANCE = 1e-7


@dataclass
class RunContext:
    config: RunConfig
    spec: ChainSpec
    field: CoefficientField
    points: Tuple[complex, ...]
    families: List[SpectralFamily] = field(default_factory=list)
    family_error: Optional[CheckRecord] = None
    qs: Dict[str, Union[bethe.QFunction, Exception]] = field(default_factory=dict)

    @property
    def tolerance(self) -> float:
        return self.config.tolerance

    def rng(self, salt: int) -> random.Random:
        return random.Random(self.config.seed * 1_000_003 + salt)


# -- record helpers -------------------------------------------------------------------


def _guarded(check: str, anchor: str, fn: Callable[[], Outcome], **where) -> List[CheckRecord]:
    try:
        outcome = fn()
    except ConfigurationError:
        raise
    except (HirotaLaxError, ValueError, ZeroDivisionError, np.linalg.LinAlgError) as e:
        logger.error(f"Check {check} failed with {type(e).__name__}: {e}", exc_info=True)
        return [
            CheckRecord(
                check=check,
                passed=False,
                anchor=anchor,
                detail=f"{type(e).__name__}: {e}",
                **where,
            )
        ]
    return outcome if isinstance(outcome, list) else [outcome]


def _measure(ctx: RunContext, relation: Relation) -> Tuple[float, bool, Optional[list]]:
    exact = relation.terms[0].factors[0].field.exact
    if exact:
        if relation.residual().is_zero():
            return 0.0, True, None
        return relation.magnitude(ctx.points), False, None
    magnitude = relation.magnitude(ctx.points)
    table = relation.sample_table(ctx.points) if ctx.config.tables else None
    return magnitude, magnitude <= ctx.tolerance, table


def _relation_record(ctx: RunContext, check: str, anchor: str, relation: Relation, **where) -> CheckRecord:
    magnitude, passed, table = _measure(ctx, relation)
    return CheckRecord(
        check=check, magnitude=magnitude, passed=passed, anchor=anchor, table=table, **where
    )


def _difference(name: str, lhs: SpectralFunction, rhs: SpectralFunction) -> Relation:
    return Relation(name, (Term(1, (lhs,)), Term(-1, (rhs,))))


def _scalar_record(check: str, anchor: str, magnitude: float, tolerance: float, **where) -> CheckRecord:
    return CheckRecord(
        check=check, magnitude=magnitude, passed=magnitude <= tolerance, anchor=anchor, **where
    )


# -- random data ---------------------------------------------------------------------


def _random_poly(field_: CoefficientField, rng: random.Random, degree: int, real: bool = False) -> Poly:
    coeffs = [field_.random_element(rng, real=real) for _ in range(degree)]
    return Poly(coeffs + [field_.one], field_)


def _model_phi(ctx: RunContext) -> Tuple[SpectralFunction, SpectralFunction]:
    """phi and Delta of the configured chain in the identity model, floats if not representable."""
    for field_ in (ctx.field, FloatField(settings.FLOAT_TOLERANCE)):
        try:
            return chain.scalar_data(ctx.spec, field_)
        except NotRepresentableError as e:
            logger.warning(f"{ctx.spec.describe()} has no exact scalar data, using floats: {e}")
    raise NotRepresentableError(f"no scalar data for {ctx.spec.describe()}")


# -- identities suite ------------------------------------------------------------------


def _shift_checks(ctx: RunContext) -> List[CheckRecord]:
    rng = ctx.rng(1)
    f = SpectralFunction(_random_poly(ctx.field, rng, 3))
    records = []
    for a, b in ((1, 2), (-3, 1), (2, -2), (4, 5)):
        records.append(
            _relation_record(
                ctx,
                "shift.group",
                ANCHORS["shift.group"],
                _difference("shift.group", f.shift(a).shift(b), f.shift(a + b)),
                k=a,
                a=b,
            )
        )
    for k in (-2, 1, 3):
        records.append(
            _relation_record(
                ctx,
                "shift.bar",
                ANCHORS["shift.bar"],
                _difference("shift.bar", bar(f.shift(k)), bar(f).shift(-k)),
                k=k,
            )
        )
    return records


def _scalar_identity_checks(ctx: RunContext) -> List[CheckRecord]:
    phi, _ = _model_phi(ctx)
    kmax = ctx.config.kmax
    records = []
    for k in range(1, kmax + 1):
        records.append(
            _relation_record(
                ctx,
                "laplace",
                ANCHORS["laplace"],
                hirota.discrete_laplace_relation(phi, k),
                k=k,
            )
        )
    for name, relation in hirota.aux_identity_relations(phi, kmax).items():
        kind, level = name.split(".k=")
        records.append(
            _relation_record(
                ctx, f"aux.{kind}", ANCHORS[f"aux.{kind}"], relation, k=int(level)
            )
        )
    if not ctx.spec.is_open:
        records.append(
            _relation_record(
                ctx,
                "k0.constraint",
                ANCHORS["k0.constraint"],
                hirota.k0_constraint_relation(ctx.spec.sites, phi.field),
            )
        )
    return records


def _series_checks(ctx: RunContext) -> List[CheckRecord]:
    rng = ctx.rng(2)
    order = 6

    def random_series() -> ShiftSeries:
        return ShiftSeries(
            {m: SpectralFunction(_random_poly(ctx.field, rng, 1)) for m in (1, 2, 3)},
            order,
            ctx.field,
        )

    a, b, c = random_series(), random_series(), random_series()
    left, right = (a * b) * c, a * (b * c)
    return [
        _relation_record(
            ctx,
            "series.associativity",
            ANCHORS["series.associativity"],
            _difference("series", left.coefficient(m), right.coefficient(m)),
            k=m,
        )
        for m in range(order + 1)
        if not (left.coefficient(m).is_zero() and right.coefficient(m).is_zero())
    ]


def _generating_checks(ctx: RunContext) -> List[CheckRecord]:
    rng = ctx.rng(3)
    kmax = ctx.config.kmax
    Q = _random_poly(ctx.field, rng, 2, real=True)
    phi = SpectralFunction(_random_poly(ctx.field, rng, 1))
    delta = SpectralFunction(_random_poly(ctx.field, rng, 1, real=True))
    A, B, C = hirota.ab_factors(Q, phi, delta)
    W1 = hirota.w_diag(A, B, 2 * kmax)
    W2 = hirota.w_inhom(A, B, C, 2 * kmax)
    records = []
    for k in range(kmax + 1):
        from_series = extract_tk(W1, k)
        records.append(
            _relation_record(
                ctx,
                "generating.diag",
                ANCHORS["generating.diag"],
                _difference("w1-closed", from_series, hirota.tk_from_q_diag(A, B, k)),
                k=k,
                detail="against the closed sum over A, B",
            )
        )
        records.append(
            _relation_record(
                ctx,
                "generating.diag.det",
                ANCHORS["hirota.det-solution"],
                _difference("w1-det", from_series, hirota.det_solution(A + B, phi, k)),
                k=k,
                detail="T_1 = A + B",
            )
        )
        records.append(
            _relation_record(
                ctx,
                "generating.inhom.det",
                ANCHORS["generating.inhom"],
                _difference("w2-det", extract_tk(W2, k), hirota.det_solution(A + B + C, phi, k)),
                k=k,
                detail="T_1 = A + B + C",
            )
        )
    return records


def _det_family_checks(ctx: RunContext) -> List[CheckRecord]:
    """Hirota, compatibility and Lax generation on the determinant family of random real T_1."""
    rng = ctx.rng(4)
    kmax = ctx.config.kmax
    T1 = SpectralFunction(_random_poly(ctx.field, rng, 2, real=True))
    phi = SpectralFunction(_random_poly(ctx.field, rng, 1))
    delta = SpectralFunction(_random_poly(ctx.field, rng, 1, real=True))
    Q = _random_poly(ctx.field, rng, 2, real=True)
    family = hirota.family_from_t1(T1, phi, kmax + 1, delta=delta, label="random")
    records = []
    for k in range(1, kmax + 1):
        records.append(
            _relation_record(
                ctx,
                "hirota.det-solution",
                ANCHORS["hirota.open"],
                hirota.hirota_relation(family, k),
                k=k,
                state=family.label,
            )
        )
        records.append(
            _relation_record(
                ctx,
                "compatibility.defect",
                ANCHORS["compatibility"],
                _difference(
                    "compatibility",
                    hirota.compatibility_residual(family, Q, delta, k),
                    hirota.compatibility_defect(family, Q, k),
                ),
                k=k,
                state=family.label,
            )
        )
        for variant in LaxVariant:
            records.append(
                _relation_record(
                    ctx,
                    f"lax.generation.{variant.value}",
                    ANCHORS["lax.generation"],
                    hirota.lax_generation_relation(family, Q, k, variant),
                    k=k,
                    state=family.label,
                )
            )
    return records


def identities_suite(ctx: RunContext) -> List[CheckRecord]:
    anchor = ANCHORS["series.associativity"]
    records = []
    records += _guarded("shift", ANCHORS["shift.group"], lambda: _shift_checks(ctx))
    records += _guarded("scalar", ANCHORS["laplace"], lambda: _scalar_identity_checks(ctx))
    records += _guarded("series", anchor, lambda: _series_checks(ctx))
    records += _guarded("generating", ANCHORS["generating.diag"], lambda: _generating_checks(ctx))
    records += _guarded("det-family", ANCHORS["hirota.open"], lambda: _det_family_checks(ctx))
    return records


# -- plucker suite ---------------------------------------------------------------------


def _random_matrix(field_: CoefficientField, rng: random.Random, rows: int, cols: int) -> list:
    return [[field_.random_element(rng) for _ in range(cols)] for _ in range(rows)]


def _scalar_magnitude(field_: CoefficientField, value) -> float:
    return 0.0 if field_.exact and field_.is_zero(value) else abs(field_.to_complex(value))


def _jacobi_trials(ctx: RunContext) -> CheckRecord:
    rng = ctx.rng(5)
    worst = 0.0
    failures = 0
    trials = settings.IDENTITY_TRIALS
    for _ in range(trials):
        n = rng.randint(2, 6)
        m = _random_matrix(ctx.field, rng, n, n)
        p1, p2 = rng.sample(range(1, n + 1), 2)
        q1, q2 = rng.sample(range(1, n + 1), 2)
        value = jacobi_residual(m, p1, p2, q1, q2, ctx.field)
        magnitude = _scalar_magnitude(ctx.field, value)
        worst = max(worst, magnitude)
        if (ctx.field.exact and magnitude != 0.0) or magnitude > ctx.tolerance:
            failures += 1
    return CheckRecord(
        check="jacobi",
        magnitude=worst,
        passed=failures == 0,
        anchor=ANCHORS["jacobi"],
        detail=f"{trials} random instances, {failures} failed",
    )


def _plucker_trials(ctx: RunContext) -> CheckRecord:
    rng = ctx.rng(6)
    worst = 0.0
    failures = 0
    trials = settings.IDENTITY_TRIALS
    for _ in range(trials):
        n, r = rng.choice(PLUCKER_SHAPES)
        X = BracketMatrix(tuple(map(tuple, _random_matrix(ctx.field, rng, n + 1, r + 1))), ctx.field)
        i = rng.sample(range(n + 1), r + 1)
        j = rng.sample(range(n + 1), r + 1)
        magnitude = _scalar_magnitude(ctx.field, plucker_residual(X, i, j))
        worst = max(worst, magnitude)
        if (ctx.field.exact and magnitude != 0.0) or magnitude > ctx.tolerance:
            failures += 1
    return CheckRecord(
        check="plucker",
        magnitude=worst,
        passed=failures == 0,
        anchor=ANCHORS["plucker"],
        detail=f"{trials} random instances, {failures} failed",
    )


def _plucker_witnesses(ctx: RunContext) -> List[CheckRecord]:
    rng = ctx.rng(7)
    T1 = SpectralFunction(_random_poly(ctx.field, rng, 1, real=True))
    phi = SpectralFunction(_random_poly(ctx.field, rng, 1))
    records = []
    for k in range(1, min(ctx.config.kmax, PLUCKER_KMAX) + 1):
        for a in range(k):
            records += _guarded(
                "plucker.hirota-like",
                ANCHORS["plucker.hirota-like"],
                lambda: _plucker_witness(ctx, T1, phi, k, a),
                k=k,
                a=a,
            )
    return records


def _plucker_witness(ctx: RunContext, T1, phi, k: int, a: int) -> CheckRecord:
    w = verify_hirota_like_via_plucker(T1, phi, k, a)
    relation = Relation("plucker", tuple(Term(1, (t,)) for t in w.terms))
    magnitude, vanishes, _ = _measure(ctx, relation)
    return CheckRecord(
        check="plucker.hirota-like",
        k=k,
        a=a,
        magnitude=magnitude,
        passed=vanishes and w.surviving == 3 and w.matches,
        anchor=ANCHORS["plucker.hirota-like"],
        detail=f"surviving={w.surviving} matches={w.matches} factor={w.factor}",
    )


def plucker_suite(ctx: RunContext) -> List[CheckRecord]:
    records = []
    records += _guarded("jacobi", ANCHORS["jacobi"], lambda: _jacobi_trials(ctx))
    records += _guarded("plucker", ANCHORS["plucker"], lambda: _plucker_trials(ctx))
    records += _plucker_witnesses(ctx)
    return records


# -- spectrum-backed suites ----------------------------------------------------------


def _hirota_anchor(family: SpectralFamily) -> str:
    return ANCHORS[f"hirota.{family.topology.value}"]


def _fixed_by_normalization(family: SpectralFamily, k: int) -> Optional[str]:
    entry = family.provenance.get("normalization", {}).get(str(k + 1))
    if entry is not None and entry.get("anchor") == family.label:
        return f"normalization anchor for T_{k + 1}; holds by construction"
    return None


def hirota_suite(ctx: RunContext) -> List[CheckRecord]:
    records = []
    for family in ctx.families:
        anchor = _hirota_anchor(family)
        for k in range(1, ctx.config.kmax + 1):
            records += _guarded(
                "hirota",
                anchor,
                lambda: _relation_record(
                    ctx,
                    "hirota",
                    anchor,
                    hirota.hirota_relation(family, k),
                    k=k,
                    state=family.label,
                    detail=_fixed_by_normalization(family, k),
                ),
                k=k,
                state=family.label,
            )
        if not ctx.spec.is_open:
            continue
        for level, entry in family.provenance.get("normalization", {}).items():
            if entry.get("anchor") != family.label:
                continue
            records.append(
                _scalar_record(
                    "hirota.normalization",
                    ANCHORS["hirota.normalization"],
                    entry["spread"],
                    ctx.tolerance,
                    k=int(level),
                    state=family.label,
                    detail="defect of the anchor's rho on every other state",
                )
            )
        for k in range(2, ctx.config.kmax + 1):
            records += _guarded(
                "hirota.det-solution",
                ANCHORS["hirota.det-solution"],
                lambda: _relation_record(
                    ctx,
                    "hirota.det-solution",
                    ANCHORS["hirota.det-solution"],
                    _difference(
                        "det", hirota.det_solution(family.T[1], family.phi, k), family.T_at(k)
                    ),
                    k=k,
                    state=family.label,
                ),
                k=k,
                state=family.label,
            )
    return records


def hirota_like_suite(ctx: RunContext) -> List[CheckRecord]:
    if not ctx.spec.is_open:
        logger.warning("Hirota-like relations apply to open chains; skipping for a periodic chain")
        return []
    records = []
    for family in ctx.families:
        for k in range(1, ctx.config.kmax + 1):
            for a in range(k):
                records += _guarded(
                    "hirota-like",
                    ANCHORS["hirota-like"],
                    lambda: _relation_record(
                        ctx,
                        "hirota-like",
                        ANCHORS["hirota-like"],
                        hirota.hirota_like_relation(family, k, a),
                        k=k,
                        a=a,
                        state=family.label,
                    ),
                    k=k,
                    a=a,
                    state=family.label,
                )
    return records


def _lax_variants(ctx: RunContext, family: SpectralFamily) -> List[LaxVariant]:
    if not ctx.spec.is_open:
        return [LaxVariant.PERIODIC]
    if family.delta.is_zero():
        return [LaxVariant.OPEN_HOM, LaxVariant.OPEN_INHOM]
    return [LaxVariant.OPEN_INHOM]


def _q_for(ctx: RunContext, family: SpectralFamily) -> bethe.QFunction:
    q = ctx.qs.get(family.label)
    if isinstance(q, Exception):
        raise q
    if q is None:
        raise KeyError(f"no Q solved for {family.label}")
    return q


def lax_suite(ctx: RunContext) -> List[CheckRecord]:
    records = []
    for family in ctx.families:
        for variant in _lax_variants(ctx, family):
            for side in LaxSide:
                check = f"lax.{variant.value}.{side.value}"
                anchor = ANCHORS[check]
                for k in range(ctx.config.kmax + 1):
                    records += _guarded(
                        check,
                        anchor,
                        lambda: _relation_record(
                            ctx,
                            check,
                            anchor,
                            hirota.lax_relation(family, _q_for(ctx, family).Q, k, variant, side),
                            k=k,
                            state=family.label,
                        ),
                        k=k,
                        state=family.label,
                    )
        if not ctx.spec.is_open:
            continue
        for k in range(1, ctx.config.kmax + 1):
            records += _guarded(
                "compatibility",
                ANCHORS["compatibility"],
                lambda: _relation_record(
                    ctx,
                    "compatibility",
                    ANCHORS["compatibility"],
                    hirota.compatibility_relation(
                        family, _q_for(ctx, family).Q, family.delta, k
                    ),
                    k=k,
                    state=family.label,
                ),
                k=k,
                state=family.label,
            )
    return records


def _refined_roots(roots: Sequence[complex], residual_fn) -> Tuple[complex, ...]:
    if not roots:
        return tuple(roots)
    try:
        return bethe.refine_roots_newton(roots, residual_fn).roots
    except (SingularJacobianError, ConvergenceError) as e:
        logger.warning(f"Keeping unrefined roots: {e}")
        return tuple(roots)


def _is_singular(roots: Sequence[complex]) -> bool:
    return any(abs(abs(complex(u).imag) - 0.5) < 1e-6 and abs(complex(u).real) < 1e-6 for u in roots)


def _bethe_record(ctx: RunContext, family: SpectralFamily, q: bethe.QFunction, delta) -> CheckRecord:
    """Bethe equations at the (Newton-polished) roots of Q, relative residual."""
    state = family.label
    if ctx.spec.is_open:
        anchor = ANCHORS["bethe.open"]

        def residual_fn(z):
            return bethe.bethe_residual_open(z, family.phi, delta, relative=True)

    elif _is_singular(q.roots):
        logger.warning(f"{state} has roots at +-i/2; checking the cleared Bethe equations")
        anchor = ANCHORS["bethe.open"]

        def residual_fn(z):
            return bethe.tq_root_residuals(z, family.phi, None, relative=True)

    else:
        anchor = ANCHORS["bethe.periodic"]

        def residual_fn(z):
            return bethe.bethe_residual_periodic(z, ctx.spec.sites, relative=True)

    roots = q.roots if _is_singular(q.roots) else _refined_roots(q.roots, residual_fn)
    magnitude = max((abs(r) for r in residual_fn(roots)), default=0.0)
    return _scalar_record(
        "bethe", anchor, magnitude, max(ctx.tolerance, BETHE_TOLERANCE), state=state
    )


def _tq_state_checks(ctx: RunContext, family: SpectralFamily) -> List[CheckRecord]:
    state = family.label
    q = _q_for(ctx, family)
    delta = family.delta * ctx.config.delta_scale
    tq_anchor = ANCHORS[f"tq.{family.topology.value}"]
    records = [
        CheckRecord(
            check="q.solve",
            magnitude=q.residual,
            passed=q.residual <= ctx.tolerance,
            anchor=tq_anchor,
            state=state,
            detail=f"degree {q.degree}",
        ),
        _relation_record(
            ctx, "tq", tq_anchor, hirota.tq_relation(family.T[1], q.Q, family.phi, delta), state=state
        ),
    ]
    if ctx.spec.is_open:
        records.append(
            _scalar_record(
                "q.pairing", ANCHORS["q.pairing"], q.pairing_defect(), PAIRING_TOLERANCE, state=state
            )
        )
    records += _guarded(
        "bethe", ANCHORS[f"bethe.{family.topology.value}"], lambda: _bethe_record(ctx, family, q, delta), state=state
    )
    records += _guarded(
        "tq.round-trip",
        ANCHORS["tq.round-trip"],
        lambda: _relation_record(
            ctx,
            "tq.round-trip",
            ANCHORS["tq.round-trip"],
            _difference(
                "round-trip",
                bethe.reconstruct_t1(q, family.phi, delta).T1,
                family.T[1],
            ),
            state=state,
        ),
        state=state,
    )
    if ctx.spec.is_open or family.energy is None:
        return records
    if _is_singular(q.roots):
        logger.warning(f"{state}: the Bethe energy diverges at roots +-i/2, not compared")
        return records
    energy = bethe.bethe_energy_periodic(q.roots)
    records.append(
        _scalar_record(
            "bethe.energy",
            ANCHORS["bethe.energy"],
            abs(energy - family.energy) / max(1.0, abs(family.energy)),
            ctx.tolerance,
            state=state,
            detail=f"bethe {energy:.10f} spectrum {family.energy:.10f}",
        )
    )
    return records


def tq_suite(ctx: RunContext) -> List[CheckRecord]:
    if ctx.config.delta_scale != 1.0:
        logger.warning(f"Delta is scaled by {ctx.config.delta_scale}; tq checks are a negative control")
    records = []
    for family in ctx.families:
        records += _guarded(
            "q.solve",
            ANCHORS[f"tq.{family.topology.value}"],
            lambda: _tq_state_checks(ctx, family),
            state=family.label,
        )
    return records


# -- chain-level checks ---------------------------------------------------------------


def chain_checks(ctx: RunContext) -> List[CheckRecord]:
    spec = ctx.spec
    rng = np.random.default_rng(ctx.config.seed)
    levels = [j for j in FUSION_LEVELS if 2 * j <= max(ctx.config.kmax, 1)]
    records = []
    tol = max(ctx.tolerance, 1e-10)
    for _ in range(CHAIN_SAMPLES):
        u, v = rng.normal(size=2) + 1j * rng.normal(size=2)
        records.append(
            _scalar_record(
                "chain.yang-baxter", ANCHORS["chain.commuting"], chain.yang_baxter_residual(u, v), tol
            )
        )
        if spec.is_open:
            for side, params in (("right", chain.right_k_params(spec)), ("left", chain.left_k_params(spec))):
                records.append(
                    _scalar_record(
                        f"chain.reflection.{side}",
                        ANCHORS["chain.commuting"],
                        chain.reflection_residual(u, v, params),
                        tol,
                    )
                )
        for j in levels:
            for jp in levels:
                records.append(
                    _scalar_record(
                        "chain.commuting",
                        ANCHORS["chain.commuting"],
                        chain.commutator_norm(chain.transfer(spec, j, u), chain.transfer(spec, jp, v)),
                        tol,
                        detail=f"j={j} j'={jp}",
                    )
                )
    if spec.is_open:
        pauli = chain.pauli_hamiltonian_open(spec.sites, spec.alpha, spec.beta, spec.xi)
    else:
        pauli = chain.pauli_hamiltonian_periodic(spec.sites)
    H = chain.hamiltonian(spec)
    records.append(
        _scalar_record(
            "chain.hamiltonian",
            ANCHORS["chain.energy"],
            (H - pauli).norm() / max(pauli.norm(), 1.0),
            tol,
        )
    )
    return records


def chain_suite(ctx: RunContext) -> List[CheckRecord]:
    return _guarded("chain", ANCHORS["chain.commuting"], lambda: chain_checks(ctx))


SUITES: Dict[Suite, Callable[[RunContext], List[CheckRecord]]] = {
    Suite.CHAIN: chain_suite,
    Suite.IDENTITIES: identities_suite,
    Suite.PLUCKER: plucker_suite,
    Suite.HIROTA: hirota_suite,
    Suite.HIROTA_LIKE: hirota_like_suite,
    Suite.LAX: lax_suite,
    Suite.TQ: tq_suite,
}

NEEDS_FAMILIES = {Suite.HIROTA, Suite.HIROTA_LIKE, Suite.LAX, Suite.TQ}
NEEDS_Q = {Suite.LAX, Suite.TQ}


# -- service -------------------------------------------------------------------------


class VerifyService:
    def _context(self, config: RunConfig) -> RunContext:
        spec = config.chain()
        points = sample_points(
            config.seed, config.samples, settings.SAMPLE_RADIUS_MIN, settings.SAMPLE_RADIUS_MAX
        )
        return RunContext(
            config=config,
            spec=spec,
            field=field_for(config.model.value, settings.FLOAT_TOLERANCE),
            points=points,
        )

    def _load_families(self, ctx: RunContext, kmax: int) -> None:
        try:
            ctx.families = chain.spectrum_family(ctx.spec, kmax, seed=ctx.config.seed)
        except ConfigurationError:
            raise
        except HirotaLaxError as e:
            logger.error(f"Spectrum of {ctx.spec.describe()} failed: {e}", exc_info=True)
            ctx.family_error = CheckRecord(
                check="chain.spectrum",
                passed=False,
                anchor=ANCHORS["chain.commuting"],
                detail=f"{type(e).__name__}: {e}",
            )

    def _solve_qs(self, ctx: RunContext) -> None:
        for family in ctx.families:
            try:
                ctx.qs[family.label] = bethe.find_q(
                    family.T[1], family.phi, family.delta, family.topology, ctx.spec.sites
                )
            except HirotaLaxError as e:
                logger.error(f"No Q for {family.label}: {e}", exc_info=True)
                ctx.qs[family.label] = e

    async def verify(self, config: RunConfig) -> Report:
        started = time.perf_counter()
        ctx = self._context(config)
        suites = Suite.expand(config.suite or Suite.ALL)
        if NEEDS_FAMILIES.intersection(suites):
            # one extra level so every relation at k <= kmax has its T_{k+1}
            await asyncio.to_thread(self._load_families, ctx, config.kmax + 1)
        if NEEDS_Q.intersection(suites):
            await asyncio.to_thread(self._solve_qs, ctx)

        for suite in suites:
            logger.info(f"Running {suite.value} suite: {SUITE_DESCRIPTIONS[suite.value]}")
        results = await asyncio.gather(
            *[asyncio.to_thread(SUITES[suite], ctx) for suite in suites]
        )
        records = [r for batch in results for r in batch]
        if ctx.family_error is not None:
            records.append(ctx.family_error)
        report = Report.assemble(config, records, wall_time=time.perf_counter() - started)
        logger.info(
            f"Verified {', '.join(s.value for s in suites)} for {ctx.spec.describe()}: "
            f"{report.summary.passed}/{report.summary.total} passed"
        )
        return report

    async def spectrum(self, config: RunConfig) -> Report:
        started = time.perf_counter()
        ctx = self._context(config)
        await asyncio.to_thread(self._load_families, ctx, config.kmax)
        records = await asyncio.to_thread(chain_suite, ctx)
        if ctx.family_error is not None:
            records.append(ctx.family_error)
        states = [
            StateRecord(
                label=f.label,
                energy=f.energy,
                degeneracy=f.degeneracy,
                T=[t.to_json() for t in f.T],
                normalization=f.provenance.get("normalization") or None,
            )
            for f in ctx.families
        ]
        logger.info(f"Spectrum of {ctx.spec.describe()}: {len(states)} distinct families")
        return Report.assemble(config, records, states, wall_time=time.perf_counter() - started)

    async def solve_q(self, config: RunConfig) -> Report:
        started = time.perf_counter()
        ctx = self._context(config)
        await asyncio.to_thread(self._load_families, ctx, 1)
        await asyncio.to_thread(self._solve_qs, ctx)
        records = await asyncio.to_thread(tq_suite, ctx)
        if ctx.family_error is not None:
            records.append(ctx.family_error)
        states = []
        for f in ctx.families:
            q = ctx.qs.get(f.label)
            states.append(
                StateRecord(
                    label=f.label,
                    energy=f.energy,
                    degeneracy=f.degeneracy,
                    Q=q.to_json() if isinstance(q, bethe.QFunction) else None,
                )
            )
        return Report.assemble(config, records, states, wall_time=time.perf_counter() - started)

    async def run(self, config: RunConfig) -> Report:
        if config.command == Command.SPECTRUM:
            return await self.spectrum(config)
        if config.command == Command.SOLVE_Q:
            return await self.solve_q(config)
        return await self.verify(config)


verify_service = VerifyService()
