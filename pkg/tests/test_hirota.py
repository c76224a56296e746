from fractions import Fraction

import pytest

from hirotalax.core.errors import MissingEntryError, NotRealAnalyticError
from hirotalax.core.fields import EXACT, gaussian
from hirotalax.core.specfun import Poly, SpectralFunction, extract_tk
from hirotalax.schemas.chain import SpectralFamily, Topology
from hirotalax.services.hirota import (
    LaxSide,
    LaxVariant,
    ab_factors,
    aux_identity_residuals,
    compatibility_defect,
    compatibility_residual,
    delta_open,
    det_solution,
    discrete_laplace_residual,
    family_from_t1,
    hirota_like_residual,
    hirota_relation,
    hirota_residual,
    is_certified,
    k0_constraint_residual,
    lax_generation_residual,
    lax_residual,
    phi_open,
    phi_periodic,
    quantum_determinant,
    tk_from_q_diag,
    tq_residual,
    w_diag,
    w_inhom,
)


def random_poly(rng, degree, real=False):
    return Poly([EXACT.random_element(rng, real=real) for _ in range(degree)] + [1])


@pytest.fixture
def det_family(rng):
    T1 = SpectralFunction(random_poly(rng, 2, real=True))
    phi = SpectralFunction(random_poly(rng, 1))
    delta = SpectralFunction(random_poly(rng, 1, real=True))
    return family_from_t1(T1, phi, 4, delta=delta)


@pytest.mark.unit
@pytest.mark.parametrize("N", [1, 2, 3, 4])
def test_periodic_phi_is_consistent_at_k0(N):
    assert k0_constraint_residual(N).is_zero()
    phi, phibar = phi_periodic(N)
    assert phibar == phi.shift(-2)


@pytest.mark.unit
def test_quantum_determinant_examples(rng):
    phi = SpectralFunction(random_poly(rng, 2))
    assert quantum_determinant(phi, 0) == SpectralFunction.constant(1)
    assert quantum_determinant(phi, 1) == phi.shift(1) * phi.conjugate().shift(-1)
    with pytest.raises(ValueError):
        quantum_determinant(phi, -1)


@pytest.mark.unit
def test_quantum_determinant_solves_discrete_laplace(rng):
    phi = SpectralFunction(random_poly(rng, 2))
    for k in range(1, 5):
        assert discrete_laplace_residual(phi, k).is_zero()


@pytest.mark.unit
def test_aux_identities(rng):
    phi = SpectralFunction(random_poly(rng, 1), Poly.monomial(1))
    residuals = aux_identity_residuals(phi, 4)
    assert len(residuals) == 8
    assert all(r.is_zero() for r in residuals.values())


@pytest.mark.unit
def test_open_scalar_data_is_real_where_expected():
    delta = delta_open(2, Fraction(3, 4))
    assert delta.is_real_analytic()
    assert delta_open(2, 0).is_zero()
    phi = phi_open(1, Fraction(7, 10), Fraction(13, 10), Fraction(3, 4))
    assert phi.den == Poly.monomial(1)
    assert phi.num.degree == 5


@pytest.mark.unit
def test_determinant_family_satisfies_hirota(det_family):
    for k in range(4):
        assert hirota_residual(det_family, k).is_zero()
    assert det_family.T[2] == det_solution(det_family.T[1], det_family.phi, 2)


@pytest.mark.unit
def test_determinant_family_satisfies_hirota_like(det_family):
    for k in range(1, 4):
        for a in range(k):
            assert hirota_like_residual(det_family, k, a).is_zero()


@pytest.mark.unit
def test_hirota_like_rejects_bad_a(det_family):
    with pytest.raises(ValueError):
        hirota_like_residual(det_family, 2, 2)


@pytest.mark.unit
def test_missing_fusion_level(det_family):
    with pytest.raises(MissingEntryError):
        hirota_relation(det_family, 4)


@pytest.mark.unit
def test_perturbed_family_fails_hirota(det_family, points):
    T = list(det_family.T)
    T[2] = T[2] + SpectralFunction.constant(1)
    broken = det_family.model_copy(update={"T": tuple(T)})
    relation = hirota_relation(broken, 1)
    assert not relation.residual().is_zero()
    assert not is_certified(relation, points, 1e-8)


@pytest.mark.unit
def test_compatibility_defect_matches_residual(det_family, rng):
    Q = random_poly(rng, 2, real=True)
    for k in range(1, 3):
        assert compatibility_residual(det_family, Q, det_family.delta, k) == compatibility_defect(
            det_family, Q, k
        )


@pytest.mark.unit
@pytest.mark.parametrize("variant", list(LaxVariant))
def test_lax_generation(det_family, rng, variant):
    Q = random_poly(rng, 2, real=True)
    for k in range(1, 3):
        assert lax_generation_residual(det_family, Q, k, variant).is_zero()


@pytest.mark.unit
def test_lax_needs_real_q(det_family):
    with pytest.raises(NotRealAnalyticError):
        lax_residual(det_family, Poly([gaussian(0, 1), 1]), 1, LaxVariant.OPEN_HOM, LaxSide.FIRST)


def two_site_state():
    """Two-site periodic singlet: Q = u, T_1 = 2u^2 + 3/2."""
    phi = SpectralFunction(phi_periodic(2)[0])
    T1 = SpectralFunction(Poly([Fraction(3, 2), 0, 2]))
    Q = Poly.monomial(1)
    T0 = phi.shift(-1)
    T = [T0, T1]
    for k in range(1, 3):
        T.append((T[k].shift(1) * T[k].shift(-1) - phi.shift(k) * phi.conjugate().shift(-k)) / T[k - 1])
    return phi, T, Q


@pytest.mark.unit
def test_tq_relation_on_two_site_singlet():
    phi, T, Q = two_site_state()
    assert tq_residual(T[1], Q, phi).is_zero()
    assert not tq_residual(T[1] + 1, Q, phi).is_zero()


@pytest.mark.unit
def test_periodic_lax_pair_on_two_site_singlet():
    phi, T, Q = two_site_state()
    family = SpectralFamily(
        label="singlet",
        topology=Topology.PERIODIC,
        T=tuple(T),
        phi=phi,
        phibar=phi.conjugate(),
        delta=SpectralFunction.constant(0),
        qdet=tuple(quantum_determinant(phi, k) for k in range(4)),
    )
    for k in range(3):
        assert hirota_residual(family, k).is_zero()
    for k in range(2):
        for side in LaxSide:
            assert lax_residual(family, Q, k, LaxVariant.PERIODIC, side).residual.is_zero()


@pytest.mark.unit
def test_generating_series_closed_forms(rng):
    Q = random_poly(rng, 2, real=True)
    phi = SpectralFunction(random_poly(rng, 1))
    delta = SpectralFunction(random_poly(rng, 1, real=True))
    A, B, C = ab_factors(Q, phi, delta)
    W1 = w_diag(A, B, 6)
    W2 = w_inhom(A, B, C, 6)
    for k in range(4):
        assert extract_tk(W1, k) == tk_from_q_diag(A, B, k)
        assert extract_tk(W1, k) == det_solution(A + B, phi, k)
        assert extract_tk(W2, k) == det_solution(A + B + C, phi, k)
