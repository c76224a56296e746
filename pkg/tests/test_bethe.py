import math
from fractions import Fraction

import numpy as np
import pytest

from hirotalax.core.errors import (
    NoSolutionError,
    SingularJacobianError,
    SingularRootError,
)
from hirotalax.core.fields import EXACT, GaussianRational
from hirotalax.core.specfun import Poly, SpectralFunction
from hirotalax.schemas.chain import Topology
from hirotalax.services.bethe import (
    bethe_energy_periodic,
    bethe_residual_open,
    bethe_residual_periodic,
    find_q,
    q_degrees,
    reconstruct_t1,
    refine_roots_newton,
    solve_q_linear,
)
from hirotalax.services.hirota import LaxSide, LaxVariant, lax_relation, phi_periodic, tq_relation, tq_residual


def two_site_phi():
    return SpectralFunction(phi_periodic(2)[0])


@pytest.mark.unit
def test_q_degree_scan():
    assert q_degrees(Topology.PERIODIC, 5, True) == [0, 1, 2]
    assert q_degrees(Topology.OPEN, 2, True) == [0, 2, 4]
    assert q_degrees(Topology.OPEN, 2, False) == [4]


@pytest.mark.unit
def test_two_site_triplet_has_constant_q():
    T1 = SpectralFunction(Poly([Fraction(-1, 2), 0, 2]))
    q = find_q(T1, two_site_phi(), None, Topology.PERIODIC, 2)
    assert q.Q == Poly.constant(1)
    assert q.roots == ()


@pytest.mark.unit
def test_two_site_singlet_has_root_at_zero():
    T1 = SpectralFunction(Poly([Fraction(3, 2), 0, 2]))
    q = find_q(T1, two_site_phi(), None, Topology.PERIODIC, 2)
    assert q.Q == Poly.monomial(1)
    assert q.degree == 1
    assert abs(q.roots[0]) < 1e-9
    assert bethe_energy_periodic(q.roots) == pytest.approx(-2.0)


@pytest.mark.unit
def test_no_q_for_foreign_t1():
    T1 = SpectralFunction(Poly([5, 0, 1]))
    with pytest.raises(NoSolutionError):
        find_q(T1, two_site_phi(), None, Topology.PERIODIC, 2)
    with pytest.raises(ValueError):
        solve_q_linear(T1, two_site_phi(), None, -1)


@pytest.mark.unit
def test_reconstruct_t1():
    phi = two_site_phi()
    rebuilt = reconstruct_t1(Poly.monomial(1), phi)
    assert rebuilt.T1 == SpectralFunction(Poly([Fraction(3, 2), 0, 2]))
    assert rebuilt.remainder == 0.0
    with pytest.raises(NoSolutionError):
        reconstruct_t1(Poly([-1, 1]), phi)
    with pytest.raises(ValueError):
        reconstruct_t1(Poly(()), phi)


@pytest.mark.unit
def test_bethe_residual_periodic():
    root = 1 / (2 * math.sqrt(3))
    assert abs(bethe_residual_periodic([0.0], 2)[0]) < 1e-12
    assert abs(bethe_residual_periodic([root], 3)[0]) < 1e-12
    assert abs(bethe_residual_periodic([0.4], 3)[0]) > 1e-3
    with pytest.raises(SingularRootError):
        bethe_residual_periodic([0.5j], 3)
    with pytest.raises(SingularRootError):
        bethe_residual_periodic([0.3, 0.3], 3)


@pytest.mark.unit
def test_newton_polishes_a_perturbed_root():
    refined = refine_roots_newton([0.3], lambda z: bethe_residual_periodic(z, 3))
    assert refined.roots[0] == pytest.approx(1 / (2 * math.sqrt(3)), abs=1e-10)
    assert refined.residual <= 1e-12
    assert refined.history[0] > refined.history[-1]


@pytest.mark.unit
def test_newton_rejects_coinciding_roots():
    with pytest.raises(SingularJacobianError):
        refine_roots_newton([0.3, 0.3], lambda z: bethe_residual_periodic(z, 3))


@pytest.mark.integration
def test_periodic_families_have_q_functions(periodic3_families, points):
    for family in periodic3_families:
        q = find_q(family.T[1], family.phi, None, Topology.PERIODIC, 3)
        assert q.degree <= 1
        assert q.is_real_analytic()
        assert tq_relation(family.T[1], q.Q, family.phi).magnitude(points) < 1e-8
        if q.roots:
            assert np.abs(bethe_residual_periodic(q.roots, 3, relative=True)).max() < 1e-7
        assert bethe_energy_periodic(q.roots) == pytest.approx(family.energy, abs=1e-7)


@pytest.mark.integration
def test_open_families_have_paired_roots(open1_families, points):
    for family in open1_families:
        q = find_q(family.T[1], family.phi, family.delta, Topology.OPEN, 1)
        assert q.degree == 2
        assert q.paired
        assert q.pairing_defect() < 1e-6
        assert tq_relation(family.T[1], q.Q, family.phi, family.delta).magnitude(points) < 1e-8
        assert np.abs(bethe_residual_open(q.roots, family.phi, family.delta, relative=True)).max() < 1e-7
        rebuilt = reconstruct_t1(q, family.phi, family.delta)
        for z in points:
            assert rebuilt.T1.evaluate(z) == pytest.approx(family.T[1].evaluate(z), rel=1e-7)


@pytest.mark.integration
def test_diagonal_boundary_has_even_q(open2_diagonal_families, points):
    for family in open2_diagonal_families:
        q = find_q(family.T[1], family.phi, family.delta, Topology.OPEN, 2)
        assert q.degree % 2 == 0
        assert q.pairing_defect() < 1e-6
        assert tq_relation(family.T[1], q.Q, family.phi).magnitude(points) < 1e-8


@pytest.mark.unit
def test_exact_solve_is_exact():
    T1 = SpectralFunction(Poly([Fraction(3, 2), 0, 2]))
    q = solve_q_linear(T1, two_site_phi(), None, 1)
    assert q.residual == 0.0
    assert all(isinstance(c, GaussianRational) for c in q.Q.coeffs)
    assert q.Q == Poly.monomial(1)


@pytest.mark.unit
def test_exact_inhomogeneous_solve_keeps_large_denominators():
    phi = two_site_phi()
    Q = Poly([Fraction(7, 1234567), Fraction(-3, 1000003), 1])
    T1 = SpectralFunction(Poly([Fraction(2, 3), Fraction(1, 5), 2]))
    delta = tq_residual(T1, Q, phi)
    assert not delta.is_zero()
    q = solve_q_linear(T1, phi, delta, 2)
    assert q.Q == Q
    assert q.residual == 0.0
    assert EXACT.to_fraction_pair(q.Q.coeffs[0]) == (Fraction(7, 1234567), Fraction(0))
    assert tq_residual(T1, q.Q, phi, delta).is_zero()


@pytest.mark.integration
def test_open_two_site_q_has_full_degree(open2_families, points):
    for family in open2_families:
        q = find_q(family.T[1], family.phi, family.delta, Topology.OPEN, 2)
        assert q.degree == 4, family.label
        assert q.residual <= 1e-8
        assert tq_relation(family.T[1], q.Q, family.phi, family.delta).magnitude(points) <= 1e-8


LAX_CASES = [
    ("periodic3_families", Topology.PERIODIC, 3, LaxVariant.PERIODIC),
    ("open2_diagonal_families", Topology.OPEN, 2, LaxVariant.OPEN_HOM),
    ("open2_diagonal_families", Topology.OPEN, 2, LaxVariant.OPEN_INHOM),
    ("open1_families", Topology.OPEN, 1, LaxVariant.OPEN_INHOM),
    ("open2_families", Topology.OPEN, 2, LaxVariant.OPEN_INHOM),
]


@pytest.mark.integration
@pytest.mark.parametrize("fixture, topology, sites, variant", LAX_CASES)
@pytest.mark.parametrize("side", list(LaxSide))
@pytest.mark.parametrize("k", [1, 2, 3])
def test_lax_pairs_hold_on_spectrum_families(request, fixture, topology, sites, variant, side, k, points):
    for family in request.getfixturevalue(fixture):
        delta = family.delta if topology == Topology.OPEN else None
        q = find_q(family.T[1], family.phi, delta, topology, sites)
        relation = lax_relation(family, q.Q, k, variant, side)
        assert relation.magnitude(points) <= 1e-7, (family.label, variant.value, side.value, k)
