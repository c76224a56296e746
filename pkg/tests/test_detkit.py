from fractions import Fraction

import pytest

from hirotalax.core.detkit import (
    BracketMatrix,
    UnitRowSpec,
    bracket,
    build_hirota_plucker_matrix,
    determinant,
    hirota_plucker_indices,
    jacobi_residual,
    minor,
    plucker_residual,
    plucker_terms,
    tk_matrix,
    verify_hirota_like_via_plucker,
)
from hirotalax.core.errors import IndexClashError
from hirotalax.core.fields import EXACT
from hirotalax.core.specfun import Poly, SpectralFunction, SpectralRing
from hirotalax.services.hirota import det_solution, quantum_determinant


def random_matrix(rng, rows, cols):
    return [[EXACT.random_element(rng) for _ in range(cols)] for _ in range(rows)]


def random_function(rng, degree, real=False):
    coeffs = [EXACT.random_element(rng, real=real) for _ in range(degree)] + [1]
    return SpectralFunction(Poly(coeffs))


@pytest.mark.unit
def test_minor_examples(rng):
    M = random_matrix(rng, 3, 3)
    assert minor(M, (), (), EXACT) == determinant(M, EXACT)
    M2 = [[1, 2], [3, 4]]
    assert EXACT.equal(minor(M2, (1,), (1,), EXACT), 4)
    assert EXACT.equal(minor(M2, (1, 2), (1, 2), EXACT), 1)
    assert EXACT.equal(determinant(M2, EXACT), -2)


@pytest.mark.unit
def test_exact_determinant_has_no_rounding():
    M = [[Fraction(1, 3), Fraction(1, 7)], [Fraction(2, 9), Fraction(5, 11)]]
    expected = Fraction(1, 3) * Fraction(5, 11) - Fraction(1, 7) * Fraction(2, 9)
    assert EXACT.to_fraction_pair(determinant(M, EXACT)) == (expected, Fraction(0))


@pytest.mark.unit
def test_spectral_determinant_is_reduced():
    ring = SpectralRing(EXACT)
    u = SpectralFunction.variable()
    M = [[u, SpectralFunction.constant(1)], [u * u, u + 1]]
    assert determinant(M, ring) == SpectralFunction(Poly.from_roots([0]))
    assert determinant([[u / (u + 1), u], [1 / (u + 1), 1]], ring).is_zero()


@pytest.mark.unit
def test_minor_rejects_bad_indices():
    M = [[1, 2], [3, 4]]
    with pytest.raises(ValueError):
        minor(M, (1,), (), EXACT)
    with pytest.raises(IndexClashError):
        minor(M, (1, 1), (1, 2), EXACT)
    with pytest.raises(IndexClashError):
        minor(M, (3,), (1,), EXACT)


@pytest.mark.unit
def test_float_determinant_matches_exact(rng, flt):
    M = random_matrix(rng, 4, 4)
    exact_value = EXACT.to_complex(determinant(M, EXACT))
    float_value = determinant([[EXACT.to_complex(x) for x in row] for row in M], flt)
    assert abs(exact_value - float_value) <= 1e-9 * max(1.0, abs(exact_value))


@pytest.mark.unit
def test_jacobi_vanishes_on_random_matrices(rng):
    for size in range(2, 7):
        M = random_matrix(rng, size, size)
        for p1, p2, q1, q2 in ((1, size, 1, size), (size, 1, 2, 1), (1, 2, 2, 1)):
            assert EXACT.is_zero(jacobi_residual(M, p1, p2, q1, q2, EXACT))


@pytest.mark.unit
def test_jacobi_rejects_clashing_indices():
    with pytest.raises(IndexClashError):
        jacobi_residual([[1, 2], [3, 4]], 1, 1, 1, 2, EXACT)


@pytest.mark.unit
def test_corner_minors_give_the_quantum_determinant(rng):
    T1 = random_function(rng, 2, real=True)
    phi = random_function(rng, 1)
    ring = SpectralRing(EXACT)
    for k in (1, 2, 3):
        M = tk_matrix(T1, phi, k + 1)
        corners = minor(M, (1,), (k + 1,), ring) * minor(M, (k + 1,), (1,), ring)
        assert corners == quantum_determinant(phi, k)
        assert minor(M, (1, k + 1), (1, k + 1), ring) == det_solution(T1, phi, k - 1)
        assert minor(M, (1,), (1,), ring) == det_solution(T1, phi, k).shift(-1)
        assert jacobi_residual(M, 1, k + 1, 1, k + 1, ring).is_zero()


@pytest.mark.unit
def test_bracket_is_antisymmetric(rng):
    X = BracketMatrix(tuple(map(tuple, random_matrix(rng, 4, 3))), EXACT)
    assert EXACT.is_zero(bracket(X, [0, 1, 1]))
    assert bracket(X, [0, 1, 2]) == -bracket(X, [1, 0, 2])


@pytest.mark.unit
def test_unit_rows_give_unit_brackets(rng):
    X = UnitRowSpec(((2, 0), (3, 1))).apply(random_matrix(rng, 2, 2), EXACT)
    assert EXACT.equal(bracket(X, [2, 3]), 1)
    assert EXACT.equal(bracket(X, [3, 2]), -1)


@pytest.mark.unit
def test_unit_row_spec_validation(rng):
    with pytest.raises(IndexClashError):
        UnitRowSpec(((2, 0), (2, 1)))
    with pytest.raises(IndexClashError):
        UnitRowSpec(((2, 5),)).apply(random_matrix(rng, 2, 2), EXACT)


@pytest.mark.unit
def test_bracket_matrix_needs_n_at_least_r():
    with pytest.raises(ValueError):
        BracketMatrix(((1, 2, 3),), EXACT)


@pytest.mark.unit
@pytest.mark.parametrize("n, r", [(2, 1), (3, 2), (4, 2), (5, 3)])
def test_plucker_vanishes_on_random_matrices(rng, n, r):
    for _ in range(10):
        X = BracketMatrix(tuple(map(tuple, random_matrix(rng, n + 1, r + 1))), EXACT)
        i = rng.sample(range(n + 1), r + 1)
        j = rng.sample(range(n + 1), r + 1)
        assert EXACT.is_zero(plucker_residual(X, i, j))
        assert EXACT.is_zero(plucker_residual(X, i, i))


@pytest.mark.unit
def test_plucker_terms_sum_to_residual(rng):
    X = BracketMatrix(tuple(map(tuple, random_matrix(rng, 3, 2))), EXACT)
    terms = plucker_terms(X, [0, 1], [1, 2])
    assert len(terms) == 3
    assert EXACT.is_zero(sum(terms[1:], terms[0]))


@pytest.mark.unit
def test_hirota_plucker_matrix_shape(rng):
    T1 = random_function(rng, 1, real=True)
    phi = random_function(rng, 1)
    X = build_hirota_plucker_matrix(T1, phi, 1, 0)
    assert (X.n, X.r) == (3, 1)
    one, zero = SpectralFunction.constant(1), SpectralFunction.constant(0)
    assert X.rows[2] == (one, zero)
    assert X.rows[3] == (zero, one)
    assert bracket(X, [0, 1]) == det_solution(T1, phi, 2)
    assert hirota_plucker_indices(1, 0) == ([2, 3], [0, 1])


@pytest.mark.unit
def test_hirota_plucker_matrix_rejects_bad_a(rng):
    T1 = random_function(rng, 1, real=True)
    phi = random_function(rng, 1)
    with pytest.raises(ValueError):
        build_hirota_plucker_matrix(T1, phi, 2, 2)


@pytest.mark.unit
@pytest.mark.parametrize("k, a", [(1, 0), (2, 0), (2, 1), (3, 1)])
def test_plucker_construction_gives_hirota_like(rng, k, a):
    T1 = random_function(rng, 1, real=True)
    phi = random_function(rng, 1)
    witness = verify_hirota_like_via_plucker(T1, phi, k, a)
    assert witness.residual.is_zero()
    assert witness.surviving == 3
    assert witness.matches
    assert witness.factor != 0


@pytest.mark.slow
@pytest.mark.parametrize("a", [0, 1, 2, 3])
def test_plucker_construction_at_k4(rng, a):
    T1 = random_function(rng, 1, real=True)
    phi = random_function(rng, 1)
    witness = verify_hirota_like_via_plucker(T1, phi, 4, a)
    assert witness.residual.is_zero()
    assert witness.surviving == 3
    assert witness.matches
