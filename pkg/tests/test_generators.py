import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from bracketflow.errors import DimensionError, NotDiagonalizableError, SymmetryError
from bracketflow.generators import (
    GeneratorKind,
    GeneratorSpec,
    apply_generator,
    check_assumptions,
    linearized_spectrum,
    matrix_eigenvalue,
    predicted_rate,
    vector_field,
    wegner_predicted_rate,
)
from bracketflow.matrix import basis_skew, basis_sym, frobenius_norm

from conftest import random_symmetric

elements = st.floats(-1.0, 1.0, allow_nan=False, allow_subnormal=False)
sym_matrices = st.integers(2, 7).flatmap(
    lambda d: arrays(np.float64, (d, d), elements=elements).map(lambda x: 0.5 * (x + x.T))
)
DECREASING_A = (5.0, 4.0, 3.0, 2.0, 1.0)
ALPHA = (25.0, 16.0, 9.0, 4.0, 1.0)


def all_specs(d, rng=None):
    a = np.arange(d, 0, -1, dtype=float) if rng is None else rng.normal(size=d)
    return [GeneratorSpec.brockett(a), GeneratorSpec.toda(), GeneratorSpec.wegner()]


# spec ---------------------------------------------------------------------


def test_spec_validation():
    with pytest.raises(ValueError):
        GeneratorSpec(GeneratorKind.BROCKETT)
    with pytest.raises(ValueError):
        GeneratorSpec(GeneratorKind.TODA, (1.0, 2.0))
    with pytest.raises(ValueError):
        GeneratorSpec.brockett([1.0, math.inf])
    assert GeneratorSpec("toda").kind is GeneratorKind.TODA
    assert GeneratorSpec.brockett([3, 2, 2]).a_non_increasing
    assert not GeneratorSpec.brockett([1, 2]).a_non_increasing
    assert GeneratorSpec.toda().a_non_increasing is None


# apply_generator / vector_field ----------------------------------------------


def test_diagonal_input_gives_zero():
    h = np.diag([3.0, -1.0, 2.0])
    for spec in all_specs(3):
        np.testing.assert_array_equal(apply_generator(spec, h), np.zeros((3, 3)))
        np.testing.assert_array_equal(vector_field(spec, h), np.zeros((3, 3)))


def test_two_by_two_examples():
    e01 = basis_sym(0, 1, 2)
    np.testing.assert_allclose(apply_generator(GeneratorSpec.brockett([1, 0]), e01), -basis_skew(0, 1, 2), atol=1e-16)
    np.testing.assert_allclose(apply_generator(GeneratorSpec.toda(), e01), -basis_skew(0, 1, 2), atol=1e-16)
    x = np.array([[0.0, 1.0], [1.0, 0.0]])
    np.testing.assert_array_equal(vector_field(GeneratorSpec.wegner(), x), np.zeros((2, 2)))
    np.testing.assert_allclose(vector_field(GeneratorSpec.brockett([1, 0]), x), [[2.0, 0.0], [0.0, -2.0]], atol=1e-15)


def test_symmetry_is_enforced():
    h = np.array([[1.0, 2.0], [0.0, 1.0]])
    for spec in all_specs(2):
        with pytest.raises(SymmetryError):
            apply_generator(spec, h)
    g = apply_generator(GeneratorSpec.toda(), h, require_symmetric=False)
    np.testing.assert_array_equal(g, np.zeros((2, 2)))
    with pytest.raises(SymmetryError):
        apply_generator(GeneratorSpec.wegner(), h, require_symmetric=False)


def test_brockett_length_mismatch():
    with pytest.raises(DimensionError):
        apply_generator(GeneratorSpec.brockett([1, 0]), np.eye(3))


@given(sym_matrices)
def test_generator_is_skew_and_field_symmetric(h):
    n = frobenius_norm(h)
    for spec in all_specs(h.shape[0]):
        g = apply_generator(spec, h)
        assert frobenius_norm(g + g.T) <= 1e-14 * max(n, 1e-300)
        f = vector_field(spec, h)
        assert frobenius_norm(f - f.T) <= 1e-14 * max(n * n, 1e-300)


@given(sym_matrices, st.data(), st.floats(-3, 3), st.floats(-3, 3))
def test_linear_generators_are_linear(h1, data, a, b):
    x = data.draw(arrays(np.float64, h1.shape, elements=elements))
    h2 = 0.5 * (x + x.T)
    for spec in all_specs(h1.shape[0])[:2]:
        lhs = apply_generator(spec, a * h1 + b * h2)
        rhs = a * apply_generator(spec, h1) + b * apply_generator(spec, h2)
        assert np.max(np.abs(lhs - rhs)) <= 1e-13


def test_wegner_is_not_linear():
    x = np.array([[1.0, 1.0], [1.0, 0.0]])
    g = GeneratorSpec.wegner()
    assert frobenius_norm(apply_generator(g, 2 * x) - 2 * apply_generator(g, x)) > 0.1


# matrix eigenvalue ----------------------------------------------------------


def test_matrix_eigenvalue_examples():
    np.testing.assert_array_equal(
        matrix_eigenvalue(GeneratorSpec.toda(), 3).g, [[0, -1, -1], [1, 0, -1], [1, 1, 0]]
    )
    g = matrix_eigenvalue(GeneratorSpec.brockett([4, 3, 2, 1, 0]), 5).g
    assert g[0, 1] == -1.0 and g[0, 4] == -4.0
    np.testing.assert_array_equal(matrix_eigenvalue(GeneratorSpec.brockett([2, 2, 2]), 3).g, np.zeros((3, 3)))
    with pytest.raises(NotDiagonalizableError):
        matrix_eigenvalue(GeneratorSpec.wegner(), 3)
    with pytest.raises(DimensionError):
        matrix_eigenvalue(GeneratorSpec.brockett([1, 0]), 3)


@pytest.mark.parametrize("d", range(1, 9))
def test_basis_elements_are_eigenvectors(d):
    rng = np.random.default_rng(d)
    for spec in (GeneratorSpec.brockett(rng.normal(size=d)), GeneratorSpec.brockett(np.arange(d, 0, -1)), GeneratorSpec.toda()):
        g = matrix_eigenvalue(spec, d).g
        np.testing.assert_array_equal(g, -g.T)
        for i in range(d):
            for j in range(i + 1, d):
                got = apply_generator(spec, basis_sym(i, j, d))
                assert np.max(np.abs(got - g[i, j] * basis_skew(i, j, d))) <= 1e-14


def test_diagonal_derivative_identities():
    rng = np.random.default_rng(7)
    for _ in range(100):
        d = int(rng.integers(2, 9))
        h = random_symmetric(rng, d)
        for spec in all_specs(d, rng)[:2]:
            g = matrix_eigenvalue(spec, d).g
            expected = -2.0 * np.sum(g * h**2, axis=1)
            assert np.max(np.abs(np.diag(vector_field(spec, h)) - expected)) <= 1e-12
        dh = np.diag(h)
        expected = 2.0 * np.sum((dh[:, None] - dh[None, :]) * h**2, axis=1)
        got = np.diag(vector_field(GeneratorSpec.wegner(), h))
        assert np.max(np.abs(got - expected)) <= 1e-12


# assumptions --------------------------------------------------------------


def test_assumptions_toda():
    chk = check_assumptions(matrix_eigenvalue(GeneratorSpec.toda(), 5))
    assert chk.sign_ok and chk.lower_bound_ok
    assert chk.epsilon == (-1,) * 5
    assert chk.c == (1.0,) * 5
    assert chk.sign_witness is None


def test_assumptions_brockett():
    chk = check_assumptions(matrix_eigenvalue(GeneratorSpec.brockett([9, 5, 4, 0]), 4))
    assert chk.sign_ok and chk.lower_bound_ok
    assert chk.c == (4.0, 1.0, 1.0, 4.0)
    tie = check_assumptions(matrix_eigenvalue(GeneratorSpec.brockett([1, 1, 0]), 3))
    assert not tie.lower_bound_ok
    assert tie.c[0] == 0.0


def test_assumptions_sign_violation():
    chk = check_assumptions(matrix_eigenvalue(GeneratorSpec.brockett([2, 3, 1]), 3))
    assert not chk.sign_ok
    assert chk.sign_witness == (0, 2)
    d = chk.to_dict()
    assert d["sign_witness"] == [0, 2]


# predicted rates ----------------------------------------------------------


def test_predicted_rates():
    brockett = matrix_eigenvalue(GeneratorSpec.brockett(DECREASING_A), 5)
    toda = matrix_eigenvalue(GeneratorSpec.toda(), 5)
    assert predicted_rate(brockett, ALPHA) == 3.0
    assert predicted_rate(matrix_eigenvalue(GeneratorSpec.brockett([4, 3, 2, 1, 0]), 5), ALPHA) == 3.0
    assert predicted_rate(toda, ALPHA) == 3.0
    assert predicted_rate(brockett, (1.0, 25.0, 16.0, 9.0, 4.0)) == 5.0
    assert predicted_rate(toda, ALPHA[::-1]) == math.inf


def test_linearized_tables_match_printed_values():
    brockett = matrix_eigenvalue(GeneratorSpec.brockett(DECREASING_A), 5)
    expected = np.array(
        [
            [0, -9, -32, -63, -96],
            [-9, 0, -7, -24, -45],
            [-32, -7, 0, -5, -16],
            [-63, -24, -5, 0, -3],
            [-96, -45, -16, -3, 0],
        ],
        dtype=float,
    )
    np.testing.assert_array_equal(linearized_spectrum(brockett, ALPHA), expected)
    block = np.array(
        [
            [0, 24, 30, 24, 12],
            [24, 0, -9, -32, -63],
            [30, -9, 0, -7, -24],
            [24, -32, -7, 0, -5],
            [12, -63, -24, -5, 0],
        ],
        dtype=float,
    )
    np.testing.assert_array_equal(linearized_spectrum(brockett, (1, 25, 16, 9, 4)), block)
    toda = matrix_eigenvalue(GeneratorSpec.toda(), 5)
    lam = linearized_spectrum(toda, ALPHA)
    iu = np.triu_indices(5, 1)
    np.testing.assert_array_equal(lam[iu], [-9, -16, -21, -24, -7, -12, -15, -5, -8, -3])


def test_wegner_rates():
    assert wegner_predicted_rate([4, 9, 16, 25, 1]) == 9.0
    assert wegner_predicted_rate([2, 2, 5]) == 0.0
    assert wegner_predicted_rate([1, 2, 4]) == 1.0
    assert wegner_predicted_rate([3]) == math.inf


@given(arrays(np.float64, st.integers(2, 7), elements=st.floats(-10, 10)))
def test_wegner_rate_brute_force(alpha):
    d = alpha.size
    brute = min((alpha[i] - alpha[j]) ** 2 for i in range(d) for j in range(i + 1, d))
    assert wegner_predicted_rate(alpha) == pytest.approx(brute, rel=1e-15, abs=0.0)


def test_wegner_linearization_table():
    alpha = np.array([4.0, 9.0, 16.0, 25.0, 1.0])
    table = -((alpha[:, None] - alpha[None, :]) ** 2)
    expected = np.array(
        [
            [0, -25, -144, -441, -9],
            [-25, 0, -49, -256, -64],
            [-144, -49, 0, -81, -225],
            [-441, -256, -81, 0, -576],
            [-9, -64, -225, -576, 0],
        ],
        dtype=float,
    )
    np.testing.assert_array_equal(table, expected)
    assert np.min(np.abs(table[np.triu_indices(5, 1)])) == wegner_predicted_rate(alpha)


def test_wegner_linearization_by_finite_differences():
    alpha = np.array([4.0, 9.0, 16.0, 25.0, 1.0])
    h_inf = np.diag(alpha)
    eps = 1e-6
    spec = GeneratorSpec.wegner()
    for i in range(5):
        for j in range(i + 1, 5):
            e = basis_sym(i, j, 5)
            df = (vector_field(spec, h_inf + eps * e) - vector_field(spec, h_inf - eps * e)) / (2 * eps)
            np.testing.assert_allclose(df, -((alpha[i] - alpha[j]) ** 2) * e, atol=1e-6)
