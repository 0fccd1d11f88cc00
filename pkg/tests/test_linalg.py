import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from elaa_detect.errors import DimensionError, NotPositiveDefinite, ShapeError, SingularTriangular
from elaa_detect.linalg import (FlopCounter, back_substitute, forward_substitute, fro_norm,
                                hermitian_cholesky, inner, invert_hermitian, matvec,
                                solve_hermitian, vec_norm)

from conftest import random_cvec, random_pd


def loop_matvec(A, x):
    rows, cols = A.shape
    y = [0j] * rows
    for i in range(rows):
        for k in range(cols):
            y[i] += complex(A[i, k]) * complex(x[k])
    return np.array(y)


def test_matvec_identity_and_permutation():
    x = np.array([1 + 2j, 0, -1j])
    np.testing.assert_array_equal(matvec(np.eye(3), x), x)
    a, b = 3 - 1j, 0.5j
    np.testing.assert_array_equal(matvec(np.array([[0, 1], [1, 0]]), np.array([a, b])),
                                  [b, a])


def test_matvec_matches_scalar_loop(rng):
    A = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    x = random_cvec(4, rng)
    np.testing.assert_allclose(matvec(A, x), loop_matvec(A, x), rtol=1e-14, atol=1e-14)


def test_matvec_dimension_mismatch():
    with pytest.raises(DimensionError):
        matvec(np.eye(3), np.ones(2))


@pytest.mark.parametrize("n", [1, 4, 8, 32])
def test_counter_charges(n, rng):
    c = FlopCounter()
    matvec(np.eye(n), random_cvec(n, rng), c)
    assert c.macs == n * n
    inner(random_cvec(n, rng), random_cvec(n, rng), c)
    assert c.macs == n * n + n
    forward_substitute(np.eye(n), np.ones(n), c)
    assert c.macs == n * n + n + n * (n + 1) // 2


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 12), st.integers(0, 2**32 - 1))
def test_matvec_distributive(n, seed):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    x, y = random_cvec(n, rng), random_cvec(n, rng)
    lhs = matvec(A, x + y)
    rhs = matvec(A, x) + matvec(A, y)
    assert vec_norm(lhs - rhs) <= 1e-12 * max(vec_norm(lhs), 1.0)


def test_inner_basics(rng):
    e1 = np.array([1, 0, 0], dtype=complex)
    assert inner(e1, e1) == 1
    x, y = random_cvec(5, rng), random_cvec(5, rng)
    assert inner(x, y) == pytest.approx(np.conj(inner(y, x)), abs=1e-14)
    assert inner(x, y) == pytest.approx(sum(np.conj(a) * b for a, b in zip(x, y)), abs=1e-12)
    with pytest.raises(DimensionError):
        inner(x, y[:3])


def test_norms_against_loop(rng):
    x = random_cvec(7, rng)
    assert vec_norm(x) == pytest.approx(np.sqrt(sum(abs(v) ** 2 for v in x)), rel=1e-14)
    A = rng.standard_normal((3, 4)) + 1j * rng.standard_normal((3, 4))
    assert fro_norm(A) == pytest.approx(np.sqrt(sum(abs(v) ** 2 for v in A.ravel())), rel=1e-14)


def test_cholesky_trivial_cases():
    np.testing.assert_array_equal(hermitian_cholesky(np.eye(3)), np.eye(3))
    np.testing.assert_allclose(hermitian_cholesky(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]))


def test_cholesky_gram_reconstruction(rng):
    H = rng.standard_normal((6, 3)) + 1j * rng.standard_normal((6, 3))
    A = H.conj().T @ H
    L = hermitian_cholesky(A)
    assert np.allclose(L, np.tril(L))
    assert np.all(np.diagonal(L).real > 0) and np.allclose(np.diagonal(L).imag, 0)
    assert fro_norm(L @ L.conj().T - A) <= 1e-12 * fro_norm(A)


@pytest.mark.parametrize("cond", [1e2, 1e4, 1e6, 1e8])
def test_cholesky_ill_conditioned(cond, rng):
    A = random_pd(16, rng, cond=cond)
    L = hermitian_cholesky(A)
    assert fro_norm(L @ L.conj().T - A) <= 1e-10 * fro_norm(A)


def test_cholesky_errors():
    with pytest.raises(ShapeError):
        hermitian_cholesky(np.array([[1.0, 2.0], [0.0, 1.0]]))
    with pytest.raises(ShapeError):
        hermitian_cholesky(np.ones((2, 3)))
    with pytest.raises(NotPositiveDefinite):
        hermitian_cholesky(np.diag([1.0, -1.0]))


def test_solve_hermitian_trivial():
    b = np.array([1 - 1j, 2, 3j])
    np.testing.assert_allclose(solve_hermitian(np.eye(3), b), b)
    np.testing.assert_allclose(solve_hermitian(2 * np.eye(2), np.array([2, 4])), [1, 2])


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 16), st.floats(1.0, 1e4), st.integers(0, 2**32 - 1))
def test_solve_hermitian_residual(n, cond, seed):
    rng = np.random.default_rng(seed)
    A = random_pd(n, rng, cond=cond)
    b = random_cvec(n, rng)
    x = solve_hermitian(A, b)
    assert vec_norm(A @ x - b) <= 1e-10 * vec_norm(b)


def test_solve_propagates_not_pd():
    with pytest.raises(NotPositiveDefinite):
        solve_hermitian(np.diag([1.0, 0.0]), np.ones(2))


def test_invert_hermitian(rng):
    np.testing.assert_array_equal(invert_hermitian(np.eye(4)), np.eye(4))
    np.testing.assert_allclose(invert_hermitian(np.diag([2.0, 4.0, 0.5])),
                               np.diag([0.5, 0.25, 2.0]), rtol=1e-15)
    A = random_pd(8, rng, cond=50)
    assert fro_norm(A @ invert_hermitian(A) - np.eye(8)) <= 1e-9 * 8


def test_triangular_solves(rng):
    b = random_cvec(3, rng)
    np.testing.assert_array_equal(forward_substitute(np.eye(3), b), b)
    np.testing.assert_allclose(forward_substitute(np.array([[1, 0], [1, 1]]), np.array([1, 3])),
                               [1, 2])
    L = np.tril(rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))) + 4 * np.eye(8)
    b = random_cvec(8, rng)
    np.testing.assert_allclose(forward_substitute(L, b), np.linalg.inv(L) @ b, rtol=1e-12)
    U = L.conj().T
    np.testing.assert_allclose(back_substitute(U, b), np.linalg.inv(U) @ b, rtol=1e-12)


def test_triangular_zero_diagonal():
    with pytest.raises(SingularTriangular):
        forward_substitute(np.array([[1.0, 0.0], [2.0, 0.0]]), np.ones(2))
    with pytest.raises(SingularTriangular):
        back_substitute(np.array([[0.0, 1.0], [0.0, 1.0]]), np.ones(2))
