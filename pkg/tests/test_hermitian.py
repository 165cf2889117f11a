from math import comb

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hessiasol.errors import DomainError
from hessiasol.hermitian import (
    char_coefficients,
    compound_minors,
    eigenvalues,
    eigvalsh_stack,
    hermitian,
    in_calB,
    is_psd,
    jacobi_eigh,
    matrix_lemma_fuzz,
    matrix_lemma_gap,
    mixed_discriminant,
    normalize_to_calB,
    principal_minor_sum,
    s_k_general,
    s_k_matrix,
    wedge_ratio,
)
from hessiasol.symfun import s_norm


def random_hermitian(rng, n, scale=1.0):
    X = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return scale * (X + X.conj().T) / 2


def random_unitary(rng, n):
    Q, R = np.linalg.qr(rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
    return Q * (np.diag(R) / np.abs(np.diag(R)))


def test_eigenvalues_examples():
    assert np.allclose(eigenvalues(np.diag([3.0, 1.0, 2.0])).entries, [3, 2, 1])
    assert np.allclose(eigenvalues([[0, 1], [1, 0]]).entries, [1, -1])


def test_hermitian_rejects_nonhermitian():
    with pytest.raises(DomainError):
        hermitian([[1, 2], [0, 1]])
    with pytest.raises(DomainError):
        hermitian(np.ones((2, 3)))


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2**31))
def test_jacobi_matches_lapack_and_similarity(n, seed):
    rng = np.random.default_rng(seed)
    A = random_hermitian(rng, n)
    U = random_unitary(rng, n)
    ref = np.linalg.eigvalsh(A)[::-1]
    assert np.allclose(jacobi_eigh(A), ref, atol=1e-10)
    assert np.allclose(eigenvalues(U @ A @ U.conj().T).entries, ref, atol=1e-10)


def test_jacobi_vectors_diagonalize():
    rng = np.random.default_rng(3)
    A = random_hermitian(rng, 4)
    w, V = jacobi_eigh(A, vectors=True)
    assert np.allclose(V.conj().T @ A @ V, np.diag(w), atol=1e-10)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_eigvalsh_stack(n):
    rng = np.random.default_rng(n)
    H = np.stack([random_hermitian(rng, n) for _ in range(20)])
    assert np.allclose(eigvalsh_stack(H), np.linalg.eigvalsh(H)[:, ::-1], atol=1e-10)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_s_k_matrix(n):
    rng = np.random.default_rng(10 + n)
    A = random_hermitian(rng, n)
    for k in range(1, n + 1):
        assert s_k_matrix(k, np.eye(n)) == pytest.approx(1.0)
        assert s_k_matrix(k, A) == pytest.approx(s_norm(k, np.linalg.eigvalsh(A)), abs=1e-10)
    assert s_k_matrix(n, A) == pytest.approx(np.linalg.det(A).real, abs=1e-10)


def test_char_coefficients_match_minor_enumeration():
    rng = np.random.default_rng(5)
    M = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    c = char_coefficients(M)
    for k in range(1, 5):
        assert c[k] / comb(4, k) == pytest.approx(principal_minor_sum(k, M), rel=1e-10)
        assert s_k_general(k, M) == pytest.approx(principal_minor_sum(k, M), rel=1e-10)


def test_compound_minors_cauchy_binet():
    rng = np.random.default_rng(6)
    A = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    B = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    for k in (1, 2, 3):
        lhs = compound_minors(k, A @ B)
        assert np.allclose(lhs, compound_minors(k, A) @ compound_minors(k, B))


def test_matrix_lemma_equality_cases():
    assert matrix_lemma_gap(2, np.eye(3), np.eye(3)) == pytest.approx(0.0, abs=1e-14)
    rng = np.random.default_rng(8)
    A = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    for k in range(1, 5):
        scale = principal_minor_sum(k, A @ A.conj().T).real ** 2
        assert abs(matrix_lemma_gap(k, A, A)) <= 1e-10 * scale


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 4), st.integers(0, 2**31))
def test_matrix_lemma_gap_nonnegative(n, seed):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    B = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    for k in range(1, n + 1):
        saa = principal_minor_sum(k, A @ A.conj().T).real
        sbb = principal_minor_sum(k, B @ B.conj().T).real
        assert matrix_lemma_gap(k, A, B) >= -1e-10 * saa * sbb


def test_matrix_lemma_fuzz_small():
    rep = matrix_lemma_fuzz(3, samples=500, seed=1)
    assert rep["min_gap"] >= -1e-10
    assert rep["gram_max_rel_diff"] <= 1e-9


def test_mixed_discriminant():
    rng = np.random.default_rng(9)
    A = random_hermitian(rng, 3)
    I = np.eye(3)
    assert mixed_discriminant(I, I, I) == pytest.approx(1.0)
    assert mixed_discriminant(A, I, I) == pytest.approx(s_k_matrix(1, A), abs=1e-10)
    assert mixed_discriminant(A, A, I) == pytest.approx(s_k_matrix(2, A), abs=1e-10)
    assert mixed_discriminant(A, A, A) == pytest.approx(np.linalg.det(A).real, abs=1e-10)
    with pytest.raises(DomainError):
        mixed_discriminant(A, I)


@pytest.mark.parametrize("n, k", [(2, 1), (3, 1), (3, 2), (4, 2)])
def test_explicit_calB_member(n, k):
    B = comb(n, k) ** (1 / (n - k)) * np.diag([0.0] * k + [1.0] * (n - k))
    assert wedge_ratio(np.eye(n), k, B, n - k) == pytest.approx(1.0)
    assert in_calB(B, np.eye(n), n - k, tol=1e-9)


def test_in_calB_examples():
    n = 3
    assert in_calB(np.eye(n), np.eye(n), 2, tol=1e-12)
    assert not in_calB(2 * np.eye(n), np.eye(n), n, tol=1e-9)
    with pytest.raises(DomainError):
        in_calB(-np.eye(n), np.eye(n), 1, tol=1e-9)
    with pytest.raises(DomainError):
        wedge_ratio(np.eye(n), 1, np.eye(n), 1)


def test_normalize_to_calB():
    rng = np.random.default_rng(11)
    X = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    P = X @ X.conj().T
    B = normalize_to_calB(P, np.eye(3), 2)
    assert is_psd(B)
    assert in_calB(B, np.eye(3), 2, tol=1e-10)
