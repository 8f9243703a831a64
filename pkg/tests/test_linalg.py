import numpy as np
import pytest

from oracles import covariance_brute, top_eigenvalues
from wctransfer.errors import DegenerateInputError, InvalidArgumentError
from wctransfer.linalg import (
    as_sym_matrix,
    coloring_matrix,
    covariance,
    sym_eig,
    whitening_matrix,
)
from wctransfer.tensors import feature_matrix


def random_fm(c, n, seed):
    rng = np.random.default_rng(seed)
    return feature_matrix(rng.standard_normal((c, n)).astype(np.float32))


def random_sym(n, seed):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n, n))
    return (a + a.T) / 2.0


def test_covariance_hand_example():
    f = feature_matrix(np.array([[1.0, -1.0], [1.0, -1.0]], dtype=np.float32))
    assert covariance(f).tolist() == [[2.0, 2.0], [2.0, 2.0]]


def test_covariance_matches_brute_force():
    f = random_fm(6, 40, seed=17)
    assert np.allclose(covariance(f), covariance_brute(f.values), atol=1e-10)


def test_covariance_matches_numpy():
    f = random_fm(16, 200, seed=4)
    assert np.allclose(covariance(f), np.cov(f.values.astype(np.float64)), atol=1e-12)


def test_covariance_constant_rows_is_zero():
    f = feature_matrix(np.full((3, 10), 2.5, dtype=np.float32))
    assert np.all(covariance(f) == 0.0)


def test_covariance_needs_two_samples():
    f = feature_matrix(np.ones((3, 1), dtype=np.float32))
    with pytest.raises(InvalidArgumentError):
        covariance(f)


def test_as_sym_matrix_symmetrizes():
    a = np.array([[1.0, 2.0], [0.0, 3.0]])
    s = as_sym_matrix(a)
    assert np.array_equal(s, s.T)
    assert s[0, 1] == 1.0


def test_as_sym_matrix_rejects_bad_input():
    with pytest.raises(InvalidArgumentError):
        as_sym_matrix(np.ones((2, 3)))
    with pytest.raises(InvalidArgumentError):
        as_sym_matrix(np.array([[np.inf, 0.0], [0.0, 1.0]]))


def test_sym_eig_identity():
    d = sym_eig(np.eye(3))
    assert np.allclose(d.eigenvalues, [1.0, 1.0, 1.0], atol=1e-12)
    assert np.allclose(d.eigenvectors.T @ d.eigenvectors, np.eye(3), atol=1e-12)


def test_sym_eig_diagonal():
    d = sym_eig(np.diag([4.0, 1.0]))
    assert np.allclose(d.eigenvalues, [4.0, 1.0], atol=1e-12)
    # sign convention makes an already-diagonal system come out as exactly I
    assert np.allclose(d.eigenvectors, np.eye(2), atol=1e-12)


def test_sym_eig_one_by_one():
    d = sym_eig(np.array([[4.0]]))
    assert d.eigenvalues.tolist() == [4.0]
    assert d.eigenvectors.tolist() == [[1.0]]


def test_sym_eig_reconstruction_and_orthonormality():
    s = random_sym(64, seed=21)
    d = sym_eig(s)
    recon = d.eigenvectors @ np.diag(d.eigenvalues) @ d.eigenvectors.T
    assert np.linalg.norm(recon - s) / np.linalg.norm(s) < 1e-8
    gram = d.eigenvectors.T @ d.eigenvectors
    assert np.linalg.norm(gram - np.eye(64)) < 1e-10


def test_sym_eig_against_power_iteration():
    s = random_sym(64, seed=33)
    d = sym_eig(s)
    top = top_eigenvalues(s, 5, seed=1)
    assert np.allclose(d.eigenvalues[:5], top, atol=1e-6)


def test_sym_eig_against_lapack():
    s = random_sym(96, seed=8)
    d = sym_eig(s)
    assert np.allclose(d.eigenvalues, np.linalg.eigvalsh(s)[::-1], atol=1e-10)


def test_sym_eig_eigenvalues_descending():
    d = sym_eig(random_sym(40, seed=2))
    assert np.all(np.diff(d.eigenvalues) <= 0)


def test_sym_eig_deterministic():
    s = random_sym(50, seed=12)
    a = sym_eig(s.copy())
    b = sym_eig(s.copy())
    assert np.array_equal(a.eigenvalues, b.eigenvalues)
    assert np.array_equal(a.eigenvectors, b.eigenvectors)


def test_sym_eig_sign_convention():
    d = sym_eig(random_sym(30, seed=14))
    peaks = np.abs(d.eigenvectors).argmax(axis=0)
    assert np.all(d.eigenvectors[peaks, np.arange(30)] > 0)


def test_sym_eig_does_not_mutate_input():
    s = random_sym(20, seed=3)
    keep = s.copy()
    sym_eig(s)
    assert np.array_equal(s, keep)


def test_effective_rank_counts_truncation():
    f = feature_matrix(np.array([[1.0, -1.0], [2.0, -2.0]], dtype=np.float32))
    d = sym_eig(covariance(f), eps=1e-5)
    assert d.effective_rank == 1
    assert d.eigenvalues[0] == pytest.approx(10.0, abs=1e-10)


def test_whitening_matrix_identity_and_diagonal():
    assert np.allclose(whitening_matrix(sym_eig(np.eye(4)), 1e-5), np.eye(4), atol=1e-12)
    w = whitening_matrix(sym_eig(np.array([[4.0]])), 1e-5)
    assert np.allclose(w, [[0.5]], atol=1e-14)


def test_coloring_matrix_identity_and_diagonal():
    assert np.allclose(coloring_matrix(sym_eig(np.eye(4)), 1e-5), np.eye(4), atol=1e-12)
    k = coloring_matrix(sym_eig(np.array([[4.0]])), 1e-5)
    assert np.allclose(k, [[2.0]], atol=1e-14)


def test_coloring_reconstructs_covariance():
    rng = np.random.default_rng(6)
    a = rng.standard_normal((32, 32))
    cov = a @ a.T
    d = sym_eig(cov, eps=1e-5)
    k = coloring_matrix(d, 1e-5)
    assert np.linalg.norm(k @ k.T - cov) < 1e-8


def test_whitening_on_rank_deficient_projects():
    # rank-16 PSD 32x32: W C W^T should equal the projector onto range(C)
    rng = np.random.default_rng(7)
    a = rng.standard_normal((32, 16))
    cov = a @ a.T
    d = sym_eig(cov, eps=1e-5)
    w = whitening_matrix(d, 1e-5)
    e = d.eigenvectors[:, : d.effective_rank]
    assert d.effective_rank == 16
    assert np.linalg.norm(w @ cov @ w.T - e @ e.T) < 1e-6


def test_coloring_times_whitening_is_projector():
    rng = np.random.default_rng(15)
    a = rng.standard_normal((24, 10))
    d = sym_eig(a @ a.T, eps=1e-5)
    w = whitening_matrix(d, 1e-5)
    k = coloring_matrix(d, 1e-5)
    e = d.eigenvectors[:, : d.effective_rank]
    assert np.linalg.norm(k @ w - e @ e.T) < 1e-6


def test_rank_zero_is_degenerate():
    d = sym_eig(np.zeros((3, 3)), eps=1e-5)
    assert d.effective_rank == 0
    with pytest.raises(DegenerateInputError):
        whitening_matrix(d, 1e-5)
    with pytest.raises(DegenerateInputError):
        coloring_matrix(d, 1e-5)
