"""Covariance, symmetric eigendecomposition, and whitening/coloring factors.

All spectral work happens in float64. The eigensolver is a cyclic Jacobi
iteration in the odd-even (rotate-and-swap) ordering: each round rotates the
~n/2 disjoint adjacent pairs of one parity and swaps them, so a sweep of n
rounds visits every unordered pair exactly once while all data movement stays
strided slice arithmetic. Because the pairs within a round are disjoint, the
batched numpy update is bit-for-bit the sequential result for that round.
Deterministic by construction: no randomness, fixed schedule, stable sorts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError, InvalidArgumentError, NumericalError
from .tensors import FeatureMatrix

__all__ = [
    "JACOBI_MAX_SWEEPS",
    "JACOBI_REL_TOL",
    "SpectralDecomposition",
    "as_sym_matrix",
    "covariance",
    "sym_eig",
    "whitening_matrix",
    "coloring_matrix",
]

JACOBI_MAX_SWEEPS = 64
JACOBI_REL_TOL = 1e-11


def as_sym_matrix(a) -> np.ndarray:
    """Coerce to float64 square and symmetrize exactly: (A + A^T) / 2."""
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise InvalidArgumentError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidArgumentError("matrix contains non-finite values")
    return (a + a.T) / 2.0


def covariance(f: FeatureMatrix) -> np.ndarray:
    """Centered covariance (C, C) of a feature matrix, normalized by N - 1."""
    if f.samples < 2:
        raise InvalidArgumentError(
            f"covariance needs at least 2 samples, got {f.samples}"
        )
    x = f.values.astype(np.float64)
    x -= x.mean(axis=1, keepdims=True)
    s = (x @ x.T) / (f.samples - 1)
    return (s + s.T) / 2.0


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenvalues (descending) and matching orthonormal eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    effective_rank: int

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]


def _offdiag_norm(a: np.ndarray) -> float:
    # summed directly over off-diagonal entries: subtracting the diagonal's
    # norm from the total cancels catastrophically once nearly converged
    b = a.copy()
    np.fill_diagonal(b, 0.0)
    return float(np.linalg.norm(b))


def _parity_step(a: np.ndarray, vt: np.ndarray, parity: int) -> None:
    """One odd-even round: rotate-and-swap every adjacent pair (k, k+1), k = parity mod 2.

    All pairs in a round are disjoint, so the batched update equals applying
    the rotations one by one. Each rotation zeroes A[k, k+1], and the
    unconditional swap walks indices through the tournament so that n
    consecutive rounds visit every unordered pair exactly once. Pairs with
    A[k, k+1] already zero degenerate to the bare swap. Everything is strided
    slice arithmetic — no index gathers. ``vt`` accumulates V^T by the same
    row operations.
    """
    n = a.shape[0]
    m = (n - parity) // 2
    if m < 1:
        return
    ks = np.arange(parity, parity + 2 * m, 2)
    app = a[ks, ks]
    aqq = a[ks + 1, ks + 1]
    apq = a[ks, ks + 1]
    safe = np.where(apq == 0.0, 1.0, apq)
    with np.errstate(over="ignore"):
        # tau overflows to inf for denormal apq; t correctly underflows to 0
        tau = (aqq - app) / (2.0 * safe)
        t = np.where(tau == 0.0, 1.0, np.sign(tau) / (np.abs(tau) + np.hypot(1.0, tau)))
    t = np.where(apq == 0.0, 0.0, t)
    c = 1.0 / np.sqrt(1.0 + t * t)
    s = t * c

    rows_p = slice(parity, parity + 2 * m, 2)
    rows_q = slice(parity + 1, parity + 2 * m + 1, 2)
    crow, srow = c[:, None], s[:, None]
    # row k receives the rotated row k+1 and vice versa (rotation fused with swap)
    tmp = a[rows_p].copy()
    a[rows_p] = srow * tmp + crow * a[rows_q]
    a[rows_q] = crow * tmp - srow * a[rows_q]
    tmp = a[:, rows_p].copy()
    a[:, rows_p] = s * tmp + c * a[:, rows_q]
    a[:, rows_q] = c * tmp - s * a[:, rows_q]
    tmp = vt[rows_p].copy()
    vt[rows_p] = srow * tmp + crow * vt[rows_q]
    vt[rows_q] = crow * tmp - srow * vt[rows_q]


def sym_eig(s, eps: float = 0.0) -> SpectralDecomposition:
    """Full eigendecomposition of a symmetric matrix via cyclic Jacobi.

    Converged when the off-diagonal Frobenius norm drops below
    JACOBI_REL_TOL * ||S||_F; raises NumericalError if JACOBI_MAX_SWEEPS
    sweeps do not get there. Eigenvalues come back descending (stable order
    for ties); each eigenvector's largest-magnitude component is positive.
    ``effective_rank`` counts eigenvalues strictly above ``eps``.
    """
    a = as_sym_matrix(s)
    n = a.shape[0]
    vt = np.eye(n)
    tol = JACOBI_REL_TOL * float(np.linalg.norm(a))
    if n > 1:
        off = _offdiag_norm(a)
        sweeps = 0
        while off > tol:
            if sweeps >= JACOBI_MAX_SWEEPS:
                raise NumericalError(
                    f"Jacobi eigensolver did not converge in {JACOBI_MAX_SWEEPS} "
                    f"sweeps (off-diagonal residual {off:.3e}, tolerance {tol:.3e})",
                    residual=off,
                )
            for step in range(n):
                _parity_step(a, vt, step % 2)
            # scrub float-level asymmetry so late rotations keep biting
            a = (a + a.T) / 2.0
            sweeps += 1
            off = _offdiag_norm(a)

    evals = np.diag(a).copy()
    order = np.argsort(-evals, kind="stable")
    evals = evals[order]
    vt = vt[order]

    pick = np.argmax(np.abs(vt), axis=1)
    flip = vt[np.arange(n), pick] < 0.0
    vt[flip] *= -1.0

    rank = int(np.count_nonzero(evals > eps))
    return SpectralDecomposition(evals, np.ascontiguousarray(vt.T), rank)


def _spectral_factor(d: SpectralDecomposition, eps: float, power: float) -> np.ndarray:
    """E_k diag(lambda_k^power) E_k^T over eigenvalues strictly above eps."""
    k = int(np.count_nonzero(d.eigenvalues > eps))
    if k == 0:
        raise DegenerateInputError(
            f"no eigenvalue exceeds eps={eps}: the statistics are degenerate "
            "(constant or empty signal)"
        )
    ek = d.eigenvectors[:, :k]
    scaled = ek * (d.eigenvalues[:k] ** power)
    out = scaled @ ek.T
    return (out + out.T) / 2.0


def whitening_matrix(d: SpectralDecomposition, eps: float) -> np.ndarray:
    """E_k diag(lambda^-1/2) E_k^T: maps the decomposed covariance to identity
    on its retained rank-k subspace. Small eigenvalues are dropped, never clamped."""
    return _spectral_factor(d, eps, -0.5)


def coloring_matrix(d: SpectralDecomposition, eps: float) -> np.ndarray:
    """E_k diag(lambda^+1/2) E_k^T: imposes the decomposed covariance on white input."""
    return _spectral_factor(d, eps, 0.5)
