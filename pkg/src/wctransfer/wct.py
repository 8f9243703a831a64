"""Whitening and coloring of feature matrices, plus the blended variants.

The core recipe: whiten content features to unit covariance on their retained
eigen-subspace, recolor with the style's eigenstructure, re-center on the style
mean, then blend with the original content features. Matching first and second
moments of deep features this way is the whole trick — no iterative optimization.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .base import ParamsMixin, TransformMixin
from .errors import DegenerateInputError, InvalidArgumentError, NotFittedError
from .linalg import (
    SpectralDecomposition,
    coloring_matrix,
    covariance,
    sym_eig,
    whitening_matrix,
)
from .tensors import FeatureMatrix, feature_matrix
from .validation import check_unit_interval

__all__ = [
    "DEFAULT_EPS",
    "StyleStats",
    "whiten",
    "compute_style_stats",
    "color",
    "blend",
    "wct",
    "histogram_match",
    "masked_wct",
    "interpolate_coloring",
    "WctTransform",
]

DEFAULT_EPS = 1e-5


@dataclass(frozen=True)
class StyleStats:
    """Fitted second-order statistics of a style feature matrix."""

    mean: np.ndarray  # (C,) float64
    decomposition: SpectralDecomposition
    eps: float

    @property
    def channels(self) -> int:
        return self.mean.shape[0]


def _centered64(f: FeatureMatrix) -> tuple[np.ndarray, np.ndarray]:
    x = f.values.astype(np.float64)
    mean = x.mean(axis=1)
    return x - mean[:, None], mean


def whiten(fc: FeatureMatrix, eps: float = DEFAULT_EPS) -> FeatureMatrix:
    """Decorrelate content features: unit covariance on the retained subspace.

    Eigenvalues at or below ``eps`` are truncated (their directions are
    projected out); a rank-0 result raises DegenerateInputError.
    """
    _check_eps(eps)
    x, _ = _centered64(fc)
    d = sym_eig(covariance(fc), eps)
    w = whitening_matrix(d, eps)
    return feature_matrix(w @ x)


def compute_style_stats(fs: FeatureMatrix, eps: float = DEFAULT_EPS) -> StyleStats:
    """Mean + eigendecomposition of the style covariance, ready for coloring."""
    _check_eps(eps)
    x = fs.values.astype(np.float64)
    mean = x.mean(axis=1)
    d = sym_eig(covariance(fs), eps)
    if d.effective_rank == 0:
        raise DegenerateInputError(
            "style features are degenerate: covariance has no eigenvalue above "
            f"eps={eps} (constant style input?)"
        )
    return StyleStats(mean=mean, decomposition=d, eps=float(eps))


def color(fhat: FeatureMatrix, stats: StyleStats) -> FeatureMatrix:
    """Impose style covariance on whitened features and re-center on the style mean."""
    if fhat.channels != stats.channels:
        raise InvalidArgumentError(
            f"channel mismatch: features have {fhat.channels}, "
            f"style stats have {stats.channels}"
        )
    k = coloring_matrix(stats.decomposition, stats.eps)
    out = k @ fhat.values.astype(np.float64) + stats.mean[:, None]
    return feature_matrix(out)


def blend(fcs: FeatureMatrix, fc: FeatureMatrix, alpha: float) -> FeatureMatrix:
    """alpha * fcs + (1 - alpha) * fc. Endpoints return the inputs bit-exactly."""
    alpha = check_unit_interval(alpha, "alpha")
    if fcs.values.shape != fc.values.shape:
        raise InvalidArgumentError(
            f"blend shape mismatch: {fcs.values.shape} vs {fc.values.shape}"
        )
    if alpha == 0.0:
        return fc
    if alpha == 1.0:
        return fcs
    return feature_matrix(alpha * fcs.values + (1.0 - alpha) * fc.values)


def wct(
    fc: FeatureMatrix,
    stats: StyleStats,
    alpha: float = 1.0,
    eps: float = DEFAULT_EPS,
) -> FeatureMatrix:
    """Whiten -> color -> blend, the full single-level transform."""
    fhat = whiten(fc, eps)
    fcs = color(fhat, stats)
    return blend(fcs, fc, alpha)


def histogram_match(fc: FeatureMatrix, fs: FeatureMatrix) -> FeatureMatrix:
    """Per-channel quantile mapping of fc onto fs (a first-moment-only baseline).

    Rank r of N_c maps to quantile position r * (N_s - 1) / (N_c - 1) with
    linear interpolation between style order statistics; ties keep their
    original order (stable sort). Exact empirical-CDF match when N_c == N_s.
    """
    if fc.channels != fs.channels:
        raise InvalidArgumentError(
            f"channel mismatch: {fc.channels} vs {fs.channels}"
        )
    nc, ns = fc.samples, fs.samples
    if nc > 1:
        positions = np.arange(nc, dtype=np.float64) * ((ns - 1) / (nc - 1))
    else:
        positions = np.array([(ns - 1) / 2.0])
    grid = np.arange(ns, dtype=np.float64)
    order = np.argsort(fc.values, axis=1, kind="stable")
    style_sorted = np.sort(fs.values.astype(np.float64), axis=1, kind="stable")
    out = np.empty_like(fc.values)
    for c in range(fc.channels):
        out[c, order[c]] = np.interp(positions, grid, style_sorted[c]).astype(np.float32)
    return feature_matrix(out)


def masked_wct(
    fc: FeatureMatrix,
    regions: list[tuple[np.ndarray, StyleStats]],
    alpha: float = 1.0,
    eps: float = DEFAULT_EPS,
) -> FeatureMatrix:
    """Apply wct() independently per spatial region.

    ``regions`` pairs a boolean column mask with the stats to impose there.
    Masks must be non-empty, mutually disjoint, and cover every column; each
    region is whitened against its own local statistics.
    """
    count = np.zeros(fc.samples, dtype=np.int64)
    for i, (mask, _) in enumerate(regions):
        mask = np.asarray(mask)
        if mask.dtype != np.bool_ or mask.shape != (fc.samples,):
            raise InvalidArgumentError(
                f"region {i}: mask must be a boolean array of length {fc.samples}"
            )
        if not mask.any():
            raise InvalidArgumentError(f"region {i}: mask selects no positions")
        count += mask
    if np.any(count > 1):
        raise InvalidArgumentError("region masks overlap")
    if np.any(count == 0):
        raise InvalidArgumentError("region masks do not cover every position")

    out = np.empty_like(fc.values)
    for mask, stats in regions:
        mask = np.asarray(mask)
        sub = feature_matrix(fc.values[:, mask])
        out[:, mask] = wct(sub, stats, alpha, eps).values
    return feature_matrix(out)


def interpolate_coloring(
    fhat: FeatureMatrix,
    stats_list: list[StyleStats],
    betas: list[float],
) -> FeatureMatrix:
    """Convex combination of colorings of one whitened matrix: sum_i beta_i * color_i.

    Weights must each lie in [0, 1] and sum to 1 within 1e-6. Zero-weight terms
    are skipped outright so endpoint weights reproduce the single-style coloring
    bit-for-bit.
    """
    if len(stats_list) != len(betas) or not stats_list:
        raise InvalidArgumentError(
            "need equally many style stats and weights (and at least one)"
        )
    betas = [check_unit_interval(b, "beta") for b in betas]
    if abs(sum(betas) - 1.0) > 1e-6:
        raise InvalidArgumentError(f"beta weights must sum to 1, got {sum(betas)}")
    acc = None
    for stats, beta in zip(stats_list, betas):
        if beta == 0.0:
            continue
        term = color(fhat, stats).values
        if beta != 1.0:
            term = term * np.float32(beta)
        acc = term if acc is None else acc + term
    return feature_matrix(acc)


def _check_eps(eps: float) -> None:
    if not (eps > 0.0 and np.isfinite(eps)):
        raise InvalidArgumentError(f"eps must be a positive finite value, got {eps}")


class WctTransform(ParamsMixin, TransformMixin):
    """Estimator wrapper: fit() a style feature matrix, transform() content ones.

    >>> t = WctTransform(alpha=0.8).fit(style_features)
    >>> stylized = t.transform(content_features)
    """

    def __init__(self, alpha: float = 1.0, eps: float = DEFAULT_EPS):
        self.alpha = alpha
        self.eps = eps

    def fit(self, fs: FeatureMatrix, y=None) -> "WctTransform":
        check_unit_interval(self.alpha, "alpha")
        self.stats_ = compute_style_stats(fs, self.eps)
        return self

    def transform(self, fc: FeatureMatrix) -> FeatureMatrix:
        if not hasattr(self, "stats_"):
            raise NotFittedError("WctTransform.transform called before fit()")
        return wct(fc, self.stats_, self.alpha, self.eps)
