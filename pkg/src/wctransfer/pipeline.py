"""End-to-end stylization: multi-level transfer, textures, spatial control, metrics.

The multi-level scheme folds coarse-to-fine: stylize at the deepest level,
decode to pixels, and feed that image as the new content for the next level.
Running the schedule reversed (fine-to-coarse) is supported as an ablation —
coarse-to-fine preserves far more style structure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .base import ParamsMixin, TransformMixin
from .errors import InvalidArgumentError, NotFittedError
from .linalg import covariance
from .network import decode, encode
from .tensors import (
    from_feature_matrix,
    gaussian_noise_image,
    nearest_indices,
    resize_nearest,
    to_feature_matrix,
)
from .validation import check_image, check_unit_interval
from .wct import (
    DEFAULT_EPS,
    StyleStats,
    compute_style_stats,
    interpolate_coloring,
    masked_wct,
    wct,
    whiten,
)
from .weights import WeightStore

__all__ = [
    "StylizationConfig",
    "StyleRegion",
    "reconstruct",
    "stylize_single",
    "stylize_multi",
    "stylize_spatial",
    "synthesize_texture",
    "interpolate_textures",
    "style_distance",
    "whiten_viz",
    "Stylizer",
]

_VALID_LEVELS = (1, 2, 3, 4, 5)


@dataclass(frozen=True)
class StylizationConfig:
    """Knobs for the stylization pipelines.

    ``levels`` is the processing order; the default walks coarse-to-fine.
    With ``blend_per_level`` False, intermediate levels run at full strength
    and only the last scheduled level blends with ``alpha``.
    """

    alpha: float = 0.6
    levels: tuple[int, ...] = (5, 4, 3, 2, 1)
    style_scale: float = 1.0
    eps: float = DEFAULT_EPS
    blend_per_level: bool = True
    seed: int = 0
    passes: int = 3

    def __post_init__(self):
        check_unit_interval(self.alpha, "alpha")
        levels = tuple(int(l) for l in self.levels)
        if not levels or any(l not in _VALID_LEVELS for l in levels):
            raise InvalidArgumentError(
                f"levels must be a non-empty subset of {_VALID_LEVELS}, got {self.levels}"
            )
        if len(set(levels)) != len(levels):
            raise InvalidArgumentError(f"levels must not repeat, got {self.levels}")
        object.__setattr__(self, "levels", levels)
        if not (self.style_scale > 0 and math.isfinite(self.style_scale)):
            raise InvalidArgumentError(f"style_scale must be positive, got {self.style_scale}")
        if not (self.eps > 0 and math.isfinite(self.eps)):
            raise InvalidArgumentError(f"eps must be positive, got {self.eps}")
        if int(self.passes) < 1:
            raise InvalidArgumentError(f"passes must be >= 1, got {self.passes}")
        object.__setattr__(self, "passes", int(self.passes))
        object.__setattr__(self, "seed", int(self.seed))


@dataclass(frozen=True)
class StyleRegion:
    """A spatial region (boolean image-resolution mask) and the style to put there."""

    mask: np.ndarray
    style: np.ndarray


def _check_level(level: int) -> int:
    level = int(level)
    if level not in _VALID_LEVELS:
        raise InvalidArgumentError(f"level must be one of {_VALID_LEVELS}, got {level}")
    return level


def _scaled_style(style: np.ndarray, scale: float) -> np.ndarray:
    style = check_image(style, "style")
    if scale == 1.0:
        return style
    h = max(1, int(round(style.shape[0] * scale)))
    w = max(1, int(round(style.shape[1] * scale)))
    return resize_nearest(style, h, w)


def _alpha_schedule(cfg: StylizationConfig) -> dict[int, float]:
    if cfg.blend_per_level:
        return {level: cfg.alpha for level in cfg.levels}
    return {
        level: (cfg.alpha if i == len(cfg.levels) - 1 else 1.0)
        for i, level in enumerate(cfg.levels)
    }


def _fold(content, levels, per_level, store, level_callback=None):
    """Shared encode -> transform -> decode loop over a level schedule."""
    run = check_image(content, "content")
    for level in levels:
        feat = encode(run, level, store)
        h, w = feat.shape[1], feat.shape[2]
        out = per_level(to_feature_matrix(feat), level)
        run = decode(from_feature_matrix(out, h, w), level, store)
        if level_callback is not None:
            level_callback(level, run)
    return run


def reconstruct(img: np.ndarray, level: int, store: WeightStore) -> np.ndarray:
    """Encode to a level and decode straight back (the autoencoder sanity path)."""
    level = _check_level(level)
    return decode(encode(check_image(img), level, store), level, store)


def stylize_single(
    content: np.ndarray,
    style: np.ndarray,
    level: int,
    cfg: StylizationConfig,
    store: WeightStore,
) -> np.ndarray:
    """One-level stylization: exactly the multi-level pipeline with one entry."""
    level = _check_level(level)
    return stylize_multi(content, style, replace(cfg, levels=(level,)), store)


def stylize_multi(
    content: np.ndarray,
    style: np.ndarray,
    cfg: StylizationConfig,
    store: WeightStore,
    level_callback=None,
) -> np.ndarray:
    """Full coarse-to-fine stylization over cfg.levels."""
    s = Stylizer(
        store,
        alpha=cfg.alpha,
        levels=cfg.levels,
        style_scale=cfg.style_scale,
        eps=cfg.eps,
        blend_per_level=cfg.blend_per_level,
    )
    return s.fit(style).transform(content, level_callback=level_callback)


def stylize_spatial(
    content: np.ndarray,
    regions: list[StyleRegion],
    cfg: StylizationConfig,
    store: WeightStore,
    level_callback=None,
) -> np.ndarray:
    """Stylization with a different style per spatial region.

    Masks are boolean (H, W) arrays at content resolution; they must be
    non-empty, disjoint, and jointly cover the image — and must still select
    at least one position after nearest-neighbor downsampling to each level's
    feature grid.
    """
    content = check_image(content, "content")
    if not regions:
        raise InvalidArgumentError("need at least one style region")
    h, w = content.shape[0], content.shape[1]
    cover = np.zeros((h, w), dtype=np.int64)
    for i, region in enumerate(regions):
        mask = np.asarray(region.mask)
        if mask.dtype != np.bool_ or mask.shape != (h, w):
            raise InvalidArgumentError(
                f"region {i}: mask must be boolean of shape {(h, w)}, "
                f"got {mask.dtype} {mask.shape}"
            )
        cover += mask
    if np.any(cover > 1):
        raise InvalidArgumentError("region masks overlap")
    if np.any(cover == 0):
        raise InvalidArgumentError("region masks do not cover the image")

    alphas = _alpha_schedule(cfg)
    stats = {
        level: [
            compute_style_stats(
                to_feature_matrix(encode(_scaled_style(r.style, cfg.style_scale), level, store)),
                cfg.eps,
            )
            for r in regions
        ]
        for level in cfg.levels
    }

    def per_level(fm, level):
        # level X sits behind X-1 floor-halving pools
        fh, fw = h >> (level - 1), w >> (level - 1)
        rows = nearest_indices(h, fh)
        cols = nearest_indices(w, fw)
        pairs = []
        for i, region in enumerate(regions):
            sub = region.mask[rows[:, None], cols[None, :]].reshape(-1)
            if not sub.any():
                raise InvalidArgumentError(
                    f"region {i} vanishes at level {level}'s feature resolution"
                )
            pairs.append((sub, stats[level][i]))
        return masked_wct(fm, pairs, alphas[level], cfg.eps)

    return _fold(content, cfg.levels, per_level, store, level_callback)


def synthesize_texture(
    style: np.ndarray,
    height: int,
    width: int,
    cfg: StylizationConfig,
    store: WeightStore,
    level_callback=None,
) -> np.ndarray:
    """Grow a texture from seeded noise by repeated full-strength stylization."""
    full = replace(cfg, alpha=1.0)
    img = gaussian_noise_image(height, width, cfg.seed)
    for _ in range(cfg.passes):
        img = stylize_multi(img, style, full, store, level_callback=level_callback)
    return img


def interpolate_textures(
    style_a: np.ndarray,
    style_b: np.ndarray,
    beta: float,
    height: int,
    width: int,
    cfg: StylizationConfig,
    store: WeightStore,
) -> np.ndarray:
    """Texture from noise whose coloring is a convex mix: beta A + (1 - beta) B.

    Each level whitens once and blends the two colorings, so beta = 1 (or 0)
    reproduces single-style synthesis exactly.
    """
    beta = check_unit_interval(beta, "beta")
    a = _scaled_style(style_a, cfg.style_scale)
    b = _scaled_style(style_b, cfg.style_scale)
    stats = {
        level: (
            compute_style_stats(to_feature_matrix(encode(a, level, store)), cfg.eps),
            compute_style_stats(to_feature_matrix(encode(b, level, store)), cfg.eps),
        )
        for level in cfg.levels
    }

    def per_level(fm, level):
        fhat = whiten(fm, cfg.eps)
        sa, sb = stats[level]
        return interpolate_coloring(fhat, [sa, sb], [beta, 1.0 - beta])

    img = gaussian_noise_image(height, width, cfg.seed)
    for _ in range(cfg.passes):
        img = _fold(img, cfg.levels, per_level, store)
    return img


def style_distance(
    result: np.ndarray,
    style: np.ndarray,
    store: WeightStore,
    levels: tuple[int, ...] = (1, 2, 3, 4, 5),
) -> tuple[float, float]:
    """Covariance distance to the style across levels: (L_s, log L_s).

    L_s sums, over the given levels, the Frobenius norm of the difference
    between the result's and the style's feature covariances. Returns the
    natural log as the second element (-inf when L_s is exactly 0).
    """
    result = check_image(result, "result")
    style = check_image(style, "style")
    total = 0.0
    for level in levels:
        cr = covariance(to_feature_matrix(encode(result, _check_level(level), store)))
        cs = covariance(to_feature_matrix(encode(style, level, store)))
        total += float(np.linalg.norm(cr - cs))
    log_total = math.log(total) if total > 0.0 else float("-inf")
    return total, log_total


def whiten_viz(
    img: np.ndarray,
    level: int,
    store: WeightStore,
    eps: float = DEFAULT_EPS,
) -> np.ndarray:
    """Decode whitened features and rescale to the full [0, 1] range.

    Whitening strips second-order statistics; what survives the decode is the
    spatial structure the transform preserves. Purely diagnostic.
    """
    level = _check_level(level)
    feat = encode(check_image(img), level, store)
    h, w = feat.shape[1], feat.shape[2]
    fhat = whiten(to_feature_matrix(feat), eps)
    out = decode(from_feature_matrix(fhat, h, w), level, store)
    lo, hi = float(out.min()), float(out.max())
    if hi <= lo:
        return np.full_like(out, 0.5)
    return (out - lo) / (hi - lo)


class Stylizer(ParamsMixin, TransformMixin):
    """Estimator wrapper over the multi-level pipeline.

    fit() encodes the style once per scheduled level and caches its statistics;
    transform() restylizes any number of content images against them.
    """

    def __init__(
        self,
        store: WeightStore,
        alpha: float = 0.6,
        levels: tuple[int, ...] = (5, 4, 3, 2, 1),
        style_scale: float = 1.0,
        eps: float = DEFAULT_EPS,
        blend_per_level: bool = True,
    ):
        self.store = store
        self.alpha = alpha
        self.levels = levels
        self.style_scale = style_scale
        self.eps = eps
        self.blend_per_level = blend_per_level

    def _config(self) -> StylizationConfig:
        return StylizationConfig(
            alpha=self.alpha,
            levels=tuple(self.levels),
            style_scale=self.style_scale,
            eps=self.eps,
            blend_per_level=self.blend_per_level,
        )

    def fit(self, style: np.ndarray, y=None) -> "Stylizer":
        cfg = self._config()
        scaled = _scaled_style(style, cfg.style_scale)
        self.level_stats_ = {
            level: compute_style_stats(
                to_feature_matrix(encode(scaled, level, self.store)), cfg.eps
            )
            for level in cfg.levels
        }
        return self

    def transform(self, content: np.ndarray, level_callback=None) -> np.ndarray:
        if not hasattr(self, "level_stats_"):
            raise NotFittedError("Stylizer.transform called before fit()")
        cfg = self._config()
        alphas = _alpha_schedule(cfg)
        missing = [l for l in cfg.levels if l not in self.level_stats_]
        if missing:
            raise NotFittedError(
                f"Stylizer was fitted without levels {missing}; refit after changing levels"
            )

        def per_level(fm, level):
            return wct(fm, self.level_stats_[level], alphas[level], cfg.eps)

        return _fold(content, cfg.levels, per_level, self.store, level_callback)
