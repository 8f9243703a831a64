"""Dense feature tensors, images, and the flat feature-matrix view.

Everything is a plain float32 numpy array: a feature map is channel-major
(C, H, W); an image is (H, W, 3) RGB in [0, 1]. ``FeatureMatrix`` is the C x N
view the covariance transforms operate on; channel-major layout makes that view
a zero-copy reshape. Arrays handed to/returned from this module are treated as
immutable by convention.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from PIL import Image

from .errors import InvalidArgumentError
from .validation import check_image, check_tensor3

__all__ = [
    "FeatureMatrix",
    "feature_matrix",
    "to_feature_matrix",
    "from_feature_matrix",
    "resize_nearest",
    "nearest_indices",
    "gaussian_noise_image",
    "load_image",
    "save_image",
    "image_bytes_png",
]


@dataclass(frozen=True)
class FeatureMatrix:
    """C x N float32 feature values with the per-channel mean cached."""

    values: np.ndarray
    mean: np.ndarray = field(repr=False)

    def __post_init__(self):
        v, m = self.values, self.mean
        if v.ndim != 2 or v.size == 0:
            raise InvalidArgumentError(
                f"feature values must be a non-empty (C, N) array, got shape {v.shape}"
            )
        if v.dtype != np.float32 or m.dtype != np.float32:
            raise InvalidArgumentError("feature values and mean must be float32")
        if m.shape != (v.shape[0],):
            raise InvalidArgumentError(
                f"mean shape {m.shape} does not match {v.shape[0]} channels"
            )
        if not np.all(np.isfinite(v)):
            raise InvalidArgumentError("feature values contain non-finite entries")

    @property
    def channels(self) -> int:
        return self.values.shape[0]

    @property
    def samples(self) -> int:
        return self.values.shape[1]


def feature_matrix(values: np.ndarray) -> FeatureMatrix:
    """Wrap a (C, N) array, computing the row means."""
    values = np.ascontiguousarray(values, dtype=np.float32)
    if values.ndim != 2 or values.size == 0:
        raise InvalidArgumentError(
            f"feature values must be a non-empty (C, N) array, got shape {values.shape}"
        )
    return FeatureMatrix(values, values.mean(axis=1))


def to_feature_matrix(tensor) -> FeatureMatrix:
    """Flatten a (C, H, W) tensor into its C x (H*W) view (no copy)."""
    tensor = check_tensor3(tensor)
    c = tensor.shape[0]
    values = tensor.reshape(c, -1)
    return FeatureMatrix(values, values.mean(axis=1))


def from_feature_matrix(m: FeatureMatrix, height: int, width: int) -> np.ndarray:
    """Reshape a feature matrix back into (C, height, width)."""
    height, width = int(height), int(width)
    if height < 1 or width < 1:
        raise InvalidArgumentError(f"target size {height}x{width} must be positive")
    if m.samples != height * width:
        raise InvalidArgumentError(
            f"feature matrix has {m.samples} columns; cannot reshape to "
            f"{height}x{width} ({height * width} positions)"
        )
    return m.values.reshape(m.channels, height, width)


def nearest_indices(src: int, dst: int) -> np.ndarray:
    """Source indices for nearest-neighbor resampling of a length-src axis to dst.

    Sample point i of the destination maps to floor((i + 0.5) * src / dst).
    """
    if src < 1 or dst < 1:
        raise InvalidArgumentError("axis lengths must be positive")
    idx = np.floor((np.arange(dst, dtype=np.float64) + 0.5) * (src / dst)).astype(np.int64)
    return np.minimum(idx, src - 1)


def resize_nearest(img, height: int, width: int) -> np.ndarray:
    """Nearest-neighbor resample of an (H, W, 3) image to (height, width, 3)."""
    img = check_image(img)
    height, width = int(height), int(width)
    if height < 1 or width < 1:
        raise InvalidArgumentError(f"target size {height}x{width} must be positive")
    rows = nearest_indices(img.shape[0], height)
    cols = nearest_indices(img.shape[1], width)
    return np.ascontiguousarray(img[rows[:, None], cols[None, :]])


def gaussian_noise_image(height: int, width: int, seed: int) -> np.ndarray:
    """Seeded gaussian noise image (mean 0.5, sigma 0.1) clamped to [0, 1]."""
    height, width = int(height), int(width)
    if height < 1 or width < 1:
        raise InvalidArgumentError(f"noise image size {height}x{width} must be positive")
    rng = np.random.default_rng(seed)
    img = rng.normal(loc=0.5, scale=0.1, size=(height, width, 3))
    return np.clip(img, 0.0, 1.0).astype(np.float32)


def load_image(path) -> np.ndarray:
    """Load an image file as float32 (H, W, 3) RGB in [0, 1]."""
    with Image.open(path) as im:
        arr = np.asarray(im.convert("RGB"), dtype=np.float32)
    return arr / 255.0


def _quantize(img) -> np.ndarray:
    img = check_image(img)
    return np.clip(np.rint(img * 255.0), 0.0, 255.0).astype(np.uint8)


def save_image(path, img) -> None:
    """Write an image as 8-bit PNG (values clamped to [0, 1] first)."""
    Image.fromarray(_quantize(img), mode="RGB").save(path, format="PNG")


def image_bytes_png(img) -> bytes:
    """The exact PNG bytes save_image would write, for byte-level comparisons."""
    import io

    buf = io.BytesIO()
    Image.fromarray(_quantize(img), mode="RGB").save(buf, format="PNG")
    return buf.getvalue()
