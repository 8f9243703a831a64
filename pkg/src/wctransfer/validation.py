"""Input validation helpers used at the public API boundaries."""

from __future__ import annotations

import numpy as np

from .errors import InvalidArgumentError

__all__ = ["check_tensor3", "check_image", "check_finite", "check_unit_interval"]


def check_finite(x: np.ndarray, name: str = "array") -> np.ndarray:
    if not np.all(np.isfinite(x)):
        raise InvalidArgumentError(f"{name} contains non-finite values")
    return x


def check_tensor3(x, name: str = "tensor") -> np.ndarray:
    """Coerce to a non-empty float32 (C, H, W) array, C-contiguous and finite."""
    x = np.asarray(x)
    if x.ndim != 3 or x.size == 0:
        raise InvalidArgumentError(
            f"{name} must be a non-empty (channels, height, width) array, "
            f"got shape {np.shape(x)}"
        )
    if x.dtype != np.float32:
        x = x.astype(np.float32)
    return check_finite(np.ascontiguousarray(x), name)


def check_image(img, name: str = "image") -> np.ndarray:
    """Coerce to a non-empty float32 (H, W, 3) RGB array, finite."""
    img = np.asarray(img)
    if img.ndim != 3 or img.shape[2] != 3 or img.size == 0:
        raise InvalidArgumentError(
            f"{name} must be a non-empty (height, width, 3) array, "
            f"got shape {np.shape(img)}"
        )
    if img.dtype != np.float32:
        img = img.astype(np.float32)
    return check_finite(np.ascontiguousarray(img), name)


def check_unit_interval(value: float, name: str) -> float:
    value = float(value)
    if not (0.0 <= value <= 1.0):
        raise InvalidArgumentError(f"{name} must lie in [0, 1], got {value}")
    return value
