"""Raw pixel features: center crop, bilinear resize, flatten.

An image becomes a single vector by cropping to the centered square,
resizing to a fixed side length with bilinear interpolation, and
flattening row-major with the channel index fastest. The default side of
227 gives 227 * 227 * 3 = 154587 features.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..errors import FormatError, ValidationError

DEFAULT_SIDE = 227


def _check_image(img, *, name: str = "image") -> np.ndarray:
    arr = np.asarray(img)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValidationError(
            f"{name} must have shape (height, width, 3), got {arr.shape}"
        )
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValidationError(f"{name} has an empty axis: {arr.shape}")
    return arr


def center_crop(img) -> np.ndarray:
    """Crop an (H, W, 3) image to its centered square.

    The longer axis drops floor(excess / 2) leading and the remaining
    ceil(excess / 2) trailing rows or columns.
    """
    arr = _check_image(img)
    h, w = arr.shape[:2]
    side = min(h, w)
    top = (h - side) // 2
    left = (w - side) // 2
    return arr[top : top + side, left : left + side]


def bilinear_resize(img, side: int) -> np.ndarray:
    """Resize an (H, W, 3) image to (side, side, 3) float64 by bilinear blending.

    Pixel centers live at half-integer grid positions: output pixel j
    samples source coordinate (j + 0.5) * scale - 0.5, clamped to the
    valid range, then blends the two nearest samples per axis. A
    same-size input is returned unchanged (as float64), so the identity
    resize is exact.
    """
    arr = _check_image(img).astype(np.float64)
    if side < 1:
        raise ValidationError(f"side must be >= 1, got {side}")
    h, w = arr.shape[:2]
    if (h, w) == (side, side):
        return arr.copy()

    def axis(src: int, dst: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        pos = (np.arange(dst) + 0.5) * (src / dst) - 0.5
        pos = np.clip(pos, 0.0, src - 1.0)
        lo = np.floor(pos).astype(np.intp)
        hi = np.minimum(lo + 1, src - 1)
        return lo, hi, pos - lo

    y0, y1, fy = axis(h, side)
    x0, x1, fx = axis(w, side)
    rows = arr[y0] * (1.0 - fy)[:, None, None] + arr[y1] * fy[:, None, None]
    return rows[:, x0] * (1.0 - fx)[None, :, None] + rows[:, x1] * fx[None, :, None]


def pixel_features(img, side: int = DEFAULT_SIDE) -> np.ndarray:
    """Crop, resize and flatten an image into a length side*side*3 vector.

    Flattening is row-major with channels fastest: the first three
    entries are the R, G, B values of the top-left pixel.
    """
    square = center_crop(img)
    resized = bilinear_resize(square, side)
    return resized.reshape(-1)


def load_image(path) -> np.ndarray:
    """Decode an image file into an (H, W, 3) uint8 RGB array."""
    from PIL import Image, UnidentifiedImageError

    path = Path(path)
    try:
        with Image.open(path) as im:
            rgb = im.convert("RGB")
            return np.asarray(rgb, dtype=np.uint8)
    except (UnidentifiedImageError, OSError, ValueError) as exc:
        raise FormatError(f"{path}: cannot decode image: {exc}") from exc
