"""Image arrays, grayscale conversion and PNG I/O.

Images are float64 numpy arrays with values in [0, 1], shaped ``(H, W)``
for grayscale or ``(H, W, 3)`` for RGB. Row index first.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image

# YCbCr luma weights.
LUMA = np.array([0.299, 0.587, 0.114])


def to_grayscale(image: np.ndarray) -> np.ndarray:
    """Luma of an RGB image; single-channel input passes through."""
    image = np.asarray(image, dtype=np.float64)
    if image.ndim == 2:
        return image
    if image.ndim == 3 and image.shape[2] == 1:
        return image[:, :, 0]
    if image.ndim == 3 and image.shape[2] == 3:
        return image[:, :, 0] * LUMA[0] + image[:, :, 1] * LUMA[1] + image[:, :, 2] * LUMA[2]
    raise ValueError(f"expected (H, W) or (H, W, 3) image, got shape {image.shape}")


def to_rgb(image: np.ndarray) -> np.ndarray:
    image = np.asarray(image, dtype=np.float64)
    if image.ndim == 2:
        return np.repeat(image[:, :, None], 3, axis=2)
    return image


def quantize(image: np.ndarray) -> np.ndarray:
    """Snap values to the 8-bit grid that PNG storage will impose."""
    return np.round(np.clip(image, 0.0, 1.0) * 255.0) / 255.0


def read_png(path) -> np.ndarray:
    """Load an image file as float64 in [0, 1]; alpha is composited onto white."""
    with Image.open(path) as im:
        if im.mode in ("1", "L", "I;16", "I", "F"):
            arr = np.asarray(im.convert("L"), dtype=np.float64) / 255.0
            return arr
        if im.mode in ("RGBA", "LA", "P", "PA"):
            rgba = np.asarray(im.convert("RGBA"), dtype=np.float64) / 255.0
            alpha = rgba[:, :, 3:4]
            return rgba[:, :, :3] * alpha + (1.0 - alpha)
        return np.asarray(im.convert("RGB"), dtype=np.float64) / 255.0


def write_png(path, image: np.ndarray) -> None:
    arr = np.round(np.clip(np.asarray(image, dtype=np.float64), 0.0, 1.0) * 255.0).astype(np.uint8)
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(arr).save(path, format="PNG")


def resize(image: np.ndarray, size: int) -> np.ndarray:
    """Bilinear resize to ``size x size`` with antialiasing."""
    from skimage.transform import resize as _resize

    image = np.asarray(image, dtype=np.float64)
    if image.shape[:2] == (size, size):
        return image
    shape = (size, size) + image.shape[2:]
    return np.clip(_resize(image, shape, order=1, anti_aliasing=True, mode="edge"), 0.0, 1.0)
