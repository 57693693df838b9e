"""Planar homographies and bilinear resampling.

Points are ``(x, y)`` = ``(col, row)`` with pixel centers on integer coordinates.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage


def apply_homography(h: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Map ``(..., 2)`` points through the 3x3 homography ``h``."""
    pts = np.asarray(points, dtype=np.float64)
    flat = pts.reshape(-1, 2)
    homog = np.column_stack([flat, np.ones(len(flat))]) @ np.asarray(h, dtype=np.float64).T
    return (homog[:, :2] / homog[:, 2:3]).reshape(pts.shape)


def sample_bilinear(image: np.ndarray, xs: np.ndarray, ys: np.ndarray, fill: float = 1.0) -> np.ndarray:
    """Bilinear samples of ``image`` at float coordinates; outside points get ``fill``."""
    image = np.asarray(image, dtype=np.float64)
    coords = np.stack([ys, xs])
    if image.ndim == 2:
        return ndimage.map_coordinates(image, coords, order=1, mode="constant", cval=fill)
    return np.stack(
        [ndimage.map_coordinates(image[:, :, k], coords, order=1, mode="constant", cval=fill)
         for k in range(image.shape[2])],
        axis=-1,
    )


def warp(image: np.ndarray, dst_to_src: np.ndarray, out_shape: tuple[int, int], fill: float = 1.0) -> np.ndarray:
    """Render an ``out_shape`` image whose pixel p shows ``image`` at ``dst_to_src(p)``."""
    rows, cols = np.indices(out_shape, dtype=np.float64)
    src = apply_homography(dst_to_src, np.stack([cols, rows], axis=-1))
    return sample_bilinear(image, src[..., 0], src[..., 1], fill=fill)
