"""Module matrix <-> pixel raster."""

from __future__ import annotations

import math

import numpy as np

from qrsr import kernels
from qrsr.errors import ExtentMismatch
from qrsr.imaging import to_grayscale
from qrsr.qr_core.symbol import ModuleMatrix
from qrsr.qr_core.tables import CodeConfig


def central_window(module_px: int) -> tuple[int, int]:
    """Offset and side of the central ceil(s/3) x ceil(s/3) submodule."""
    c = math.ceil(module_px / 3)
    return (module_px - c) // 2, c


def rasterize(matrix: ModuleMatrix, cfg: CodeConfig | None = None) -> np.ndarray:
    """Grayscale raster: light modules and quiet zone 1.0, dark modules 0.0."""
    cfg = cfg or CodeConfig()
    if matrix.side != cfg.side:
        raise ExtentMismatch(f"matrix side {matrix.side} != version {cfg.version} side {cfg.side}")
    s, q = cfg.module_px, cfg.quiet_px
    body = np.kron(matrix.cells.astype(np.float64), np.ones((s, s)))
    return np.pad(body, q, mode="constant", constant_values=1.0)


def check_extent(image: np.ndarray, cfg: CodeConfig) -> None:
    n = cfg.image_px
    if image.shape[:2] != (n, n):
        raise ExtentMismatch(f"image is {image.shape[1]}x{image.shape[0]}, geometry expects {n}x{n}")


def sample_modules(image: np.ndarray, cfg: CodeConfig | None = None) -> np.ndarray:
    """Binarized central-submodule mean per module: 1 (light) iff mean >= 1/2."""
    cfg = cfg or CodeConfig()
    check_extent(image, cfg)
    gray = np.ascontiguousarray(to_grayscale(image), dtype=np.float64)
    _, center = kernels.module_stats(
        gray, np.ones((cfg.side, cfg.side), dtype=np.uint8),
        np.zeros((cfg.module_px, cfg.module_px)), cfg.quiet_px, *central_window(cfg.module_px),
    )
    return (center >= 0.5).astype(np.uint8)
