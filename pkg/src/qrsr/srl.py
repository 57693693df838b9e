"""Scanning-robust loss: module-level hinge error with early stopping.

Every pixel of the code region gets a hinge error against its target module
(light targets penalize gray below 1/2, dark targets gray above 1/2). Errors
are Gaussian-weighted within each module and averaged over all m*m modules,
but only modules whose central submodule currently binarizes to the wrong
value contribute. That gate (``phi``) is recomputed from the pixels on every
call and treated as a constant for differentiation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from qrsr import kernels
from qrsr.imaging import LUMA, to_grayscale
from qrsr.qr_core.raster import central_window, check_extent
from qrsr.qr_core.symbol import ModuleMatrix
from qrsr.errors import ExtentMismatch
from qrsr.qr_core.tables import CodeConfig

__all__ = [
    "SrlReport",
    "binarized_center_mean",
    "central_filter",
    "error_matrix",
    "gaussian_kernel",
    "gated_loss",
    "module_weighted_error",
    "phi",
    "srl",
    "srl_gradient",
    "to_grayscale",
]


@lru_cache(maxsize=None)
def gaussian_kernel(module_px: int) -> np.ndarray:
    """Per-module Gaussian weights, sigma = floor((s-1)/5), normalized to sum 1.

    Centered on the module's geometric center. When sigma is 0 (s < 6) the
    weight is split evenly over the pixel(s) nearest the center.
    """
    s = module_px
    sigma = (s - 1) // 5
    center = (s - 1) / 2.0
    idx = np.arange(s, dtype=np.float64)
    if sigma == 0:
        near = (np.abs(idx - center) <= 0.5).astype(np.float64)
        w = np.outer(near, near)
    else:
        g = np.exp(-((idx - center) ** 2) / (2.0 * sigma * sigma))
        w = np.outer(g, g)
    w = w / w.sum()
    w.flags.writeable = False
    return w


@lru_cache(maxsize=None)
def central_filter(module_px: int) -> np.ndarray:
    """Uniform 1/c^2 weights on the central c x c block, c = ceil(s/3)."""
    c0, c = central_window(module_px)
    f = np.zeros((module_px, module_px))
    f[c0:c0 + c, c0:c0 + c] = 1.0 / (c * c)
    f.flags.writeable = False
    return f


def _target_raster(target: ModuleMatrix, cfg: CodeConfig) -> np.ndarray:
    s = cfg.module_px
    return np.kron(target.cells.astype(np.float64), np.ones((s, s)))


def _code_region(image: np.ndarray, cfg: CodeConfig) -> np.ndarray:
    q, n = cfg.quiet_px, cfg.side * cfg.module_px
    return image[q:q + n, q:q + n]


def error_matrix(gray: np.ndarray, target: ModuleMatrix, cfg: CodeConfig | None = None) -> np.ndarray:
    """Pixel-wise hinge error over the code region (quiet zone excluded)."""
    cfg = cfg or CodeConfig()
    _check(gray, target, cfg)
    g = _code_region(to_grayscale(gray), cfg)
    y = _target_raster(target, cfg)
    return np.maximum(1.0 - 2.0 * g, 0.0) * y + np.maximum(2.0 * g - 1.0, 0.0) * (1.0 - y)


def module_weighted_error(errors: np.ndarray, kernel: np.ndarray, module: tuple[int, int]) -> float:
    """Gaussian-weighted error of one module from a code-region error matrix."""
    s = kernel.shape[0]
    r, c = module
    block = errors[r * s:(r + 1) * s, c * s:(c + 1) * s]
    if block.shape != kernel.shape:
        raise ExtentMismatch(f"module {module} is outside the error matrix")
    return float(np.sum(block * kernel))


def binarized_center_mean(gray_module: np.ndarray, filt: np.ndarray | None = None) -> int:
    """1 if the filtered mean of an s x s module is in [1/2, 1], else 0."""
    gray_module = np.asarray(gray_module, dtype=np.float64)
    if filt is None:
        filt = central_filter(gray_module.shape[0])
    return int(np.sum(filt * gray_module) >= 0.5)


def phi(gray_module: np.ndarray, target_module) -> int:
    """0 when the module binarizes to the target's center value, 1 otherwise.

    ``target_module`` is either the module's target value or its s x s raster.
    """
    target = np.asarray(target_module)
    if target.ndim == 2:
        s = target.shape[0]
        target_center = int(target[s // 2, s // 2])
    else:
        target_center = int(target)
    return int(binarized_center_mean(gray_module) != target_center)


@dataclass(frozen=True)
class SrlReport:
    loss: float
    per_module_error: np.ndarray
    phi: np.ndarray
    mismatch_count: int
    error_rate: float

    def to_json(self) -> str:
        m = self.phi.shape[0]
        per_module = [
            {"row": r, "col": c, "phi": int(self.phi[r, c]), "weighted_error": float(self.per_module_error[r, c])}
            for r in range(m)
            for c in range(m)
        ]
        return json.dumps(
            {
                "loss": self.loss,
                "error_rate": self.error_rate,
                "mismatch_count": self.mismatch_count,
                "per_module": per_module,
            }
        )


def _check(image: np.ndarray, target: ModuleMatrix, cfg: CodeConfig) -> None:
    if target.side != cfg.side:
        raise ExtentMismatch(f"target has side {target.side}, config expects {cfg.side}")
    check_extent(image, cfg)


def _module_stats(image, target, cfg):
    _check(image, target, cfg)
    gray = np.ascontiguousarray(to_grayscale(image), dtype=np.float64)
    c0, c = central_window(cfg.module_px)
    weighted, center = kernels.module_stats(
        gray, target.cells, gaussian_kernel(cfg.module_px), cfg.quiet_px, c0, c
    )
    return gray, weighted, center


def srl(image: np.ndarray, target: ModuleMatrix, cfg: CodeConfig | None = None) -> SrlReport:
    """Loss, per-module weighted errors, gates and module error rate."""
    cfg = cfg or CodeConfig()
    _, weighted, center = _module_stats(image, target, cfg)
    gates = ((center >= 0.5).astype(np.uint8) != target.cells).astype(np.uint8)
    n = cfg.n_modules
    mismatches = int(gates.sum())
    return SrlReport(
        loss=float(np.sum(gates * weighted) / n),
        per_module_error=weighted,
        phi=gates,
        mismatch_count=mismatches,
        error_rate=mismatches / n,
    )


def gated_loss(image: np.ndarray, target: ModuleMatrix, gates: np.ndarray, cfg: CodeConfig | None = None) -> float:
    """The loss with ``phi`` held fixed at ``gates`` (the stop-gradient view)."""
    cfg = cfg or CodeConfig()
    _, weighted, _ = _module_stats(image, target, cfg)
    return float(np.sum(gates * weighted) / cfg.n_modules)


def srl_gradient(
    image: np.ndarray,
    target: ModuleMatrix,
    cfg: CodeConfig | None = None,
    gates: np.ndarray | None = None,
) -> np.ndarray:
    """Gradient of the loss with respect to the image pixels, gates held constant.

    Returns an array shaped like ``image``: for RGB input each channel gets
    the gray gradient times its luma coefficient. Pixels exactly at gray 1/2
    get a zero subgradient.
    """
    cfg = cfg or CodeConfig()
    if gates is None:
        gates = srl(image, target, cfg).phi
    _check(image, target, cfg)
    gray = np.ascontiguousarray(to_grayscale(image), dtype=np.float64)
    g = kernels.gray_gradient(
        gray, target.cells, gaussian_kernel(cfg.module_px), np.asarray(gates, dtype=np.uint8),
        cfg.quiet_px, 1.0 / cfg.n_modules,
    )
    image = np.asarray(image)
    if image.ndim == 3 and image.shape[2] == 3:
        return g[:, :, None] * LUMA[None, None, :]
    if image.ndim == 3:
        return g[:, :, None]
    return g


def kink_distance(image: np.ndarray) -> float:
    """Smallest |gray - 1/2| over the image; useful for gradient checks."""
    return float(np.min(np.abs(to_grayscale(image) - 0.5)))
