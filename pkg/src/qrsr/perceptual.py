"""Model-free perceptual distance: MSE between Gaussian pyramids.

Level 0 is the blurred image, each further level blurs and 2x2-averages the
previous one. The distance is the mean over levels of the per-level mean
squared difference, so it is a quadratic form in ``x - ref`` and its
gradient is the pyramid's adjoint applied to the per-level residuals.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import correlate1d


def _kernel1d(sigma: float) -> np.ndarray:
    radius = max(1, int(4.0 * sigma + 0.5))
    t = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-0.5 * (t / sigma) ** 2)
    return k / k.sum()


def _blur(a: np.ndarray, k: np.ndarray) -> np.ndarray:
    # zero padding keeps the operator self-adjoint for a symmetric kernel
    out = correlate1d(a, k, axis=0, mode="constant", cval=0.0)
    return correlate1d(out, k, axis=1, mode="constant", cval=0.0)


def _pool(a: np.ndarray) -> np.ndarray:
    h, w = a.shape[0] // 2 * 2, a.shape[1] // 2 * 2
    a = a[:h, :w]
    return 0.25 * (a[0::2, 0::2] + a[1::2, 0::2] + a[0::2, 1::2] + a[1::2, 1::2])


def _pool_adjoint(g: np.ndarray, shape: tuple) -> np.ndarray:
    out = np.zeros(shape, dtype=np.float64)
    h, w = g.shape[0] * 2, g.shape[1] * 2
    up = 0.25 * np.repeat(np.repeat(g, 2, axis=0), 2, axis=1)
    out[:h, :w] = up
    return out


@dataclass(frozen=True)
class PerceptualRegularizer:
    levels: int = 3
    sigma: float = 1.0

    def __post_init__(self):
        if self.levels < 1:
            raise ValueError("levels must be >= 1")
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")

    def _forward(self, diff: np.ndarray) -> tuple[list[np.ndarray], list[tuple]]:
        k = _kernel1d(self.sigma)
        blurred, shapes = [], []
        a = diff
        for level in range(self.levels):
            shapes.append(a.shape)
            b = _blur(a, k)
            blurred.append(b)
            if level + 1 < self.levels:
                a = _pool(b)
        return blurred, shapes

    def value(self, x: np.ndarray, ref: np.ndarray) -> float:
        diff = np.asarray(x, dtype=np.float64) - np.asarray(ref, dtype=np.float64)
        blurred, _ = self._forward(diff)
        return float(sum(np.mean(b * b) for b in blurred) / self.levels)

    def value_and_gradient(self, x: np.ndarray, ref: np.ndarray) -> tuple[float, np.ndarray]:
        diff = np.asarray(x, dtype=np.float64) - np.asarray(ref, dtype=np.float64)
        if not diff.any():
            return 0.0, np.zeros_like(diff)
        k = _kernel1d(self.sigma)
        blurred, shapes = self._forward(diff)
        value = float(sum(np.mean(b * b) for b in blurred) / self.levels)
        g_a = None
        for level in reversed(range(self.levels)):
            b = blurred[level]
            g_b = (2.0 / (self.levels * b.size)) * b
            if g_a is not None:
                g_b = g_b + _pool_adjoint(g_a, b.shape)
            g_a = _blur(g_b, k)
            assert g_a.shape == shapes[level]
        return value, g_a

    def gradient(self, x: np.ndarray, ref: np.ndarray) -> np.ndarray:
        return self.value_and_gradient(x, ref)[1]
