"""Pure-Python/numpy implementations of the hot kernels.

These mirror ``_ckernels.pyx`` function for function and are used whenever
the compiled extension is missing or ``QRSR_PURE_PYTHON`` is set.
"""

from __future__ import annotations

import numpy as np

_EXP = [0] * 512
_LOG = [0] * 256
_x = 1
for _i in range(255):
    _EXP[_i] = _x
    _LOG[_x] = _i
    _x <<= 1
    if _x & 0x100:
        _x ^= 0x11D
for _i in range(255, 512):
    _EXP[_i] = _EXP[_i - 255]
del _x, _i


def rs_remainder(data: bytes, generator: bytes) -> bytes:
    """Remainder of ``data * x^n`` divided by the monic ``generator`` (degree n)."""
    nsym = len(generator) - 1
    rem = [0] * nsym
    exp, log = _EXP, _LOG
    gen_logs = [log[g] if g else -1 for g in generator[1:]]
    for byte in data:
        factor = byte ^ rem[0]
        rem.pop(0)
        rem.append(0)
        if factor:
            lf = log[factor]
            for j, lg in enumerate(gen_logs):
                if lg >= 0:
                    rem[j] ^= exp[lf + lg]
    return bytes(rem)


def rs_syndromes(block: bytes, nsym: int) -> list[int]:
    """Evaluate the received polynomial (first byte = highest degree) at alpha^0..alpha^(nsym-1)."""
    exp, log = _EXP, _LOG
    out = []
    for j in range(nsym):
        acc = 0
        for byte in block:
            # acc = acc * alpha^j + byte
            if acc:
                acc = exp[log[acc] + j]
            acc ^= byte
        out.append(acc)
    return out


def _region(gray: np.ndarray, m: int, s: int, quiet: int) -> np.ndarray:
    return gray[quiet:quiet + m * s, quiet:quiet + m * s].reshape(m, s, m, s)


def module_stats(gray, cells, weights, quiet: int, c0: int, c: int):
    """Per-module Gaussian-weighted hinge error and central-submodule mean.

    Returns ``(weighted_error, center_mean)``, both ``(m, m)`` float64.
    """
    m = cells.shape[0]
    s = weights.shape[0]
    g4 = _region(gray, m, s, quiet)
    y4 = cells.astype(np.float64)[:, None, :, None]
    err = np.maximum(1.0 - 2.0 * g4, 0.0) * y4 + np.maximum(2.0 * g4 - 1.0, 0.0) * (1.0 - y4)
    weighted = np.einsum("aibj,ij->ab", err, weights)
    center = g4[:, c0:c0 + c, :, c0:c0 + c].sum(axis=(1, 3)) / (c * c)
    return weighted, center


def gray_gradient(gray, cells, weights, phi, quiet: int, scale: float):
    """d(loss)/d(gray) for gated modules; zero in the quiet zone and where phi is 0."""
    m = cells.shape[0]
    s = weights.shape[0]
    g4 = _region(gray, m, s, quiet)
    y4 = cells.astype(np.float64)[:, None, :, None]
    d = np.where(g4 < 0.5, -2.0 * y4, np.where(g4 > 0.5, 2.0 * (1.0 - y4), 0.0))
    gate = phi.astype(np.float64)[:, None, :, None] * scale
    grad4 = d * weights[None, :, None, :] * gate
    out = np.zeros(gray.shape, dtype=np.float64)
    out[quiet:quiet + m * s, quiet:quiet + m * s] = grad4.reshape(m * s, m * s)
    return out
