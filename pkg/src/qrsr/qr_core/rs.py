"""Reed-Solomon coding over GF(256) with the QR conventions.

Field polynomial 0x11D, generator roots alpha^0 .. alpha^(n-1). Blocks are
byte strings whose first byte is the highest-degree coefficient.
"""

from __future__ import annotations

from functools import lru_cache

from qrsr import kernels
from qrsr.errors import RsUncorrectable

EXP = [0] * 512
LOG = [0] * 256
_x = 1
for _i in range(255):
    EXP[_i] = _x
    LOG[_x] = _i
    _x <<= 1
    if _x & 0x100:
        _x ^= 0x11D
for _i in range(255, 512):
    EXP[_i] = EXP[_i - 255]
del _x, _i


def gf_mul(a: int, b: int) -> int:
    if a == 0 or b == 0:
        return 0
    return EXP[LOG[a] + LOG[b]]


def gf_div(a: int, b: int) -> int:
    if b == 0:
        raise ZeroDivisionError("division by zero in GF(256)")
    if a == 0:
        return 0
    return EXP[(LOG[a] - LOG[b]) % 255]


def gf_pow(a: int, n: int) -> int:
    if a == 0:
        return 0
    return EXP[(LOG[a] * n) % 255]


def _poly_eval_low(poly: list[int], x: int) -> int:
    # coefficients lowest degree first
    acc = 0
    for coef in reversed(poly):
        acc = gf_mul(acc, x) ^ coef
    return acc


@lru_cache(maxsize=None)
def generator_poly(nsym: int) -> bytes:
    """Monic generator prod_{i<nsym} (x - alpha^i), highest degree first."""
    g = [1]
    for i in range(nsym):
        root = EXP[i]
        nxt = g + [0]
        for j, coef in enumerate(g):
            nxt[j + 1] ^= gf_mul(coef, root)
        g = nxt
    return bytes(g)


def rs_encode(data: bytes, nsym: int) -> bytes:
    """Error-correction codewords for one block."""
    return kernels.rs_remainder(bytes(data), generator_poly(nsym))


def rs_correct(block: bytes, nsym: int) -> tuple[bytes, int]:
    """Correct a received block in place of at most ``nsym // 2`` codeword errors.

    Returns ``(corrected_block, n_corrections)``. Raises ``RsUncorrectable``
    when the error pattern is beyond the decoding radius or the decoder's
    result does not re-check as a codeword.
    """
    block = bytes(block)
    n = len(block)
    synd = kernels.rs_syndromes(block, nsym)
    if not any(synd):
        return block, 0

    # Berlekamp-Massey, polynomials lowest degree first.
    locator = [1]
    prev = [1]
    length = 0
    shift = 1
    prev_disc = 1
    for r in range(nsym):
        disc = synd[r]
        for i in range(1, length + 1):
            if i < len(locator):
                disc ^= gf_mul(locator[i], synd[r - i])
        if disc == 0:
            shift += 1
            continue
        coef = gf_div(disc, prev_disc)
        update = [0] * shift + [gf_mul(coef, p) for p in prev]
        new = locator + [0] * max(0, len(update) - len(locator))
        for i, u in enumerate(update):
            new[i] ^= u
        if 2 * length <= r:
            prev = locator
            length = r + 1 - length
            prev_disc = disc
            shift = 1
        else:
            shift += 1
        locator = new
    while len(locator) > 1 and locator[-1] == 0:
        locator.pop()
    if length > nsym // 2 or len(locator) - 1 != length:
        raise RsUncorrectable(f"error locator degree {length} exceeds capacity {nsym // 2}")

    # Chien search: X = alpha^p is a root of the reversed locator at degree p.
    positions = []
    for p in range(n):
        if _poly_eval_low(locator, EXP[(255 - p) % 255]) == 0:
            positions.append(p)
    if len(positions) != length:
        raise RsUncorrectable(f"found {len(positions)} error positions for locator degree {length}")

    # Forney: e = X * Omega(X^-1) / Lambda'(X^-1).
    omega = [0] * nsym
    for i, s in enumerate(synd):
        if s == 0:
            continue
        for j, lam in enumerate(locator):
            if i + j < nsym:
                omega[i + j] ^= gf_mul(s, lam)
    deriv = [locator[i] if i % 2 == 1 else 0 for i in range(1, len(locator))]
    fixed = bytearray(block)
    for p in positions:
        x = EXP[p]
        x_inv = EXP[(255 - p) % 255]
        denom = _poly_eval_low(deriv, x_inv)
        if denom == 0:
            raise RsUncorrectable("zero locator derivative")
        magnitude = gf_mul(x, gf_div(_poly_eval_low(omega, x_inv), denom))
        fixed[n - 1 - p] ^= magnitude
    if any(kernels.rs_syndromes(bytes(fixed), nsym)):
        raise RsUncorrectable("correction did not produce a codeword")
    return bytes(fixed), len(positions)
