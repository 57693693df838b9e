"""Grid-sampling QR decoder.

The decoder knows the symbol geometry in advance (it comes from the
:class:`CodeConfig`, optionally through a homography), so there is no finder
pattern search. Module values come from the binarized central-submodule mean,
the same rule the scanning-robust loss uses.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from qrsr.errors import DecodeError, FormatInfoUnreadable
from qrsr.geometry import warp
from qrsr.qr_core.raster import sample_modules
from qrsr.qr_core.rs import rs_correct
from qrsr.qr_core.symbol import (
    _function_layout,
    codeword_positions,
    deinterleave,
    format_bits,
    format_positions,
    mask_pattern,
)
from qrsr.qr_core.tables import BYTE_MODE, COUNT_BITS, EC_LEVELS, MODE_BITS, CodeConfig


@dataclass(frozen=True)
class DecodeResult:
    """Decoded payload plus everything the decoder had to tolerate to get it.

    ``corrections`` counts Reed-Solomon codeword corrections per block.
    ``format_errors`` is the bit distance of both format copies from the
    chosen format word, ``function_errors`` the number of finder, timing,
    alignment and dark-module cells that deviate from the standard layout, and
    ``remainder_errors`` the number of set remainder bits.
    """

    payload: bytes
    corrections: tuple[int, ...]
    ec_level: str
    mask_id: int
    format_errors: int = 0
    function_errors: int = 0
    remainder_errors: int = 0

    @property
    def total_corrections(self) -> int:
        return sum(self.corrections)

    @property
    def clean(self) -> bool:
        """True when the symbol was read without correcting or ignoring anything."""
        return not (self.total_corrections or self.format_errors or self.function_errors or self.remainder_errors)


def _format_word(dark: np.ndarray, copy) -> int:
    word = 0
    for i, (r, c) in enumerate(copy):
        word |= int(dark[r, c]) << i
    return word


def read_format(dark: np.ndarray) -> tuple[str, int, int]:
    """Best (ec_level, mask_id, hamming distance) over both format copies."""
    best = None
    for copy in format_positions(dark.shape[0]):
        word = _format_word(dark, copy)
        for ec in EC_LEVELS:
            for mask in range(8):
                dist = bin(word ^ format_bits(ec, mask)).count("1")
                if best is None or dist < best[2]:
                    best = (ec, mask, dist)
    if best[2] > 3:
        raise FormatInfoUnreadable(f"format information is {best[2]} bits from any valid word")
    return best


def parse_segments(data: bytes) -> bytes:
    """Read byte-mode segments until a terminator or the end of the stream."""
    bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8))
    n = len(bits)
    pos = 0

    def take(k):
        nonlocal pos
        val = 0
        for b in bits[pos:pos + k]:
            val = (val << 1) | int(b)
        pos += k
        return val

    out = bytearray()
    while pos + MODE_BITS <= n:
        mode = take(MODE_BITS)
        if mode == 0:
            break
        if mode != BYTE_MODE:
            raise DecodeError(f"unsupported segment mode {mode:04b}")
        if pos + COUNT_BITS > n:
            raise DecodeError("truncated character count")
        count = take(COUNT_BITS)
        if pos + 8 * count > n:
            raise DecodeError("segment runs past the data codewords")
        out += bytes(take(8) for _ in range(count))
    return bytes(out)


def read_modules(modules: np.ndarray, cfg: CodeConfig) -> DecodeResult:
    """Decode an m x m array of sampled modules (1 = light)."""
    dark = 1 - np.asarray(modules, dtype=np.uint8)
    ec, mask, _ = read_format(dark)
    used = cfg.replace(ec_level=ec, mask_id=mask)
    fixed_dark, func = _function_layout(used.version)
    expected_format = format_bits(ec, mask)
    format_errors = 0
    fixed = func.copy()
    for copy in format_positions(used.side):
        format_errors += bin(_format_word(dark, copy) ^ expected_format).count("1")
        for r, c in copy:
            fixed[r, c] = False
    function_errors = int(np.sum((dark.astype(bool) != fixed_dark) & fixed))

    unmasked = dark ^ (mask_pattern(mask, used.side) & ~func)
    spec = used.blocks
    nbits = 8 * spec.total_codewords
    all_pos = codeword_positions(used.version)
    pos = all_pos[:nbits]
    stream = np.packbits(unmasked[pos[:, 0], pos[:, 1]].astype(np.uint8)).tobytes()
    rem = all_pos[nbits:]
    remainder_errors = int(np.sum(unmasked[rem[:, 0], rem[:, 1]]))

    data = bytearray()
    corrections = []
    for block, length in zip(deinterleave(stream, used), spec.data_lengths):
        fixed, count = rs_correct(block, spec.ec_codewords)
        data += fixed[:length]
        corrections.append(count)
    return DecodeResult(
        parse_segments(bytes(data)), tuple(corrections), ec, mask,
        format_errors, function_errors, remainder_errors,
    )


def rectify(image: np.ndarray, inverse_homography: np.ndarray, cfg: CodeConfig) -> np.ndarray:
    """Resample a warped image back onto the flat code plane.

    ``inverse_homography`` maps warped-image coordinates to flat-plane
    coordinates, so its inverse tells where each flat pixel landed.
    """
    forward = np.linalg.inv(np.asarray(inverse_homography, dtype=np.float64))
    n = cfg.image_px
    return warp(image, forward, (n, n), fill=1.0)


def decode(image: np.ndarray, cfg: CodeConfig | None = None, inverse_homography=None) -> DecodeResult:
    """Recover the payload from a raster with known grid geometry.

    Raises a :class:`DecodeError` subclass when the image is unscannable.
    """
    cfg = cfg or CodeConfig()
    if inverse_homography is not None:
        image = rectify(image, inverse_homography, cfg)
    return read_modules(sample_modules(image, cfg), cfg)
