"""Byte-mode QR encoding into a module matrix."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from qrsr.errors import CapacityExceeded, InvalidConfig
from qrsr.qr_core.rs import rs_encode
from qrsr.qr_core.tables import (
    ALIGNMENT_CENTERS,
    BYTE_MODE,
    COUNT_BITS,
    EC_FORMAT_BITS,
    MODE_BITS,
    REMAINDER_BITS,
    CodeConfig,
)

LIGHT, DARK = 1, 0

_MASKS = (
    lambda r, c: (r + c) % 2 == 0,
    lambda r, c: r % 2 == 0,
    lambda r, c: c % 3 == 0,
    lambda r, c: (r + c) % 3 == 0,
    lambda r, c: (r // 2 + c // 3) % 2 == 0,
    lambda r, c: (r * c) % 2 + (r * c) % 3 == 0,
    lambda r, c: ((r * c) % 2 + (r * c) % 3) % 2 == 0,
    lambda r, c: ((r + c) % 2 + (r * c) % 3) % 2 == 0,
)


@dataclass(frozen=True, eq=False)
class ModuleMatrix:
    """An m x m grid of modules. ``cells`` holds 1 for light, 0 for dark."""

    cells: np.ndarray
    function_mask: np.ndarray

    def __post_init__(self):
        cells = np.array(self.cells, dtype=np.uint8)
        fmask = np.array(self.function_mask, dtype=bool)
        if cells.ndim != 2 or cells.shape[0] != cells.shape[1] or cells.shape != fmask.shape:
            raise InvalidConfig(f"bad module matrix shapes {cells.shape} / {fmask.shape}")
        if cells.max(initial=0) > 1:
            raise InvalidConfig("module values must be 0 (dark) or 1 (light)")
        cells.flags.writeable = False
        fmask.flags.writeable = False
        object.__setattr__(self, "cells", cells)
        object.__setattr__(self, "function_mask", fmask)

    @property
    def side(self) -> int:
        return self.cells.shape[0]

    def __eq__(self, other):
        if not isinstance(other, ModuleMatrix):
            return NotImplemented
        return np.array_equal(self.cells, other.cells) and np.array_equal(
            self.function_mask, other.function_mask
        )

    def __hash__(self):
        return hash((self.cells.tobytes(), self.function_mask.tobytes()))

    def inverted(self) -> "ModuleMatrix":
        return ModuleMatrix(1 - self.cells, self.function_mask)

    def with_cells(self, cells) -> "ModuleMatrix":
        return ModuleMatrix(cells, self.function_mask)

    def to_text(self) -> str:
        """Side on the first line, one row of 0/1 per line (1 = light), then the function mask."""
        lines = [str(self.side)]
        lines += ["".join(str(int(v)) for v in row) for row in self.cells]
        lines.append("function_mask")
        lines += ["".join("1" if v else "0" for v in row) for row in self.function_mask]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "ModuleMatrix":
        lines = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
        try:
            m = int(lines[0])
        except (IndexError, ValueError):
            raise InvalidConfig("matrix text must start with the side length") from None
        rows = lines[1:1 + m]
        if len(rows) != m or any(len(r) != m or set(r) - {"0", "1"} for r in rows):
            raise InvalidConfig("matrix body must be m lines of m characters in {0,1}")
        cells = np.array([[int(ch) for ch in r] for r in rows], dtype=np.uint8)
        rest = lines[1 + m:]
        if rest and rest[0] == "function_mask":
            mrows = rest[1:1 + m]
            if len(mrows) != m or any(len(r) != m or set(r) - {"0", "1"} for r in mrows):
                raise InvalidConfig("function mask must be m lines of m characters in {0,1}")
            fmask = np.array([[ch == "1" for ch in r] for r in mrows], dtype=bool)
        else:
            fmask = np.zeros((m, m), dtype=bool)
        return cls(cells, fmask)


def format_bits(ec_level: str, mask_id: int) -> int:
    """15-bit BCH-protected, XOR-masked format word."""
    data = EC_FORMAT_BITS[ec_level] << 3 | mask_id
    rem = data
    for _ in range(10):
        rem = (rem << 1) ^ ((rem >> 9) * 0x537)
    return ((data << 10) | (rem & 0x3FF)) ^ 0x5412


def format_positions(side: int) -> tuple[list[tuple[int, int]], list[tuple[int, int]]]:
    """(row, col) of format bits 0..14 for the two copies."""
    first = [(i, 8) for i in range(6)] + [(7, 8), (8, 8), (8, 7)] + [(8, 14 - i) for i in range(9, 15)]
    second = [(8, side - 1 - i) for i in range(8)] + [(side - 15 + i, 8) for i in range(8, 15)]
    return first, second


@lru_cache(maxsize=None)
def _function_layout(version: int) -> tuple[np.ndarray, np.ndarray]:
    """Fixed-pattern darkness and function mask (format area reserved, left light)."""
    m = 17 + 4 * version
    dark = np.zeros((m, m), dtype=bool)
    func = np.zeros((m, m), dtype=bool)

    for i in range(m):
        func[6, i] = func[i, 6] = True
        dark[6, i] = dark[i, 6] = i % 2 == 0

    for r0, c0 in ((3, 3), (3, m - 4), (m - 4, 3)):
        for dr in range(-4, 5):
            for dc in range(-4, 5):
                r, c = r0 + dr, c0 + dc
                if 0 <= r < m and 0 <= c < m:
                    dist = max(abs(dr), abs(dc))
                    func[r, c] = True
                    dark[r, c] = dist not in (2, 4)

    centers = ALIGNMENT_CENTERS[version]
    for r0 in centers:
        for c0 in centers:
            if (r0, c0) in ((6, 6), (6, m - 7), (m - 7, 6)):
                continue
            for dr in range(-2, 3):
                for dc in range(-2, 3):
                    func[r0 + dr, c0 + dc] = True
                    dark[r0 + dr, c0 + dc] = max(abs(dr), abs(dc)) != 1

    first, second = format_positions(m)
    for r, c in first + second:
        func[r, c] = True
    func[m - 8, 8] = True
    dark[m - 8, 8] = True
    dark.flags.writeable = False
    func.flags.writeable = False
    return dark, func


def classify_modules(cfg: CodeConfig) -> np.ndarray:
    """Boolean mask of finder, separator, timing, alignment, format and dark-module cells."""
    return _function_layout(cfg.version)[1].copy()


@lru_cache(maxsize=None)
def codeword_positions(version: int) -> np.ndarray:
    """(row, col) of every non-function module in zigzag placement order.

    Entry ``k`` carries stream bit ``k``: bit ``7 - k % 8`` of codeword ``k // 8``.
    Trailing entries beyond the codewords are remainder bits.
    """
    _, func = _function_layout(version)
    m = func.shape[0]
    order = []
    right = m - 1
    while right >= 1:
        if right == 6:
            right = 5
        upward = ((right + 1) & 2) == 0
        for vert in range(m):
            r = m - 1 - vert if upward else vert
            for j in range(2):
                c = right - j
                if not func[r, c]:
                    order.append((r, c))
        right -= 2
    out = np.array(order, dtype=np.intp)
    out.flags.writeable = False
    return out


def mask_pattern(mask_id: int, side: int) -> np.ndarray:
    r, c = np.indices((side, side))
    return _MASKS[mask_id](r, c)


def apply_mask(cells: np.ndarray, function_mask: np.ndarray, mask_id: int) -> np.ndarray:
    """Toggle non-function modules where the mask pattern is set."""
    flip = mask_pattern(mask_id, cells.shape[0]) & ~function_mask
    out = np.array(cells, dtype=np.uint8)
    out[flip] ^= 1
    return out


def _payload_bytes(payload) -> bytes:
    if isinstance(payload, str):
        return payload.encode("utf-8")
    if isinstance(payload, (bytes, bytearray, memoryview)):
        return bytes(payload)
    raise InvalidConfig(f"payload must be str or bytes, got {type(payload).__name__}")


def used_bits(payload, cfg: CodeConfig) -> int:
    """Bits of the segment plus terminator, before byte-alignment padding."""
    data = _payload_bytes(payload)
    if len(data) > cfg.byte_capacity:
        raise CapacityExceeded(
            f"{len(data)} bytes exceed version {cfg.version}-{cfg.ec_level} byte capacity {cfg.byte_capacity}"
        )
    seg = MODE_BITS + COUNT_BITS + 8 * len(data)
    return seg + min(4, cfg.data_capacity_bits - seg)


def data_codewords(payload, cfg: CodeConfig) -> bytes:
    """Mode, count, payload, terminator, zero fill, then 0xEC/0x11 pad codewords."""
    data = _payload_bytes(payload)
    nbits = used_bits(data, cfg)
    bits = [(BYTE_MODE >> (MODE_BITS - 1 - i)) & 1 for i in range(MODE_BITS)]
    bits += [(len(data) >> (COUNT_BITS - 1 - i)) & 1 for i in range(COUNT_BITS)]
    for byte in data:
        bits += [(byte >> (7 - i)) & 1 for i in range(8)]
    bits += [0] * (nbits - len(bits))
    bits += [0] * (-len(bits) % 8)
    out = bytearray(int("".join(map(str, bits[i:i + 8])), 2) for i in range(0, len(bits), 8))
    capacity = cfg.blocks.data_codewords
    pad = (0xEC, 0x11)
    i = 0
    while len(out) < capacity:
        out.append(pad[i % 2])
        i += 1
    return bytes(out)


def interleave(data: bytes, cfg: CodeConfig) -> bytes:
    """Split into RS blocks, append EC codewords, and interleave."""
    spec = cfg.blocks
    blocks, ecs = [], []
    pos = 0
    for length in spec.data_lengths:
        block = data[pos:pos + length]
        pos += length
        blocks.append(block)
        ecs.append(rs_encode(block, spec.ec_codewords))
    out = bytearray()
    for i in range(max(spec.data_lengths)):
        for block in blocks:
            if i < len(block):
                out.append(block[i])
    for i in range(spec.ec_codewords):
        for ec in ecs:
            out.append(ec[i])
    return bytes(out)


def deinterleave(stream: bytes, cfg: CodeConfig) -> list[bytes]:
    """Inverse of :func:`interleave`: full blocks (data followed by EC)."""
    spec = cfg.blocks
    lengths = spec.data_lengths
    blocks = [bytearray() for _ in lengths]
    pos = 0
    for i in range(max(lengths)):
        for b, length in enumerate(lengths):
            if i < length:
                blocks[b].append(stream[pos])
                pos += 1
    for _ in range(spec.ec_codewords):
        for b in range(len(lengths)):
            blocks[b].append(stream[pos])
            pos += 1
    return [bytes(b) for b in blocks]


def encode_codewords(data: bytes, cfg: CodeConfig) -> ModuleMatrix:
    """Place already-padded data codewords (plus their EC) into a masked symbol."""
    if len(data) != cfg.blocks.data_codewords:
        raise InvalidConfig(f"expected {cfg.blocks.data_codewords} data codewords, got {len(data)}")
    fixed_dark, func = _function_layout(cfg.version)
    m = cfg.side
    stream = interleave(data, cfg)
    dark = fixed_dark.copy()
    positions = codeword_positions(cfg.version)
    nbits = 8 * len(stream)
    bits = np.unpackbits(np.frombuffer(stream, dtype=np.uint8)).astype(bool)
    rows, cols = positions[:nbits, 0], positions[:nbits, 1]
    dark[rows, cols] = bits
    dark ^= mask_pattern(cfg.mask_id, m) & ~func

    fmt = format_bits(cfg.ec_level, cfg.mask_id)
    for copy in format_positions(m):
        for i, (r, c) in enumerate(copy):
            dark[r, c] = (fmt >> i) & 1
    dark[m - 8, 8] = True
    cells = np.where(dark, DARK, LIGHT).astype(np.uint8)
    return ModuleMatrix(cells, func)


def encode(payload, cfg: CodeConfig | None = None) -> ModuleMatrix:
    """Encode ``payload`` (str is UTF-8 encoded) as a byte-mode QR symbol."""
    cfg = cfg or CodeConfig()
    return encode_codewords(data_codewords(payload, cfg), cfg)
