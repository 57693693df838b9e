"""Re-select padding bits so a QR symbol resembles a reference image.

Bits after the terminator are ignored by every decoder, so each one can be
flipped freely. Flipping one changes its own module and, through the
systematic Reed-Solomon code, a fixed set of EC modules. Those footprints span
a GF(2) space of reachable symbols that all decode to the same payload with
zero corrections. Gauss-Jordan elimination over that space, pivoting on
modules in order of how strongly the reference wants them light or dark, picks
the reachable symbol closest to the reference.

Footprints and elimination rows are Python ints used as bitsets over the
m*m modules (bit ``r * m + c``).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from qrsr.errors import NoFreeBits
from qrsr.imaging import resize, to_grayscale
from qrsr.qr_core.raster import check_extent, sample_modules
from qrsr.qr_core.symbol import ModuleMatrix, data_codewords, encode_codewords, used_bits
from qrsr.qr_core.tables import CodeConfig
from qrsr.srl import gaussian_kernel

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class FreeBitBasis:
    """One module-flip footprint per free data bit.

    ``bit_indices[i]`` is a stream bit position (MSB-first within the data
    codewords); ``footprints[i]`` is the set of modules it toggles.
    """

    base: ModuleMatrix
    data: bytes
    bit_indices: tuple[int, ...]
    footprints: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.bit_indices)

    def footprint_array(self, i: int) -> np.ndarray:
        return _to_array(self.footprints[i], self.base.side)


@dataclass(frozen=True)
class TargetPattern:
    desired: np.ndarray
    weight: np.ndarray


@dataclass(frozen=True)
class MatchReport:
    agreement_before: float
    agreement_after: float
    total_weight: float
    flipped_bits: tuple[int, ...]
    no_free_bits: bool = False

    @property
    def fraction_before(self) -> float:
        return self.agreement_before / self.total_weight if self.total_weight else 1.0

    @property
    def fraction_after(self) -> float:
        return self.agreement_after / self.total_weight if self.total_weight else 1.0

    def as_dict(self) -> dict:
        return {
            "agreement_before": self.agreement_before,
            "agreement_after": self.agreement_after,
            "total_weight": self.total_weight,
            "fraction_before": self.fraction_before,
            "fraction_after": self.fraction_after,
            "flipped_bits": list(self.flipped_bits),
            "no_free_bits": self.no_free_bits,
        }


def _to_int(mask: np.ndarray) -> int:
    flat = np.flatnonzero(np.asarray(mask, dtype=bool).ravel())
    out = 0
    for i in flat.tolist():
        out |= 1 << i
    return out


def _to_array(bits: int, side: int) -> np.ndarray:
    raw = bits.to_bytes((side * side + 7) // 8, "little")
    arr = np.unpackbits(np.frombuffer(raw, dtype=np.uint8), bitorder="little")[: side * side]
    return arr.reshape(side, side).astype(bool)


def free_bit_indices(payload, cfg: CodeConfig) -> range:
    """Stream bit positions after the segment and its terminator."""
    return range(used_bits(payload, cfg), cfg.data_capacity_bits)


def free_bit_basis(payload, cfg: CodeConfig | None = None) -> FreeBitBasis:
    """Footprint of every free bit, by flipping it and diffing the re-encoded symbol."""
    cfg = cfg or CodeConfig()
    data = data_codewords(payload, cfg)
    free = free_bit_indices(payload, cfg)
    if len(free) == 0:
        raise NoFreeBits("payload fills the symbol; no padding bits to re-select")
    base = encode_codewords(data, cfg)
    base_cells = base.cells
    footprints = []
    for k in free:
        flipped = bytearray(data)
        flipped[k // 8] ^= 0x80 >> (k % 8)
        diff = encode_codewords(bytes(flipped), cfg).cells != base_cells
        footprints.append(_to_int(diff))
    return FreeBitBasis(base, data, tuple(free), tuple(footprints))


def desired_pattern(reference: np.ndarray, cfg: CodeConfig | None = None) -> TargetPattern:
    """Module values the reference image suggests, and how decisively.

    ``desired`` is the binarized central-submodule mean. ``weight`` is
    |sum of Gaussian weights * (2 * gray - 1)| over the module, 0 for
    mid-gray and 1 for a saturated module.
    """
    cfg = cfg or CodeConfig()
    reference = np.asarray(reference, dtype=np.float64)
    if reference.shape[:2] != (cfg.image_px, cfg.image_px):
        reference = resize(reference, cfg.image_px)
    check_extent(reference, cfg)
    gray = to_grayscale(reference)
    desired = sample_modules(gray, cfg)
    m, s, q = cfg.side, cfg.module_px, cfg.quiet_px
    g4 = gray[q:q + m * s, q:q + m * s].reshape(m, s, m, s)
    contrast = np.einsum("aibj,ij->ab", 2.0 * g4 - 1.0, gaussian_kernel(s))
    return TargetPattern(desired, np.abs(contrast))


def _agreement(cells: np.ndarray, pattern: TargetPattern, free_mask: np.ndarray) -> float:
    match = (cells == pattern.desired) & free_mask
    return float(np.sum(pattern.weight[match]))


def _local_search(state, combo, target_bits, moves, move_arr, weight_flat, m):
    """Apply the best agreement-raising move until none is left."""
    mismatch = _to_array(state ^ target_bits, m).ravel()
    signed = np.where(mismatch, weight_flat, -weight_flat)
    while True:
        gains = move_arr @ signed
        best = int(np.argmax(gains))
        if gains[best] <= 1e-12:
            return state, combo
        row, rcombo = moves[best]
        state ^= row
        combo ^= rcombo
        changed = move_arr[best] != 0
        signed[changed] = -signed[changed]


def transform(
    payload,
    cfg: CodeConfig | None = None,
    pattern: TargetPattern | None = None,
    basis: FreeBitBasis | None = None,
) -> tuple[ModuleMatrix, MatchReport]:
    """Reachable symbol for ``payload`` that best agrees with ``pattern``.

    Agreement is the summed weight of non-function modules matching
    ``pattern.desired``. The result never agrees less than the plain encoding.
    """
    cfg = cfg or CodeConfig()
    if basis is None:
        try:
            basis = free_bit_basis(payload, cfg)
        except NoFreeBits:
            from qrsr.qr_core.symbol import encode

            plain = encode(payload, cfg)
            log.warning("no free bits; returning the plain symbol")
            free_mask = ~plain.function_mask
            total = float(np.sum(pattern.weight[free_mask])) if pattern is not None else 0.0
            score = _agreement(plain.cells, pattern, free_mask) if pattern is not None else 0.0
            return plain, MatchReport(score, score, total, (), no_free_bits=True)
    base = basis.base
    if pattern is None:
        pattern = TargetPattern(base.cells.copy(), np.ones(base.cells.shape))
    m = base.side
    free_mask = ~base.function_mask
    desired = np.asarray(pattern.desired, dtype=np.uint8)
    weight = np.asarray(pattern.weight, dtype=np.float64)

    # Modules by (weight desc, row-major).
    candidates = np.flatnonzero(free_mask.ravel())
    order = candidates[np.lexsort((candidates, -weight.ravel()[candidates]))]

    rows = list(basis.footprints)
    combos = [1 << i for i in range(len(rows))]
    current = _to_int(base.cells)
    current_combo = 0
    target_bits = _to_int(desired)
    pivots = []  # (module index, row, combo)
    remaining = list(range(len(rows)))
    for p in order.tolist():
        bit = 1 << p
        pick = next((i for i in remaining if rows[i] & bit), None)
        if pick is None:
            continue
        remaining.remove(pick)
        prow, pcombo = rows[pick], combos[pick]
        for i in remaining:
            if rows[i] & bit:
                rows[i] ^= prow
                combos[i] ^= pcombo
        if (current ^ target_bits) & bit:
            current ^= prow
            current_combo ^= pcombo
        pivots.append((p, prow, pcombo))

    # Greedy residual matching from both the elimination result and plain y;
    # moves are the reduced pivot rows and the raw footprints.
    moves = [(prow, pcombo) for _, prow, pcombo in pivots]
    moves += [(fp, 1 << i) for i, fp in enumerate(basis.footprints)]
    free_flat = free_mask.ravel()
    weight_flat = np.where(free_flat, weight.ravel(), 0.0)
    move_arr = np.array([_to_array(r, m).ravel() for r, _ in moves], dtype=np.float64)
    start_gj = _local_search(current, current_combo, target_bits, moves, move_arr, weight_flat, m)
    start_y = _local_search(_to_int(base.cells), 0, target_bits, moves, move_arr, weight_flat, m)
    score_gj = _agreement(_to_array(start_gj[0], m), pattern, free_mask)
    score_y = _agreement(_to_array(start_y[0], m), pattern, free_mask)
    current, current_combo = start_gj if score_gj >= score_y else start_y

    cells = _to_array(current, m).astype(np.uint8)
    before = _agreement(base.cells, pattern, free_mask)
    after = _agreement(cells, pattern, free_mask)
    flipped = tuple(basis.bit_indices[i] for i in range(len(rows)) if current_combo >> i & 1)
    if after < before:
        cells, after, flipped = base.cells.copy(), before, ()

    new_data = bytearray(basis.data)
    for k in flipped:
        new_data[k // 8] ^= 0x80 >> (k % 8)
    result = encode_codewords(bytes(new_data), cfg)
    if not np.array_equal(result.cells, cells):
        raise AssertionError("footprint combination disagrees with re-encoding")
    total = float(np.sum(weight[free_mask]))
    return result, MatchReport(before, after, total, flipped)
