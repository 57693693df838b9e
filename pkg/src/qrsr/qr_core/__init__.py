"""Byte-mode QR encoding, rasterization, grid decoding and Reed-Solomon coding."""

from qrsr.qr_core.decoder import DecodeResult, decode, read_modules
from qrsr.qr_core.raster import central_window, rasterize, sample_modules
from qrsr.qr_core.rs import generator_poly, rs_correct, rs_encode
from qrsr.qr_core.symbol import (
    ModuleMatrix,
    apply_mask,
    classify_modules,
    codeword_positions,
    data_codewords,
    encode,
    encode_codewords,
    used_bits,
)
from qrsr.qr_core.tables import EC_LEVELS, CodeConfig, RsBlockSpec, block_spec

__all__ = [
    "EC_LEVELS",
    "CodeConfig",
    "DecodeResult",
    "ModuleMatrix",
    "RsBlockSpec",
    "apply_mask",
    "block_spec",
    "central_window",
    "classify_modules",
    "codeword_positions",
    "data_codewords",
    "decode",
    "encode",
    "encode_codewords",
    "generator_poly",
    "rasterize",
    "read_modules",
    "rs_correct",
    "rs_encode",
    "sample_modules",
    "used_bits",
]
