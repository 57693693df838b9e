"""Symbol geometry and error-correction tables for QR versions 1-5."""

from __future__ import annotations

from dataclasses import dataclass, replace

from qrsr.errors import InvalidConfig

EC_LEVELS = ("L", "M", "Q", "H")
MIN_VERSION, MAX_VERSION = 1, 5

# Two-bit EC indicator used in the format information.
EC_FORMAT_BITS = {"L": 1, "M": 0, "Q": 3, "H": 2}

# (ec codewords per block, ((block count, data codewords per block), ...))
_BLOCK_TABLE = {
    (1, "L"): (7, ((1, 19),)),
    (1, "M"): (10, ((1, 16),)),
    (1, "Q"): (13, ((1, 13),)),
    (1, "H"): (17, ((1, 9),)),
    (2, "L"): (10, ((1, 34),)),
    (2, "M"): (16, ((1, 28),)),
    (2, "Q"): (22, ((1, 22),)),
    (2, "H"): (28, ((1, 16),)),
    (3, "L"): (15, ((1, 55),)),
    (3, "M"): (26, ((1, 44),)),
    (3, "Q"): (18, ((2, 17),)),
    (3, "H"): (22, ((2, 13),)),
    (4, "L"): (20, ((1, 80),)),
    (4, "M"): (18, ((2, 32),)),
    (4, "Q"): (26, ((2, 24),)),
    (4, "H"): (16, ((4, 9),)),
    (5, "L"): (26, ((1, 108),)),
    (5, "M"): (24, ((2, 43),)),
    (5, "Q"): (18, ((2, 15), (2, 16))),
    (5, "H"): (22, ((2, 11), (2, 12))),
}

ALIGNMENT_CENTERS = {1: (), 2: (6, 18), 3: (6, 22), 4: (6, 26), 5: (6, 30)}
REMAINDER_BITS = {1: 0, 2: 7, 3: 7, 4: 7, 5: 7}

BYTE_MODE = 0b0100
MODE_BITS = 4
COUNT_BITS = 8  # byte mode, versions 1-9


@dataclass(frozen=True)
class RsBlockSpec:
    """Reed-Solomon block layout for one (version, EC level) pair."""

    ec_codewords: int
    groups: tuple[tuple[int, int], ...]

    @property
    def data_lengths(self) -> list[int]:
        return [data for count, data in self.groups for _ in range(count)]

    @property
    def block_count(self) -> int:
        return sum(count for count, _ in self.groups)

    @property
    def data_codewords(self) -> int:
        return sum(self.data_lengths)

    @property
    def total_codewords(self) -> int:
        return self.data_codewords + self.block_count * self.ec_codewords

    @property
    def correctable(self) -> int:
        """Codeword errors correctable per block."""
        return self.ec_codewords // 2


@dataclass(frozen=True)
class CodeConfig:
    """QR symbol parameters plus raster geometry.

    Defaults follow the experimental setup: version 3, level M, mask 4,
    20 px modules and an 80 px quiet zone.
    """

    version: int = 3
    ec_level: str = "M"
    mask_id: int = 4
    module_px: int = 20
    quiet_px: int = 80

    def __post_init__(self):
        if not isinstance(self.version, int) or not MIN_VERSION <= self.version <= MAX_VERSION:
            raise InvalidConfig(f"version must be in {MIN_VERSION}..{MAX_VERSION}, got {self.version!r}")
        if self.ec_level not in EC_LEVELS:
            raise InvalidConfig(f"ec_level must be one of {EC_LEVELS}, got {self.ec_level!r}")
        if not isinstance(self.mask_id, int) or not 0 <= self.mask_id <= 7:
            raise InvalidConfig(f"mask_id must be in 0..7, got {self.mask_id!r}")
        if not isinstance(self.module_px, int) or self.module_px < 3:
            raise InvalidConfig(f"module_px must be an integer >= 3, got {self.module_px!r}")
        if not isinstance(self.quiet_px, int) or self.quiet_px < 0:
            raise InvalidConfig(f"quiet_px must be a non-negative integer, got {self.quiet_px!r}")

    @property
    def side(self) -> int:
        """Modules per side."""
        return 17 + 4 * self.version

    @property
    def image_px(self) -> int:
        return self.side * self.module_px + 2 * self.quiet_px

    @property
    def n_modules(self) -> int:
        return self.side * self.side

    @property
    def blocks(self) -> RsBlockSpec:
        return block_spec(self.version, self.ec_level)

    @property
    def data_capacity_bits(self) -> int:
        return 8 * self.blocks.data_codewords

    @property
    def byte_capacity(self) -> int:
        return (self.data_capacity_bits - MODE_BITS - COUNT_BITS) // 8

    def replace(self, **changes) -> "CodeConfig":
        return replace(self, **changes)


def block_spec(version: int, ec_level: str) -> RsBlockSpec:
    try:
        ec, groups = _BLOCK_TABLE[(version, ec_level)]
    except KeyError:
        raise InvalidConfig(f"no block table for version {version} level {ec_level}") from None
    return RsBlockSpec(ec, groups)
