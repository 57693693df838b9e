import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qrsr.errors import NoFreeBits
from qrsr.qart import TargetPattern, desired_pattern, free_bit_basis, transform
from qrsr.qr_core import CodeConfig, decode, encode, rasterize, used_bits

from conftest import PAYLOAD


@pytest.fixture(scope="module")
def basis(cfg):
    return free_bit_basis(PAYLOAD, cfg)


def agreement(cells, pattern, free):
    return float(pattern.weight[(cells == pattern.desired) & free].sum())


def test_free_bit_count(basis, cfg):
    # 4 mode + 8 count + 16*8 data + 4 terminator bits are fixed
    assert used_bits(PAYLOAD, cfg) == 4 + 8 + 128 + 4
    assert len(basis) == 8 * 44 - 144 == 208


def test_full_payload_has_no_free_bits(cfg):
    # 42 bytes + 12 header bits leave a 4-bit terminator inside 44 codewords
    with pytest.raises(NoFreeBits):
        free_bit_basis(b"x" * 42, cfg)


def test_footprints_touch_only_free_modules(basis):
    func = basis.base.function_mask
    for i in range(len(basis)):
        fp = basis.footprint_array(i)
        assert fp.any()
        assert not (fp & func).any()


def test_every_footprint_keeps_payload(basis, cfg):
    for i in range(len(basis)):
        cells = basis.base.cells ^ basis.footprint_array(i)
        result = decode(rasterize(basis.base.with_cells(cells), cfg), cfg)
        assert result.payload == PAYLOAD.encode()
        assert result.clean


def test_reference_equal_to_y_gives_y(symbol, clean, cfg, basis):
    pattern = desired_pattern(clean, cfg)
    assert np.array_equal(pattern.desired, symbol.cells)
    out, report = transform(PAYLOAD, cfg, pattern, basis)
    assert out == symbol
    assert report.flipped_bits == ()


def test_mid_gray_reference(cfg):
    pattern = desired_pattern(np.full((740, 740), 0.5), cfg)
    assert (pattern.desired == 1).all()
    assert np.allclose(pattern.weight, 0.0)


def test_checkerboard_reference(cfg):
    cells = (np.indices((29, 29)).sum(axis=0) % 2).astype(np.uint8)
    img = rasterize(encode(b"", cfg).with_cells(cells), cfg)
    assert np.array_equal(desired_pattern(img, cfg).desired, cells)


def test_reference_is_resampled(cfg):
    pattern = desired_pattern(np.ones((300, 300, 3)), cfg)
    assert pattern.desired.shape == (29, 29)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_random_pattern_improves_and_decodes(seed):
    cfg = CodeConfig()
    rng = np.random.default_rng(seed)
    pattern = TargetPattern(rng.integers(0, 2, (29, 29)).astype(np.uint8), rng.random((29, 29)))
    out, report = transform(PAYLOAD, cfg, pattern)
    base = encode(PAYLOAD, cfg)
    free = ~base.function_mask
    assert report.agreement_after >= report.agreement_before
    assert report.agreement_after == pytest.approx(agreement(out.cells, pattern, free))
    assert np.array_equal(out.cells[base.function_mask], base.cells[base.function_mask])
    result = decode(rasterize(out, cfg), cfg)
    assert result.payload == PAYLOAD.encode() and result.clean


def test_single_module_flip_is_honoured(basis, cfg):
    fp = basis.footprint_array(0)
    r, c = np.argwhere(fp)[0]
    desired = basis.base.cells.copy()
    desired[r, c] ^= 1
    weight = np.zeros((29, 29))
    weight[r, c] = 1.0
    out, report = transform(PAYLOAD, cfg, TargetPattern(desired, weight), basis)
    assert out.cells[r, c] == desired[r, c]
    assert report.fraction_after == 1.0


def test_idempotent(basis, cfg, rng):
    pattern = TargetPattern(rng.integers(0, 2, (29, 29)).astype(np.uint8), rng.random((29, 29)))
    first, _ = transform(PAYLOAD, cfg, pattern, basis)
    second, report = transform(PAYLOAD, cfg, TargetPattern(first.cells.copy(), pattern.weight), basis)
    assert second == first


def test_no_free_bits_returns_plain_symbol(cfg, rng):
    payload = b"x" * 42
    pattern = TargetPattern(rng.integers(0, 2, (29, 29)).astype(np.uint8), rng.random((29, 29)))
    out, report = transform(payload, cfg, pattern)
    assert out == encode(payload, cfg)
    assert report.no_free_bits
    assert report.agreement_after == report.agreement_before


def test_deterministic(basis, cfg):
    rng = np.random.default_rng(99)
    pattern = TargetPattern(rng.integers(0, 2, (29, 29)).astype(np.uint8), rng.random((29, 29)))
    a = transform(PAYLOAD, cfg, pattern, basis)
    b = transform(PAYLOAD, cfg, pattern)
    assert a[0] == b[0] and a[1] == b[1]
