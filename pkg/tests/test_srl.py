import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from qrsr.errors import ExtentMismatch
from qrsr.imaging import to_grayscale
from qrsr.qr_core import CodeConfig, decode, encode, rasterize
from qrsr.srl import (
    binarized_center_mean,
    central_filter,
    error_matrix,
    gated_loss,
    gaussian_kernel,
    module_weighted_error,
    phi,
    srl,
    srl_gradient,
)

SMALL = CodeConfig(version=1, module_px=6, quiet_px=6)


def away_from_kink(rng, shape, margin=0.01):
    """Random RGB image whose luma is at least ``margin`` from 1/2 everywhere."""
    x = rng.random(shape)
    while True:
        bad = np.abs(to_grayscale(x) - 0.5) < margin
        if not bad.any():
            return x
        x[bad] = rng.random((int(bad.sum()), 3))


# ---------------------------------------------------------------- grayscale


@pytest.mark.parametrize(
    "rgb, gray", [((1, 1, 1), 1.0), ((1, 0, 0), 0.299), ((0.5, 0.5, 0.5), 0.5), ((0, 1, 0), 0.587), ((0, 0, 1), 0.114)]
)
def test_grayscale_values(rgb, gray):
    assert to_grayscale(np.array([[rgb]], dtype=float))[0, 0] == pytest.approx(gray, abs=1e-15)


def test_grayscale_passthrough():
    g = np.random.default_rng(0).random((4, 4))
    assert to_grayscale(g) is not None and np.array_equal(to_grayscale(g), g)


# ------------------------------------------------------------ error matrix


@pytest.mark.parametrize("g, y, e", [(0.0, 1, 1.0), (1.0, 1, 0.0), (0.75, 0, 0.5), (0.5, 0, 0.0), (0.5, 1, 0.0)])
def test_error_matrix_examples(g, y, e, cfg):
    target = encode(b"", cfg).with_cells(np.full((29, 29), y, dtype=np.uint8))
    img = np.full((cfg.image_px, cfg.image_px), g)
    E = error_matrix(img, target, cfg)
    assert E.shape == (580, 580)
    assert np.allclose(E, e)


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, (SMALL.image_px, SMALL.image_px), elements=st.floats(0, 1)))
def test_error_matrix_hinge_bounds(img):
    target = encode(b"hi", SMALL)
    E = error_matrix(img, target, SMALL)
    assert (E >= 0).all() and (E <= 1).all()
    g = img[6:-6, 6:-6]
    y = np.kron(target.cells, np.ones((6, 6)))
    right_side = ((y == 1) & (g >= 0.5)) | ((y == 0) & (g <= 0.5))
    assert np.array_equal(E == 0, right_side)


def test_extent_mismatch(symbol):
    with pytest.raises(ExtentMismatch):
        srl(np.ones((700, 700)), symbol)


# ---------------------------------------------------------------- kernels


@pytest.mark.parametrize("s", [3, 4, 5, 6, 7, 10, 11, 20, 21, 32])
def test_kernel_normalization(s):
    assert abs(gaussian_kernel(s).sum() - 1.0) <= 1e-12
    f = central_filter(s)
    c = math.ceil(s / 3)
    assert Fraction(float(f.max())) * c * c == 1 or abs(f.sum() - 1.0) == 0.0
    assert int((f > 0).sum()) == c * c


@pytest.mark.parametrize("s", [5, 7, 11, 21])
def test_kernel_symmetry_odd(s):
    w = gaussian_kernel(s)
    assert np.allclose(w, w.T) and np.allclose(w, w[::-1]) and np.allclose(w, w[:, ::-1])


def test_central_filter_s20():
    f = central_filter(20)
    assert np.all(f[6:13, 6:13] == 1 / 49)
    assert f.sum() == pytest.approx(1.0, abs=1e-15)
    assert (f[:6] == 0).all() and (f[13:] == 0).all()


def test_center_weight_s20_independent():
    # sigma = floor(19/5) = 3, centered at 9.5
    row = [math.exp(-((i - 9.5) ** 2) / 18.0) for i in range(20)]
    total = sum(row) ** 2
    expected = math.exp(-0.5 / 18.0) / total
    E = np.zeros((20, 20))
    E[9, 9] = 1.0
    assert module_weighted_error(E, gaussian_kernel(20), (0, 0)) == pytest.approx(expected, rel=1e-12)
    # close to the continuous 2-D Gaussian peak 1 / (2 pi sigma^2)
    assert expected == pytest.approx(1 / (2 * math.pi * 9), rel=0.05)


def test_module_weighted_error_bounds():
    w = gaussian_kernel(20)
    assert module_weighted_error(np.zeros((40, 40)), w, (1, 1)) == 0.0
    assert module_weighted_error(np.ones((40, 40)), w, (1, 0)) == pytest.approx(1.0, abs=1e-12)


# ---------------------------------------------------------- center and phi


def test_binarized_center_mean():
    assert binarized_center_mean(np.ones((20, 20))) == 1
    assert binarized_center_mean(np.zeros((20, 20))) == 0
    assert binarized_center_mean(np.full((20, 20), 0.5)) == 1


def test_phi_examples():
    light = np.ones((20, 20))
    assert phi(light, 1) == 0
    assert phi(np.zeros((20, 20)), 1) == 1
    ring = np.zeros((20, 20))
    ring[6:13, 6:13] = 1.0
    assert phi(ring, np.ones((20, 20))) == 0


# ------------------------------------------------------------------- loss


def test_perfect_code_has_zero_loss(clean, symbol, cfg):
    rep = srl(clean, symbol, cfg)
    assert rep.loss == 0.0 and rep.error_rate == 0.0 and rep.mismatch_count == 0


def test_inverted_raster_has_unit_loss(clean, symbol, cfg):
    rep = srl(1.0 - clean, symbol, cfg)
    assert rep.loss == pytest.approx(1.0, abs=1e-12)
    assert rep.error_rate == 1.0


def test_half_inverted(symbol, cfg):
    cells = symbol.cells.copy()
    flip = np.zeros(29 * 29, dtype=bool)
    flip[: (29 * 29) // 2] = True
    flip = flip.reshape(29, 29)
    cells[flip] ^= 1
    rep = srl(rasterize(symbol.with_cells(cells), cfg), symbol, cfg)
    assert rep.mismatch_count == int(flip.sum())
    assert rep.error_rate == pytest.approx(flip.sum() / 841)


def test_loss_is_mean_of_gated_errors(rng, symbol, cfg):
    img = rng.random((740, 740, 3))
    rep = srl(img, symbol, cfg)
    assert rep.loss == pytest.approx(float(np.sum(rep.phi * rep.per_module_error)) / 841, rel=1e-12)
    assert rep.error_rate == pytest.approx(rep.phi.mean())


def test_report_json(clean, symbol, cfg):
    doc = json.loads(srl(clean, symbol, cfg).to_json())
    assert set(doc) == {"loss", "error_rate", "mismatch_count", "per_module"}
    assert len(doc["per_module"]) == 841
    assert set(doc["per_module"][0]) == {"row", "col", "phi", "weighted_error"}


def test_zero_loss_implies_clean_decode(rng, clean, symbol, cfg):
    noisy = np.clip(clean + rng.normal(0, 0.2, clean.shape), 0, 1)
    rep = srl(noisy, symbol, cfg)
    if rep.error_rate == 0:
        assert decode(noisy, cfg).clean


# --------------------------------------------------------------- gradient


def test_gradient_gate(rng, symbol, cfg):
    img = rng.random((740, 740, 3))
    rep = srl(img, symbol, cfg)
    g = np.abs(srl_gradient(img, symbol, cfg)).sum(axis=2)[80:660, 80:660].reshape(29, 20, 29, 20)
    nonzero = (g != 0).any(axis=(1, 3))
    assert np.array_equal(nonzero, rep.phi.astype(bool))
    assert (srl_gradient(img, symbol, cfg)[:80] == 0).all()


def test_gradient_sign_pushes_lighter(symbol, cfg):
    img = np.full((740, 740, 3), 0.25)
    r, c = np.argwhere(symbol.cells == 1)[0]
    g = srl_gradient(img, symbol, cfg)
    py, px = 80 + 20 * r + 10, 80 + 20 * c + 10
    assert (g[py, px] < 0).all()


def test_gradient_zero_at_kink(symbol, cfg):
    img = np.full((740, 740), 0.5)
    assert not srl_gradient(img, symbol, cfg).any()


def test_gradient_luma_split(rng, symbol, cfg):
    img = rng.random((740, 740, 3))
    g = srl_gradient(img, symbol, cfg)
    gg = srl_gradient(to_grayscale(img), symbol, cfg, srl(img, symbol, cfg).phi)
    assert np.allclose(g, gg[:, :, None] * np.array([0.299, 0.587, 0.114]))


def _exact_module_loss(gray_block, y, weights, n):
    """Exact rational per-module loss contribution (phi = 1)."""
    total = Fraction(0)
    for (i, j), g in np.ndenumerate(gray_block):
        g = Fraction(g)
        e = max(1 - 2 * g, Fraction(0)) if y else max(2 * g - 1, Fraction(0))
        total += Fraction(weights[i, j]) * e
    return total / n


def test_gradient_against_exact_rational_differences(symbol):
    cfg = CodeConfig(module_px=6, quiet_px=6)
    rng = np.random.default_rng(5)
    img = away_from_kink(rng, (cfg.image_px, cfg.image_px, 3))
    rep = srl(img, symbol, cfg)
    grad = srl_gradient(img, symbol, cfg)
    w = gaussian_kernel(6)
    h = Fraction(1, 10000)
    luma = [Fraction(0.299), Fraction(0.587), Fraction(0.114)]
    for r, c in np.argwhere(rep.phi)[:6]:
        y = int(symbol.cells[r, c])
        block = img[6 + 6 * r:12 + 6 * r, 6 + 6 * c:12 + 6 * c]
        for i, j, ch in [(0, 0, 0), (2, 3, 1), (5, 5, 2), (3, 2, 0)]:
            plus = [[Fraction(v) for v in px] for px in block.reshape(-1, 3)]
            minus = [[Fraction(v) for v in px] for px in block.reshape(-1, 3)]
            plus[i * 6 + j][ch] += h
            minus[i * 6 + j][ch] -= h
            gp = np.array([sum(a * b for a, b in zip(px, luma)) for px in plus], dtype=object).reshape(6, 6)
            gm = np.array([sum(a * b for a, b in zip(px, luma)) for px in minus], dtype=object).reshape(6, 6)
            fd = (_exact_module_loss(gp, y, w, 841) - _exact_module_loss(gm, y, w, 841)) / (2 * h)
            analytic = grad[6 + 6 * r + i, 6 + 6 * c + j, ch]
            assert abs(analytic - float(fd)) <= 1e-12 * max(1.0, abs(float(fd))) + 1e-15


def test_gradient_against_float_differences(rng, symbol, cfg):
    img = away_from_kink(rng, (740, 740, 3))
    gates = srl(img, symbol, cfg).phi
    grad = srl_gradient(img, symbol, cfg, gates)
    h = 1e-4
    for _ in range(30):
        i, j, ch = int(rng.integers(80, 660)), int(rng.integers(80, 660)), int(rng.integers(3))
        up, down = img.copy(), img.copy()
        up[i, j, ch] += h
        down[i, j, ch] -= h
        fd = (gated_loss(up, symbol, gates, cfg) - gated_loss(down, symbol, gates, cfg)) / (2 * h)
        assert abs(grad[i, j, ch] - fd) <= 1e-4 * max(abs(fd), abs(grad[i, j, ch])) + 1e-12


def test_small_step_does_not_increase_loss(rng, symbol, cfg):
    img = away_from_kink(rng, (740, 740, 3))
    rep = srl(img, symbol, cfg)
    grad = srl_gradient(img, symbol, cfg, rep.phi)
    stepped = np.clip(img - 1.0 * grad, 0, 1)
    assert gated_loss(stepped, symbol, rep.phi, cfg) <= rep.loss


def test_deterministic(rng, symbol, cfg):
    img = rng.random((740, 740, 3))
    a, b = srl(img, symbol, cfg), srl(img.copy(), symbol, cfg)
    assert a.loss == b.loss and np.array_equal(a.per_module_error, b.per_module_error)
